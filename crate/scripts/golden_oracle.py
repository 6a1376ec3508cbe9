#!/usr/bin/env python3
"""Independent oracle for the canonical encoding, Merkle rule, rendezvous
placement, genesis block and genesis state root.

Writes crates/core/tests/fixtures/golden.json. Uses only hashlib and
struct, not the Rust code, so the fixtures check the implementation
rather than restate it.
"""
import hashlib
import json
import struct
import sys
from pathlib import Path

H = lambda b: hashlib.sha256(b).digest()
u64 = lambda v: struct.pack(">Q", v)
i64 = lambda v: struct.pack(">q", v)
u32 = lambda v: struct.pack(">I", v)
tag = lambda t: bytes([t])


def s(text):
    raw = text.encode()
    return u32(len(raw)) + raw


def seq(items):
    return u32(len(items)) + b"".join(items)


def merkle(leaves):
    if not leaves:
        return H(b"")
    if len(leaves) == 1:
        return H(leaves[0])
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [H(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


VITAL = {"heart_rate": 0, "spo2": 1, "temperature": 2, "systolic_bp": 3, "diastolic_bp": 4, "glucose": 5}


def telemetry_tx(device, patient, kind, value, ts, submit_time, nonce):
    reading = s(device) + s(patient) + tag(VITAL[kind]) + i64(value) + u64(ts)
    return tag(0) + reading + s(device) + u64(submit_time) + u64(nonce)


def anchor_tx(record_id, digest, replicas, submitter, submit_time, nonce):
    body = s(record_id) + digest + seq([s(r) for r in replicas])
    return tag(1) + body + s(submitter) + u64(submit_time) + u64(nonce)


def grant_tx(patient, grantee, submitter, submit_time, nonce, revoke=False):
    return tag(3 if revoke else 2) + s(patient) + s(grantee) + s(submitter) + u64(submit_time) + u64(nonce)


def header(height, prev, ts, root, validator):
    return u64(height) + prev + u64(ts) + root + s(validator)


def rendezvous(record_id, nodes, r):
    score = lambda n: int.from_bytes(H(s(record_id) + s(n))[:8], "big")
    return sorted(nodes, key=lambda n: (-score(n), n))[:r]


def main():
    out = {}
    out["sha256"] = {"": H(b"").hex(), "abc": H(b"abc").hex()}
    out["merkle"] = []
    for n in range(0, 17):
        leaves = [H(u64(i)) for i in range(n)]
        out["merkle"].append({"leaves": n, "root": merkle(leaves).hex()})

    tele = telemetry_tx("device-1", "patient-1", "heart_rate", 72000, 1000, 1000, 0)
    record = s("patient-1") + s("Patient 1") + seq([s("hypertension")]) + seq([s("lisinopril")])
    anchor = anchor_tx("patient-1", H(record), ["storage-2", "storage-1", "storage-3"], "hospital-1", 5000, 3)
    grant = grant_tx("patient-1", "doctor-1", "patient-1", 6000, 0)
    out["transactions"] = [
        {"name": "telemetry", "hex": tele.hex(), "digest": H(tele).hex()},
        {"name": "record_anchor", "hex": anchor.hex(), "digest": H(anchor).hex()},
        {"name": "access_grant", "hex": grant.hex(), "digest": H(grant).hex()},
    ]
    out["patient_record"] = {"hex": record.hex(), "digest": H(record).hex()}

    zero = bytes(32)
    g_root = merkle([])
    g_hash = H(header(0, zero, 0, g_root, "hospital-1"))
    genesis_block = header(0, zero, 0, g_root, "hospital-1") + seq([]) + g_hash
    out["genesis"] = {
        "validators": ["hospital-1"],
        "time": 0,
        "block_hash": g_hash.hex(),
        "block_hex": genesis_block.hex(),
        # (head hash, empty nonce table, empty access table)
        "state_root": H(g_hash + u32(0) + u32(0)).hex(),
    }

    # Block 1 holding the telemetry tx above, formed at t = 1000 by the
    # single validator; state root then carries device-1's nonce 0.
    b1_root = merkle([H(tele)])
    b1_hash = H(header(1, g_hash, 1000, b1_root, "hospital-1"))
    out["block1"] = {
        "tx_root": b1_root.hex(),
        "block_hash": b1_hash.hex(),
        "state_root": H(b1_hash + u32(1) + s("device-1") + u64(0) + u32(0)).hex(),
    }

    nodes = [f"storage-{i}" for i in range(1, 6)]
    out["rendezvous"] = [
        {"record_id": rid, "nodes": nodes, "r": 3, "placement": rendezvous(rid, nodes, 3)}
        for rid in ["patient-1", "patient-2", "patient-3", "patient-4", "patient-1@v2"]
    ]

    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/golden.json"
    dest.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
