//! Wall-clock microbenchmarks of the implementation itself, kept apart from
//! the simulated-time benchmark in `medchain_core::benchmark`. Run with
//! `cargo bench -p medchain-bench`.

use medchain_core::ledger::{Chain, Transaction};
use medchain_core::devices::{default_fleet, run_device};
use medchain_core::contract::{Contract, Identity, Role};
use medchain_core::NodeId;

/// A chain with `blocks` full blocks of telemetry from a four-device fleet.
pub fn filled_chain(blocks: usize) -> Chain {
    let fleet = default_fleet(4, 1);
    let mut contract = Contract::default();
    for d in &fleet {
        contract.register(Identity::new(d.device_id.clone(), Role::Device));
    }
    let mut chain = Chain::with_contract(
        &[NodeId::new("hospital-1")],
        0,
        Default::default(),
        contract,
    )
    .expect("valid chain");
    let per_block = chain.params().max_block_txs;
    let until = (blocks * per_block / fleet.len() + 1) as u64 * fleet[0].sample_period;
    let mut txs: Vec<Transaction> = fleet.iter().flat_map(|p| run_device(p, None, until)).collect();
    txs.sort_by_key(|t| t.submit_time);
    for tx in txs.into_iter().take(blocks * per_block) {
        let _ = chain.submit(tx);
    }
    chain.seal_pending(0);
    chain
}
