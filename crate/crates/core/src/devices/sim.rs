use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ids::Ticks;
use crate::ledger::{Transaction, TxKind};

use super::profile::{DeviceProfile, FaultKind, FaultSpec};
use super::reading::TelemetryReading;

/// Ticks in one simulated day; the period of the diurnal rhythm.
pub const DIURNAL_PERIOD: Ticks = 86_400_000;

/// A running sensor: profile, optional fault, and its private generator.
///
/// Each sample draws one standard normal from a ChaCha8 stream seeded with
/// `profile.seed`; an active dropout fault draws one extra uniform.
#[derive(Debug, Clone)]
pub struct DeviceSim {
    profile: DeviceProfile,
    fault: Option<FaultSpec>,
    rng: ChaCha8Rng,
    next_nonce: u64,
}

impl DeviceSim {
    pub fn new(profile: DeviceProfile, fault: Option<FaultSpec>) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(profile.seed);
        DeviceSim {
            profile,
            fault,
            rng,
            next_nonce: 0,
        }
    }

    pub fn profile(&self) -> &DeviceProfile {
        &self.profile
    }

    pub fn fault(&self) -> Option<&FaultSpec> {
        self.fault.as_ref()
    }

    pub fn set_fault(&mut self, fault: Option<FaultSpec>) {
        self.fault = fault;
    }

    /// Number of sample instants in `[onset, t]`, or 0 before onset.
    fn samples_since_onset(&self, onset: Ticks, t: Ticks) -> u64 {
        if t < onset {
            return 0;
        }
        let p = self.profile.sample_period;
        let first = onset.div_ceil(p) * p;
        if t < first {
            0
        } else {
            (t - first) / p + 1
        }
    }

    /// Samples the sensor at `t`; `None` when the reading is dropped.
    pub fn next_reading(&mut self, t: Ticks) -> Option<TelemetryReading> {
        debug_assert_eq!(t % self.profile.sample_period, 0);
        let p = &self.profile;
        let z: f64 = self.rng.sample(StandardNormal);
        let active = self.fault.filter(|f| t >= f.onset);

        let mut sigma = p.noise_sigma as f64;
        if let Some(FaultSpec {
            kind: FaultKind::NoiseBurst { sigma_multiplier },
            ..
        }) = active
        {
            sigma *= sigma_multiplier;
        }
        let phase = TAU * (t % DIURNAL_PERIOD) as f64 / DIURNAL_PERIOD as f64;
        let healthy = p.baseline as f64 + p.diurnal_amplitude as f64 * phase.sin() + sigma * z;

        let value = match active.map(|f| (f.kind, f.onset)) {
            Some((FaultKind::StuckAt { value }, _)) => value,
            Some((FaultKind::Drift { rate }, onset)) => {
                let n = self.samples_since_onset(onset, t) as i64;
                healthy.round() as i64 + rate.saturating_mul(n)
            }
            Some((FaultKind::Dropout { probability }, _)) => {
                let u: f64 = self.rng.random();
                if u < probability {
                    return None;
                }
                healthy.round() as i64
            }
            _ => healthy.round() as i64,
        };
        Some(TelemetryReading {
            device_id: p.device_id.clone(),
            patient_id: p.patient_id.clone(),
            vital_kind: p.vital_kind,
            value,
            timestamp: t,
        })
    }

    /// Samples at `t` and wraps the reading in a telemetry transaction with
    /// the next consecutive nonce.
    pub fn next_transaction(&mut self, t: Ticks) -> Option<Transaction> {
        let reading = self.next_reading(t)?;
        let nonce = self.next_nonce;
        self.next_nonce += 1;
        Some(Transaction::new(
            TxKind::Telemetry(reading),
            self.profile.device_id.clone(),
            t,
            nonce,
        ))
    }

    /// Sample instants `P, 2P, ...` up to and including `until`.
    pub fn sample_times(&self, until: Ticks) -> impl Iterator<Item = Ticks> {
        let p = self.profile.sample_period;
        (1..=until / p).map(move |k| k * p)
    }
}

/// Every telemetry transaction a device emits up to `until`.
pub fn run_device(profile: &DeviceProfile, fault: Option<FaultSpec>, until: Ticks) -> Vec<Transaction> {
    let mut sim = DeviceSim::new(profile.clone(), fault);
    let times: Vec<Ticks> = sim.sample_times(until).collect();
    times
        .into_iter()
        .filter_map(|t| sim.next_transaction(t))
        .collect()
}

/// Readings only, for trace export and offline analysis.
pub fn run_readings(profile: &DeviceProfile, fault: Option<FaultSpec>, until: Ticks) -> Vec<TelemetryReading> {
    run_device(profile, fault, until)
        .into_iter()
        .filter_map(|tx| match tx.kind {
            TxKind::Telemetry(r) => Some(r),
            _ => None,
        })
        .collect()
}
