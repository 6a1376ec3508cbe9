use std::collections::BTreeMap;

use crate::devices::DeviceSim;
use crate::ids::{NodeId, Ticks};
use crate::ledger::{Chain, Transaction};
use crate::simnet::{Event, EventKind, Sim, SimError, SimStats};

struct Slot {
    device: DeviceSim,
    remaining: Option<u64>,
}

/// Moves device telemetry through a [`Sim`] to the gateway validator and
/// forms blocks on the ledger's boundaries.
///
/// Devices sample every `sample_period` ticks while the sample time is at
/// most `horizon` (and their optional sample budget lasts). Block formation
/// keeps ticking past the horizon until nothing is pending or in flight.
pub struct Driver<'c> {
    chain: &'c mut Chain,
    gateway: NodeId,
    horizon: Ticks,
    devices: BTreeMap<NodeId, Slot>,
    scheduled_samples: u64,
}

impl<'c> Driver<'c> {
    /// Registers `gateway` with `sim`; transactions delivered to it are
    /// submitted to `chain`.
    pub fn new(chain: &'c mut Chain, sim: &mut Sim<Transaction>, gateway: NodeId, horizon: Ticks) -> Self {
        sim.register(gateway.clone());
        Driver {
            chain,
            gateway,
            horizon,
            devices: BTreeMap::new(),
            scheduled_samples: 0,
        }
    }

    /// Adds a periodically sampling device. `limit` caps how many samples it
    /// takes in total.
    pub fn add_periodic(
        &mut self,
        sim: &mut Sim<Transaction>,
        device: DeviceSim,
        limit: Option<u64>,
    ) -> Result<(), SimError> {
        let id = device.profile().device_id.clone();
        let p = device.profile().sample_period;
        sim.register(id.clone());
        let first = (sim.now() / p + 1) * p;
        if first <= self.horizon && limit != Some(0) {
            sim.schedule(first, EventKind::SampleDevice(id.clone()))?;
            self.scheduled_samples += 1;
        }
        self.devices.insert(
            id,
            Slot {
                device,
                remaining: limit,
            },
        );
        Ok(())
    }

    /// Sends `n` transactions from `device` immediately. Readings carry the
    /// device's regular sample timestamps; every transaction is stamped with
    /// the current time as its submit time.
    pub fn add_burst(&mut self, sim: &mut Sim<Transaction>, mut device: DeviceSim, n: u64) -> Result<(), SimError> {
        let id = device.profile().device_id.clone();
        let p = device.profile().sample_period;
        sim.register(id.clone());
        let now = sim.now();
        for k in 1..=n {
            if let Some(mut tx) = device.next_transaction(now + k * p) {
                tx.submit_time = now;
                sim.send(&id, &self.gateway, tx)?;
            }
        }
        self.devices.insert(
            id,
            Slot {
                device,
                remaining: Some(0),
            },
        );
        Ok(())
    }

    /// Runs the network until every event has been dispatched.
    pub fn run(&mut self, sim: &mut Sim<Transaction>) -> Result<SimStats, SimError> {
        let first_block = self.chain.next_boundary(sim.now());
        sim.schedule(first_block, EventKind::FormBlock)?;
        let mut failure = None;
        sim.run_to_completion(|sim, ev| {
            if failure.is_none() {
                if let Err(e) = self.dispatch(sim, ev) {
                    failure = Some(e);
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(sim.stats()),
        }
    }

    fn dispatch(&mut self, sim: &mut Sim<Transaction>, ev: Event<Transaction>) -> Result<(), SimError> {
        let now = ev.due;
        match ev.kind {
            EventKind::SampleDevice(id) => {
                self.scheduled_samples -= 1;
                let slot = self.devices.get_mut(&id).expect("only registered devices sample");
                let p = slot.device.profile().sample_period;
                if let Some(tx) = slot.device.next_transaction(now) {
                    sim.send(&id, &self.gateway, tx)?;
                }
                if let Some(r) = &mut slot.remaining {
                    *r -= 1;
                }
                if now + p <= self.horizon && slot.remaining != Some(0) {
                    sim.schedule(now + p, EventKind::SampleDevice(id))?;
                    self.scheduled_samples += 1;
                }
            }
            EventKind::Deliver { to, msg, .. } => {
                if to == self.gateway {
                    // Refusals are kept in the chain's audit log.
                    let _ = self.chain.submit(msg);
                }
            }
            EventKind::FormBlock => {
                if self.chain.form_block(now).is_some() {
                    sim.note_block_formed();
                }
                let next = now + self.chain.params().block_interval;
                let busy = self.scheduled_samples > 0
                    || self.chain.pending_len() > 0
                    || sim.in_flight() > 0;
                if next <= self.horizon || busy {
                    sim.schedule(next, EventKind::FormBlock)?;
                }
            }
        }
        Ok(())
    }
}
