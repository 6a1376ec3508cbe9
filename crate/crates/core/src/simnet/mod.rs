//! Deterministic discrete-event network.
//!
//! A single queue orders events by `(due, seq)`; `seq` is a global counter
//! so ties dispatch in scheduling order. Link latency and loss come from one
//! ChaCha8 stream seeded by [`NetConfig::seed`], so a given config and seed
//! replay the same dispatch log.
//!
//! Every dispatch (and every drop) is written to the log as one JSON line
//! `{"t":..,"kind":..,"from":..,"to":..,"seq":..}`. The running SHA-256 of
//! those lines is always kept; the lines themselves only when tracing is on.

mod config;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use config::{LatencyModel, LinkLatency, NetConfig};

use crate::digest::{Digest256, StreamHasher};
use crate::ids::{NodeId, Ticks};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("cannot schedule at {due}, current time is {now}")]
    SchedulingInPast { due: Ticks, now: Ticks },
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(NodeId),
    #[error("node {0} is in both partition groups")]
    OverlappingGroups(NodeId),
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind<M> {
    Deliver {
        from: NodeId,
        to: NodeId,
        sent_at: Ticks,
        msg: M,
    },
    SampleDevice(NodeId),
    FormBlock,
}

impl<M> EventKind<M> {
    fn label(&self) -> &'static str {
        match self {
            EventKind::Deliver { .. } => "deliver",
            EventKind::SampleDevice(_) => "sample",
            EventKind::FormBlock => "form_block",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<M> {
    pub due: Ticks,
    pub seq: u64,
    pub kind: EventKind<M>,
}

struct Queued<M>(Event<M>);

impl<M> PartialEq for Queued<M> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<M> Eq for Queued<M> {}

impl<M> PartialOrd for Queued<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for Queued<M> {
    // Reversed so the max-heap pops the earliest (due, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.due, other.0.seq).cmp(&(self.0.due, self.0.seq))
    }
}

/// Counters since the simulation started. At every point
/// `sent == delivered + dropped + in_flight`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub samples: u64,
    pub block_events: u64,
    pub blocks_formed: u64,
    pub dispatched: u64,
}

#[derive(Serialize)]
struct LogLine<'a> {
    t: Ticks,
    kind: &'a str,
    from: Option<&'a str>,
    to: Option<&'a str>,
    seq: u64,
}

pub struct Sim<M> {
    now: Ticks,
    next_seq: u64,
    queue: BinaryHeap<Queued<M>>,
    endpoints: BTreeSet<NodeId>,
    default_link: LatencyModel,
    links: BTreeMap<(NodeId, NodeId), LatencyModel>,
    loss: f64,
    rng: ChaCha8Rng,
    partitions: Vec<(BTreeSet<NodeId>, BTreeSet<NodeId>)>,
    stats: SimStats,
    log_digest: StreamHasher,
    log: Option<Vec<String>>,
}

impl<M> Sim<M> {
    pub fn new(config: &NetConfig) -> Result<Self, SimError> {
        config.validate().map_err(SimError::InvalidConfig)?;
        let links = config
            .links
            .iter()
            .map(|l| ((l.from.clone(), l.to.clone()), l.latency.clone()))
            .collect();
        Ok(Sim {
            now: 0,
            next_seq: 0,
            queue: BinaryHeap::new(),
            endpoints: BTreeSet::new(),
            default_link: config.latency.clone(),
            links,
            loss: config.loss_probability,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            partitions: Vec::new(),
            stats: SimStats::default(),
            log_digest: StreamHasher::new(),
            log: None,
        })
    }

    /// Keep the dispatch log lines in memory (the digest is kept regardless).
    pub fn enable_trace(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn register(&mut self, node: impl Into<NodeId>) {
        self.endpoints.insert(node.into());
    }

    pub fn is_registered(&self, node: &NodeId) -> bool {
        self.endpoints.contains(node)
    }

    pub fn now(&self) -> Ticks {
        self.now
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn in_flight(&self) -> u64 {
        self.stats.in_flight
    }

    pub fn peek_due(&self) -> Option<Ticks> {
        self.queue.peek().map(|q| q.0.due)
    }

    /// Lets the node logic report that a `FormBlock` dispatch produced a block.
    pub fn note_block_formed(&mut self) {
        self.stats.blocks_formed += 1;
    }

    pub fn trace_digest(&self) -> Digest256 {
        self.log_digest.current()
    }

    pub fn trace_lines(&self) -> Option<&[String]> {
        self.log.as_deref()
    }

    pub fn take_trace_lines(&mut self) -> Option<Vec<String>> {
        self.log.take()
    }

    fn take_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    pub fn schedule(&mut self, due: Ticks, kind: EventKind<M>) -> Result<u64, SimError> {
        if due < self.now {
            return Err(SimError::SchedulingInPast { due, now: self.now });
        }
        let seq = self.take_seq();
        self.queue.push(Queued(Event { due, seq, kind }));
        Ok(seq)
    }

    /// Sends `msg` over the `from -> to` link. Returns the delivery time, or
    /// `None` if the message was lost or crossed a partition.
    pub fn send(&mut self, from: &NodeId, to: &NodeId, msg: M) -> Result<Option<Ticks>, SimError> {
        for n in [from, to] {
            if !self.endpoints.contains(n) {
                return Err(SimError::UnknownEndpoint(n.clone()));
            }
        }
        self.stats.sent += 1;
        let lost = if self.is_partitioned(from, to) || self.loss >= 1.0 {
            true
        } else if self.loss > 0.0 {
            self.rng.random::<f64>() < self.loss
        } else {
            false
        };
        if lost {
            let seq = self.take_seq();
            self.stats.dropped += 1;
            self.record(self.now, "drop", Some(from), Some(to), seq);
            return Ok(None);
        }
        let latency = match self.links.get(&(from.clone(), to.clone())) {
            Some(m) => m.sample(&mut self.rng),
            None => self.default_link.sample(&mut self.rng),
        };
        let due = self.now + latency;
        self.stats.in_flight += 1;
        let kind = EventKind::Deliver {
            from: from.clone(),
            to: to.clone(),
            sent_at: self.now,
            msg,
        };
        self.schedule(due, kind)?;
        Ok(Some(due))
    }

    /// Drops every later send between the two groups, in either direction,
    /// until [`heal`](Self::heal). Messages already in flight still arrive.
    pub fn partition(&mut self, group_a: &[NodeId], group_b: &[NodeId]) -> Result<(), SimError> {
        let a: BTreeSet<NodeId> = group_a.iter().cloned().collect();
        let b: BTreeSet<NodeId> = group_b.iter().cloned().collect();
        if let Some(n) = a.intersection(&b).next() {
            return Err(SimError::OverlappingGroups(n.clone()));
        }
        self.partitions.push((a, b));
        Ok(())
    }

    pub fn heal(&mut self) {
        self.partitions.clear();
    }

    pub fn is_partitioned(&self, x: &NodeId, y: &NodeId) -> bool {
        self.partitions.iter().any(|(a, b)| {
            (a.contains(x) && b.contains(y)) || (a.contains(y) && b.contains(x))
        })
    }

    /// Pops the next event, advancing the clock to its due time.
    pub fn next_event(&mut self) -> Option<Event<M>> {
        let Queued(ev) = self.queue.pop()?;
        debug_assert!(ev.due >= self.now);
        self.now = ev.due;
        self.stats.dispatched += 1;
        let (from, to) = match &ev.kind {
            EventKind::Deliver { from, to, .. } => {
                self.stats.delivered += 1;
                self.stats.in_flight -= 1;
                (Some(from.as_str()), Some(to.as_str()))
            }
            EventKind::SampleDevice(d) => {
                self.stats.samples += 1;
                (Some(d.as_str()), None)
            }
            EventKind::FormBlock => {
                self.stats.block_events += 1;
                (None, None)
            }
        };
        let line = serde_json::to_string(&LogLine {
            t: ev.due,
            kind: ev.kind.label(),
            from,
            to,
            seq: ev.seq,
        })
        .expect("log line serializes");
        self.push_log(line);
        Some(ev)
    }

    fn record(&mut self, t: Ticks, kind: &str, from: Option<&NodeId>, to: Option<&NodeId>, seq: u64) {
        let line = serde_json::to_string(&LogLine {
            t,
            kind,
            from: from.map(NodeId::as_str),
            to: to.map(NodeId::as_str),
            seq,
        })
        .expect("log line serializes");
        self.push_log(line);
    }

    fn push_log(&mut self, line: String) {
        self.log_digest.update(line.as_bytes());
        self.log_digest.update(b"\n");
        if let Some(log) = &mut self.log {
            log.push(line);
        }
    }

    /// Dispatches every event due at or before `t_end` to `handler`, then
    /// moves the clock to `t_end`.
    pub fn run_until(&mut self, t_end: Ticks, mut handler: impl FnMut(&mut Self, Event<M>)) -> SimStats {
        while self.peek_due().is_some_and(|d| d <= t_end) {
            let ev = self.next_event().expect("peeked");
            handler(self, ev);
        }
        self.now = self.now.max(t_end);
        self.stats
    }

    /// Dispatches events until the queue is empty.
    pub fn run_to_completion(&mut self, mut handler: impl FnMut(&mut Self, Event<M>)) -> SimStats {
        while let Some(ev) = self.next_event() {
            handler(self, ev);
        }
        self.stats
    }
}
