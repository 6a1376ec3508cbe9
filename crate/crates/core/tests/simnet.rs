use medchain_core::config::RunConfig;
use medchain_core::devices::{default_fleet, DeviceSim};
use medchain_core::ledger::Transaction;
use medchain_core::scenario::{deployment_chain, Driver};
use medchain_core::simnet::{EventKind, LatencyModel, LinkLatency, NetConfig, Sim, SimError};
use medchain_core::NodeId;

fn id(s: &str) -> NodeId {
    NodeId::new(s)
}

fn net(latency: LatencyModel, seed: u64) -> NetConfig {
    NetConfig {
        latency,
        seed,
        ..NetConfig::default()
    }
}

fn sim_with(cfg: &NetConfig, nodes: &[&str]) -> Sim<u32> {
    let mut sim = Sim::new(cfg).unwrap();
    for n in nodes {
        sim.register(*n);
    }
    sim
}

#[test]
fn uniform_latency_mean() {
    let mut sim = sim_with(&net(LatencyModel::Uniform { lo: 1, hi: 9 }, 11), &["a", "b"]);
    let n = 10_000u32;
    let mut total = 0u64;
    for i in 0..n {
        let due = sim.send(&id("a"), &id("b"), i).unwrap().unwrap();
        assert!((1..=9).contains(&due));
        total += due;
    }
    let mean = total as f64 / n as f64;
    // Discrete uniform on 1..=9: variance (9^2 - 1) / 12.
    let sigma_mean = ((81.0 - 1.0) / 12.0f64).sqrt() / (n as f64).sqrt();
    assert!((mean - 5.0).abs() < 4.0 * sigma_mean, "mean {mean}");
}

#[test]
fn fixed_latency_and_link_override() {
    let mut cfg = net(LatencyModel::Fixed { ticks: 7 }, 0);
    cfg.links.push(LinkLatency {
        from: id("a"),
        to: id("c"),
        latency: LatencyModel::Fixed { ticks: 50 },
    });
    let mut sim = sim_with(&cfg, &["a", "b", "c"]);
    assert_eq!(sim.send(&id("a"), &id("b"), 1).unwrap(), Some(7));
    assert_eq!(sim.send(&id("a"), &id("c"), 2).unwrap(), Some(50));
    assert_eq!(sim.send(&id("c"), &id("a"), 3).unwrap(), Some(7));
    let mut got = Vec::new();
    sim.run_to_completion(|s, ev| {
        if let EventKind::Deliver { msg, sent_at, .. } = ev.kind {
            got.push((s.now(), msg, sent_at));
        }
    });
    assert_eq!(got, vec![(7, 1, 0), (7, 3, 0), (50, 2, 0)]);
}

#[test]
fn periodic_devices_sample_on_schedule() {
    let mut cfg = RunConfig::default();
    cfg.devices.sample_period = Some(100);
    let mut fleet = default_fleet(4, cfg.seed);
    for d in &mut fleet {
        d.sample_period = 100;
    }
    let mut chain = deployment_chain(&cfg, &fleet).unwrap();
    let mut sim: Sim<Transaction> = Sim::new(&net(LatencyModel::Fixed { ticks: 10 }, 1)).unwrap();
    sim.enable_trace();
    let stats = {
        let mut driver = Driver::new(&mut chain, &mut sim, id("hospital-1"), 1_000);
        for p in &fleet {
            driver.add_periodic(&mut sim, DeviceSim::new(p.clone(), None), None).unwrap();
        }
        driver.run(&mut sim).unwrap()
    };
    assert_eq!(stats.samples, 40);
    for p in &fleet {
        let needle = format!("\"kind\":\"sample\",\"from\":\"{}\"", p.device_id);
        let n = sim.trace_lines().unwrap().iter().filter(|l| l.contains(&needle)).count();
        assert_eq!(n, 10, "{}", p.device_id);
    }
    assert_eq!(stats.delivered, 40);
    assert_eq!(chain.committed_tx_count(), 40);
    assert!(chain.validate_chain().ok);
}

fn noisy_run(seed: u64) -> (Vec<(u64, u32)>, String) {
    let mut cfg = net(LatencyModel::Normal { mean: 40.0, sigma: 15.0 }, seed);
    cfg.loss_probability = 0.2;
    let mut sim = sim_with(&cfg, &["a", "b", "c"]);
    let nodes = [id("a"), id("b"), id("c")];
    for i in 0..300u32 {
        let _ = sim.send(&nodes[i as usize % 3], &nodes[(i as usize + 1) % 3], i);
    }
    let mut order = Vec::new();
    sim.run_to_completion(|s, ev| {
        if let EventKind::Deliver { msg, .. } = ev.kind {
            order.push((s.now(), msg));
        }
    });
    (order, sim.trace_digest().to_hex())
}

#[test]
fn same_seed_same_schedule() {
    let (o1, d1) = noisy_run(5);
    let (o2, d2) = noisy_run(5);
    assert_eq!(o1, o2);
    assert_eq!(d1, d2);
    let (o3, d3) = noisy_run(6);
    assert_ne!(o1, o3);
    assert_ne!(d1, d3);
}

#[test]
fn loss_rate_and_conservation() {
    let mut cfg = net(LatencyModel::Fixed { ticks: 3 }, 9);
    cfg.loss_probability = 0.3;
    let mut sim = sim_with(&cfg, &["a", "b"]);
    let n = 10_000u64;
    for i in 0..n {
        sim.send(&id("a"), &id("b"), i as u32).unwrap();
        let s = sim.stats();
        assert_eq!(s.sent, s.delivered + s.dropped + s.in_flight);
    }
    let expect = 0.3 * n as f64;
    let sd = (n as f64 * 0.3 * 0.7).sqrt();
    let dropped = sim.stats().dropped as f64;
    assert!((dropped - expect).abs() < 4.0 * sd, "dropped {dropped}");
    let s = sim.run_to_completion(|_, _| {});
    assert_eq!(s.in_flight, 0);
    assert_eq!(s.sent, s.delivered + s.dropped);

    cfg.loss_probability = 1.0;
    let mut sim = sim_with(&cfg, &["a", "b"]);
    assert_eq!(sim.send(&id("a"), &id("b"), 0).unwrap(), None);
}

#[test]
fn partitions_drop_cross_traffic_until_healed() {
    let mut sim = sim_with(&net(LatencyModel::Fixed { ticks: 1 }, 0), &["a", "b", "c", "d"]);
    sim.partition(&[id("a"), id("b")], &[id("c")]).unwrap();
    assert!(sim.is_partitioned(&id("a"), &id("c")));
    assert!(sim.is_partitioned(&id("c"), &id("b")));
    assert!(!sim.is_partitioned(&id("a"), &id("b")));
    assert!(!sim.is_partitioned(&id("a"), &id("d")));
    assert_eq!(sim.send(&id("a"), &id("c"), 1).unwrap(), None);
    assert_eq!(sim.send(&id("c"), &id("a"), 2).unwrap(), None);
    assert!(sim.send(&id("a"), &id("b"), 3).unwrap().is_some());
    assert!(sim.send(&id("d"), &id("c"), 4).unwrap().is_some());
    assert_eq!(
        sim.partition(&[id("a")], &[id("a")]),
        Err(SimError::OverlappingGroups(id("a")))
    );
    sim.heal();
    assert!(sim.send(&id("a"), &id("c"), 5).unwrap().is_some());
    assert_eq!(sim.stats().dropped, 2);
}

#[test]
fn events_never_run_backwards() {
    let mut sim = sim_with(&net(LatencyModel::Uniform { lo: 0, hi: 30 }, 3), &["a", "b"]);
    sim.schedule(5, EventKind::FormBlock).unwrap();
    for i in 0..200 {
        sim.send(&id("a"), &id("b"), i).unwrap();
    }
    let mut last = 0;
    let mut seen = 0;
    sim.run_to_completion(|s, ev| {
        assert!(ev.due >= last);
        last = ev.due;
        seen += 1;
        if let EventKind::Deliver { sent_at, .. } = ev.kind {
            assert!(ev.due >= sent_at);
            // Handlers may send more traffic; it always lands in the future.
            if seen < 400 {
                let due = s.send(&id("b"), &id("a"), 0).unwrap().unwrap();
                assert!(due >= s.now());
            }
        }
    });
    assert_eq!(
        sim.schedule(0, EventKind::FormBlock).unwrap_err(),
        SimError::SchedulingInPast { due: 0, now: sim.now() }
    );
}

#[test]
fn invalid_inputs() {
    let mut sim = sim_with(&NetConfig::default(), &["a"]);
    assert_eq!(
        sim.send(&id("a"), &id("zz"), 0).unwrap_err(),
        SimError::UnknownEndpoint(id("zz"))
    );
    let bad = NetConfig {
        loss_probability: 1.5,
        ..NetConfig::default()
    };
    assert!(matches!(Sim::<u32>::new(&bad), Err(SimError::InvalidConfig(_))));
    let bad = net(LatencyModel::Uniform { lo: 9, hi: 1 }, 0);
    assert!(matches!(Sim::<u32>::new(&bad), Err(SimError::InvalidConfig(_))));
}

#[test]
fn run_until_advances_clock() {
    let mut sim = sim_with(&net(LatencyModel::Fixed { ticks: 100 }, 0), &["a", "b"]);
    sim.send(&id("a"), &id("b"), 0).unwrap();
    let s = sim.run_until(50, |_, _| panic!("nothing is due yet"));
    assert_eq!((sim.now(), s.delivered), (50, 0));
    let s = sim.run_until(100, |_, _| {});
    assert_eq!((sim.now(), s.delivered), (100, 1));
}
