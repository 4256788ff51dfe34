use vericom::sim::{run_scenario, run_with_log, AttackKind, Collusion, Mode, ScenarioConfig, TrustMode};

fn small(mode: Mode, nodes: usize) -> ScenarioConfig {
    ScenarioConfig { mode, num_iot_nodes: nodes, tx_count: 200, ..Default::default() }
}

#[test]
fn same_seed_same_trace() {
    for mode in [Mode::Vericom, Mode::Baseline] {
        let cfg = small(mode, 40);
        let a = run_with_log(&cfg, true).unwrap();
        let b = run_with_log(&cfg, true).unwrap();
        assert_eq!(a.log.as_str(), b.log.as_str());
        assert_eq!(a.report, b.report);
        assert!(!a.log.is_empty());
    }
    let c = run_scenario(&ScenarioConfig { seed: 2, ..small(Mode::Vericom, 40) }).unwrap();
    let a = run_scenario(&small(Mode::Vericom, 40)).unwrap();
    assert_ne!(a.report.packet_bytes_backbone, c.report.packet_bytes_backbone);
}

#[test]
fn honest_run_is_clean() {
    let r = run_scenario(&ScenarioConfig { epochs: 2, ..small(Mode::Vericom, 60) }).unwrap().report;
    assert_eq!(r.reports, 0);
    assert_eq!(r.isolated, 0);
    assert_eq!(r.unroutable, 0);
    assert_eq!(r.append_failures, 0);
    assert_eq!(r.injected_txs, 400);
    assert_eq!(r.committed_txs, r.injected_txs);
    assert!(r.epochs.iter().all(|e| e.barred.is_empty() && e.validators.len() == 10));
    assert!(r.epochs[1].settlement.contains("penalties []"));
}

#[test]
fn ledger_export_lists_every_block() {
    let out = run_scenario(&small(Mode::Vericom, 30)).unwrap();
    assert_eq!(out.ledger.lines().count() as u64, out.report.blocks);
    // Each exported block carries 2m+1 endorsers.
    for line in out.ledger.lines() {
        let endorsers = line.rsplit('\t').next().unwrap();
        assert_eq!(endorsers.split(',').count(), 3, "{line}");
    }
}

#[test]
fn baseline_one_tx_one_block() {
    for n in [5, 12, 40] {
        let cfg =
            ScenarioConfig { mode: Mode::Baseline, num_iot_nodes: n, tx_count: 1, block_size: 1, ..Default::default() };
        let r = run_scenario(&cfg).unwrap().report;
        assert_eq!(r.verify_ops, 2 * n as u64);
        assert_eq!(r.blocks, 1);
    }
}

#[test]
fn vericom_ops_per_pair_independent_of_n() {
    for (n, m, v) in [(1, 1, 10), (1, 0, 10), (2, 1, 12)] {
        for nodes in [20, 80] {
            let cfg = ScenarioConfig {
                num_iot_nodes: nodes,
                num_validators: v,
                n,
                m,
                block_size: 1,
                tx_count: 100,
                ..Default::default()
            };
            let r = run_scenario(&cfg).unwrap().report;
            assert_eq!(r.verify_ops, 100 * ((2 * n + 1) + (2 * m + 1)) as u64);
            assert_eq!(r.audit_ops, 100);
        }
    }
}

#[test]
fn vericom_cheaper_than_flooding() {
    for nodes in [10, 30, 60] {
        let v = run_scenario(&small(Mode::Vericom, nodes)).unwrap().report;
        let b = run_scenario(&small(Mode::Baseline, nodes)).unwrap().report;
        assert!(v.packet_bytes_iot < b.packet_bytes_iot, "N = {nodes}");
    }
}

#[test]
fn baseline_bytes_superlinear() {
    let r = |n| run_scenario(&small(Mode::Baseline, n)).unwrap().report.packet_bytes_iot;
    let (a, b) = (r(25), r(50));
    assert!(b as f64 >= 1.9 * a as f64);
}

#[test]
fn underpayer_barred_then_readmitted() {
    let mut cfg = ScenarioConfig { epochs: 3, num_validators: 12, tx_count: 120, ..Default::default() };
    cfg.fees.underpayers = vec![0];
    let out = run_scenario(&cfg).unwrap();
    let e = &out.report.epochs;
    let pk0 = e[0].validators.iter().find(|pk| !e[1].validators.contains(pk)).copied().unwrap();
    assert_eq!(e[1].barred, vec![pk0]);
    assert_eq!(e[1].validators.len(), 11);
    assert!(e[2].barred.is_empty());
    assert!(e[2].validators.contains(&pk0));
}

#[test]
fn dropping_is_detected_and_routed_around() {
    let mut cfg = ScenarioConfig { trust_mode: TrustMode::Untrusted, tx_count: 300, ..Default::default() };
    cfg.attack.kind = AttackKind::Dropping;
    let r = run_scenario(&cfg).unwrap().report;
    let a = r.attack.unwrap();
    assert!(a.detected);
    assert!(a.delivery_resumed);
    assert_eq!(a.flagged.len(), 1);
    assert!(r.dropped > 0);
}

#[test]
fn honest_untrusted_run_flags_nobody() {
    let cfg = ScenarioConfig { trust_mode: TrustMode::Untrusted, ..small(Mode::Vericom, 50) };
    let r = run_scenario(&cfg).unwrap().report;
    assert_eq!(r.dropped, 0);
    assert!(r.attack.is_none());
    assert_eq!(r.committed_txs, r.injected_txs);
}

#[test]
fn minority_fake_transaction_rejected_by_validators() {
    let mut cfg = ScenarioConfig { num_validators: 12, tx_count: 100, ..Default::default() };
    cfg.attack.kind = AttackKind::FakeTransaction;
    cfg.attack.collusion = Collusion::Minority;
    cfg.attack.at_tx = 4;
    let out = run_with_log(&cfg, true).unwrap();
    let a = out.report.attack.unwrap();
    assert!(a.detected);
    assert!(a.fake_block_broadcast.is_none());
    assert!(out.log.contains_kind("report-accepted"));
}

#[test]
fn bad_adversary_is_a_config_error() {
    let mut cfg = ScenarioConfig::default();
    cfg.attack.kind = AttackKind::FalseVerification;
    cfg.attack.adversaries = vec![999];
    let err = run_scenario(&cfg).unwrap_err().to_string();
    assert!(err.contains("attack.adversaries"), "{err}");
}
