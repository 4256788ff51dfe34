//! The twelve acceptance criteria, each printed as one PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance`. Exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use vericom::allocation::{allocate, kwm, range_sizes, WeightDictionary};
use vericom::fees::{compute_tmf, FeeParams, Payment, TaState};
use vericom::ledger::{Registration, Vrd};
use vericom::model::{Block, Digest, Endorsement, Keypair, PublicKey, SignatureScheme, Transaction, ALPHABET};
use vericom::sim::metrics::csv_string;
use vericom::sim::{
    measure_routing_table, run_scenario, run_with_log, AttackKind, Collusion, MetricsReport, Mode, ScenarioConfig,
    TrustMode,
};
use vericom::verification::{select_validator_set, select_verifier_set, SetParams};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, format!("took {took:?}, limit {limit:?}"))
}

fn run(cfg: &ScenarioConfig) -> MetricsReport {
    run_scenario(cfg).expect("scenario runs").report
}

fn keys(n: usize, rng: &mut ChaCha8Rng) -> Vec<Keypair> {
    (0..n).map(|_| Keypair::generate(SignatureScheme::Simulated, rng)).collect()
}

const SWEEP: [usize; 7] = [10, 25, 50, 75, 100, 150, 200];

/// Verification ops: 6 per committed transaction in Vericom, N per item in
/// the baseline. Three validators are inadmissible for n = m = 1, so ten
/// are used.
fn c1_verification_scaling() -> Outcome {
    let t = Instant::now();
    let mut notes = Vec::new();
    for n in [10, 50, 100, 200] {
        let base = ScenarioConfig {
            num_iot_nodes: n,
            num_validators: 10,
            block_size: 1,
            tx_count: 1000,
            ..Default::default()
        };
        let v = run(&base);
        check(v.committed_txs == 1000, format!("N={n}: {} committed", v.committed_txs))?;
        check(v.verify_ops == 6 * v.committed_txs, format!("N={n}: {} ops", v.verify_ops))?;
        let b = run(&ScenarioConfig { mode: Mode::Baseline, ..base });
        let items = b.injected_txs + b.blocks;
        check(b.verify_ops == n as u64 * items, format!("baseline N={n}: {} ops for {items} items", b.verify_ops))?;
        notes.push(format!("N={n} {}/{}", v.verify_ops / v.committed_txs, b.verify_ops / items));
    }
    within(t, Duration::from_secs(30))?;
    Ok(format!("ops per tx / per item: {}", notes.join(", ")))
}

fn sweep(mode: Mode) -> Vec<MetricsReport> {
    SWEEP.iter().map(|&n| run(&ScenarioConfig { mode, num_iot_nodes: n, ..Default::default() })).collect()
}

fn c2_packet_overhead() -> Outcome {
    let t = Instant::now();
    let v: Vec<u64> = sweep(Mode::Vericom).iter().map(|r| r.packet_bytes_iot).collect();
    let b: Vec<u64> = sweep(Mode::Baseline).iter().map(|r| r.packet_bytes_iot).collect();
    let (lo, hi) = (*v.iter().min().unwrap() as f64, *v.iter().max().unwrap() as f64);
    let spread = (hi - lo) / lo;
    check(spread < 0.10, format!("Vericom bytes vary {:.1}%", spread * 100.0))?;
    check(b.windows(2).all(|w| w[1] > w[0]), "baseline bytes not monotone")?;
    let growth = *b.last().unwrap() as f64 / b[0] as f64;
    check(growth >= 15.0, format!("baseline growth {growth:.1}x"))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!("Vericom spread {:.1}%, baseline growth {growth:.1}x", spread * 100.0))
}

fn c3_backbone_size() -> Outcome {
    let t = Instant::now();
    let sizes = [2usize, 5, 10, 20, 30, 40, 50];
    let seeds = 1..=5u64;
    let mut bytes = Vec::new();
    let mut delay = Vec::new();
    for &bb in &sizes {
        let (mut sb, mut sd) = (0.0, 0.0);
        for seed in seeds.clone() {
            let r = run(&ScenarioConfig {
                num_iot_nodes: 200,
                num_backbone: bb,
                backbone_capacity: 128,
                seed,
                ..Default::default()
            });
            sb += r.packet_bytes_iot as f64;
            sd += r.mean_delay_ms();
        }
        bytes.push(sb / 5.0);
        delay.push(sd / 5.0);
    }
    let byte_growth = bytes.last().unwrap() / bytes[0] - 1.0;
    check(byte_growth < 0.25, format!("bytes grew {:.1}%", byte_growth * 100.0))?;
    check(delay.windows(2).all(|w| w[1] >= w[0]), format!("delay not monotone: {delay:?}"))?;
    let delay_growth = delay.last().unwrap() / delay[0] - 1.0;
    check(delay_growth < 1.0, format!("delay grew {:.1}%", delay_growth * 100.0))?;
    within(t, Duration::from_secs(60))?;
    Ok(format!(
        "bytes +{:.1}%, delay {:.2}->{:.2} ms (+{:.0}%)",
        byte_growth * 100.0,
        delay[0],
        delay.last().unwrap(),
        delay_growth * 100.0
    ))
}

fn c4_delay_separation() -> Outcome {
    let t = Instant::now();
    let v: Vec<f64> = sweep(Mode::Vericom).iter().map(|r| r.mean_delay_ms()).collect();
    let b: Vec<f64> = sweep(Mode::Baseline).iter().map(|r| r.mean_delay_ms()).collect();
    let centre = v.iter().sum::<f64>() / v.len() as f64;
    check(
        v.iter().all(|d| (d - centre).abs() <= 0.2 * centre),
        format!("Vericom delays {v:?} leave +-20% of {centre:.2}"),
    )?;
    let ratio = b.last().unwrap() / b[0];
    check(ratio >= 5.0, format!("baseline delay ratio {ratio:.1}"))?;
    within(t, Duration::from_secs(60))?;
    let (lo, hi) = v.iter().fold((f64::MAX, 0.0f64), |(l, h), &d| (l.min(d), h.max(d)));
    Ok(format!("Vericom {lo:.2}-{hi:.2} ms, baseline {:.2}->{:.2} ms ({ratio:.1}x)", b[0], b.last().unwrap()))
}

fn c5_routing_table() -> Outcome {
    let t = Instant::now();
    let xs: Vec<f64> = (1..=20).map(|k| (k * 10) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&v| measure_routing_table(v as usize, 20, 1).unwrap() as f64).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - (icept + slope * x)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let ratio = ys.last().unwrap() / ys[0];
    check(r2 > 0.99, format!("R^2 {r2:.4}"))?;
    check((8.0..=12.0).contains(&ratio), format!("ratio {ratio:.2}"))?;
    within(t, Duration::from_secs(10))?;
    Ok(format!("{} B -> {} B, ratio {ratio:.2}, R^2 {r2:.5}", ys[0], ys.last().unwrap()))
}

fn c6_endorsement_overhead() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ks = keys(6, &mut rng);
    let tx = Transaction::new_signed(&ks[0], vec![7; 100], None);
    let block = Block::seal(&ks[0], None, 1, vec![tx], |_| true).unwrap();
    let bare = block.encode().len();
    for m in 0..=2usize {
        let members = 2 * m + 1;
        let endorsements = ks[1..=members].iter().map(|k| Endorsement::sign(k, block.digest())).collect();
        let endorsed = block.clone().with_endorsements(endorsements);
        let extra = endorsed.encode().len() - bare;
        check(extra == 459 * members, format!("m={m}: {extra} extra bytes"))?;
        check(endorsed.wire_size() == endorsed.encode().len(), "wire size disagrees with encoding")?;
    }
    within(t, Duration::from_secs(1))?;
    Ok("459 B per endorsement for m = 0, 1, 2".into())
}

fn c7_allocation() -> Outcome {
    let t = Instant::now();
    let wd = WeightDictionary::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=62 {
        for _ in 0..200 {
            let pks: Vec<PublicKey> = keys(n, &mut rng).iter().map(|k| k.public()).collect();
            let a = allocate(&wd, &pks).map_err(|e| e.to_string())?;
            let mut owner = [usize::MAX; 62];
            for (pos, r) in a.ranges().iter().enumerate() {
                for slot in &mut owner[r.start as usize..=r.end as usize] {
                    check(*slot == usize::MAX, format!("N={n}: overlap"))?;
                    *slot = pos;
                }
            }
            check(owner.iter().all(|&o| o != usize::MAX), format!("N={n}: gap"))?;
            check(a.validators().windows(2).all(|w| w[0].kwm >= w[1].kwm), format!("N={n}: order"))?;
        }
    }
    let split = range_sizes(10).unwrap();
    check(split == [8, 6, 6, 6, 6, 6, 6, 6, 6, 6], format!("N=10 split {split:?}"))?;
    within(t, Duration::from_secs(10))?;
    Ok("12400 allocations: exact cover, disjoint, descending; N=10 -> [8, 6x9]".into())
}

fn c8_disjointness() -> Outcome {
    let t = Instant::now();
    let mut cases = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let syms: Vec<Digest> = ALPHABET.iter().map(|&c| Digest::parse(&(c as char).to_string()).unwrap()).collect();
    for len in 8..=16 {
        let pks: Vec<PublicKey> = keys(len, &mut rng).iter().map(|k| k.public()).collect();
        let a = allocate(&WeightDictionary::default(), &pks).unwrap();
        for n in 1..len {
            for m in 0..len {
                let Ok(p) = SetParams::new(n, m, len) else { continue };
                let off = if n > m { 2 * n } else { 2 * n + m };
                for td in &syms {
                    let vs = select_validator_set(td, &a, &p).unwrap();
                    let members: BTreeSet<usize> = vs.members().collect();
                    for bd in &syms {
                        let vr = select_verifier_set(bd, &a, &p, &vs).unwrap();
                        check(vr.members().all(|x| !members.contains(&x)), format!("overlap N={len} n={n} m={m}"))?;
                        if vr.relocated {
                            check(vr.main == (vs.main + off) % len, format!("offset N={len} n={n} m={m}"))?;
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("{cases} (N, n, m, tx MSCh, block MSCh) cases disjoint"))
}

fn oracle_kwm(s: &str) -> BigRational {
    let mut total = BigRational::zero();
    for (i, c) in s.chars().enumerate() {
        let w = match c {
            'a'..='z' => c as i64 - 'a' as i64,
            'A'..='Z' => 26 + c as i64 - 'A' as i64,
            _ => 52 + c as i64 - '0' as i64,
        };
        let r = s.chars().take(i).filter(|&p| p == c).count() as u32;
        total += BigRational::new(BigInt::from(w), BigInt::from(5).pow(r));
    }
    total
}

fn c9_kwm_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let wd = WeightDictionary::default();
    for _ in 0..10_000 {
        let s: String = (0..32).map(|_| ALPHABET[rng.gen_range(0..62)] as char).collect();
        let k = kwm(&wd, &Digest::parse(&s).unwrap());
        let r = k.as_ratio();
        let got = BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
        check(got == oracle_kwm(&s), format!("mismatch on {s}"))?;
    }
    within(t, Duration::from_secs(5))?;
    Ok("10000 random digests match exactly".into())
}

fn c10_attacks() -> Outcome {
    let t = Instant::now();
    for seed in 1..=50 {
        let mut cfg = ScenarioConfig { tx_count: 100, seed, ..Default::default() };
        cfg.attack.kind = AttackKind::FalseVerification;
        cfg.attack.collusion = Collusion::Minority;
        cfg.attack.at_tx = 3;
        let a = run(&cfg).attack.unwrap();
        let before = a.fake_block_broadcast.is_none() && a.detection_time.is_some();
        check(a.detected && before && a.aborted_assemblies >= 1, format!("(a) seed {seed}: {a:?}"))?;
    }
    for seed in 1..=20 {
        let mut cfg = ScenarioConfig { tx_count: 100, seed, num_validators: 12, epochs: 2, ..Default::default() };
        cfg.attack.kind = AttackKind::FakeTransaction;
        cfg.attack.collusion = Collusion::Full;
        cfg.attack.at_tx = 3;
        let r = run(&cfg);
        let a = r.attack.clone().unwrap();
        check(a.detected && a.fake_block_broadcast.is_some(), format!("(b) seed {seed}: not reported"))?;
        // Generator plus the 2m+1 endorsers it names.
        check(a.excluded.len() == 4, format!("(b) seed {seed}: {} excluded", a.excluded.len()))?;
        let next = &r.epochs[1];
        let barred = a.excluded.iter().all(|pk| next.barred.contains(pk) && !next.validators.contains(pk));
        check(barred, format!("(b) seed {seed}: colluders registered next period"))?;
    }
    let mut cfg = ScenarioConfig { trust_mode: TrustMode::Untrusted, tx_count: 300, ..Default::default() };
    cfg.attack.kind = AttackKind::Dropping;
    cfg.attack.drop_rate = 1.0;
    let window = (cfg.monitor.window_ms * 1000.0) as u64;
    let a = run(&cfg).attack.unwrap();
    let first_window = a.first_drop.map(|t| t / window);
    check(a.detected && a.flagged_window == first_window, format!("(c) {a:?}"))?;
    check(a.delivery_resumed, "(c) delivery did not resume")?;
    within(t, Duration::from_secs(30))?;
    Ok(format!("(a) 50/50 before broadcast, (b) 20/20 excluded, (c) flagged in window {}", first_window.unwrap()))
}

fn c11_fees() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pks: Vec<PublicKey> = keys(3, &mut rng).iter().map(|k| k.public()).collect();
    let tf: Decimal = "0.35".parse().unwrap();
    let params = FeeParams::new(tf, 1_000_000).unwrap();
    let backbone = [0u32, 1];
    let mut ta = TaState::new();

    let lengths: BTreeMap<PublicKey, u64> = pks.iter().zip([7u64, 4, 11]).map(|(p, l)| (*p, l)).collect();
    let pay = |pk: PublicKey, amount: Decimal, epoch| Payment { payer: pk, amount, epoch };
    let mut payments: Vec<Payment> = pks[..2].iter().map(|p| pay(*p, compute_tmf(tf, lengths[p]), 1)).collect();
    payments.push(pay(pks[2], Decimal::ZERO, 1));
    let s1 = ta.settle_epoch(&params, 1, &payments, &lengths, &backbone).unwrap().clone();
    check(s1.accounts[&pks[0]].tmf == "2.45".parse::<Decimal>().unwrap(), "TMF = TF * ledger_length")?;
    check(s1.paid_out() == s1.received, "period 1 funds not conserved")?;
    check(s1.penalties == BTreeSet::from([pks[2]]), "underpayer not penalized")?;

    let mut vrd = Vrd::open(0, 10, ta.penalized());
    check(vrd.register_interest(pks[2], 1) == Err(Registration::Excluded), "underpayer registered")?;
    check(vrd.register_interest(pks[0], 1).is_ok(), "honest validator refused")?;

    let lengths2: BTreeMap<PublicKey, u64> = pks[..2].iter().map(|p| (*p, 5)).collect();
    let mut payments2: Vec<Payment> = pks[..2].iter().map(|p| pay(*p, compute_tmf(tf, 5), 2)).collect();
    payments2.push(pay(pks[2], ta.arrears(&pks[2]), 2));
    let s2 = ta.settle_epoch(&params, 2, &payments2, &lengths2, &backbone).unwrap().clone();
    check(s2.paid_out() == s2.received, "period 2 funds not conserved")?;
    check(s2.penalties.is_empty(), "arrears not cleared")?;
    let mut vrd = Vrd::open(100, 10, ta.penalized());
    check(vrd.register_interest(pks[2], 101).is_ok(), "not re-admitted after arrears")?;
    within(t, Duration::from_secs(5))?;
    Ok(format!("received {} / {}, paid out exactly; penalty then re-admission", s1.received, s2.received))
}

fn c12_determinism() -> Outcome {
    let t = Instant::now();
    let mut attack = ScenarioConfig { tx_count: 200, num_validators: 12, epochs: 2, ..Default::default() };
    attack.attack.kind = AttackKind::FakeTransaction;
    attack.attack.collusion = Collusion::Full;
    let mut drop = ScenarioConfig { trust_mode: TrustMode::Untrusted, tx_count: 200, ..Default::default() };
    drop.attack.kind = AttackKind::Dropping;
    let cases = [
        ScenarioConfig { num_iot_nodes: 120, tx_count: 300, ..Default::default() },
        ScenarioConfig { mode: Mode::Baseline, num_iot_nodes: 120, tx_count: 300, ..Default::default() },
        attack,
        drop,
    ];
    for cfg in &cases {
        let a = run_with_log(cfg, true).unwrap();
        let b = run_with_log(cfg, true).unwrap();
        check(csv_string(&[a.report.csv_row()]) == csv_string(&[b.report.csv_row()]), "CSV rows differ")?;
        check(a.log.as_str() == b.log.as_str(), "event logs differ")?;
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("{} scenarios byte-identical", cases.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("verification scaling", c1_verification_scaling),
        ("packet overhead trend", c2_packet_overhead),
        ("backbone-size sensitivity", c3_backbone_size),
        ("delay separation", c4_delay_separation),
        ("routing-table linearity", c5_routing_table),
        ("endorsement overhead", c6_endorsement_overhead),
        ("allocation properties", c7_allocation),
        ("set disjointness", c8_disjointness),
        ("KWM oracle equivalence", c9_kwm_oracle),
        ("attack detection", c10_attacks),
        ("fee settlement", c11_fees),
        ("determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
