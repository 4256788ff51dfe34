//! Discrete-event run of the two-layer protocol.
//!
//! IoT node ids `0..num_validators` register as validators each period; the
//! last `auditors` ids audit. Route-update ticks and monitor windows are
//! applied lazily before each event at or after their due time.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ms, AttackKind, Collusion, ScenarioConfig, TrustMode};
use super::log::EventLog;
use super::metrics::{AttackOutcome, EpochSummary, MetricsReport};
use super::queue::EventQueue;
use super::topology::{access_delay, scenario_backbone, stream, unit};
use super::traffic::Traffic;
use super::{RunOutput, SimError};
use crate::allocation::{RangeAllocation, WeightDictionary};
use crate::fees::{FeeParams, Payment, TaState};
use crate::ledger::{commit_transactions, flush_pool, ItemKind, Ledger, MisbehaviorReport, PendingPool, Vrd};
use crate::model::codec::PREFIX_SIZE;
use crate::model::{Block, Digest, Endorsement, PublicKey, Signature, Transaction, CREDENTIAL_SIZE, DIGEST_LEN};
use crate::net::{BackboneId, JoinOutcome, JoinRequest, Micros, MonitorBoard, Network, Role};
use crate::verification::{
    assemble, select_validator_set, verifier_set_for_block, verify_block, verify_transaction, FailureReason,
    MemberVerdict, SetParams, VerificationOutcome,
};

/// Wire size of one verifier's answer: block digest, verdict byte and the
/// verifier's credential.
pub const VOTE_BYTES: usize = PREFIX_SIZE + DIGEST_LEN + 1 + CREDENTIAL_SIZE;

enum Ev {
    Register(u32),
    Finalize,
    Submit(usize),
    TxArrive { node: u32, tx: Rc<Transaction> },
    BlockArrive { node: u32, block: Rc<Block> },
    Vote { block: Digest, verdict: MemberVerdict },
    Endorsed { node: u32, block: Rc<Block> },
    ReportSettle { report: MisbehaviorReport, emitted: Micros },
}

struct Assembly {
    block: Rc<Block>,
    verifiers: Vec<PublicKey>,
    verdicts: Vec<MemberVerdict>,
}

struct Period {
    epoch: u32,
    alloc: RangeAllocation,
    params: SetParams,
    pools: Vec<PendingPool>,
    heads: Vec<Option<Digest>>,
    committed_txs: u64,
    blocks: u64,
}

enum Item {
    Tx(Rc<Transaction>),
    Block(Rc<Block>),
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    traffic: Traffic,
    node_of: HashMap<PublicKey, u32>,
    auditors: BTreeSet<u32>,
    net: Network,
    queue: EventQueue<Ev>,
    log: EventLog,
    report: MetricsReport,
    vvd: Option<Vrd>,
    period: Option<Period>,
    ledgers: BTreeMap<(u32, PublicKey), Ledger>,
    committed: HashSet<Digest>,
    assembling: BTreeMap<Digest, Assembly>,
    items: HashMap<Digest, Item>,
    settled_items: HashSet<Digest>,
    excluded: BTreeSet<PublicKey>,
    ta: TaState,
    fee_params: FeeParams,
    // Attacks.
    malicious: BTreeSet<u32>,
    attacker: Option<u32>,
    forged: HashSet<Digest>,
    droppers: BTreeSet<BackboneId>,
    drop_rng: ChaCha8Rng,
    attack: Option<AttackOutcome>,
    // Lazy periodic work.
    next_rui: Micros,
    board: Option<MonitorBoard>,
    next_window: Micros,
}

pub fn run_vericom(cfg: &ScenarioConfig, log_events: bool) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let mut e = Engine::new(cfg, log_events)?;
    for epoch in 1..=cfg.epochs {
        e.run_epoch(epoch)?;
    }
    Ok(e.finish())
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ScenarioConfig, log_events: bool) -> Result<Self, SimError> {
        let traffic = Traffic::new(cfg);
        let graph = scenario_backbone(cfg)?;
        let n = cfg.num_iot_nodes as u32;
        let auditors: BTreeSet<u32> = (n - cfg.auditors as u32..n).collect();
        let node_of = (0..n).map(|i| (traffic.pk(i), i)).collect();
        let epoch_length = ms(cfg.gamma_ms) + ms(cfg.tx_interval_ms) * cfg.tx_count as u64;
        let fee_params = FeeParams::new(cfg.tf, epoch_length.max(1)).map_err(|e| SimError::Fees(e.to_string()))?;
        let untrusted = cfg.trust_mode == TrustMode::Untrusted;
        let attack = (cfg.attack.kind != AttackKind::None)
            .then(|| AttackOutcome { kind: cfg.attack.kind.as_str().into(), ..Default::default() });
        let mut e = Engine {
            cfg,
            traffic,
            node_of,
            auditors,
            board: untrusted.then(|| MonitorBoard::new(&graph, cfg.monitor.group_size, 0, cfg.seed)),
            next_window: if untrusted { ms(cfg.monitor.window_ms) } else { Micros::MAX },
            net: Network::new(graph),
            queue: EventQueue::new(),
            log: EventLog::new(log_events),
            report: MetricsReport {
                mode: cfg.mode.as_str().into(),
                num_iot_nodes: cfg.num_iot_nodes,
                num_backbone: cfg.num_backbone,
                validators: cfg.num_validators,
                n: cfg.n,
                m: cfg.m,
                seed: cfg.seed,
                ..Default::default()
            },
            vvd: None,
            period: None,
            ledgers: BTreeMap::new(),
            committed: HashSet::new(),
            assembling: BTreeMap::new(),
            items: HashMap::new(),
            settled_items: HashSet::new(),
            excluded: BTreeSet::new(),
            ta: TaState::new(),
            fee_params,
            malicious: BTreeSet::new(),
            attacker: None,
            forged: HashSet::new(),
            droppers: BTreeSet::new(),
            drop_rng: stream(cfg.seed, "drop"),
            attack,
            next_rui: ms(cfg.rui_period_ms),
        };
        for node in 0..n {
            e.join(node);
        }
        e.net.rui_tick();
        if cfg.attack.kind == AttackKind::Dropping {
            e.droppers = if cfg.attack.adversaries.is_empty() {
                let g = e.net.graph();
                let hub = g.ids().max_by_key(|&b| (g.degree(b), std::cmp::Reverse(b))).expect("non-empty");
                BTreeSet::from([hub])
            } else {
                cfg.attack.adversaries.iter().copied().collect()
            };
            for &d in &e.droppers {
                e.log.record(0, format_args!("bn:{d}"), "adversary", "-");
            }
        }
        Ok(e)
    }

    fn role(&self, node: u32) -> Role {
        if (node as usize) < self.cfg.num_validators {
            Role::Validator
        } else if self.auditors.contains(&node) {
            Role::Auditor
        } else {
            Role::Member
        }
    }

    fn join(&mut self, node: u32) {
        let delays: Vec<(BackboneId, Micros)> =
            self.net.graph().ids().map(|b| (b, access_delay(self.cfg, node, b))).collect();
        let req = JoinRequest { pk: self.traffic.pk(node), role: self.role(node) };
        match self.net.join(req, &delays) {
            JoinOutcome::Attached(bn) => self.log.record(self.queue.now(), format_args!("iot:{node}"), "join", bn),
            JoinOutcome::Isolated => {
                self.report.isolated += 1;
                self.log.record(self.queue.now(), format_args!("iot:{node}"), "isolated", "-");
            }
        }
    }

    fn period(&self) -> &Period {
        self.period.as_ref().expect("allocation finalized")
    }

    fn now(&self) -> Micros {
        self.queue.now()
    }

    fn cost(&self) -> Micros {
        ms(self.cfg.verify_cost_ms)
    }

    fn run_epoch(&mut self, epoch: u32) -> Result<(), SimError> {
        let start = self.now();
        let gamma = ms(self.cfg.gamma_ms);
        let barred: BTreeSet<PublicKey> = self.excluded.union(&self.ta.penalized()).copied().collect();
        self.vvd = Some(Vrd::open(start, gamma, barred.clone()));
        self.period = None;
        for v in 0..self.cfg.num_validators as u32 {
            let offset = (unit(self.cfg.seed, "register", u64::from(epoch), u64::from(v)) * gamma as f64) as Micros;
            self.queue.schedule(start + offset.min(gamma - 1), Ev::Register(v));
        }
        self.queue.schedule(start + gamma, Ev::Finalize);
        let interval = ms(self.cfg.tx_interval_ms);
        for slot in 0..self.cfg.tx_count as usize {
            self.queue.schedule(start + gamma + interval * (slot as u64 + 1), Ev::Submit(slot));
        }
        self.drain()?;
        while self.flush_pools() {
            self.drain()?;
        }
        self.settle(epoch, barred)
    }

    fn drain(&mut self) -> Result<(), SimError> {
        while let Some(t) = self.queue.peek_time() {
            self.tick_until(t)?;
            let (_, ev) = self.queue.pop().expect("peeked");
            self.handle(ev)?;
        }
        Ok(())
    }

    fn tick_until(&mut self, t: Micros) -> Result<(), SimError> {
        loop {
            let due = self.next_rui.min(self.next_window);
            if due > t {
                return Ok(());
            }
            self.queue.advance_to(due);
            if self.next_window <= self.next_rui {
                self.close_window()?;
                self.next_window += ms(self.cfg.monitor.window_ms);
            } else {
                for u in self.net.rui_tick() {
                    self.log.record(due, format_args!("bn:{}", u.origin), "rui", u.sequence);
                }
                self.next_rui += ms(self.cfg.rui_period_ms);
            }
        }
    }

    fn close_window(&mut self) -> Result<(), SimError> {
        let now = self.now();
        let board = self.board.take().expect("untrusted mode");
        let flagged: BTreeSet<BackboneId> =
            crate::net::monitor_and_detect(&board).iter().map(|s| s.monitored).collect();
        if !flagged.is_empty() {
            for &bn in &flagged {
                self.log.record(now, format_args!("bn:{bn}"), "flagged", board.window);
            }
            if let Some(a) = self.attack.as_mut() {
                a.flagged.extend(flagged.iter().copied());
                a.flagged_window.get_or_insert(board.window);
                a.detected = true;
                a.detection_time.get_or_insert(now);
                a.reconstructed_at.get_or_insert(now);
            }
            let orphans = self.net.reconstruct(&flagged)?;
            self.log.record(now, "backbone", "reconstruct", flagged.len());
            for (pk, _) in orphans {
                self.join(self.node_of[&pk]);
            }
            self.droppers.retain(|b| !flagged.contains(b));
        }
        self.board =
            Some(MonitorBoard::new(self.net.graph(), self.cfg.monitor.group_size, board.window + 1, self.cfg.seed));
        Ok(())
    }

    fn handle(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Register(node) => {
                let pk = self.traffic.pk(node);
                let now = self.now();
                let vrd = self.vvd.as_mut().expect("window open");
                let kind = if vrd.register_interest(pk, now).is_ok() { "register" } else { "register-refused" };
                self.log.record(now, format_args!("iot:{node}"), kind, pk.short());
            }
            Ev::Finalize => self.finalize()?,
            Ev::Submit(slot) => self.submit(slot),
            Ev::TxArrive { node, tx } => self.tx_arrive(node, tx),
            Ev::BlockArrive { node, block } => self.block_arrive(node, block),
            Ev::Vote { block, verdict } => self.vote(block, verdict),
            Ev::Endorsed { node, block } => self.endorsed(node, block),
            Ev::ReportSettle { report, emitted } => self.settle_report(report, emitted),
        }
        Ok(())
    }

    fn finalize(&mut self) -> Result<(), SimError> {
        let now = self.now();
        let epoch = self.report.epochs.len() as u32 + 1;
        let vrd = self.vvd.as_mut().expect("window open");
        let alloc = vrd.finalize_allocation(&WeightDictionary::default(), now)?.clone();
        let params = SetParams::new(self.cfg.n, self.cfg.m, alloc.len())?;
        self.log.record(now, "vrd", "allocation", alloc.len());
        let pools = alloc.ranges().iter().map(|&r| PendingPool::new(r)).collect();
        let heads = vec![None; alloc.len()];
        self.period = Some(Period { epoch, alloc, params, pools, heads, committed_txs: 0, blocks: 0 });
        if epoch == 1 {
            self.plan_attack();
        }
        Ok(())
    }

    fn pos_of(&self, node: u32) -> Option<usize> {
        self.period().alloc.position_of(&self.traffic.pk(node))
    }

    fn node_at(&self, pos: usize) -> u32 {
        self.node_of[&self.period().alloc.pk(pos)]
    }

    /// Ring positions around a generator: its transaction validator set and
    /// its blocks' verifier set.
    fn sets_of(&self, pos: usize) -> (Vec<usize>, Vec<usize>) {
        let p = self.period();
        let probe = Digest::parse(&p.alloc.range(pos).start_symbol().as_char().to_string()).expect("one symbol");
        let (vset, vrf) = verifier_set_for_block(&probe, &p.alloc, &p.params).expect("admissible");
        (vset.members().collect(), vrf.members().collect())
    }

    fn plan_attack(&mut self) {
        let spec = &self.cfg.attack;
        if !matches!(spec.kind, AttackKind::FalseVerification | AttackKind::FakeTransaction) {
            return;
        }
        let validators = self.period().alloc.len();
        let gen_pos = match spec.adversaries.first().and_then(|&a| self.pos_of(a)) {
            Some(p) => p,
            None => stream(self.cfg.seed, "attack").gen_range(0..validators),
        };
        let (vset, vrf) = self.sets_of(gen_pos);
        let mut bad: BTreeSet<usize> = BTreeSet::from([gen_pos]);
        if !spec.adversaries.is_empty() {
            bad.extend(spec.adversaries.iter().filter_map(|&a| self.pos_of(a)));
        } else {
            match (spec.kind, spec.collusion) {
                (AttackKind::FalseVerification, Collusion::Minority) => bad.extend(vrf.get(1).copied()),
                (AttackKind::FalseVerification, Collusion::Full) => bad.extend(vrf.iter().copied()),
                (AttackKind::FakeTransaction, Collusion::Minority) => {}
                (AttackKind::FakeTransaction, Collusion::Full) => {
                    bad.extend(vset.iter().copied());
                    bad.extend(vrf.iter().copied());
                }
                _ => unreachable!(),
            }
        }
        self.malicious = bad.iter().map(|&p| self.node_at(p)).collect();
        self.attacker = Some(self.node_at(gen_pos));
        for &m in &self.malicious {
            self.log.record(self.now(), format_args!("iot:{m}"), "adversary", "-");
        }
    }

    fn submit(&mut self, slot: usize) {
        let (sender, tx) = self.traffic.next_tx();
        let epoch = self.period().epoch;
        if epoch == 1 && slot == self.cfg.attack.at_tx {
            match self.cfg.attack.kind {
                AttackKind::FalseVerification => return self.launch_false_verification(),
                AttackKind::FakeTransaction => return self.launch_fake_transaction(sender),
                _ => {}
            }
        }
        self.report.injected_txs += 1;
        self.send_tx(sender, tx);
    }

    fn main_generator(&self) -> usize {
        let node = self.attacker.expect("attack planned");
        self.pos_of(node).expect("adversary is a validator")
    }

    /// A transaction whose sender never signed it, with a digest in the
    /// range of `pos`.
    fn forge_tx(&mut self, pos: usize) -> Transaction {
        let range = self.period().alloc.range(pos);
        let victim = (0..self.traffic.len() as u32).find(|n| !self.malicious.contains(n)).unwrap_or(0);
        let victim = self.traffic.pk(victim);
        let mut rng = stream(self.cfg.seed, "forge");
        loop {
            let mut payload = vec![0u8; self.cfg.payload_bytes];
            rng.fill(payload.as_mut_slice());
            let sig = Signature::from_bytes((0..64).map(|_| rng.gen()).collect());
            let tx = Transaction::from_parts(victim, payload, None, sig);
            if range.contains(tx.id().msch()) {
                self.forged.insert(tx.id().clone());
                return tx;
            }
        }
    }

    fn launch_false_verification(&mut self) {
        let pos = self.main_generator();
        let forged = self.forge_tx(pos);
        let node = self.node_at(pos);
        let p = self.period.as_mut().expect("finalized");
        let range = p.alloc.range(pos);
        let block = Block::seal(self.traffic.keys(node), p.heads[pos].clone(), p.epoch, vec![forged], |d| {
            range.contains(d.msch())
        })
        .expect("seal in range");
        self.log.record(self.queue.now(), format_args!("iot:{node}"), "attack-block", block.digest());
        self.send_block(node, pos, block, self.queue.now());
    }

    fn launch_fake_transaction(&mut self, sender: u32) {
        let pos = self.main_generator();
        let forged = self.forge_tx(pos);
        self.log.record(self.now(), format_args!("iot:{sender}"), "attack-tx", forged.id());
        self.send_tx(sender, forged);
    }

    /// Multicast from `from` and schedule one arrival event per delivery.
    /// Returns the arrival delay of each delivered copy.
    fn deliver(
        &mut self,
        from: u32,
        dests: &[PublicKey],
        size: usize,
        now: Micros,
        make: impl Fn(u32) -> Ev,
    ) -> Vec<Micros> {
        let Some(src) = self.net.attachments().get(&self.traffic.pk(from)).copied() else {
            self.report.unroutable += dests.len() as u64;
            return Vec::new();
        };
        let droppers = if self.droppers.is_empty() || self.drop_rng.gen::<f64>() < self.cfg.attack.drop_rate {
            self.droppers.clone()
        } else {
            BTreeSet::new()
        };
        let plan = self.net.multicast(src.bn, dests, &droppers);
        self.report.packet_bytes_backbone += (plan.transmissions.len() * size) as u64;
        self.report.unroutable += plan.unroutable.len() as u64;
        if !plan.dropped.is_empty() {
            self.report.dropped += plan.dropped.len() as u64;
            if let Some(a) = self.attack.as_mut() {
                a.first_drop.get_or_insert(now);
            }
            for (bn, pk) in &plan.dropped {
                self.log.record(now, format_args!("bn:{bn}"), "drop", pk.short());
            }
        }
        if let Some(board) = self.board.as_mut() {
            for o in &plan.observations {
                board.observe(o);
            }
        }
        let mut delays = Vec::with_capacity(plan.deliveries.len());
        for d in &plan.deliveries {
            let Some(dst) = self.net.attachments().get(&d.pk) else { continue };
            let delay = src.access_delay + d.delay + dst.access_delay;
            self.report.packet_bytes_iot += size as u64;
            self.queue.schedule(now + delay, make(self.node_of[&d.pk]));
            delays.push(delay);
        }
        delays
    }

    fn send_tx(&mut self, sender: u32, tx: Transaction) {
        let now = self.now();
        let p = self.period();
        let vset = select_validator_set(tx.id(), &p.alloc, &p.params).expect("admissible");
        let dests = vset.public_keys(&p.alloc);
        self.log.record(now, format_args!("iot:{sender}"), "tx-send", tx.id());
        let tx = Rc::new(tx);
        self.items.insert(tx.id().clone(), Item::Tx(tx.clone()));
        let size = tx.wire_size();
        let delays = self.deliver(sender, &dests, size, now, |node| Ev::TxArrive { node, tx: tx.clone() });
        for &d in &delays {
            self.report.delay.record(d);
        }
        if let Some(a) = self.attack.as_mut() {
            if a.reconstructed_at.is_some() && delays.len() == dests.len() {
                a.delivery_resumed = true;
            }
        }
    }

    fn tx_arrive(&mut self, node: u32, tx: Rc<Transaction>) {
        self.report.verify_ops += 1;
        let now = self.now() + self.cost();
        let bad = self.malicious.contains(&node);
        let outcome = if bad { VerificationOutcome::Valid } else { verify_transaction(&tx, &self.committed) };
        self.log.record(now, format_args!("iot:{node}"), "tx-verify", tx.id());
        if let VerificationOutcome::Invalid(reason) = outcome {
            let accused = if reason == FailureReason::BadSignature { Vec::new() } else { vec![*tx.sender()] };
            self.emit_report(node, tx.id().clone(), ItemKind::Transaction, reason, accused, now);
        }
        let Some(pos) = self.pos_of(node) else { return };
        let p = self.period();
        let main = select_validator_set(tx.id(), &p.alloc, &p.params).expect("admissible").main;
        if main != pos || !outcome.is_valid() {
            return;
        }
        let p = self.period.as_mut().expect("finalized");
        if p.pools[pos].admit_unchecked((*tx).clone()).is_err() {
            return;
        }
        let block_size = self.cfg.block_size;
        let block =
            commit_transactions(self.traffic.keys(node), p.heads[pos].as_ref(), &mut p.pools[pos], block_size, p.epoch);
        if let Some(block) = block {
            self.send_block(node, pos, block, now);
        }
    }

    /// Cut whatever is still pending. Returns true if any block went out.
    fn flush_pools(&mut self) -> bool {
        let mut any = false;
        for pos in 0..self.period().alloc.len() {
            let node = self.node_at(pos);
            let p = self.period.as_mut().expect("finalized");
            if let Some(block) = flush_pool(
                self.traffic.keys(node),
                p.heads[pos].as_ref(),
                &mut p.pools[pos],
                self.cfg.block_size,
                p.epoch,
            ) {
                self.send_block(node, pos, block, self.now());
                any = true;
            }
        }
        any
    }

    fn send_block(&mut self, node: u32, pos: usize, block: Block, now: Micros) {
        let p = self.period.as_mut().expect("finalized");
        p.heads[pos] = Some(block.digest().clone());
        p.blocks += 1;
        self.report.blocks += 1;
        if block.transactions().iter().any(|t| self.forged.contains(t.id())) {
            if let Some(a) = self.attack.as_mut() {
                a.fake_block.get_or_insert(block.digest().to_string());
            }
        }
        let (_, vrf) = verifier_set_for_block(block.digest(), &p.alloc, &p.params).expect("admissible");
        let verifiers = vrf.public_keys(&p.alloc);
        self.log.record(now, format_args!("iot:{node}"), "block-send", block.digest());
        let block = Rc::new(block);
        self.items.insert(block.digest().clone(), Item::Block(block.clone()));
        self.assembling.insert(
            block.digest().clone(),
            Assembly { block: block.clone(), verifiers: verifiers.clone(), verdicts: Vec::new() },
        );
        let size = block.wire_size();
        self.deliver(node, &verifiers, size, now, |n| Ev::BlockArrive { node: n, block: block.clone() });
    }

    fn block_arrive(&mut self, node: u32, block: Rc<Block>) {
        self.report.verify_ops += 1;
        let now = self.now() + self.cost();
        let p = self.period();
        let keys = self.traffic.keys(node);
        let outcome = if self.malicious.contains(&node) {
            VerificationOutcome::Valid
        } else {
            verify_block(&block, &p.alloc, &self.committed)
        };
        let verdict = MemberVerdict {
            verifier: keys.public(),
            outcome,
            endorsement: outcome.is_valid().then(|| Endorsement::sign(keys, block.digest())),
        };
        let (_, vrf) = verifier_set_for_block(block.digest(), &p.alloc, &p.params).expect("admissible");
        let main = self.node_at(vrf.main);
        self.log.record(now, format_args!("iot:{node}"), "block-verify", block.digest());
        if let VerificationOutcome::Invalid(reason) = outcome {
            let accused = vec![*block.generator()];
            self.emit_report(node, block.digest().clone(), ItemKind::Block, reason, accused, now);
        }
        let digest = block.digest().clone();
        if main == node {
            self.queue.schedule(now, Ev::Vote { block: digest, verdict });
        } else {
            let main_pk = self.traffic.pk(main);
            let verdict = Rc::new(verdict);
            self.deliver(node, &[main_pk], VOTE_BYTES, now, |_| Ev::Vote {
                block: digest.clone(),
                verdict: (*verdict).clone(),
            });
        }
    }

    fn vote(&mut self, digest: Digest, verdict: MemberVerdict) {
        let Some(a) = self.assembling.get_mut(&digest) else { return };
        a.verdicts.push(verdict);
        if a.verdicts.len() < a.verifiers.len() {
            return;
        }
        let a = self.assembling.remove(&digest).expect("present");
        let now = self.now();
        let p = self.period();
        let (_, vrf) = verifier_set_for_block(&digest, &p.alloc, &p.params).expect("admissible");
        let main = self.node_at(vrf.main);
        match assemble(&a.block, &a.verifiers, &a.verdicts) {
            Ok(endorsed) => {
                let mut dests: Vec<PublicKey> = p.alloc.validators().iter().map(|v| v.pk).collect();
                dests.extend(self.auditors.iter().map(|&n| self.traffic.pk(n)));
                dests.sort();
                dests.dedup();
                self.log.record(now, format_args!("iot:{main}"), "block-broadcast", &digest);
                if let Some(att) = self.attack.as_mut() {
                    if att.fake_block.as_deref() == Some(digest.as_str()) {
                        att.fake_block_broadcast.get_or_insert(now);
                    }
                }
                let block = Rc::new(endorsed);
                let size = block.wire_size();
                self.deliver(main, &dests, size, now, |node| Ev::Endorsed { node, block: block.clone() });
            }
            Err(rej) => {
                self.log.record(now, format_args!("iot:{main}"), "assembly-abort", &digest);
                if let Some(att) = self.attack.as_mut() {
                    att.aborted_assemblies += 1;
                }
                let _ = rej;
            }
        }
    }

    fn endorsed(&mut self, node: u32, block: Rc<Block>) {
        let now = self.now();
        let pk = self.traffic.pk(node);
        if block.generator() == &pk {
            let p = self.period.as_mut().expect("finalized");
            let ledger = self.ledgers.entry((p.epoch, pk)).or_insert_with(|| Ledger::new(pk));
            match ledger.append_block((*block).clone(), &p.alloc, &p.params) {
                Ok(()) => {
                    let n = block.transactions().len() as u64;
                    p.committed_txs += n;
                    self.report.committed_txs += n;
                    self.committed.extend(block.transactions().iter().map(|t| t.id().clone()));
                    self.log.record(now, format_args!("iot:{node}"), "append", block.digest());
                }
                Err(e) => {
                    self.report.append_failures += 1;
                    self.log.record(now, format_args!("iot:{node}"), "append-failed", e);
                }
            }
        }
        if self.auditors.contains(&node) {
            self.report.audit_ops += 1;
            let p = self.period();
            let (_, report) = crate::ledger::audit_block(&pk, &block, &p.alloc, &self.committed);
            if let Some(r) = report {
                self.emit_report(node, r.item, r.kind, r.reason, r.accused, now + self.cost());
            }
        }
    }

    fn emit_report(
        &mut self,
        reporter: u32,
        item: Digest,
        kind: ItemKind,
        reason: FailureReason,
        accused: Vec<PublicKey>,
        at: Micros,
    ) {
        let report = MisbehaviorReport { item, kind, reason, reporter: self.traffic.pk(reporter), accused };
        self.report.reports += 1;
        if let Some(a) = self.attack.as_mut() {
            a.reports += 1;
        }
        self.log.record(at, format_args!("iot:{reporter}"), "report", &report.item);
        let size = report.to_transaction(self.traffic.keys(reporter)).wire_size();
        let Some(att) = self.net.attachments().get(&report.reporter).copied() else { return };
        let plan = self.net.broadcast(att.bn);
        self.report.packet_bytes_backbone += (plan.transmissions * size) as u64;
        self.report.packet_bytes_iot += (self.net.attachments().len() * size) as u64;
        let spread = plan.arrival.values().copied().max().unwrap_or(0);
        let access = ms(self.cfg.access_delay_ms);
        self.queue.schedule(at + att.access_delay + spread + access, Ev::ReportSettle { report, emitted: at });
    }

    /// The VRD re-checks the accused item and excludes the accused if the
    /// report holds.
    fn settle_report(&mut self, report: MisbehaviorReport, emitted: Micros) {
        let now = self.now();
        if !self.settled_items.insert(report.item.clone()) {
            return;
        }
        let holds = match self.items.get(&report.item) {
            Some(Item::Tx(tx)) => !verify_transaction(tx, &crate::verification::NoHistory).is_valid(),
            Some(Item::Block(b)) => !verify_block(b, &self.period().alloc, &self.committed).is_valid(),
            None => false,
        };
        if !holds {
            self.settled_items.remove(&report.item);
            self.log.record(now, "vrd", "report-rejected", &report.item);
            return;
        }
        self.log.record(now, "vrd", "report-accepted", &report.item);
        let malicious_item = match self.items.get(&report.item) {
            Some(Item::Block(b)) => b.transactions().iter().any(|t| self.forged.contains(t.id())),
            Some(Item::Tx(t)) => self.forged.contains(t.id()),
            None => false,
        };
        self.excluded.extend(report.accused.iter().copied());
        if let Some(a) = self.attack.as_mut() {
            if malicious_item {
                a.detected = true;
                a.detection_time = Some(a.detection_time.map_or(emitted, |t| t.min(emitted)));
            }
            for pk in &report.accused {
                if !a.excluded.contains(pk) {
                    a.excluded.push(*pk);
                }
            }
        }
    }

    fn settle(&mut self, epoch: u32, barred: BTreeSet<PublicKey>) -> Result<(), SimError> {
        let p = self.period.take().expect("finalized");
        let underpayers: BTreeSet<PublicKey> = self.cfg.fees.underpayers.iter().map(|&u| self.traffic.pk(u)).collect();
        let mut lengths = BTreeMap::new();
        let mut payments = Vec::new();
        for v in p.alloc.validators() {
            let len = self.ledgers.get(&(epoch, v.pk)).map_or(0, |l| l.ledger_length(epoch));
            lengths.insert(v.pk, len);
        }
        let mut payers: BTreeSet<PublicKey> = lengths.keys().copied().collect();
        payers.extend(self.ta.penalized());
        for pk in payers {
            let tmf = crate::fees::compute_tmf(self.cfg.tf, lengths.get(&pk).copied().unwrap_or(0));
            let amount = if epoch == 1 && underpayers.contains(&pk) {
                rust_decimal::Decimal::ZERO
            } else {
                tmf + self.ta.arrears(&pk)
            };
            payments.push(Payment { payer: pk, amount, epoch });
        }
        let backbone: Vec<BackboneId> = self.net.graph().ids().collect();
        let settlement = self
            .ta
            .settle_epoch(&self.fee_params, epoch, &payments, &lengths, &backbone)
            .map_err(|e| SimError::Fees(e.to_string()))?;
        for pk in &settlement.notices {
            self.log.record(self.queue.now(), "ta", "penalty", pk.short());
        }
        self.report.epochs.push(EpochSummary {
            epoch,
            validators: p.alloc.validators().iter().map(|v| v.pk).collect(),
            barred: barred.into_iter().collect(),
            committed_txs: p.committed_txs,
            blocks: p.blocks,
            settlement: settlement.report(),
        });
        self.queue.advance_to(self.now() + 1);
        Ok(())
    }

    fn finish(mut self) -> RunOutput {
        self.report.verify_time_ms = self.report.verify_ops as f64 * self.cfg.verify_cost_ms;
        self.report.routing_table_bytes = self.net.tables().values().map(|t| t.size_bytes() as u64).max().unwrap_or(0);
        self.report.rui_updates = self.net.rui_messages();
        self.report.attack = self.attack.take();
        let ledger = self.ledgers.values().map(|l| l.export()).collect();
        RunOutput { report: self.report, log: self.log, ledger }
    }
}
