//! End-to-end acceptance run. Prints one PASS or FAIL line per criterion and
//! exits non-zero if any fails.

mod common;
#[path = "../../core/tests/common/mod.rs"]
mod fixture;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use hdlt_chaincode::ChaincodeError;
use hdlt_core::codec::{canonical_len, from_canonical};
use hdlt_core::ledger::{
    validate_chain, Block, BlockStore, Envelope, KvRead, KvWrite, Transaction, Version, WorldState, MAX_BLOCK_BYTES,
};
use hdlt_core::msp::{verify_card, AuthError, IdentityRecord, Role};
use hdlt_gateway::{serve, Gateway, GatewayConfig, GatewayError, ServerConfig, Session, SystemClock, RETRY_MS, RESUBMIT_MS};
use hdlt_loadtest::{apdex_score, run_load, LoadConfig, Login, RouteTemplate, Sample};
use hdlt_net::{NetError, TopologyConfig};
use hdlt_ordering::SubmitError;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use reqwest::Method;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("end-to-end scenario", end_to_end),
        ("login conformance", login_conformance),
        ("raft failover", raft_failover),
        ("mvcc correctness", mvcc_correctness),
        ("block cap", block_cap),
        ("authorization matrix", authorization_matrix),
        ("load test", load_test),
        ("hash determinism", hash_determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap()
}

fn settle(gw: &mut Gateway) -> Result<(), String> {
    gw.network_mut()
        .run_until(20_000, |n| n.converged() && n.all_peers_at(n.peer(7051).map_or(0, |p| p.height())))
        .map(|_| ())
        .map_err(|e| format!("peers did not converge: {e}"))
}

// ---- end-to-end ----

struct Http {
    base: String,
    client: reqwest::Client,
}

impl Http {
    async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> Result<Value, String> {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.map_err(|e| e.to_string())?;
        let status = resp.status();
        let v: Value = resp.json().await.map_err(|e| e.to_string())?;
        ensure(status.is_success(), || format!("{path} answered {status}: {v}"))?;
        Ok(v)
    }

    async fn login(&self, id: &str, password: &str) -> Result<String, String> {
        let v = self.call(Method::POST, "/auth/login", None, Some(json!({"identity_id": id, "password": password}))).await?;
        Ok(v["token"].as_str().unwrap_or_default().to_string())
    }

    async fn enroll(&self, admin: &str, id: &str, attrs: Value) -> Result<String, String> {
        let user = json!({"identity_id": id, "display_name": id, "attrs": attrs, "password": format!("{id}-pw")});
        self.call(Method::POST, "/admin/users", Some(admin), Some(user)).await?;
        self.login(id, &format!("{id}-pw")).await
    }

    /// Wait until every peer holds the same chain, so reads at any org see all writes.
    async fn settle(&self, server: &hdlt_gateway::RunningGateway) -> Result<(), String> {
        for _ in 0..1_000 {
            if server.state.lock().network().converged() {
                return Ok(());
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
        Err("peers did not converge".into())
    }
}

fn end_to_end() -> Outcome {
    let started = Instant::now();
    let gw = Gateway::start(GatewayConfig::new(TopologyConfig::paper(), ADMIN_PASSWORD)).map_err(|e| e.to_string())?;
    runtime().block_on(async move {
        let server = serve(gw, "127.0.0.1:0".parse().unwrap(), Arc::new(SystemClock), ServerConfig::default())
            .await
            .map_err(|e| e.to_string())?;
        let api = Http { base: server.url(), client: reqwest::Client::new() };
        let (post, get) = (Method::POST, Method::GET);

        let a_admin = api.login("admin@AuthorityOrg", ADMIN_PASSWORD).await?;
        let d_admin = api.login("admin@DoctorOrg", ADMIN_PASSWORD).await?;
        let n_admin = api.login("admin@NagorikOrg", ADMIN_PASSWORD).await?;
        let authority = api.enroll(&a_admin, "bmdc-1", json!({})).await?;
        let dr1 = api.enroll(&d_admin, "reg-1", json!({})).await?;
        let dr2 = api.enroll(&d_admin, "reg-2", json!({})).await?;
        let p1 = api.enroll(&n_admin, "nid-1", json!({"allergies": "M1", "district": "Dhaka"})).await?;
        let p2 = api.enroll(&n_admin, "nid-2", json!({})).await?;
        let p3 = api.enroll(&n_admin, "nid-3", json!({})).await?;

        api.call(post.clone(), "/doctors", Some(&dr1), Some(json!({"name": "Dr One", "specialty": "Cardiology"}))).await?;
        api.call(post.clone(), "/doctors", Some(&dr2), Some(json!({"name": "Dr Two", "specialty": "Cardiology"}))).await?;
        api.settle(&server).await?;
        api.call(post.clone(), "/doctors/reg-1/approve", Some(&authority), None).await?;
        for m in ["M1", "M2", "M3"] {
            api.call(post.clone(), "/medicines", Some(&authority), Some(json!({"medicine_id": m, "generic_name": m}))).await?;
        }
        api.settle(&server).await?;
        for m in ["M1", "M2", "M3"] {
            api.call(post.clone(), &format!("/medicines/{m}/authorize"), Some(&authority), None).await?;
        }
        api.call(post.clone(), "/consents", Some(&p1), Some(json!({"doctor_id": "reg-1"}))).await?;
        let appt = api.call(post.clone(), "/appointments", Some(&p1), Some(json!({"doctor_id": "reg-1", "slot": 10}))).await?;
        api.settle(&server).await?;
        let appt_id = appt["result"]["appt_id"].as_str().unwrap_or_default().to_string();
        let confirmed = api.call(post.clone(), &format!("/appointments/{appt_id}/confirm"), Some(&dr1), None).await?;
        ensure(confirmed["result"]["status"] == "confirmed", || format!("appointment: {confirmed}"))?;
        let rx = json!({"patient_id": "nid-1", "items": [
            {"medicine_id": "M1", "dosage": "500mg", "days": 5},
            {"medicine_id": "M2", "dosage": "10mg", "days": 5}]});
        let issued = api.call(post.clone(), "/prescriptions", Some(&dr1), Some(rx)).await?;
        let warnings = issued["result"]["warnings"].as_array().cloned().unwrap_or_default();
        ensure(warnings.len() == 1 && warnings[0].as_str().unwrap_or("").contains("M1"), || format!("warnings {warnings:?}"))?;
        for (p, sev) in [(&p1, "high"), (&p2, "low"), (&p3, "medium")] {
            api.call(post.clone(), "/complaints", Some(p), Some(json!({"subject": "waiting time", "body": "-", "severity": sev}))).await?;
        }
        api.settle(&server).await?;
        let found = api.call(get.clone(), "/specialists?specialty=cardiology", Some(&p2), None).await?;
        let ids: Vec<&str> = found.as_array().map(|a| a.iter().filter_map(|d| d["doctor_id"].as_str()).collect()).unwrap_or_default();
        ensure(ids == ["reg-1"], || format!("specialists {ids:?}"))?;
        let tendency = api.call(get.clone(), "/analytics/tendency/reg-1", Some(&authority), None).await?;
        ensure(tendency == json!({"M1": 1, "M2": 1}), || format!("tendency {tendency}"))?;
        let stats = api.call(get.clone(), "/analytics/stats?group_by=specialty", Some(&authority), None).await?;
        ensure(stats["cardiology"] == "suppressed" || stats["Cardiology"] == "suppressed", || format!("stats {stats}"))?;
        let complaints = api.call(get.clone(), "/complaints", Some(&authority), None).await?;
        ensure(complaints.as_array().map_or(0, |a| a.len()) == 3, || format!("complaints {complaints}"))?;

        api.settle(&server).await?;
        let gw = server.state.lock();
        let net = gw.network();
        let mut heights = BTreeSet::new();
        for peer in net.peers() {
            let report = validate_chain(peer.blocks());
            ensure(report.valid, || format!("peer {} chain invalid: {:?}", peer.port(), report.reason))?;
            let replayed = WorldState::replay(peer.blocks()).map_err(|e| e.to_string())?;
            ensure(replayed.encoded() == peer.state().encoded(), || format!("peer {} replay differs", peer.port()))?;
            heights.insert(peer.height());
        }
        let ports: Vec<u16> = net.peers().map(|p| p.port()).collect();
        ensure(ports == [5051, 6051, 7051, 8051, 9051, 10051], || format!("peer ports {ports:?}"))?;
        let elapsed = started.elapsed();
        ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
        Ok(format!(
            "{} peers on the default ports at height {:?}, chains valid, replay byte-identical, {:.1}s < 30s",
            ports.len(),
            heights,
            elapsed.as_secs_f64()
        ))
    })
}

// ---- login ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LoginClass {
    InvalidIdentity,
    InvalidPassword,
    Granted,
}

fn login_conformance() -> Outcome {
    let mut gw = start();
    let mut seen = BTreeSet::new();
    let mut cases = 0;
    for org in [AUTHORITY, DOCTORS, NAGORIK] {
        let admin = admin(&mut gw, org);
        let full = format!("full-{org}");
        let card_only = format!("card-{org}");
        gw.register_user(&admin, &new_user(&full, &[])).map_err(|e| e.to_string())?;
        gw.prepare_registration(&admin, &new_user(&card_only, &[])).map_err(|e| e.to_string())?;
        settle(&mut gw)?;
        let identities = [(full.clone(), true, true), (card_only.clone(), true, false), (format!("ghost-{org}"), false, false)];
        for (id, in_wallet, on_ledger) in identities {
            for password in [format!("{id}-pw"), "wrong".to_string(), String::new()] {
                let correct = password == format!("{id}-pw");
                let expected = if !in_wallet {
                    LoginClass::InvalidIdentity
                } else if !on_ledger || !correct {
                    LoginClass::InvalidPassword
                } else {
                    LoginClass::Granted
                };
                let got = match gw.login(&id, &password, T0) {
                    Ok((_, s)) => {
                        let card = gw.wallet(org).and_then(|w| w.get(&s.identity_id)).ok_or("granted without card")?;
                        let root = gw.network().ca(org).ok_or("no CA")?.root_cert();
                        let probe = card.sign(b"login probe");
                        ensure(
                            verify_card(&card.certificate, root) && card.certificate.public_key.verify(b"login probe", &probe),
                            || format!("{id}: granted card does not verify"),
                        )?;
                        LoginClass::Granted
                    }
                    Err(GatewayError::Auth(AuthError::InvalidIdentity)) => LoginClass::InvalidIdentity,
                    Err(GatewayError::Auth(AuthError::InvalidPassword)) => LoginClass::InvalidPassword,
                    Err(other) => return Err(format!("{id}: outcome outside the flowchart: {other}")),
                };
                ensure(got == expected, || format!("{id} / {password:?}: expected {expected:?}, got {got:?}"))?;
                seen.insert(got);
                cases += 1;
            }
        }
    }
    let messages = (AuthError::InvalidIdentity.to_string(), AuthError::InvalidPassword.to_string());
    ensure(messages == ("Invalid Identity".into(), "Invalid Password".into()), || format!("{messages:?}"))?;
    ensure(seen.len() == 3, || format!("outcomes {seen:?}"))?;
    Ok(format!("{cases} cases over 3 orgs, outcomes exactly {{Invalid Identity, Invalid Password, access granted}}"))
}

// ---- raft ----

/// Stream 100 news posts into the fault-tolerant topology, killing the
/// leader after the 50th. Returns the anchor chain's head hash.
fn failover_run() -> Result<(String, u16, u16), String> {
    let mut gw = Gateway::start(GatewayConfig::new(TopologyConfig::ft(), ADMIN_PASSWORD)).map_err(|e| e.to_string())?;
    let a = admin(&mut gw, AUTHORITY);
    let mut txs = Vec::new();
    for i in 0..100 {
        txs.push(gw.prepare(&a, "post_news", json!({"title": format!("bulletin {i}"), "body": "-"})).map_err(|e| e.to_string())?);
    }
    let first_leader = gw.network().leader().ok_or("no leader")?;
    for (i, tx) in txs.iter().enumerate() {
        if i == 50 {
            let leader = gw.network().leader().ok_or("no leader")?;
            gw.network_mut().kill(leader).map_err(|e| e.to_string())?;
        }
        let mut tries = 0;
        while gw.submit(tx.clone()).is_err() {
            tries += 1;
            ensure(tries < 1_000, || format!("tx {i} never accepted"))?;
            gw.advance(RETRY_MS);
        }
        gw.advance(RETRY_MS);
    }
    // Entries the old leader accepted but never replicated are lost; the
    // client resubmits anything not yet committed.
    let deadline = gw.network().now() + 120_000;
    loop {
        let missing: Vec<&Transaction> = txs.iter().filter(|t| gw.receipt(AUTHORITY, &t.tx_id).is_none()).collect();
        if missing.is_empty() {
            break;
        }
        ensure(gw.network().now() < deadline, || format!("{} transactions never committed", missing.len()))?;
        let missing: Vec<Transaction> = missing.into_iter().cloned().collect();
        for t in missing {
            let _ = gw.submit(t);
        }
        gw.advance(RESUBMIT_MS);
    }
    settle(&mut gw)?;
    let net = gw.network();
    ensure(net.election_safe(), || "two leaders in one term".into())?;
    let ids: HashSet<_> = txs.iter().map(|t| t.tx_id).collect();
    for peer in net.peers().filter(|p| net.is_alive(p.port())) {
        let mut count: HashMap<_, usize> = HashMap::new();
        for b in peer.blocks() {
            for (e, valid) in b.transactions.iter().zip(&b.validity_flags) {
                if ids.contains(&e.tx_id()) {
                    ensure(*valid, || format!("peer {} has an invalid copy", peer.port()))?;
                    *count.entry(e.tx_id()).or_default() += 1;
                }
            }
        }
        ensure(count.len() == 100 && count.values().all(|&c| c == 1), || {
            format!("peer {}: {} distinct, max copies {:?}", peer.port(), count.len(), count.values().max())
        })?;
    }
    let head = net.anchor(AUTHORITY).and_then(|p| p.blocks().last()).ok_or("empty chain")?.hash().to_hex();
    Ok((head, first_leader, net.leader().ok_or("no leader after failover")?))
}

fn raft_failover() -> Outcome {
    let (head1, old, new) = failover_run()?;
    let (head2, _, _) = failover_run()?;
    ensure(old != new, || format!("leader {old} survived its own death"))?;
    ensure(head1 == head2, || "two runs with the same seed diverged".into())?;

    let mut gw = start();
    let a = admin(&mut gw, AUTHORITY);
    let tx = gw.prepare(&a, "post_news", json!({"title": "halted", "body": "-"})).map_err(|e| e.to_string())?;
    let leader = gw.network().leader().ok_or("no leader")?;
    let follower = [7050, 8050].into_iter().find(|p| *p != leader).ok_or("no follower")?;
    let height = gw.height();
    gw.network_mut().kill(follower).map_err(|e| e.to_string())?;
    let halted = matches!(gw.submit_and_wait(tx.clone(), 5_000), Err(GatewayError::Timeout { .. }));
    ensure(halted && gw.height() == height, || "2-orderer cluster committed without quorum".into())?;
    gw.network_mut().revive(follower).map_err(|e| e.to_string())?;
    let resumed = gw.submit_and_wait(tx, 20_000).map_err(|e| e.to_string())?;
    ensure(resumed.valid, || "commit after revive was invalid".into())?;
    Ok(format!(
        "ft: 100/100 committed once after leader {old} died (new leader {new}), election-safe, deterministic; default topology: 1 of 2 orderers down halts commits"
    ))
}

// ---- mvcc ----

const MVCC_KEYS: [&str; 4] = ["health/rx/a", "health/rx/b", "health/appt-slot/d1/9", "health/complaint/c1"];

#[derive(Debug, Clone)]
enum Read {
    Snapshot,
    Absent,
    Stale,
}

#[derive(Debug, Clone)]
struct Plan {
    reads: Vec<(usize, Read)>,
    writes: Vec<(usize, Option<u8>)>,
    replay: Option<usize>,
}

fn plan() -> impl Strategy<Value = Plan> {
    (
        prop::collection::vec((0..MVCC_KEYS.len(), prop_oneof![5 => Just(Read::Snapshot), 1 => Just(Read::Absent), 1 => Just(Read::Stale)]), 0..3),
        prop::collection::vec((0..MVCC_KEYS.len(), prop_oneof![4 => any::<u8>().prop_map(Some), 1 => Just(None)]), 0..3),
        prop::option::weighted(0.15, 0usize..16),
    )
        .prop_map(|(reads, writes, replay)| Plan { reads, writes, replay })
}

/// Plain serial replay: a transaction survives when it is new and every read
/// matches the live version; survivors' writes apply at (block, index).
#[derive(Default)]
struct SerialOracle {
    live: BTreeMap<String, (Vec<u8>, (u64, u32))>,
    ids: HashSet<String>,
}

impl SerialOracle {
    fn apply(&mut self, number: u64, txs: &[Transaction]) -> Vec<bool> {
        let mut flags = Vec::new();
        for (i, tx) in txs.iter().enumerate() {
            let fresh = !self.ids.contains(&tx.tx_id.to_hex());
            let reads_ok = tx.read_set.iter().all(|r| self.live.get(&r.key).map(|v| v.1) == r.version.map(|v| (v.block, v.tx)));
            let ok = fresh && reads_ok;
            if ok {
                self.ids.insert(tx.tx_id.to_hex());
                for w in &tx.write_set {
                    match &w.value {
                        Some(v) => {
                            self.live.insert(w.key.clone(), (v.clone(), (number, i as u32)));
                        }
                        None => {
                            self.live.remove(&w.key);
                        }
                    }
                }
            }
            flags.push(ok);
        }
        flags
    }
}

fn mvcc_case(setup: Vec<(usize, u8)>, blocks: Vec<Vec<Plan>>) -> Result<usize, TestCaseError> {
    let mut fx = fixture::Fixture::new(11);
    let mut state = WorldState::new();
    let mut oracle = SerialOracle::default();
    let genesis = fx.genesis();
    state.commit_block(&genesis).unwrap();
    let writes = setup.iter().map(|(k, v)| KvWrite { key: MVCC_KEYS[*k].into(), value: Some(vec![*v]) }).collect();
    let seed = fx.tx(0, vec![], writes);
    let b1 = fx.block_after(&genesis, vec![seed]);
    prop_assert_eq!(state.commit_block(&b1).unwrap(), oracle.apply(1, &[b1.transactions[0].as_transaction().unwrap().clone()]));

    // Every later transaction was simulated against the state after block 1.
    let snapshot: HashMap<&str, Option<Version>> = MVCC_KEYS.iter().map(|k| (*k, state.version_of(k))).collect();
    let mut made: Vec<Transaction> = Vec::new();
    let mut prev = b1;
    let mut checked = 0;
    for plans in blocks {
        let mut txs = Vec::new();
        for p in plans {
            let tx = match p.replay.filter(|r| *r < made.len()) {
                Some(r) => made[r].clone(),
                None => {
                    let reads = p
                        .reads
                        .iter()
                        .map(|(k, kind)| KvRead {
                            key: MVCC_KEYS[*k].into(),
                            version: match kind {
                                Read::Snapshot => snapshot[MVCC_KEYS[*k]],
                                Read::Absent => None,
                                Read::Stale => Some(Version::new(0, 7)),
                            },
                        })
                        .collect();
                    let writes = p.writes.iter().map(|(k, v)| KvWrite { key: MVCC_KEYS[*k].into(), value: v.map(|b| vec![b]) }).collect();
                    fx.tx(txs.len() % 3, reads, writes)
                }
            };
            made.push(tx.clone());
            txs.push(tx);
        }
        let block = fx.block_after(&prev, txs.clone());
        let flags = state.commit_block(&block).unwrap();
        prop_assert_eq!(&flags, &oracle.apply(block.number(), &txs));
        checked += flags.len();
        prev = block;
    }
    let live: BTreeMap<String, (Vec<u8>, (u64, u32))> = MVCC_KEYS
        .iter()
        .filter_map(|k| state.get(k).map(|v| (k.to_string(), (v.value.clone(), (v.version.block, v.version.tx)))))
        .collect();
    prop_assert_eq!(live, oracle.live.clone());
    Ok(checked)
}

fn mvcc_correctness() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 1_000, failure_persistence: None, ..Config::default() });
    let strategy = (
        prop::collection::vec((0..MVCC_KEYS.len(), any::<u8>()), 0..4),
        prop::collection::vec(prop::collection::vec(plan(), 1..8), 1..3),
    );
    let checked = std::cell::Cell::new(0usize);
    let cases = std::cell::Cell::new(0usize);
    runner
        .run(&strategy, |(setup, blocks)| {
            cases.set(cases.get() + 1);
            checked.set(checked.get() + mvcc_case(setup, blocks)?);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(cases.get() >= 1_000, || format!("only {} cases ran", cases.get()))?;
    Ok(format!("{} random cases, {} transactions: validity flags and final state equal the serial oracle", cases.get(), checked.get()))
}

// ---- block cap ----

fn news(gw: &mut Gateway, a: &Session, body_len: usize, n: usize) -> Result<Transaction, String> {
    gw.prepare(a, "post_news", json!({"title": format!("circular {n}"), "body": "x".repeat(body_len)})).map_err(|e| e.to_string())
}

fn envelope_len(tx: &Transaction) -> usize {
    canonical_len(&Envelope::Endorser(tx.clone()))
}

fn block_cap() -> Outcome {
    let mut gw = start();
    let a = admin(&mut gw, AUTHORITY);
    // Size grows linearly with the body; measure the slope.
    let (small, large) = (news(&mut gw, &a, 0, 0)?, news(&mut gw, &a, 10_000, 0)?);
    let per_byte = (envelope_len(&large) - envelope_len(&small)) as f64 / 10_000.0;
    let body_for = |target: usize| ((target - envelope_len(&small)) as f64 / per_byte) as usize;

    let mut batch = Vec::new();
    for i in 0..4 {
        batch.push(news(&mut gw, &a, body_for(300_000), i)?);
    }
    let total: usize = batch.iter().map(envelope_len).sum();
    ensure(total > MAX_BLOCK_BYTES, || format!("batch of {total} bytes does not cross the cap"))?;
    for tx in &batch {
        gw.submit(tx.clone()).map_err(|e| e.to_string())?;
    }
    let mut blocks = BTreeSet::new();
    for tx in &batch {
        let r = gw.submit_and_wait(tx.clone(), 20_000).map_err(|e| e.to_string())?;
        ensure(r.valid, || "batch transaction invalid".into())?;
        blocks.insert(r.block_number);
    }
    let chain = gw.network().anchor(AUTHORITY).ok_or("no anchor")?.blocks();
    let sizes: Vec<usize> = blocks.iter().map(|n| chain[*n as usize].encoded_len()).collect();
    ensure(blocks.len() >= 2, || format!("batch landed in {} block", blocks.len()))?;
    ensure(sizes.iter().all(|s| *s <= MAX_BLOCK_BYTES), || format!("block sizes {sizes:?}"))?;

    let huge = news(&mut gw, &a, body_for(2 * 1024 * 1024), 9)?;
    let huge_len = envelope_len(&huge);
    let height = gw.height();
    let refused = gw.network_mut().submit(huge.clone());
    ensure(matches!(refused, Err(NetError::Submit(SubmitError::Oversize { .. }))), || format!("2 MB submit: {refused:?}"))?;
    gw.advance(5_000);
    ensure(gw.height() == height && gw.receipt(AUTHORITY, &huge.tx_id).is_none(), || "2 MB transaction was ordered".into())?;
    Ok(format!(
        "{} txs / {total} bytes split into {} blocks of {sizes:?} bytes (cap {MAX_BLOCK_BYTES}); {huge_len}-byte tx rejected as oversize",
        batch.len(),
        blocks.len()
    ))
}

// ---- authorization ----

/// Which stakeholders may call each function: A authority, D doctor, N citizen.
const MATRIX: [(&str, &str); 27] = [
    ("register_identity", "ADN"),
    ("register_doctor", "D"),
    ("approve_doctor", "A"),
    ("submit_credential_update", "D"),
    ("approve_credential", "A"),
    ("get_doctor", "ADN"),
    ("list_doctors", "A"),
    ("find_specialist", "ADN"),
    ("add_medicine", "A"),
    ("set_medicine_authorized", "A"),
    ("list_medicines", "ADN"),
    ("create_prescription", "D"),
    ("grant_consent", "N"),
    ("get_medical_history", "DN"),
    ("request_appointment", "N"),
    ("confirm_appointment", "DN"),
    ("cancel_appointment", "DN"),
    ("file_complaint", "N"),
    ("get_complaint_status", "AN"),
    ("list_complaints", "AN"),
    ("review_complaint", "A"),
    ("record_distribution", "A"),
    ("list_distributions", "A"),
    ("prescribing_tendency", "A"),
    ("anonymized_stats", "A"),
    ("post_news", "A"),
    ("get_news", "ADN"),
];

fn authorization_matrix() -> Outcome {
    let mut gw = start();
    let mut callers = Vec::new();
    for (org, letter) in [(AUTHORITY, 'A'), (DOCTORS, 'D'), (NAGORIK, 'N')] {
        callers.push((letter, true, admin(&mut gw, org)));
        callers.push((letter, false, member(&mut gw, org, &format!("matrix-{letter}"), &[])));
    }
    settle(&mut gw)?;
    let mut deviations = Vec::new();
    let mut pairs = 0;
    for (function, allowed) in MATRIX {
        for (letter, is_admin, session) in &callers {
            let args = if function == "register_identity" {
                let record = IdentityRecord {
                    identity_id: format!("probe-{letter}-{is_admin}"),
                    org: session.org.clone(),
                    role: Role::User,
                    display_name: "probe".into(),
                    attrs: BTreeMap::new(),
                    salt: vec![0; 16],
                    password_digest: vec![0; 32],
                    iterations: 1,
                };
                json!({ "record": record })
            } else {
                json!({})
            };
            let permitted = allowed.contains(*letter) && (function != "register_identity" || *is_admin);
            let denied = match gw.query(session, function, args) {
                Err(GatewayError::Chaincode(ChaincodeError::RoleDenied { .. })) => true,
                Err(GatewayError::Chaincode(ChaincodeError::Authorization(m))) if function == "register_identity" => {
                    m.contains("general operations")
                }
                _ => false,
            };
            pairs += 1;
            if denied == permitted {
                deviations.push(format!("{function} by {letter}{}", if *is_admin { " admin" } else { "" }));
            }
        }
    }
    ensure(deviations.is_empty(), || format!("{} deviations: {deviations:?}", deviations.len()))?;
    Ok(format!("{pairs} (function x stakeholder x admin/user) pairs, 0 deviations"))
}

// ---- load ----

fn load_test() -> Outcome {
    let fixture = [
        Sample::new("GET /news", 0, 120, 200),
        Sample::new("GET /news", 0, 480, 200),
        Sample::new("GET /news", 0, 900, 200),
        Sample::new("GET /news", 0, 2_400, 200),
    ];
    let fixture_apdex = apdex_score(&fixture, 500, 1500).map_err(|e| e.to_string())?.apdex;
    ensure(fixture_apdex == 0.625, || format!("fixture apdex {fixture_apdex}"))?;

    let mut gw = start();
    let authority = admin(&mut gw, AUTHORITY);
    let mut logins: BTreeMap<String, Vec<Login>> = BTreeMap::new();
    let login = |id: &str| Login { identity_id: id.into(), password: format!("{id}-pw") };
    for i in 0..3 {
        member(&mut gw, AUTHORITY, &format!("bmdc-{i}"), &[]);
        logins.entry("authority".into()).or_default().push(login(&format!("bmdc-{i}")));
    }
    for i in 0..4 {
        let id = format!("reg-{i}");
        approved_doctor(&mut gw, &authority, &id, "cardiology");
        logins.entry("doctor".into()).or_default().push(login(&id));
    }
    for i in 0..12 {
        member(&mut gw, NAGORIK, &format!("nid-{i}"), &[]);
        logins.entry("nagorik".into()).or_default().push(login(&format!("nid-{i}")));
    }
    medicine(&mut gw, &authority, "M1", &[]);
    settle(&mut gw)?;

    let route = |role: &str, weight: u32, method: &str, path: &str, body: Option<Value>| RouteTemplate {
        role: role.into(),
        weight,
        method: method.into(),
        path: path.into(),
        body,
    };
    let scenario = vec![
        route("nagorik", 3, "GET", "/news?limit=10", None),
        route("nagorik", 3, "GET", "/specialists?specialty=cardiology", None),
        route("nagorik", 1, "POST", "/complaints", Some(json!({"subject": "queue {user}-{iter}", "body": "-", "severity": "low"}))),
        route("nagorik", 1, "GET", "/complaints", None),
        route("doctor", 3, "GET", "/medicines?authorized_only=true", None),
        route("doctor", 2, "GET", "/news?limit=10", None),
        route("authority", 2, "GET", "/analytics/stats?group_by=medicine", None),
        route("authority", 1, "POST", "/news", Some(json!({"title": "notice {user}-{iter}", "body": "-"}))),
    ];
    let (report, rate) = runtime().block_on(async move {
        let server = serve(gw, "127.0.0.1:0".parse().unwrap(), Arc::new(SystemClock), ServerConfig::default())
            .await
            .map_err(|e| e.to_string())?;
        let config = LoadConfig {
            users: 100,
            ramp_up_s: 10,
            duration_s: 60,
            target_base_url: server.url(),
            roles: ["nagorik", "nagorik", "nagorik", "doctor", "doctor", "authority"].map(String::from).to_vec(),
            logins,
            scenario,
            think_time_ms: 500,
            request_timeout_ms: 10_000,
            seed: 42,
        };
        let samples = run_load(&config).await.map_err(|e| e.to_string())?;
        let report = apdex_score(&samples, 500, 1500).map_err(|e| e.to_string())?;
        Ok::<_, String>((report, samples.len() as f64 / config.duration_s as f64))
    })?;
    let r = &report;
    ensure(r.satisfied + r.tolerating + r.frustrated == r.total, || "apdex classes do not add up".into())?;
    ensure(r.buckets.sum() == r.total, || "latency buckets do not add up".into())?;
    ensure(r.windows.iter().map(|w| w.ok + w.failed).sum::<u64>() == r.total, || "windows do not add up".into())?;
    ensure((r.pass_pct + r.fail_pct - 100.0).abs() < 1e-9, || "pass and fail do not add to 100%".into())?;
    ensure(r.pass_pct >= 95.0, || format!("success {:.2}% < 95%", r.pass_pct))?;
    Ok(format!(
        "100 users/10 s ramp/60 s: {} requests ({rate:.0}/s), success {:.2}%, apdex {:.3}, split {}/{}/{}/{}; fixture apdex 0.625",
        r.total, r.pass_pct, r.apdex, r.buckets.under_t, r.buckets.t_to_f, r.buckets.over_f, r.buckets.failed
    ))
}

// ---- hashing ----

const FROZEN_HASHES: [&str; 5] = [
    "3d2492bc54cd3cfa0d7ef0c2a446624ea09fc15ffaf26047f1296533e57b10e3",
    "66a7fac02f279b1c39bab34867e3f5e30b456cd28fc09e4ee34955a5c28d0b83",
    "e2087cb2a2bda29dca1bfb269c3d9d2892f204b7aeba9262f32e12b4f1b1fdf5",
    "3d8e7dbf71f327bb0f2655a0486d5730e5ddf799805de99f72e0847bc18d505d",
    "2b9e9cb842604a59149c0562cf7230eeb3492d06d9394483dab9636c5265387b",
];

fn hash_determinism() -> Outcome {
    let blocks = fixture::Fixture::new(7).chain(5);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut store = BlockStore::open(dir.path(), "healthcare").map_err(|e| e.to_string())?;
    for b in &blocks {
        store.append_block(b.clone()).map_err(|e| e.to_string())?;
    }
    let ours: Vec<String> = blocks.iter().map(|b| b.hash().to_hex()).collect();
    ensure(ours == FROZEN_HASHES, || format!("fixture digests moved: {ours:?}"))?;
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/oracle/chain_oracle.py");
    let out = Command::new("python3")
        .arg(script)
        .arg(store.path().ok_or("store has no file")?)
        .output()
        .map_err(|e| format!("python3 unavailable: {e}"))?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<Vec<&str>> = text.lines().take(5).map(|l| l.split_whitespace().collect()).collect();
    for (i, line) in lines.iter().enumerate() {
        ensure(line.len() == 4 && line[1] == ours[i] && line[2] == "True" && line[3] == "True", || {
            format!("block {i}: script says {line:?}, we say {}", ours[i])
        })?;
    }
    ensure(lines.len() == 5, || format!("script printed {} block lines", lines.len()))?;

    // Change one byte into another of the same character class, so most
    // mutants still decode and must be caught by chain validation.
    let mut detected = 0;
    let mut undecodable = 0;
    for height in 0..blocks.len() {
        let bytes = blocks[height].encoded();
        let positions: Vec<usize> = bytes.iter().enumerate().filter(|(_, b)| b.is_ascii_alphanumeric()).map(|(i, _)| i).collect();
        let step = (positions.len() / 150).max(1);
        for &at in positions.iter().step_by(step) {
            let mut m = bytes.clone();
            m[at] = match m[at] {
                b'9' => b'0',
                b'f' => b'a',
                b'z' => b'a',
                b'Z' => b'A',
                c => c + 1,
            };
            let Ok(mutant) = from_canonical::<Block>(&m) else {
                undecodable += 1;
                continue;
            };
            let mut chain = blocks.clone();
            chain[height] = mutant;
            let report = validate_chain(&chain);
            ensure(!report.valid && report.first_bad_height == Some(height as u64), || {
                format!("mutation at byte {at} of block {height}: {:?} / {:?}", report.first_bad_height, report.reason)
            })?;
            detected += 1;
        }
    }
    Ok(format!(
        "5-block fixture digests equal the frozen values and the standalone script; {detected} decodable single-byte mutants all located at their height ({undecodable} rejected at decode)"
    ))
}
