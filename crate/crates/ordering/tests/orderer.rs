mod common;

use common::consortium;
use hdlt_core::ledger::{validate_chain, Envelope, WorldState, MAX_BLOCK_BYTES};
use hdlt_ordering::cutter::{block_len, decide, empty_block_len, PendingTx};
use hdlt_ordering::{BlockCutPolicy, CutDecision, SubmitError};

const IDS: [u16; 3] = [7050, 8050, 9050];

#[test]
fn submitted_tx_lands_in_a_block_on_every_orderer() {
    let mut c = consortium(1, 3);
    let mut sim = c.orderers(&IDS, BlockCutPolicy::default(), 1);
    sim.run_until(2_000, |s| s.leader().is_some()).unwrap();
    let leader = sim.leader().unwrap();
    let follower = *IDS.iter().find(|i| **i != leader).unwrap();
    sim.run_until(100, |s| s.nodes[&follower].raft().leader_hint() == Some(leader)).unwrap();

    let tx = c.tx("health/news/1", 10);
    let now = sim.now;
    let err = sim.nodes.get_mut(&follower).unwrap().submit(now, tx.clone()).unwrap_err();
    assert_eq!(err, SubmitError::NotLeader { hint: Some(leader) });

    sim.submit(tx.clone()).unwrap();
    let ticks = sim.run_until(2_000, |s| s.nodes.values().all(|o| o.height() == 2)).unwrap();
    // max_wait of 500 ticks plus a few replication round trips
    assert!(ticks <= 600, "{ticks}");
    let blocks = sim.nodes[&leader].blocks().to_vec();
    assert_eq!(blocks[1].transactions, vec![Envelope::Endorser(tx)]);
    for o in sim.nodes.values() {
        assert_eq!(o.blocks(), &blocks[..]);
    }
    assert!(validate_chain(&blocks).valid);
}

#[test]
fn two_megabyte_transaction_is_rejected() {
    let mut c = consortium(2, 3);
    let mut sim = c.orderers(&IDS, BlockCutPolicy::default(), 2);
    sim.run_until(2_000, |s| s.leader().is_some()).unwrap();
    let big = c.tx("health/blob", 1_048_576);
    assert!(matches!(sim.submit(big), Err(SubmitError::Oversize { .. })));
    let mut unendorsed = c.tx("health/x", 1);
    unendorsed.endorsements.clear();
    assert_eq!(sim.submit(unendorsed), Err(SubmitError::MissingEndorsement));
}

#[test]
fn batch_over_the_cap_splits_into_blocks_under_it() {
    let mut c = consortium(3, 3);
    let mut sim = c.orderers(&IDS, BlockCutPolicy::default(), 3);
    sim.run_until(2_000, |s| s.leader().is_some()).unwrap();
    // Each 200,000-byte value hex-encodes to 400,000 characters: two per block at most.
    for i in 0..3 {
        sim.submit(c.tx(&format!("health/scan/{i}"), 200_000)).unwrap();
    }
    sim.run_until(5_000, |s| s.nodes.values().all(|o| o.pending() == 0 && o.height() >= 3)).unwrap();
    let blocks = sim.nodes[&IDS[0]].blocks().to_vec();
    assert!(blocks.len() >= 3);
    let total: usize = blocks[1..].iter().map(|b| b.transactions.len()).sum();
    assert_eq!(total, 3);
    let mut state = WorldState::new();
    for b in &blocks {
        let mut b = b.clone();
        b.validity_flags = state.commit_block(&b).unwrap().into_iter().map(|_| false).collect();
        assert!(b.encoded_len() <= MAX_BLOCK_BYTES);
    }
}

#[test]
fn cut_rules() {
    let mut c = consortium(4, 1);
    let policy = BlockCutPolicy::default();
    let signer = c.orderer_cards[0].certificate.clone();
    let empty = empty_block_len(1, 1_700_000_000_000, &signer);

    let ten: Vec<PendingTx> = (0..10).map(|i| PendingTx::new(c.tx(&format!("k{i}"), 8), 0)).collect();
    assert_eq!(decide(&ten, &policy, empty, 1), CutDecision::Cut(10));
    assert_eq!(decide(&ten[..1], &policy, empty, 499), CutDecision::NotYet);
    assert_eq!(decide(&ten[..1], &policy, empty, 500), CutDecision::Cut(1));
    assert_eq!(decide(&[], &policy, empty, 10_000), CutDecision::NotYet);

    // Seven transactions of ~160 KB each: six fit, the seventh does not.
    let seven: Vec<PendingTx> = (0..7).map(|i| PendingTx::new(c.tx(&format!("big{i}"), 80_000), 0)).collect();
    assert_eq!(decide(&seven, &policy, empty, 1), CutDecision::Cut(6));
    let six_len = block_len(empty, seven[..6].iter().map(|p| p.encoded_len).sum(), 6);
    let seven_len = block_len(empty, seven.iter().map(|p| p.encoded_len).sum(), 7);
    assert!(six_len <= MAX_BLOCK_BYTES && seven_len > MAX_BLOCK_BYTES);
}

#[test]
fn size_formula_matches_real_encoding() {
    let mut c = consortium(5, 1);
    let card = c.orderer_cards[0].clone();
    let genesis = c.genesis.clone();
    for count in 0..5usize {
        let txs: Vec<_> = (0..count).map(|i| c.tx(&format!("k{i}"), 10 + 37 * i)).collect();
        let pending: Vec<PendingTx> = txs.iter().cloned().map(|t| PendingTx::new(t, 0)).collect();
        let mut block = hdlt_core::ledger::Block::assemble(
            1,
            genesis.hash(),
            1_700_000_012_345,
            txs.into_iter().map(Envelope::Endorser).collect(),
        )
        .signed(&card.key_pair(), card.certificate.clone());
        block.validity_flags = vec![false; count];
        let empty = empty_block_len(1, 1_700_000_012_345, &card.certificate);
        let predicted = block_len(empty, pending.iter().map(|p| p.encoded_len).sum(), count);
        assert_eq!(predicted, block.encoded_len(), "count {count}");
    }
}

#[test]
fn same_seed_same_block_stream() {
    let run = || {
        let mut c = consortium(6, 3);
        let mut sim = c.orderers(&IDS, BlockCutPolicy::default(), 6);
        sim.run_until(2_000, |s| s.leader().is_some()).unwrap();
        for i in 0..25 {
            sim.submit(c.tx(&format!("k{i}"), 16)).unwrap();
            sim.tick();
        }
        let ticks = sim.run_until(5_000, |s| s.nodes.values().all(|o| o.pending() == 0)).unwrap();
        (sim.nodes[&IDS[0]].blocks().to_vec(), ticks)
    };
    let (a, ta) = run();
    let (b, tb) = run();
    assert_eq!(ta, tb);
    assert_eq!(a.iter().map(|x| x.encoded()).collect::<Vec<_>>(), b.iter().map(|x| x.encoded()).collect::<Vec<_>>());
    assert_eq!(a[1..].iter().map(|b| b.transactions.len()).sum::<usize>(), 25);
}

#[test]
fn leader_failover_keeps_every_tx_exactly_once() {
    let mut c = consortium(7, 3);
    let mut sim = c.orderers(&IDS, BlockCutPolicy::default(), 7);
    sim.run_until(2_000, |s| s.leader().is_some()).unwrap();
    let txs: Vec<_> = (0..40).map(|i| c.tx(&format!("k{i}"), 16)).collect();
    let mut killed = None;
    for (i, tx) in txs.iter().enumerate() {
        if i == 20 {
            let l = sim.leader().unwrap();
            sim.kill(l);
            killed = Some(l);
            sim.run_until(2_000, |s| s.leader().is_some()).unwrap();
        }
        sim.submit(tx.clone()).unwrap();
        sim.tick();
    }
    // A client that did not see its tx committed resubmits it; duplicates are dropped.
    for tx in &txs {
        sim.submit(tx.clone()).unwrap();
    }
    let live = *IDS.iter().find(|i| Some(**i) != killed).unwrap();
    sim.run_until(10_000, |s| s.nodes[&live].pending() == 0).unwrap();
    let blocks = sim.nodes[&live].blocks();
    let ids: Vec<_> = blocks[1..].iter().flat_map(|b| b.transactions.iter().map(|t| t.tx_id())).collect();
    let unique: std::collections::BTreeSet<_> = ids.iter().collect();
    assert_eq!(ids.len(), 40);
    assert_eq!(unique.len(), 40);
    assert!(sim.election_safe());
    assert!(validate_chain(blocks).valid);
}
