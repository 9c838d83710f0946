#![allow(dead_code)]

use hdlt_core::ledger::{Nonce, Proposal, Transaction};
use hdlt_core::Digest256;
use hdlt_net::{NetError, Network, TopologyConfig, DEFAULT_EPOCH_MS};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

pub const AUTHORITY: &str = "AuthorityOrg";

/// Builds endorsed news posts from the authority admin.
pub struct Client {
    rng: ChaCha20Rng,
    n: u64,
}

impl Client {
    pub fn new(seed: u64) -> Self {
        Client { rng: ChaCha20Rng::seed_from_u64(seed), n: 0 }
    }

    pub fn proposal(&mut self, net: &Network, function: &str, args: serde_json::Value) -> Proposal {
        let mut nonce = [0u8; 16];
        self.rng.fill_bytes(&mut nonce);
        let card = net.admin(AUTHORITY).unwrap();
        self.n += 1;
        // Logical time per proposal, independent of how the run is scheduled.
        Proposal::new_signed(card, function, vec![args], Nonce(nonce), DEFAULT_EPOCH_MS + 1_000 * self.n)
    }

    pub fn news(&mut self, net: &Network) -> Transaction {
        let p = self.proposal(net, "post_news", json!({"title": format!("bulletin {}", self.n + 1), "body": "..."}));
        net.endorse(AUTHORITY, &p).unwrap().into_transaction(p)
    }
}

pub fn committed_everywhere(net: &Network, tx: &Digest256) -> bool {
    net.peers().filter(|p| net.is_alive(p.port())).all(|p| p.state().contains_tx(tx))
}

/// Submit (retrying while no leader is known) and wait until every live
/// peer holds the transaction.
pub fn commit(net: &mut Network, tx: Transaction, max_ticks: u64) -> Result<u64, NetError> {
    let start = net.now();
    let id = tx.tx_id;
    loop {
        match net.submit(tx.clone()) {
            Ok(_) => break,
            Err(NetError::Submit(_)) | Err(NetError::NoOrderer) if net.now() - start < max_ticks => {
                let t = net.now() + 10;
                net.advance_to(t);
            }
            Err(e) => return Err(e),
        }
    }
    let spent = net.now() - start;
    net.run_until(max_ticks.saturating_sub(spent), |n| committed_everywhere(n, &id))?;
    Ok(net.now() - start)
}

pub fn settled(seed: u64, ft: bool) -> Network {
    let mut config = if ft { TopologyConfig::ft() } else { TopologyConfig::paper() };
    config.seed = seed;
    let mut net = Network::start(config);
    net.run_until(5_000, |n| n.leader().is_some_and(|l| n.orderer(l).unwrap().raft().leader_ready())).unwrap();
    net
}
