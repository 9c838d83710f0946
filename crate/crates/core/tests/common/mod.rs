#![allow(dead_code)]

use hdlt_core::ledger::{
    create_genesis_block, Block, ConsortiumConfig, Endorsement, Envelope, KvRead, KvWrite, Nonce,
    OrdererOrgConfig, OrgConfig, Proposal, Transaction, WorldState,
};
use hdlt_core::msp::{CaServer, HealthCard, Role, Stakeholder};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const GENESIS_MS: u64 = 1_700_000_000_000;

pub struct Fixture {
    pub rng: ChaCha20Rng,
    pub cas: Vec<CaServer>,
    pub orderer_ca: CaServer,
    pub orderer: HealthCard,
    pub admins: Vec<HealthCard>,
    pub peers: Vec<HealthCard>,
    pub consortium: ConsortiumConfig,
    clock: u64,
}

impl Fixture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let names = [
            ("AuthorityOrg", Stakeholder::Authority),
            ("DoctorOrg", Stakeholder::Doctor),
            ("NagorikOrg", Stakeholder::Nagorik),
        ];
        let mut cas = Vec::new();
        let mut admins = Vec::new();
        let mut peers = Vec::new();
        let mut orgs = Vec::new();
        for (name, stakeholder) in names {
            let mut ca = CaServer::bootstrap(name, &mut rng);
            admins.push(ca.enroll_default_admin(&mut rng).unwrap());
            peers.push(ca.enroll(&format!("peer0.{name}"), Role::Peer, &mut rng));
            orgs.push(OrgConfig { name: name.into(), stakeholder, root_cert: ca.root_cert().clone() });
            cas.push(ca);
        }
        let mut orderer_ca = CaServer::bootstrap("OrdererOrg", &mut rng);
        let orderer = orderer_ca.enroll("orderer0", Role::Orderer, &mut rng);
        let consortium = ConsortiumConfig {
            channel: "healthcare".into(),
            created_at_ms: GENESIS_MS,
            orgs,
            orderer_org: OrdererOrgConfig { name: "OrdererOrg".into(), root_cert: orderer_ca.root_cert().clone() },
        };
        Fixture { rng, cas, orderer_ca, orderer, admins, peers, consortium, clock: GENESIS_MS }
    }

    pub fn genesis(&self) -> Block {
        create_genesis_block(self.consortium.clone()).unwrap()
    }

    /// Endorsed transaction invoked by the admin of `org` and endorsed by its peer.
    pub fn tx(&mut self, org: usize, reads: Vec<KvRead>, writes: Vec<KvWrite>) -> Transaction {
        let mut nonce = [0u8; 16];
        self.rng.fill_bytes(&mut nonce);
        self.clock += 1;
        let keys: Vec<serde_json::Value> = writes.iter().map(|w| w.key.clone().into()).collect();
        let proposal = Proposal::new_signed(&self.admins[org], "put", keys, Nonce(nonce), self.clock);
        let digest = hdlt_core::ledger::response_digest(&reads, &writes, b"ok");
        let endorsement = Endorsement::sign(&self.peers[org], digest);
        Transaction::new(proposal, reads, writes, b"ok".to_vec(), vec![endorsement])
    }

    pub fn block_after(&self, prev: &Block, txs: Vec<Transaction>) -> Block {
        Block::assemble(
            prev.number() + 1,
            prev.hash(),
            prev.header.timestamp + 1000,
            txs.into_iter().map(Envelope::Endorser).collect(),
        )
        .signed(&self.orderer.key_pair(), self.orderer.certificate.clone())
    }

    /// Genesis plus `n - 1` blocks of simple writes, each with commit flags set.
    pub fn chain(&mut self, n: usize) -> Vec<Block> {
        let mut state = WorldState::new();
        let mut genesis = self.genesis();
        genesis.validity_flags = state.commit_block(&genesis).unwrap();
        let mut blocks = vec![genesis];
        for h in 1..n {
            let mut txs = Vec::new();
            for i in 0..3 {
                let key = format!("health/item/{h}-{i}");
                let read = KvRead { key: key.clone(), version: state.version_of(&key) };
                let write = KvWrite { key, value: Some(format!("value {h} {i}").into_bytes()) };
                txs.push(self.tx(i % 3, vec![read], vec![write]));
            }
            let mut block = self.block_after(blocks.last().unwrap(), txs);
            block.validity_flags = state.commit_block(&block).unwrap();
            blocks.push(block);
        }
        blocks
    }
}

pub fn write(key: &str, value: &str) -> KvWrite {
    KvWrite { key: key.into(), value: Some(value.as_bytes().to_vec()) }
}
