//! The healthcare network in one process.
//!
//! [`Network`] wires per-organization CAs, anchor and gossip peers and a Raft
//! ordering cluster together through a seeded latency scheduler. Nodes are
//! addressed by the ports of the deployed topology. Runs are deterministic:
//! the same topology, seed and scenario give the same block streams and
//! tick counts.

mod network;
mod peer;
mod topology;

pub use network::{
    Action, EndorseError, Endorsed, NetError, NetMessage, Network, NodeInfo, ScenarioStep, DEFAULT_EPOCH_MS, MAX_HOPS,
    PULL_BATCH, PULL_INTERVAL,
};
pub use peer::{Accepted, BlockRejected, NodeKind, Peer};
pub use topology::{load_topology, ConfigError, OrdererTopology, OrgTopology, TopologyConfig};
