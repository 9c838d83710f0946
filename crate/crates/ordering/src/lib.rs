//! Ordering service: Raft replication over orderer nodes, block cutting and a
//! deterministic message scheduler.

pub mod cutter;
pub mod frame;
pub mod orderer;
pub mod raft;
pub mod sched;

pub use cutter::{BlockCutPolicy, CutDecision, PendingTx};
pub use orderer::{CutMarker, OrderEntry, Orderer, SubmitError};
pub use raft::{Event, LogEntry, NodeId, Outbound, RaftConfig, RaftMessage, RaftNode, Role};
pub use sched::{Scheduler, SimMessage};
