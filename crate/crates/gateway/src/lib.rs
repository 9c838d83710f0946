//! Gateway between client applications and the healthcare network.
//!
//! [`Gateway`] logs members in against the org wallets and the identity
//! records on the ledger, signs proposals with their cards, collects
//! endorsements, orders the transaction and waits for the commit. The
//! [`server`] module exposes this as a REST API, and [`DocStore`] keeps
//! photos and scanned certificates off the chain.

mod docs;
mod error;
mod gateway;
pub mod server;
mod session;

pub use docs::{DocError, DocStore, OffChainDoc, DEFAULT_DOC_LIMIT};
pub use error::GatewayError;
pub use gateway::{
    CommitReceipt, EndorsementPolicy, Gateway, GatewayConfig, Invoked, NewUser, DEFAULT_COMMIT_TIMEOUT_MS, RESUBMIT_MS,
    RETRY_MS,
};
pub use server::{serve, AppState, RunningGateway, ServerConfig};
pub use session::{Clock, ManualClock, Session, SessionError, SessionStore, SystemClock, SESSION_IDLE_MS};
