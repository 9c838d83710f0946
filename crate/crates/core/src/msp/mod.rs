//! Membership service: certificate authorities, health cards and login.

mod auth;
mod ca;
mod card;
mod cert;
mod wallet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use auth::{
    authenticate, hash_password, identity_key, AccessGrant, AuthError, IdentityRecord, SessionToken,
    PASSWORD_ITERATIONS,
};
pub use ca::{CaServer, Registration, UserProfile};
pub use card::HealthCard;
pub use cert::{verify_card, verify_certificate, Certificate, Role};
pub use wallet::Wallet;

/// The stakeholder an organization represents. Every member of an
/// organization acts in that organization's stakeholder role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stakeholder {
    /// Central authority (BMDC in the prototype deployment).
    Authority,
    Doctor,
    /// Citizen / patient.
    Nagorik,
}

impl Stakeholder {
    pub const ALL: [Stakeholder; 3] = [Stakeholder::Authority, Stakeholder::Doctor, Stakeholder::Nagorik];
}

#[derive(Debug, Error)]
pub enum MspError {
    #[error("default admin already enrolled for {0}")]
    AlreadyBootstrapped(String),
    #[error("not authorized: {0}")]
    Authorization(String),
    #[error("identity {0} is already enrolled")]
    DuplicateIdentity(String),
    #[error("invalid role {0:?} for registration")]
    InvalidRole(Role),
    #[error("wallet i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("wallet record {path}: {reason}")]
    CorruptCard { path: String, reason: String },
}
