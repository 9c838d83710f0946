use std::collections::BTreeMap;
use std::fmt;

use pbkdf2::pbkdf2_hmac;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use super::{HealthCard, Role, Wallet};
use crate::codec::{self, hex_bytes};
use crate::ledger::WorldState;

pub const PASSWORD_ITERATIONS: u32 = 10_000;

/// World-state record written when a member is registered. Holds a salted
/// password digest, never the password.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub identity_id: String,
    pub org: String,
    pub role: Role,
    pub display_name: String,
    pub attrs: BTreeMap<String, String>,
    #[serde(with = "hex_bytes")]
    pub salt: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub password_digest: Vec<u8>,
    pub iterations: u32,
}

impl IdentityRecord {
    pub fn key(&self) -> String {
        identity_key(&self.org, &self.identity_id)
    }

    pub fn password_matches(&self, password: &str) -> bool {
        let computed = hash_password(password, &self.salt, self.iterations);
        computed.len() == self.password_digest.len()
            && computed
                .iter()
                .zip(&self.password_digest)
                .fold(0u8, |acc, (a, b)| acc | (a ^ b))
                == 0
    }
}

pub fn identity_key(org: &str, identity_id: &str) -> String {
    format!("identity/{org}/{identity_id}")
}

/// PBKDF2-HMAC-SHA256.
pub fn hash_password(password: &str, salt: &[u8], iterations: u32) -> [u8; 32] {
    let mut out = [0u8; 32];
    pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionToken(pub [u8; 16]);

impl SessionToken {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut t = [0u8; 16];
        rng.fill_bytes(&mut t);
        SessionToken(t)
    }
}

impl fmt::Display for SessionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for SessionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SessionToken(..)")
    }
}

impl std::str::FromStr for SessionToken {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut t = [0u8; 16];
        hex::decode_to_slice(s, &mut t)?;
        Ok(SessionToken(t))
    }
}

#[derive(Debug, Clone)]
pub struct AccessGrant {
    pub card: HealthCard,
    pub session_token: SessionToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("Invalid Identity")]
    InvalidIdentity,
    #[error("Invalid Password")]
    InvalidPassword,
}

/// Login: the identity must hold a health card, and the password must match
/// the digest stored in world state under that identity.
pub fn authenticate<R: RngCore + CryptoRng>(
    identity_id: &str,
    password: &str,
    wallet: &Wallet,
    state: &WorldState,
    rng: &mut R,
) -> Result<AccessGrant, AuthError> {
    let card = wallet.get(identity_id).ok_or(AuthError::InvalidIdentity)?;
    let record = state
        .get(&identity_key(&card.org, identity_id))
        .and_then(|v| codec::from_canonical::<IdentityRecord>(&v.value).ok());
    // A card whose record never reached the ledger has no password to match.
    match record {
        Some(r) if r.identity_id == identity_id && r.password_matches(password) => Ok(AccessGrant {
            card: card.clone(),
            session_token: SessionToken::random(rng),
        }),
        _ => Err(AuthError::InvalidPassword),
    }
}
