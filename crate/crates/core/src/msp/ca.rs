use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::auth::{hash_password, IdentityRecord, PASSWORD_ITERATIONS};
use super::{verify_card, Certificate, HealthCard, MspError, Role, Wallet};
use crate::crypto::{KeyPair, PublicKey, SIGNATURE_ALGORITHM};

/// Certificate authority of one organization.
#[derive(Debug, Clone)]
pub struct CaServer {
    org_name: String,
    root_key: KeyPair,
    root_cert: Certificate,
    issued_serials: BTreeSet<u64>,
    next_serial: u64,
    admin_enrolled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub identity_id: String,
    pub display_name: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

/// Output of [`CaServer::register_user`]: the new card, already stored in the
/// wallet, and the identity record that must be written to world state.
#[derive(Debug, Clone)]
pub struct Registration {
    pub card: HealthCard,
    pub record: IdentityRecord,
}

impl CaServer {
    pub fn bootstrap<R: RngCore + CryptoRng>(org_name: &str, rng: &mut R) -> Self {
        let root_key = KeyPair::generate(rng);
        let public_key = root_key.public_key();
        let subject = format!("ca.{org_name}");
        let body = Certificate::body_bytes(1, &subject, org_name, Role::Ca, &public_key, org_name);
        let root_cert = Certificate {
            algorithm: SIGNATURE_ALGORITHM.to_string(),
            serial: 1,
            subject_id: subject,
            org: org_name.to_string(),
            role: Role::Ca,
            public_key,
            issuer: org_name.to_string(),
            signature: root_key.sign(&body),
        };
        CaServer {
            org_name: org_name.to_string(),
            root_key,
            root_cert,
            issued_serials: BTreeSet::from([1]),
            next_serial: 2,
            admin_enrolled: false,
        }
    }

    pub fn org_name(&self) -> &str {
        &self.org_name
    }

    pub fn root_cert(&self) -> &Certificate {
        &self.root_cert
    }

    pub fn issued_serials(&self) -> &BTreeSet<u64> {
        &self.issued_serials
    }

    /// Issue a certificate for an externally generated key.
    pub fn issue(&mut self, subject_id: &str, role: Role, public_key: PublicKey) -> Certificate {
        let serial = self.next_serial;
        self.next_serial += 1;
        self.issued_serials.insert(serial);
        let body = Certificate::body_bytes(serial, subject_id, &self.org_name, role, &public_key, &self.org_name);
        Certificate {
            algorithm: SIGNATURE_ALGORITHM.to_string(),
            serial,
            subject_id: subject_id.to_string(),
            org: self.org_name.clone(),
            role,
            public_key,
            issuer: self.org_name.clone(),
            signature: self.root_key.sign(&body),
        }
    }

    /// Generate a key pair and issue a card for it.
    pub fn enroll<R: RngCore + CryptoRng>(&mut self, subject_id: &str, role: Role, rng: &mut R) -> HealthCard {
        let key = KeyPair::generate(rng);
        let cert = self.issue(subject_id, role, key.public_key());
        HealthCard::new(cert, &key)
    }

    pub fn enroll_default_admin<R: RngCore + CryptoRng>(&mut self, rng: &mut R) -> Result<HealthCard, MspError> {
        if self.admin_enrolled {
            return Err(MspError::AlreadyBootstrapped(self.org_name.clone()));
        }
        self.admin_enrolled = true;
        let subject = format!("admin@{}", self.org_name);
        Ok(self.enroll(&subject, Role::Admin, rng))
    }

    /// Register a new member. Only an admin of this organization may register;
    /// it may create users and further admins.
    pub fn register_user<R: RngCore + CryptoRng>(
        &mut self,
        wallet: &mut Wallet,
        admin_card: &HealthCard,
        profile: &UserProfile,
        role: Role,
        password: &str,
        rng: &mut R,
    ) -> Result<Registration, MspError> {
        if admin_card.role != Role::Admin || admin_card.certificate.role != Role::Admin {
            return Err(MspError::Authorization(
                "a user can only perform its general operations".into(),
            ));
        }
        if !verify_card(&admin_card.certificate, &self.root_cert) {
            return Err(MspError::Authorization(format!(
                "admin card is not certified by {}",
                self.org_name
            )));
        }
        if !matches!(role, Role::User | Role::Admin) {
            return Err(MspError::InvalidRole(role));
        }
        if wallet.contains(&profile.identity_id) {
            return Err(MspError::DuplicateIdentity(profile.identity_id.clone()));
        }

        let card = self.enroll(&profile.identity_id, role, rng);
        let mut salt = [0u8; 16];
        rng.fill_bytes(&mut salt);
        let record = IdentityRecord {
            identity_id: profile.identity_id.clone(),
            org: self.org_name.clone(),
            role,
            display_name: profile.display_name.clone(),
            attrs: profile.attrs.clone(),
            salt: salt.to_vec(),
            password_digest: hash_password(password, &salt, PASSWORD_ITERATIONS).to_vec(),
            iterations: PASSWORD_ITERATIONS,
        };
        wallet.insert(card.clone())?;
        Ok(Registration { card, record })
    }
}
