use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Certificate, Role};
use crate::codec::hex_array;
use crate::crypto::{KeyPair, Signature};

/// A member's identity wallet entry: certificate plus the matching private key.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthCard {
    /// NID or birth-certificate number for citizens, registration number for doctors.
    pub identity_id: String,
    pub certificate: Certificate,
    #[serde(with = "hex_array")]
    private_key: [u8; 32],
    pub org: String,
    pub role: Role,
}

impl HealthCard {
    pub(crate) fn new(certificate: Certificate, key: &KeyPair) -> Self {
        HealthCard {
            identity_id: certificate.subject_id.clone(),
            org: certificate.org.clone(),
            role: certificate.role,
            private_key: key.secret_bytes(),
            certificate,
        }
    }

    pub fn key_pair(&self) -> KeyPair {
        KeyPair::from_secret(self.private_key)
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        self.key_pair().sign(message)
    }

    /// Subject, org and role agree with the certificate and the private key
    /// matches the certified public key.
    pub fn is_self_consistent(&self) -> bool {
        let key = self.key_pair();
        let probe = b"health-card-self-check";
        self.certificate.subject_id == self.identity_id
            && self.certificate.org == self.org
            && self.certificate.role == self.role
            && key.public_key() == self.certificate.public_key
            && self.certificate.public_key.verify(probe, &key.sign(probe))
    }
}

impl fmt::Debug for HealthCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HealthCard")
            .field("identity_id", &self.identity_id)
            .field("org", &self.org)
            .field("role", &self.role)
            .field("serial", &self.certificate.serial)
            .finish_non_exhaustive()
    }
}
