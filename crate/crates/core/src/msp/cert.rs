use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{self, to_canonical};
use crate::crypto::{PublicKey, Signature, SIGNATURE_ALGORITHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Admin,
    User,
    Peer,
    Orderer,
    /// Only carried by self-signed CA root certificates.
    Ca,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub algorithm: String,
    pub serial: u64,
    pub subject_id: String,
    pub org: String,
    pub role: Role,
    pub public_key: PublicKey,
    pub issuer: String,
    pub signature: Signature,
}

#[derive(Serialize)]
struct CertBody<'a> {
    algorithm: &'a str,
    serial: u64,
    subject_id: &'a str,
    org: &'a str,
    role: Role,
    public_key: &'a PublicKey,
    issuer: &'a str,
}

impl Certificate {
    pub(crate) fn body_bytes(
        serial: u64,
        subject_id: &str,
        org: &str,
        role: Role,
        public_key: &PublicKey,
        issuer: &str,
    ) -> Vec<u8> {
        to_canonical(&CertBody {
            algorithm: SIGNATURE_ALGORITHM,
            serial,
            subject_id,
            org,
            role,
            public_key,
            issuer,
        })
    }

    fn signed_bytes(&self) -> Vec<u8> {
        to_canonical(&CertBody {
            algorithm: &self.algorithm,
            serial: self.serial,
            subject_id: &self.subject_id,
            org: &self.org,
            role: self.role,
            public_key: &self.public_key,
            issuer: &self.issuer,
        })
    }

    pub fn verify_signature(&self, issuer_key: &PublicKey) -> bool {
        self.algorithm == SIGNATURE_ALGORITHM && issuer_key.verify(&self.signed_bytes(), &self.signature)
    }

    pub fn is_root(&self) -> bool {
        self.role == Role::Ca && self.issuer == self.org && self.verify_signature(&self.public_key)
    }

    pub fn to_cert_file(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, to_canonical(self))
    }

    pub fn from_cert_file(path: &Path) -> std::io::Result<Certificate> {
        let bytes = std::fs::read(path)?;
        codec::from_canonical(&bytes)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// True iff `cert` was issued by the CA whose self-signed root is `ca_root`.
pub fn verify_certificate(cert: &Certificate, ca_root: &Certificate) -> bool {
    ca_root.is_root() && cert.issuer == ca_root.org && cert.verify_signature(&ca_root.public_key)
}

/// Card verification as performed by an endorsing peer: the certificate
/// chains to the organization root and carries a member role.
pub fn verify_card(cert: &Certificate, ca_root: &Certificate) -> bool {
    verify_certificate(cert, ca_root) && cert.org == ca_root.org && cert.role != Role::Ca
}
