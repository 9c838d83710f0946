use hdlt_chaincode::ChaincodeError;
use hdlt_core::msp::{AuthError, MspError};
use hdlt_core::Digest256;
use hdlt_net::{EndorseError, NetError};
use thiserror::Error;

use crate::docs::DocError;
use crate::session::SessionError;
use crate::CommitReceipt;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("Invalid Signature")]
    InvalidSignature,
    #[error("Invalid Certificate")]
    InvalidCertificate,
    #[error(transparent)]
    Chaincode(#[from] ChaincodeError),
    #[error("endorsements do not satisfy the {0} policy")]
    PolicyUnsatisfied(&'static str),
    #[error("endorsers disagree on the response of {0}")]
    EndorsementMismatch(Digest256),
    #[error("peer unavailable: {0}")]
    Unavailable(String),
    #[error("transaction {} not committed within {timeout_ms} ms", tx_id.short(12))]
    Timeout { tx_id: Digest256, timeout_ms: u64 },
    #[error("transaction {} was ordered but invalidated by a conflicting write", receipt.tx_id.short(12))]
    Conflict { receipt: CommitReceipt },
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Msp(#[from] MspError),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl GatewayError {
    /// Short machine-readable name, sent alongside the message.
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Auth(AuthError::InvalidIdentity) => "InvalidIdentity",
            GatewayError::Auth(AuthError::InvalidPassword) => "InvalidPassword",
            GatewayError::Session(_) => "InvalidSession",
            GatewayError::InvalidSignature => "InvalidSignature",
            GatewayError::InvalidCertificate => "InvalidCertificate",
            GatewayError::Chaincode(e) => e.code(),
            GatewayError::PolicyUnsatisfied(_) => "PolicyUnsatisfied",
            GatewayError::EndorsementMismatch(_) => "EndorsementMismatch",
            GatewayError::Unavailable(_) => "Unavailable",
            GatewayError::Timeout { .. } => "Timeout",
            GatewayError::Conflict { .. } => "MvccConflict",
            GatewayError::Doc(DocError::NotFound(_)) => "NotFound",
            GatewayError::Doc(DocError::SizeLimit { .. }) => "SizeLimit",
            GatewayError::Msp(MspError::Authorization(_)) => "AuthorizationError",
            GatewayError::Msp(MspError::DuplicateIdentity(_)) => "Duplicate",
            GatewayError::Msp(_) => "ValidationError",
            GatewayError::BadRequest(_) => "BadRequest",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            GatewayError::Auth(_)
            | GatewayError::Session(_)
            | GatewayError::InvalidSignature
            | GatewayError::InvalidCertificate => 401,
            GatewayError::Chaincode(e) => e.http_status(),
            GatewayError::Msp(MspError::Authorization(_)) => 403,
            GatewayError::Doc(DocError::NotFound(_)) => 404,
            GatewayError::Conflict { .. } | GatewayError::Msp(MspError::DuplicateIdentity(_)) => 409,
            GatewayError::Doc(DocError::SizeLimit { .. }) => 413,
            GatewayError::Msp(_) => 422,
            GatewayError::BadRequest(_) => 400,
            GatewayError::PolicyUnsatisfied(_) | GatewayError::EndorsementMismatch(_) => 502,
            GatewayError::Unavailable(_) => 503,
            GatewayError::Timeout { .. } => 504,
        }
    }
}

impl From<EndorseError> for GatewayError {
    fn from(e: EndorseError) -> Self {
        match e {
            EndorseError::InvalidSignature => GatewayError::InvalidSignature,
            EndorseError::InvalidCertificate => GatewayError::InvalidCertificate,
            EndorseError::Chaincode(c) => GatewayError::Chaincode(c),
            other => GatewayError::Unavailable(other.to_string()),
        }
    }
}

impl From<NetError> for GatewayError {
    fn from(e: NetError) -> Self {
        GatewayError::Unavailable(e.to_string())
    }
}
