use hdlt_core::msp::Stakeholder;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChaincodeError {
    /// The caller's stakeholder role may not invoke this function at all.
    #[error("AuthorizationError: {stakeholder:?} may not call {function}")]
    RoleDenied { function: String, stakeholder: Stakeholder },
    /// The role is right but this caller may not act on this record.
    #[error("AuthorizationError: {0}")]
    Authorization(String),
    #[error("ConsentRequired: {0}")]
    ConsentRequired(String),
    #[error("ConsentExpired: {0}")]
    ConsentExpired(String),
    #[error("NotFound: {0}")]
    NotFound(String),
    #[error("UnknownDoctor: {0}")]
    UnknownDoctor(String),
    #[error("UnknownMedicine: {0}")]
    UnknownMedicine(String),
    #[error("UnauthorizedMedicine: {0}")]
    UnauthorizedMedicine(String),
    #[error("Duplicate: {0}")]
    Duplicate(String),
    #[error("NotPending: {0}")]
    NotPending(String),
    #[error("SlotTaken: {0}")]
    SlotTaken(String),
    #[error("InvalidTransition: {0}")]
    InvalidTransition(String),
    #[error("ValidationError: {0}")]
    Validation(String),
    #[error("UnknownFunction: {0}")]
    UnknownFunction(String),
}

impl ChaincodeError {
    /// Stable error name used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            ChaincodeError::RoleDenied { .. } | ChaincodeError::Authorization(_) => "AuthorizationError",
            ChaincodeError::ConsentRequired(_) => "ConsentRequired",
            ChaincodeError::ConsentExpired(_) => "ConsentExpired",
            ChaincodeError::NotFound(_) => "NotFound",
            ChaincodeError::UnknownDoctor(_) => "UnknownDoctor",
            ChaincodeError::UnknownMedicine(_) => "UnknownMedicine",
            ChaincodeError::UnauthorizedMedicine(_) => "UnauthorizedMedicine",
            ChaincodeError::Duplicate(_) => "Duplicate",
            ChaincodeError::NotPending(_) => "NotPending",
            ChaincodeError::SlotTaken(_) => "SlotTaken",
            ChaincodeError::InvalidTransition(_) => "InvalidTransition",
            ChaincodeError::Validation(_) => "ValidationError",
            ChaincodeError::UnknownFunction(_) => "UnknownFunction",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            ChaincodeError::RoleDenied { .. }
            | ChaincodeError::Authorization(_)
            | ChaincodeError::ConsentRequired(_)
            | ChaincodeError::ConsentExpired(_) => 403,
            ChaincodeError::NotFound(_) | ChaincodeError::UnknownDoctor(_) => 404,
            ChaincodeError::Duplicate(_)
            | ChaincodeError::NotPending(_)
            | ChaincodeError::SlotTaken(_)
            | ChaincodeError::InvalidTransition(_) => 409,
            ChaincodeError::UnknownMedicine(_)
            | ChaincodeError::UnauthorizedMedicine(_)
            | ChaincodeError::Validation(_)
            | ChaincodeError::UnknownFunction(_) => 422,
        }
    }
}
