//! Healthcare contracts. Every function runs against a world-state snapshot
//! and yields a read set, a write set and a canonical JSON result; nothing is
//! applied until the transaction commits.

mod authority;
mod care;
mod citizen;
mod error;
pub mod model;
mod registry;
mod stub;

use hdlt_core::codec::{from_canonical, to_canonical};
use hdlt_core::ledger::{ConsortiumConfig, KvRead, KvWrite, Proposal, WorldState, CONSORTIUM_KEY};
use hdlt_core::msp::{Certificate, Role, Stakeholder};
use hdlt_core::Digest256;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use authority::GroupStat;
pub use care::threat_warnings;
pub use citizen::rank_complaints;
pub use error::ChaincodeError;
pub use stub::Stub;

/// Consent lifetime when the patient does not give one: 24 hours.
pub const DEFAULT_CONSENT_TTL_MS: u64 = 24 * 60 * 60 * 1000;
/// Aggregates over fewer distinct patients than this are suppressed.
pub const K_ANONYMITY: usize = 5;

use Stakeholder::{Authority as A, Doctor as D, Nagorik as N};

/// Which stakeholders may call each function. `register_identity` is further
/// limited to admins of the calling organization.
pub const AUTHORIZATION: &[(&str, &[Stakeholder])] = &[
    ("register_identity", &[A, D, N]),
    ("register_doctor", &[D]),
    ("approve_doctor", &[A]),
    ("submit_credential_update", &[D]),
    ("approve_credential", &[A]),
    ("get_doctor", &[A, D, N]),
    ("list_doctors", &[A]),
    ("find_specialist", &[A, D, N]),
    ("add_medicine", &[A]),
    ("set_medicine_authorized", &[A]),
    ("list_medicines", &[A, D, N]),
    ("create_prescription", &[D]),
    ("grant_consent", &[N]),
    ("get_medical_history", &[D, N]),
    ("request_appointment", &[N]),
    ("confirm_appointment", &[D, N]),
    ("cancel_appointment", &[D, N]),
    ("file_complaint", &[N]),
    ("get_complaint_status", &[A, N]),
    ("list_complaints", &[A, N]),
    ("review_complaint", &[A]),
    ("record_distribution", &[A]),
    ("list_distributions", &[A]),
    ("prescribing_tendency", &[A]),
    ("anonymized_stats", &[A]),
    ("post_news", &[A]),
    ("get_news", &[A, D, N]),
];

pub fn is_authorized(function: &str, stakeholder: Stakeholder) -> bool {
    AUTHORIZATION
        .iter()
        .any(|(f, allowed)| *f == function && allowed.contains(&stakeholder))
}

/// Read and write sets plus the function's result, ready to be endorsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simulation {
    pub read_set: Vec<KvRead>,
    pub write_set: Vec<KvWrite>,
    pub result: Vec<u8>,
}

/// Per-invocation context handed to every contract function.
pub struct Ctx<'a> {
    pub stub: Stub<'a>,
    pub invoker: &'a Certificate,
    pub stakeholder: Stakeholder,
    /// Logical time of the proposal.
    pub now: u64,
    tx_id: Digest256,
}

impl Ctx<'_> {
    pub fn caller(&self) -> &str {
        &self.invoker.subject_id
    }

    /// Identifier for a record created by this transaction.
    pub fn new_id(&self, prefix: &str) -> String {
        format!("{prefix}-{}", self.tx_id.short(12))
    }

    pub fn require_admin(&self) -> Result<(), ChaincodeError> {
        if self.invoker.role == Role::Admin {
            Ok(())
        } else {
            Err(ChaincodeError::Authorization("a user can only perform its general operations".into()))
        }
    }
}

pub fn consortium(state: &WorldState) -> Option<ConsortiumConfig> {
    from_canonical(&state.get(CONSORTIUM_KEY)?.value).ok()
}

/// Simulate `proposal` against `state`. The caller has already checked the
/// proposal signature and that the invoker certificate belongs to a member.
pub fn execute(state: &WorldState, proposal: &Proposal) -> Result<Simulation, ChaincodeError> {
    let consortium = consortium(state).ok_or_else(|| ChaincodeError::Validation("channel has no configuration".into()))?;
    let org = consortium
        .org(&proposal.invoker_cert.org)
        .ok_or_else(|| ChaincodeError::Authorization(format!("{} is not a member organization", proposal.invoker_cert.org)))?;
    let function = proposal.contract_fn.as_str();
    if !AUTHORIZATION.iter().any(|(f, _)| *f == function) {
        return Err(ChaincodeError::UnknownFunction(function.to_string()));
    }
    if !is_authorized(function, org.stakeholder) {
        return Err(ChaincodeError::RoleDenied { function: function.to_string(), stakeholder: org.stakeholder });
    }
    let mut ctx = Ctx {
        stub: Stub::new(state),
        invoker: &proposal.invoker_cert,
        stakeholder: org.stakeholder,
        now: proposal.created_at_ms,
        tx_id: proposal.tx_id(),
    };
    let args = &proposal.args;
    let result = match function {
        "register_identity" => out(registry::register_identity(&mut ctx, arg(args)?)),
        "register_doctor" => out(registry::register_doctor(&mut ctx, arg(args)?)),
        "approve_doctor" => out(registry::approve_doctor(&mut ctx, arg(args)?)),
        "submit_credential_update" => out(registry::submit_credential_update(&mut ctx, arg(args)?)),
        "approve_credential" => out(registry::approve_credential(&mut ctx, arg(args)?)),
        "get_doctor" => out(registry::get_doctor(&mut ctx, arg(args)?)),
        "list_doctors" => out(registry::list_doctors(&mut ctx, arg(args)?)),
        "find_specialist" => out(registry::find_specialist(&mut ctx, arg(args)?)),
        "add_medicine" => out(registry::add_medicine(&mut ctx, arg(args)?)),
        "set_medicine_authorized" => out(registry::set_medicine_authorized(&mut ctx, arg(args)?)),
        "list_medicines" => out(registry::list_medicines(&mut ctx, arg(args)?)),
        "create_prescription" => out(care::create_prescription(&mut ctx, arg(args)?)),
        "grant_consent" => out(care::grant_consent(&mut ctx, arg(args)?)),
        "get_medical_history" => out(care::get_medical_history(&mut ctx, arg(args)?)),
        "request_appointment" => out(care::request_appointment(&mut ctx, arg(args)?)),
        "confirm_appointment" => out(care::confirm_appointment(&mut ctx, arg(args)?)),
        "cancel_appointment" => out(care::cancel_appointment(&mut ctx, arg(args)?)),
        "file_complaint" => out(citizen::file_complaint(&mut ctx, arg(args)?)),
        "get_complaint_status" => out(citizen::get_complaint_status(&mut ctx, arg(args)?)),
        "list_complaints" => out(citizen::list_complaints(&mut ctx, arg(args)?)),
        "review_complaint" => out(citizen::review_complaint(&mut ctx, arg(args)?)),
        "record_distribution" => out(authority::record_distribution(&mut ctx, arg(args)?)),
        "list_distributions" => out(authority::list_distributions(&mut ctx, arg(args)?)),
        "prescribing_tendency" => out(authority::prescribing_tendency(&mut ctx, arg(args)?)),
        "anonymized_stats" => out(authority::anonymized_stats(&mut ctx, arg(args)?)),
        "post_news" => out(authority::post_news(&mut ctx, arg(args)?)),
        "get_news" => out(authority::get_news(&mut ctx, arg(args)?)),
        other => Err(ChaincodeError::UnknownFunction(other.to_string())),
    }?;
    let (read_set, write_set) = ctx.stub.into_sets();
    Ok(Simulation { read_set, write_set, result })
}

/// Functions take a single JSON object argument.
fn arg<T: DeserializeOwned>(args: &[serde_json::Value]) -> Result<T, ChaincodeError> {
    let value = args.first().cloned().unwrap_or_else(|| serde_json::Value::Object(Default::default()));
    serde_json::from_value(value).map_err(|e| ChaincodeError::Validation(format!("bad arguments: {e}")))
}

fn out<T: Serialize>(r: Result<T, ChaincodeError>) -> Result<Vec<u8>, ChaincodeError> {
    r.map(|v| to_canonical(&v))
}
