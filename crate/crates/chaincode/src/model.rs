//! Records kept in world state under `health/<entity>/<id>`.

use std::collections::BTreeMap;

use hdlt_core::Digest256;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoctorStatus {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub credential_id: String,
    pub degree: String,
    pub institution: String,
    /// Digest of the scanned certificate held in the off-chain store.
    pub doc_digest: Digest256,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoctorProfile {
    pub doctor_id: String,
    pub name: String,
    pub specialty: String,
    pub status: DoctorStatus,
    pub credentials: Vec<Credential>,
}

impl DoctorProfile {
    /// The profile as shown to anyone other than the doctor and the authority.
    pub fn public_view(&self) -> DoctorProfile {
        DoctorProfile {
            credentials: self.credentials.iter().filter(|c| c.verified).cloned().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRef {
    pub kind: String,
    pub ref_id: String,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub demographics: BTreeMap<String, String>,
    pub allergies: Vec<String>,
    /// Append-only.
    pub history: Vec<HistoryRef>,
    /// doctor_id to consent expiry (logical ms).
    pub consents: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Medicine {
    pub medicine_id: String,
    pub generic_name: String,
    pub authorized: bool,
    pub free_under_esp: bool,
    pub contraindications: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RxItem {
    pub medicine_id: String,
    pub dosage: String,
    pub days: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prescription {
    pub rx_id: String,
    pub doctor_id: String,
    pub patient_id: String,
    pub items: Vec<RxItem>,
    pub warnings: Vec<String>,
    pub issued_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppointmentStatus {
    Requested,
    Confirmed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appointment {
    pub appt_id: String,
    pub patient_id: String,
    pub doctor_id: String,
    pub slot: u64,
    pub status: AppointmentStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplaintStatus {
    Open,
    InReview,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complaint {
    pub complaint_id: String,
    pub patient_id: String,
    pub subject: String,
    pub body: String,
    pub severity: Severity,
    /// Computed when read; never stored. Resolved complaints have no rank.
    pub priority_rank: Option<u32>,
    pub status: ComplaintStatus,
    pub filed_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub record_id: String,
    pub medicine_id: String,
    pub facility: String,
    pub quantity: u64,
    pub recorded_by: String,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsItem {
    pub news_id: String,
    pub title: String,
    pub body: String,
    pub published_by: String,
    pub at: u64,
}

/// What a doctor or the patient sees of a medical history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryView {
    pub patient_id: String,
    pub demographics: BTreeMap<String, String>,
    pub allergies: Vec<String>,
    pub history: Vec<HistoryRef>,
    pub prescriptions: Vec<Prescription>,
}

pub fn doctor_key(id: &str) -> String {
    format!("health/doctor/{id}")
}
pub fn patient_key(id: &str) -> String {
    format!("health/patient/{id}")
}
pub fn medicine_key(id: &str) -> String {
    format!("health/medicine/{id}")
}
pub fn rx_key(id: &str) -> String {
    format!("health/rx/{id}")
}
pub fn appt_key(id: &str) -> String {
    format!("health/appt/{id}")
}
pub fn slot_key(doctor_id: &str, slot: u64) -> String {
    format!("health/appt-slot/{doctor_id}/{slot}")
}
pub fn complaint_key(id: &str) -> String {
    format!("health/complaint/{id}")
}
pub fn credential_key(id: &str) -> String {
    format!("health/credential/{id}")
}
pub fn distribution_key(id: &str) -> String {
    format!("health/distribution/{id}")
}
pub fn news_key(id: &str) -> String {
    format!("health/news/{id}")
}
