//! Complaints filed by citizens and reviewed by the authority.

use hdlt_core::msp::Stakeholder;
use serde::Deserialize;

use crate::model::*;
use crate::{ChaincodeError, Ctx};

/// Assign ranks in place: open and in-review complaints ordered by severity
/// (high first), then filing time, then id; rank 1 is the most urgent.
pub fn rank_complaints(all: &mut [Complaint]) {
    let mut active: Vec<usize> = (0..all.len()).filter(|&i| all[i].status != ComplaintStatus::Resolved).collect();
    active.sort_by(|&a, &b| {
        let (x, y) = (&all[a], &all[b]);
        y.severity.cmp(&x.severity).then(x.filed_at.cmp(&y.filed_at)).then(x.complaint_id.cmp(&y.complaint_id))
    });
    for c in all.iter_mut() {
        c.priority_rank = None;
    }
    for (rank, i) in active.into_iter().enumerate() {
        all[i].priority_rank = Some(rank as u32 + 1);
    }
}

fn ranked(ctx: &mut Ctx) -> Result<Vec<Complaint>, ChaincodeError> {
    let mut all: Vec<Complaint> = ctx.stub.scan_json("health/complaint/")?;
    rank_complaints(&mut all);
    Ok(all)
}

#[derive(Deserialize)]
pub struct FileComplaint {
    pub subject: String,
    pub body: String,
    pub severity: Severity,
}

pub fn file_complaint(ctx: &mut Ctx, a: FileComplaint) -> Result<Complaint, ChaincodeError> {
    if a.subject.trim().is_empty() {
        return Err(ChaincodeError::Validation("subject is required".into()));
    }
    let c = Complaint {
        complaint_id: ctx.new_id("cmp"),
        patient_id: ctx.caller().to_string(),
        subject: a.subject,
        body: a.body,
        severity: a.severity,
        priority_rank: None,
        status: ComplaintStatus::Open,
        filed_at: ctx.now,
    };
    ctx.stub.put_json(&complaint_key(&c.complaint_id), &c);
    Ok(c)
}

#[derive(Deserialize)]
pub struct ComplaintId {
    pub complaint_id: String,
}

pub fn get_complaint_status(ctx: &mut Ctx, a: ComplaintId) -> Result<Complaint, ChaincodeError> {
    let own: Complaint = ctx
        .stub
        .get_json(&complaint_key(&a.complaint_id))?
        .ok_or(ChaincodeError::NotFound(a.complaint_id.clone()))?;
    if ctx.stakeholder == Stakeholder::Nagorik && own.patient_id != ctx.caller() {
        return Err(ChaincodeError::Authorization("complaints are visible to their owner only".into()));
    }
    ranked(ctx)?
        .into_iter()
        .find(|c| c.complaint_id == a.complaint_id)
        .ok_or(ChaincodeError::NotFound(a.complaint_id))
}

#[derive(Deserialize)]
pub struct ListComplaints {}

/// The authority sees every complaint; a citizen sees their own.
pub fn list_complaints(ctx: &mut Ctx, _a: ListComplaints) -> Result<Vec<Complaint>, ChaincodeError> {
    let caller = ctx.caller().to_string();
    let nagorik = ctx.stakeholder == Stakeholder::Nagorik;
    Ok(ranked(ctx)?.into_iter().filter(|c| !nagorik || c.patient_id == caller).collect())
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewAction {
    /// open to in_review
    Review,
    /// in_review to resolved
    Resolve,
}

#[derive(Deserialize)]
pub struct ReviewComplaint {
    pub complaint_id: String,
    pub action: ReviewAction,
}

pub fn review_complaint(ctx: &mut Ctx, a: ReviewComplaint) -> Result<Complaint, ChaincodeError> {
    let key = complaint_key(&a.complaint_id);
    let mut c: Complaint = ctx.stub.get_json(&key)?.ok_or(ChaincodeError::NotFound(a.complaint_id.clone()))?;
    c.status = match (c.status, a.action) {
        (ComplaintStatus::Open, ReviewAction::Review) => ComplaintStatus::InReview,
        (ComplaintStatus::InReview, ReviewAction::Resolve) => ComplaintStatus::Resolved,
        (from, action) => {
            return Err(ChaincodeError::InvalidTransition(format!("{action:?} is not allowed from {from:?}")));
        }
    };
    ctx.stub.put_json(&key, &c);
    Ok(c)
}
