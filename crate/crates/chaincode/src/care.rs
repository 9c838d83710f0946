//! Prescriptions, consent, medical history and appointments.

use hdlt_core::msp::Stakeholder;
use serde::Deserialize;

use crate::model::*;
use crate::registry::approved_self;
use crate::{ChaincodeError, Ctx, DEFAULT_CONSENT_TTL_MS};

/// Threats in a prescription: every item the patient is allergic to, and
/// every pair of items where either lists the other as a contraindication.
pub fn threat_warnings(items: &[RxItem], allergies: &[String], medicines: &[Medicine]) -> Vec<String> {
    let mut warnings = Vec::new();
    for item in items {
        if allergies.contains(&item.medicine_id) {
            warnings.push(format!("allergy: patient is allergic to {}", item.medicine_id));
        }
    }
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let (a, b) = (&medicines[i], &medicines[j]);
            if a.contraindications.contains(&b.medicine_id) || b.contraindications.contains(&a.medicine_id) {
                warnings.push(format!("contraindication: {} with {}", a.medicine_id, b.medicine_id));
            }
        }
    }
    warnings
}

fn check_consent(record: &PatientRecord, doctor_id: &str, now: u64) -> Result<(), ChaincodeError> {
    match record.consents.get(doctor_id) {
        None => Err(ChaincodeError::ConsentRequired(format!("{} has not consented to {doctor_id}", record.patient_id))),
        Some(&expiry) if expiry <= now => {
            Err(ChaincodeError::ConsentExpired(format!("consent of {} for {doctor_id} expired", record.patient_id)))
        }
        Some(_) => Ok(()),
    }
}

#[derive(Deserialize)]
pub struct CreatePrescription {
    pub patient_id: String,
    pub items: Vec<RxItem>,
}

pub fn create_prescription(ctx: &mut Ctx, a: CreatePrescription) -> Result<Prescription, ChaincodeError> {
    let doctor = approved_self(ctx)?;
    let pkey = patient_key(&a.patient_id);
    let mut record: PatientRecord = ctx.stub.get_json(&pkey)?.ok_or(ChaincodeError::NotFound(a.patient_id.clone()))?;
    check_consent(&record, &doctor.doctor_id, ctx.now)?;
    let mut medicines = Vec::with_capacity(a.items.len());
    for item in &a.items {
        if item.days == 0 {
            return Err(ChaincodeError::Validation(format!("{}: days must be positive", item.medicine_id)));
        }
        let m: Medicine = ctx
            .stub
            .get_json(&medicine_key(&item.medicine_id))?
            .ok_or(ChaincodeError::UnknownMedicine(item.medicine_id.clone()))?;
        if !m.authorized {
            return Err(ChaincodeError::UnauthorizedMedicine(item.medicine_id.clone()));
        }
        medicines.push(m);
    }
    let rx = Prescription {
        rx_id: ctx.new_id("rx"),
        doctor_id: doctor.doctor_id,
        patient_id: a.patient_id,
        warnings: threat_warnings(&a.items, &record.allergies, &medicines),
        items: a.items,
        issued_at: ctx.now,
    };
    ctx.stub.put_json(&rx_key(&rx.rx_id), &rx);
    record.history.push(HistoryRef { kind: "prescription".into(), ref_id: rx.rx_id.clone(), at: ctx.now });
    ctx.stub.put_json(&pkey, &record);
    Ok(rx)
}

#[derive(Deserialize)]
pub struct GrantConsent {
    pub doctor_id: String,
    #[serde(default)]
    pub ttl_ms: Option<u64>,
}

pub fn grant_consent(ctx: &mut Ctx, a: GrantConsent) -> Result<PatientRecord, ChaincodeError> {
    let ttl = a.ttl_ms.unwrap_or(DEFAULT_CONSENT_TTL_MS);
    if ttl == 0 {
        return Err(ChaincodeError::Validation("ttl_ms must be positive".into()));
    }
    if !ctx.stub.exists(&doctor_key(&a.doctor_id)) {
        return Err(ChaincodeError::UnknownDoctor(a.doctor_id));
    }
    let pkey = patient_key(ctx.caller());
    let mut record: PatientRecord =
        ctx.stub.get_json(&pkey)?.ok_or_else(|| ChaincodeError::NotFound(ctx.caller().to_string()))?;
    record.consents.insert(a.doctor_id, ctx.now + ttl);
    ctx.stub.put_json(&pkey, &record);
    Ok(record)
}

#[derive(Deserialize)]
pub struct PatientId {
    pub patient_id: String,
}

/// Doctors need live consent; a citizen may read only their own history.
pub fn get_medical_history(ctx: &mut Ctx, a: PatientId) -> Result<HistoryView, ChaincodeError> {
    if ctx.stakeholder == Stakeholder::Nagorik && ctx.caller() != a.patient_id {
        return Err(ChaincodeError::Authorization("citizens may read only their own history".into()));
    }
    let record: PatientRecord =
        ctx.stub.get_json(&patient_key(&a.patient_id))?.ok_or(ChaincodeError::NotFound(a.patient_id.clone()))?;
    if ctx.stakeholder == Stakeholder::Doctor {
        let caller = ctx.caller().to_string();
        check_consent(&record, &caller, ctx.now)?;
    }
    let mut prescriptions = Vec::new();
    for h in record.history.iter().filter(|h| h.kind == "prescription") {
        if let Some(rx) = ctx.stub.get_json::<Prescription>(&rx_key(&h.ref_id))? {
            prescriptions.push(rx);
        }
    }
    Ok(HistoryView {
        patient_id: record.patient_id,
        demographics: record.demographics,
        allergies: record.allergies,
        history: record.history,
        prescriptions,
    })
}

#[derive(Deserialize)]
pub struct RequestAppointment {
    pub doctor_id: String,
    pub slot: u64,
}

pub fn request_appointment(ctx: &mut Ctx, a: RequestAppointment) -> Result<Appointment, ChaincodeError> {
    match ctx.stub.get_json::<DoctorProfile>(&doctor_key(&a.doctor_id))? {
        Some(p) if p.status == DoctorStatus::Approved => {}
        _ => return Err(ChaincodeError::UnknownDoctor(a.doctor_id)),
    }
    if ctx.stub.exists(&slot_key(&a.doctor_id, a.slot)) {
        return Err(ChaincodeError::SlotTaken(format!("{} at {}", a.doctor_id, a.slot)));
    }
    let appt = Appointment {
        appt_id: ctx.new_id("appt"),
        patient_id: ctx.caller().to_string(),
        doctor_id: a.doctor_id,
        slot: a.slot,
        status: AppointmentStatus::Requested,
    };
    ctx.stub.put_json(&appt_key(&appt.appt_id), &appt);
    Ok(appt)
}

#[derive(Deserialize)]
pub struct ApptId {
    pub appt_id: String,
}

fn participant_appt(ctx: &mut Ctx, appt_id: &str) -> Result<Appointment, ChaincodeError> {
    let appt: Appointment =
        ctx.stub.get_json(&appt_key(appt_id))?.ok_or_else(|| ChaincodeError::NotFound(appt_id.to_string()))?;
    let caller = ctx.caller();
    if caller != appt.patient_id && caller != appt.doctor_id {
        return Err(ChaincodeError::Authorization(format!("{caller} is not a participant of {appt_id}")));
    }
    Ok(appt)
}

/// The slot key is read and written here, so two confirmations of one slot
/// in the same block cannot both commit.
pub fn confirm_appointment(ctx: &mut Ctx, a: ApptId) -> Result<Appointment, ChaincodeError> {
    let mut appt = participant_appt(ctx, &a.appt_id)?;
    if appt.status != AppointmentStatus::Requested {
        return Err(ChaincodeError::InvalidTransition(format!("{:?} appointment cannot be confirmed", appt.status)));
    }
    let skey = slot_key(&appt.doctor_id, appt.slot);
    if ctx.stub.exists(&skey) {
        return Err(ChaincodeError::SlotTaken(format!("{} at {}", appt.doctor_id, appt.slot)));
    }
    appt.status = AppointmentStatus::Confirmed;
    ctx.stub.put_json(&skey, &appt.appt_id);
    ctx.stub.put_json(&appt_key(&appt.appt_id), &appt);
    Ok(appt)
}

pub fn cancel_appointment(ctx: &mut Ctx, a: ApptId) -> Result<Appointment, ChaincodeError> {
    let mut appt = participant_appt(ctx, &a.appt_id)?;
    match appt.status {
        AppointmentStatus::Cancelled => {
            return Err(ChaincodeError::InvalidTransition("appointment is already cancelled".into()));
        }
        AppointmentStatus::Confirmed => ctx.stub.delete(&slot_key(&appt.doctor_id, appt.slot)),
        AppointmentStatus::Requested => {}
    }
    appt.status = AppointmentStatus::Cancelled;
    ctx.stub.put_json(&appt_key(&appt.appt_id), &appt);
    Ok(appt)
}
