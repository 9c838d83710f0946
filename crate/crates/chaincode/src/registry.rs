//! Identities, doctors and the medicine registry.

use std::collections::BTreeMap;

use hdlt_core::msp::{IdentityRecord, Stakeholder};
use hdlt_core::Digest256;
use serde::{Deserialize, Serialize};

use crate::model::*;
use crate::{ChaincodeError, Ctx};

#[derive(Deserialize)]
pub struct RegisterIdentity {
    pub record: IdentityRecord,
}

/// Write the password record of a newly enrolled member. Citizens also get an
/// empty patient record seeded from their registration attributes
/// (`allergies` is a comma-separated list of medicine ids).
pub fn register_identity(ctx: &mut Ctx, a: RegisterIdentity) -> Result<IdentityRecord, ChaincodeError> {
    ctx.require_admin()?;
    let record = a.record;
    if record.org != ctx.invoker.org {
        return Err(ChaincodeError::Authorization("admins register members of their own organization only".into()));
    }
    let key = record.key();
    if ctx.stub.exists(&key) {
        return Err(ChaincodeError::Duplicate(record.identity_id));
    }
    ctx.stub.put_json(&key, &record);
    if ctx.stakeholder == Stakeholder::Nagorik {
        let pkey = patient_key(&record.identity_id);
        if !ctx.stub.exists(&pkey) {
            let mut demographics = record.attrs.clone();
            let allergies = demographics
                .remove("allergies")
                .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
                .unwrap_or_default();
            demographics.insert("name".into(), record.display_name.clone());
            ctx.stub.put_json(
                &pkey,
                &PatientRecord {
                    patient_id: record.identity_id.clone(),
                    demographics,
                    allergies,
                    history: Vec::new(),
                    consents: BTreeMap::new(),
                },
            );
        }
    }
    Ok(record)
}

#[derive(Deserialize)]
pub struct CredentialInput {
    pub degree: String,
    pub institution: String,
    pub doc_digest: Digest256,
}

#[derive(Deserialize)]
pub struct RegisterDoctor {
    pub name: String,
    pub specialty: String,
    #[serde(default)]
    pub credentials: Vec<CredentialInput>,
}

pub fn register_doctor(ctx: &mut Ctx, a: RegisterDoctor) -> Result<DoctorProfile, ChaincodeError> {
    let doctor_id = ctx.caller().to_string();
    let key = doctor_key(&doctor_id);
    if ctx.stub.exists(&key) {
        return Err(ChaincodeError::Duplicate(doctor_id));
    }
    if a.name.trim().is_empty() || a.specialty.trim().is_empty() {
        return Err(ChaincodeError::Validation("name and specialty are required".into()));
    }
    let mut profile = DoctorProfile {
        doctor_id,
        name: a.name,
        specialty: a.specialty,
        status: DoctorStatus::Pending,
        credentials: Vec::new(),
    };
    for (i, c) in a.credentials.into_iter().enumerate() {
        let credential_id = format!("{}-{i}", ctx.new_id("cred"));
        ctx.stub.put_json(&credential_key(&credential_id), &profile.doctor_id);
        profile.credentials.push(Credential {
            credential_id,
            degree: c.degree,
            institution: c.institution,
            doc_digest: c.doc_digest,
            verified: false,
        });
    }
    ctx.stub.put_json(&key, &profile);
    Ok(profile)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approve,
    Reject,
}

#[derive(Deserialize)]
pub struct ApproveDoctor {
    pub doctor_id: String,
    pub decision: Decision,
}

pub fn approve_doctor(ctx: &mut Ctx, a: ApproveDoctor) -> Result<DoctorProfile, ChaincodeError> {
    let key = doctor_key(&a.doctor_id);
    let mut profile: DoctorProfile = ctx.stub.get_json(&key)?.ok_or(ChaincodeError::NotFound(a.doctor_id.clone()))?;
    if profile.status != DoctorStatus::Pending {
        return Err(ChaincodeError::NotPending(a.doctor_id));
    }
    profile.status = match a.decision {
        Decision::Approve => DoctorStatus::Approved,
        Decision::Reject => DoctorStatus::Rejected,
    };
    ctx.stub.put_json(&key, &profile);
    Ok(profile)
}

/// The caller's own profile, which must be approved.
pub(crate) fn approved_self(ctx: &mut Ctx) -> Result<DoctorProfile, ChaincodeError> {
    let id = ctx.caller().to_string();
    match ctx.stub.get_json::<DoctorProfile>(&doctor_key(&id))? {
        Some(p) if p.status == DoctorStatus::Approved => Ok(p),
        _ => Err(ChaincodeError::Authorization(format!("{id} is not an approved doctor"))),
    }
}

pub fn submit_credential_update(ctx: &mut Ctx, a: CredentialInput) -> Result<DoctorProfile, ChaincodeError> {
    let mut profile = approved_self(ctx)?;
    let credential_id = ctx.new_id("cred");
    ctx.stub.put_json(&credential_key(&credential_id), &profile.doctor_id);
    profile.credentials.push(Credential {
        credential_id,
        degree: a.degree,
        institution: a.institution,
        doc_digest: a.doc_digest,
        verified: false,
    });
    ctx.stub.put_json(&doctor_key(&profile.doctor_id), &profile);
    Ok(profile)
}

#[derive(Deserialize)]
pub struct ApproveCredential {
    pub credential_id: String,
}

pub fn approve_credential(ctx: &mut Ctx, a: ApproveCredential) -> Result<DoctorProfile, ChaincodeError> {
    let doctor_id: String = ctx
        .stub
        .get_json(&credential_key(&a.credential_id))?
        .ok_or(ChaincodeError::NotFound(a.credential_id.clone()))?;
    let key = doctor_key(&doctor_id);
    let mut profile: DoctorProfile = ctx.stub.get_json(&key)?.ok_or(ChaincodeError::NotFound(doctor_id))?;
    let cred = profile
        .credentials
        .iter_mut()
        .find(|c| c.credential_id == a.credential_id)
        .ok_or(ChaincodeError::NotFound(a.credential_id.clone()))?;
    if cred.verified {
        return Err(ChaincodeError::NotPending(a.credential_id));
    }
    cred.verified = true;
    ctx.stub.put_json(&key, &profile);
    Ok(profile)
}

#[derive(Deserialize)]
pub struct DoctorId {
    pub doctor_id: String,
}

/// Unverified credentials are visible only to the doctor and the authority.
pub fn get_doctor(ctx: &mut Ctx, a: DoctorId) -> Result<DoctorProfile, ChaincodeError> {
    let profile: DoctorProfile = ctx
        .stub
        .get_json(&doctor_key(&a.doctor_id))?
        .ok_or(ChaincodeError::NotFound(a.doctor_id.clone()))?;
    if ctx.stakeholder == Stakeholder::Authority || ctx.caller() == profile.doctor_id {
        Ok(profile)
    } else {
        Ok(profile.public_view())
    }
}

#[derive(Deserialize)]
pub struct ListDoctors {
    #[serde(default)]
    pub status: Option<DoctorStatus>,
}

pub fn list_doctors(ctx: &mut Ctx, a: ListDoctors) -> Result<Vec<DoctorProfile>, ChaincodeError> {
    let all: Vec<DoctorProfile> = ctx.stub.scan_json("health/doctor/")?;
    Ok(all.into_iter().filter(|p| a.status.map_or(true, |s| p.status == s)).collect())
}

#[derive(Deserialize)]
pub struct FindSpecialist {
    pub specialty: String,
}

/// Approved doctors whose specialty matches, ignoring ASCII case, showing
/// verified credentials only.
pub fn find_specialist(ctx: &mut Ctx, a: FindSpecialist) -> Result<Vec<DoctorProfile>, ChaincodeError> {
    let all: Vec<DoctorProfile> = ctx.stub.scan_json("health/doctor/")?;
    Ok(all
        .into_iter()
        .filter(|p| p.status == DoctorStatus::Approved && p.specialty.eq_ignore_ascii_case(&a.specialty))
        .map(|p| p.public_view())
        .collect())
}

#[derive(Deserialize, Serialize)]
pub struct AddMedicine {
    pub medicine_id: String,
    pub generic_name: String,
    #[serde(default)]
    pub authorized: bool,
    #[serde(default)]
    pub free_under_esp: bool,
    #[serde(default)]
    pub contraindications: Vec<String>,
}

pub fn add_medicine(ctx: &mut Ctx, a: AddMedicine) -> Result<Medicine, ChaincodeError> {
    let key = medicine_key(&a.medicine_id);
    if a.medicine_id.trim().is_empty() {
        return Err(ChaincodeError::Validation("medicine_id is required".into()));
    }
    if ctx.stub.exists(&key) {
        return Err(ChaincodeError::Duplicate(a.medicine_id));
    }
    let m = Medicine {
        medicine_id: a.medicine_id,
        generic_name: a.generic_name,
        authorized: a.authorized,
        free_under_esp: a.free_under_esp,
        contraindications: a.contraindications,
    };
    ctx.stub.put_json(&key, &m);
    Ok(m)
}

#[derive(Deserialize)]
pub struct SetAuthorized {
    pub medicine_id: String,
    pub authorized: bool,
}

pub fn set_medicine_authorized(ctx: &mut Ctx, a: SetAuthorized) -> Result<Medicine, ChaincodeError> {
    let key = medicine_key(&a.medicine_id);
    let mut m: Medicine = ctx.stub.get_json(&key)?.ok_or(ChaincodeError::UnknownMedicine(a.medicine_id))?;
    m.authorized = a.authorized;
    ctx.stub.put_json(&key, &m);
    Ok(m)
}

#[derive(Deserialize)]
pub struct ListMedicines {
    #[serde(default)]
    pub authorized_only: bool,
    #[serde(default)]
    pub free_only: bool,
}

pub fn list_medicines(ctx: &mut Ctx, a: ListMedicines) -> Result<Vec<Medicine>, ChaincodeError> {
    let all: Vec<Medicine> = ctx.stub.scan_json("health/medicine/")?;
    Ok(all
        .into_iter()
        .filter(|m| (!a.authorized_only || m.authorized) && (!a.free_only || m.free_under_esp))
        .collect())
}
