#![allow(dead_code)]

use std::collections::BTreeMap;

use hdlt_core::msp::Role;
use hdlt_gateway::{Gateway, GatewayConfig, NewUser, Session};
use hdlt_net::TopologyConfig;
use serde_json::{json, Value};

pub const ADMIN_PASSWORD: &str = "admin-secret";
pub const AUTHORITY: &str = "AuthorityOrg";
pub const DOCTORS: &str = "DoctorOrg";
pub const NAGORIK: &str = "NagorikOrg";
pub const T0: u64 = 1_000;

pub fn start() -> Gateway {
    Gateway::start(GatewayConfig::new(TopologyConfig::paper(), ADMIN_PASSWORD)).unwrap()
}

pub fn admin(gw: &mut Gateway, org: &str) -> Session {
    gw.login(&format!("admin@{org}"), ADMIN_PASSWORD, T0).unwrap().1
}

pub fn new_user(id: &str, attrs: &[(&str, &str)]) -> NewUser {
    NewUser {
        identity_id: id.into(),
        display_name: format!("{id} name"),
        attrs: attrs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect::<BTreeMap<_, _>>(),
        role: Role::User,
        password: format!("{id}-pw"),
    }
}

/// Register a member through the org admin and log them in.
pub fn member(gw: &mut Gateway, org: &str, id: &str, attrs: &[(&str, &str)]) -> Session {
    let a = admin(gw, org);
    gw.register_user(&a, &new_user(id, attrs)).unwrap();
    gw.login(id, &format!("{id}-pw"), T0).unwrap().1
}

/// A doctor registered and approved by the authority.
pub fn approved_doctor(gw: &mut Gateway, authority: &Session, id: &str, specialty: &str) -> Session {
    let d = member(gw, DOCTORS, id, &[]);
    gw.invoke(&d, "register_doctor", json!({"name": format!("Dr {id}"), "specialty": specialty})).unwrap();
    gw.invoke(authority, "approve_doctor", json!({"doctor_id": id, "decision": "approve"})).unwrap();
    d
}

pub fn medicine(gw: &mut Gateway, authority: &Session, id: &str, contraindications: &[&str]) -> Value {
    gw.invoke(
        authority,
        "add_medicine",
        json!({"medicine_id": id, "generic_name": format!("generic {id}"), "authorized": true, "contraindications": contraindications}),
    )
    .unwrap()
    .result
}
