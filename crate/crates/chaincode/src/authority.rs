//! Distribution log, analytics and the news feed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::*;
use crate::{ChaincodeError, Ctx, K_ANONYMITY};

#[derive(Deserialize)]
pub struct RecordDistribution {
    pub medicine_id: String,
    pub facility: String,
    pub quantity: u64,
}

pub fn record_distribution(ctx: &mut Ctx, a: RecordDistribution) -> Result<DistributionRecord, ChaincodeError> {
    if a.quantity == 0 {
        return Err(ChaincodeError::Validation("quantity must be positive".into()));
    }
    if !ctx.stub.exists(&medicine_key(&a.medicine_id)) {
        return Err(ChaincodeError::UnknownMedicine(a.medicine_id));
    }
    let r = DistributionRecord {
        record_id: ctx.new_id("dist"),
        medicine_id: a.medicine_id,
        facility: a.facility,
        quantity: a.quantity,
        recorded_by: ctx.caller().to_string(),
        at: ctx.now,
    };
    ctx.stub.put_json(&distribution_key(&r.record_id), &r);
    Ok(r)
}

#[derive(Deserialize)]
pub struct ListDistributions {
    #[serde(default)]
    pub medicine_id: Option<String>,
}

pub fn list_distributions(ctx: &mut Ctx, a: ListDistributions) -> Result<Vec<DistributionRecord>, ChaincodeError> {
    let all: Vec<DistributionRecord> = ctx.stub.scan_json("health/distribution/")?;
    Ok(all.into_iter().filter(|r| a.medicine_id.as_ref().map_or(true, |m| &r.medicine_id == m)).collect())
}

#[derive(Deserialize)]
pub struct Tendency {
    pub doctor_id: String,
}

/// How often the doctor prescribed each medicine (one count per item).
pub fn prescribing_tendency(ctx: &mut Ctx, a: Tendency) -> Result<BTreeMap<String, u64>, ChaincodeError> {
    let all: Vec<Prescription> = ctx.stub.scan_json("health/rx/")?;
    let mut counts = BTreeMap::new();
    for rx in all.iter().filter(|rx| rx.doctor_id == a.doctor_id) {
        for item in &rx.items {
            *counts.entry(item.medicine_id.clone()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Specialty,
    Medicine,
}

#[derive(Deserialize)]
pub struct Stats {
    pub group_by: GroupBy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupStat {
    Counts { prescriptions: u64, patients: u64 },
    Suppressed(String),
}

/// Prescription counts per group. A group drawn from fewer than
/// [`K_ANONYMITY`] distinct patients is reported as `"suppressed"`.
pub fn anonymized_stats(ctx: &mut Ctx, a: Stats) -> Result<BTreeMap<String, GroupStat>, ChaincodeError> {
    let all: Vec<Prescription> = ctx.stub.scan_json("health/rx/")?;
    let mut specialty: BTreeMap<String, String> = BTreeMap::new();
    if matches!(a.group_by, GroupBy::Specialty) {
        for d in ctx.stub.scan_json::<DoctorProfile>("health/doctor/")? {
            specialty.insert(d.doctor_id, d.specialty);
        }
    }
    let mut groups: BTreeMap<String, (u64, BTreeSet<&str>)> = BTreeMap::new();
    for rx in &all {
        let keys: Vec<String> = match a.group_by {
            GroupBy::Medicine => rx.items.iter().map(|i| i.medicine_id.clone()).collect(),
            GroupBy::Specialty => vec![specialty.get(&rx.doctor_id).cloned().unwrap_or_else(|| "unknown".into())],
        };
        for k in keys {
            let g = groups.entry(k).or_default();
            g.0 += 1;
            g.1.insert(&rx.patient_id);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(k, (n, patients))| {
            let stat = if patients.len() < K_ANONYMITY {
                GroupStat::Suppressed("suppressed".into())
            } else {
                GroupStat::Counts { prescriptions: n, patients: patients.len() as u64 }
            };
            (k, stat)
        })
        .collect())
}

#[derive(Deserialize)]
pub struct PostNews {
    pub title: String,
    pub body: String,
}

pub fn post_news(ctx: &mut Ctx, a: PostNews) -> Result<NewsItem, ChaincodeError> {
    if a.title.trim().is_empty() {
        return Err(ChaincodeError::Validation("title is required".into()));
    }
    let n = NewsItem {
        news_id: ctx.new_id("news"),
        title: a.title,
        body: a.body,
        published_by: ctx.caller().to_string(),
        at: ctx.now,
    };
    ctx.stub.put_json(&news_key(&n.news_id), &n);
    Ok(n)
}

#[derive(Deserialize)]
pub struct GetNews {
    #[serde(default)]
    pub limit: Option<usize>,
}

/// Newest first.
pub fn get_news(ctx: &mut Ctx, a: GetNews) -> Result<Vec<NewsItem>, ChaincodeError> {
    let mut all: Vec<NewsItem> = ctx.stub.scan_json("health/news/")?;
    all.sort_by(|x, y| y.at.cmp(&x.at).then(y.news_id.cmp(&x.news_id)));
    all.truncate(a.limit.unwrap_or(usize::MAX));
    Ok(all)
}
