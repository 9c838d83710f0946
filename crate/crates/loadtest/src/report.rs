use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apdex::{ApdexReport, Buckets, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Error)]
pub enum ReportParseError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing metric {0}")]
    Missing(&'static str),
    #[error("bad row {0}")]
    BadRow(String),
}

pub fn render_report(r: &ApdexReport, format: Format) -> String {
    match format {
        Format::Text => render_text(r),
        Format::Csv => render_csv(r),
    }
}

fn render_text(r: &ApdexReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "requests      {}", r.total);
    let _ = writeln!(s, "satisfied     {}", r.satisfied);
    let _ = writeln!(s, "tolerating    {}", r.tolerating);
    let _ = writeln!(s, "frustrated    {}", r.frustrated);
    let _ = writeln!(s, "apdex         {:.3}  (T={} ms, F={} ms)", r.apdex, r.t_ms, r.f_ms);
    let _ = writeln!(s, "pass          {:.2}%", r.pass_pct);
    let _ = writeln!(s, "fail          {:.2}%", r.fail_pct);
    let _ = writeln!(s);
    let _ = writeln!(s, "response time");
    let _ = writeln!(s, "  <= {} ms{:>12}", r.t_ms, r.buckets.under_t);
    let _ = writeln!(s, "  {}-{} ms{:>9}", r.t_ms, r.f_ms, r.buckets.t_to_f);
    let _ = writeln!(s, "  > {} ms{:>12}", r.f_ms, r.buckets.over_f);
    let _ = writeln!(s, "  failed{:>14}", r.buckets.failed);
    let _ = writeln!(s);
    let _ = writeln!(s, "throughput per 10 s window");
    let _ = writeln!(s, "  start_s        ok    failed    ok/s  failed/s");
    for w in &r.windows {
        let _ = writeln!(
            s,
            "  {:>7} {:>9} {:>9} {:>7.1} {:>9.1}",
            w.start_s,
            w.ok,
            w.failed,
            w.ok_per_sec(),
            w.failed_per_sec()
        );
    }
    s
}

fn render_csv(r: &ApdexReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |kind: &str, key: String, value: String| {
        w.write_record([kind, key.as_str(), value.as_str()]).expect("in-memory csv");
    };
    row("kind", "key".into(), "value".into());
    for (k, v) in [
        ("t_ms", r.t_ms),
        ("f_ms", r.f_ms),
        ("total", r.total),
        ("satisfied", r.satisfied),
        ("tolerating", r.tolerating),
        ("frustrated", r.frustrated),
    ] {
        row("summary", k.into(), v.to_string());
    }
    row("summary", "apdex".into(), r.apdex.to_string());
    row("summary", "pass_pct".into(), r.pass_pct.to_string());
    row("summary", "fail_pct".into(), r.fail_pct.to_string());
    for (k, v) in [
        ("under_t", r.buckets.under_t),
        ("t_to_f", r.buckets.t_to_f),
        ("over_f", r.buckets.over_f),
        ("failed", r.buckets.failed),
    ] {
        row("bucket", k.into(), v.to_string());
    }
    for win in &r.windows {
        row("window_ok", win.start_s.to_string(), win.ok.to_string());
        row("window_failed", win.start_s.to_string(), win.failed.to_string());
    }
    drop(row);
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Read back a report written by [`render_report`] in CSV form.
pub fn parse_report_csv(text: &str) -> Result<ApdexReport, ReportParseError> {
    let mut summary = std::collections::BTreeMap::new();
    let mut buckets = Buckets::default();
    let mut windows: Vec<Window> = Vec::new();
    for rec in csv::Reader::from_reader(text.as_bytes()).records() {
        let rec = rec?;
        let bad = || ReportParseError::BadRow(rec.iter().collect::<Vec<_>>().join(","));
        let (kind, key, value) = (&rec[0], &rec[1], &rec[2]);
        let int = || value.parse::<u64>().map_err(|_| bad());
        match kind {
            "summary" => {
                summary.insert(key.to_string(), value.to_string());
            }
            "bucket" => match key {
                "under_t" => buckets.under_t = int()?,
                "t_to_f" => buckets.t_to_f = int()?,
                "over_f" => buckets.over_f = int()?,
                "failed" => buckets.failed = int()?,
                _ => return Err(bad()),
            },
            "window_ok" | "window_failed" => {
                let start_s = key.parse::<u64>().map_err(|_| bad())?;
                if windows.last().map(|w| w.start_s) != Some(start_s) {
                    windows.push(Window { start_s, ..Window::default() });
                }
                let w = windows.last_mut().expect("just pushed");
                if kind == "window_ok" {
                    w.ok = int()?;
                } else {
                    w.failed = int()?;
                }
            }
            _ => return Err(bad()),
        }
    }
    fn get<T: std::str::FromStr>(
        m: &std::collections::BTreeMap<String, String>,
        k: &'static str,
    ) -> Result<T, ReportParseError> {
        let v = m.get(k).ok_or(ReportParseError::Missing(k))?;
        v.parse().map_err(|_| ReportParseError::BadRow(format!("summary,{k},{v}")))
    }
    Ok(ApdexReport {
        t_ms: get(&summary, "t_ms")?,
        f_ms: get(&summary, "f_ms")?,
        total: get(&summary, "total")?,
        satisfied: get(&summary, "satisfied")?,
        tolerating: get(&summary, "tolerating")?,
        frustrated: get(&summary, "frustrated")?,
        apdex: get(&summary, "apdex")?,
        buckets,
        windows,
        pass_pct: get(&summary, "pass_pct")?,
        fail_pct: get(&summary, "fail_pct")?,
    })
}
