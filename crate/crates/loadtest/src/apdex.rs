use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Sample;

pub const DEFAULT_T_MS: u64 = 500;
pub const DEFAULT_F_MS: u64 = 1500;
/// Width of a throughput window.
pub const WINDOW_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ApdexError {
    #[error("no samples to score")]
    EmptyInput,
    #[error("thresholds must satisfy 0 < T <= F (got T={t_ms}, F={f_ms})")]
    Thresholds { t_ms: u64, f_ms: u64 },
}

/// Response-time buckets. Failures are counted apart from latency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Buckets {
    /// Succeeded within T.
    pub under_t: u64,
    /// Succeeded above T, within F.
    pub t_to_f: u64,
    /// Succeeded above F.
    pub over_f: u64,
    pub failed: u64,
}

impl Buckets {
    pub fn sum(&self) -> u64 {
        self.under_t + self.t_to_f + self.over_f + self.failed
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start_s: u64,
    pub ok: u64,
    pub failed: u64,
}

impl Window {
    pub fn ok_per_sec(&self) -> f64 {
        self.ok as f64 * 1000.0 / WINDOW_MS as f64
    }

    pub fn failed_per_sec(&self) -> f64 {
        self.failed as f64 * 1000.0 / WINDOW_MS as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApdexReport {
    pub t_ms: u64,
    pub f_ms: u64,
    pub total: u64,
    pub satisfied: u64,
    pub tolerating: u64,
    /// Slower than F, or failed.
    pub frustrated: u64,
    pub apdex: f64,
    pub buckets: Buckets,
    /// Every window from the first sample to the last, empty ones included.
    pub windows: Vec<Window>,
    pub pass_pct: f64,
    pub fail_pct: f64,
}

/// Score samples: (satisfied + tolerating / 2) / total.
pub fn apdex_score(samples: &[Sample], t_ms: u64, f_ms: u64) -> Result<ApdexReport, ApdexError> {
    if t_ms == 0 || t_ms > f_ms {
        return Err(ApdexError::Thresholds { t_ms, f_ms });
    }
    if samples.is_empty() {
        return Err(ApdexError::EmptyInput);
    }
    let mut buckets = Buckets::default();
    for s in samples {
        match (s.ok, s.latency_ms) {
            (false, _) => buckets.failed += 1,
            (true, l) if l <= t_ms => buckets.under_t += 1,
            (true, l) if l <= f_ms => buckets.t_to_f += 1,
            _ => buckets.over_f += 1,
        }
    }
    let last = samples.iter().map(|s| s.started_at_ms / WINDOW_MS).max().unwrap_or(0);
    let mut windows: Vec<Window> =
        (0..=last).map(|i| Window { start_s: i * WINDOW_MS / 1000, ..Window::default() }).collect();
    for s in samples {
        let w = &mut windows[(s.started_at_ms / WINDOW_MS) as usize];
        if s.ok {
            w.ok += 1;
        } else {
            w.failed += 1;
        }
    }
    let total = samples.len() as u64;
    let satisfied = buckets.under_t;
    let tolerating = buckets.t_to_f;
    Ok(ApdexReport {
        t_ms,
        f_ms,
        total,
        satisfied,
        tolerating,
        frustrated: buckets.over_f + buckets.failed,
        apdex: (satisfied as f64 + tolerating as f64 / 2.0) / total as f64,
        buckets,
        windows,
        pass_pct: 100.0 * (total - buckets.failed) as f64 / total as f64,
        fail_pct: 100.0 * buckets.failed as f64 / total as f64,
    })
}
