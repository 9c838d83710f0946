//! Load generator and APDEX analysis.
//!
//! [`run_load`] drives concurrent virtual users against the gateway and
//! records a [`Sample`] per request. [`apdex_score`] buckets samples by the
//! satisfied threshold T and frustrated threshold F and computes
//! `(satisfied + tolerating / 2) / total`, with failed requests frustrated.

mod apdex;
mod load;
mod report;
mod sample;

pub use apdex::{apdex_score, ApdexError, ApdexReport, Buckets, Window, DEFAULT_F_MS, DEFAULT_T_MS, WINDOW_MS};
pub use load::{probe, run_load, LoadConfig, LoadError, Login, RouteTemplate};
pub use report::{parse_report_csv, render_report, Format, ReportParseError};
pub use sample::{read_samples, write_samples, Sample};
