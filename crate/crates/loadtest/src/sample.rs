use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// One request as seen by a virtual user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub route: String,
    /// Offset from the start of the run.
    pub started_at_ms: u64,
    pub latency_ms: u64,
    pub ok: bool,
    /// HTTP status, or 0 when no response arrived.
    pub status: u16,
}

impl Sample {
    pub fn new(route: impl Into<String>, started_at_ms: u64, latency_ms: u64, status: u16) -> Self {
        Sample { route: route.into(), started_at_ms, latency_ms, ok: (200..300).contains(&status), status }
    }
}

pub fn write_samples<W: Write>(out: W, samples: &[Sample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> csv::Result<Vec<Sample>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
