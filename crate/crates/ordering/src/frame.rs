//! Length-prefixed canonical frames for carrying messages between processes.

use std::io::{self, Read, Write};

use hdlt_core::codec::{from_canonical, to_canonical};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Largest frame accepted: one full block plus envelope overhead.
pub const MAX_FRAME: usize = 4 * 1_048_576;

pub fn write_frame<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    let body = to_canonical(value);
    if body.len() > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame too large"));
    }
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()
}

/// `Ok(None)` on clean end of stream.
pub fn read_frame<R: Read, T: Serialize + DeserializeOwned>(r: &mut R) -> io::Result<Option<T>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too large"));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    from_canonical(&body)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
