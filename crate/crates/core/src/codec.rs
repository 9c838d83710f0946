//! Canonical encoding.
//!
//! Values are encoded as JSON with fields in declaration order, no
//! insignificant whitespace and lowercase hex for binary data. Decoding is
//! strict: the input must re-encode to exactly the same bytes, so there is one
//! and only one accepted byte string per value.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed encoding: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("encoding is not canonical")]
    NonCanonical,
}

pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    // Only maps with non-string keys can fail here and none of our types have them.
    serde_json::to_vec(value).expect("canonical encoding of a well-formed value")
}

pub fn canonical_len<T: Serialize + ?Sized>(value: &T) -> usize {
    to_canonical(value).len()
}

pub fn from_canonical<T: Serialize + DeserializeOwned>(bytes: &[u8]) -> Result<T, CodecError> {
    let value: T = serde_json::from_slice(bytes)?;
    if to_canonical(&value) != bytes {
        return Err(CodecError::NonCanonical);
    }
    Ok(value)
}

fn decode_lower_hex(s: &str) -> Result<Vec<u8>, String> {
    if s.bytes().any(|b| !matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err(format!("not lowercase hex: {s:?}"));
    }
    hex::decode(s).map_err(|e| e.to_string())
}

/// Serde helper for `Vec<u8>` fields encoded as lowercase hex.
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        super::decode_lower_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde helper for `Option<Vec<u8>>`; `None` encodes as `null`.
pub mod hex_option {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match bytes {
            Some(b) => s.serialize_some(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        match Option::<String>::deserialize(d)? {
            Some(s) => super::decode_lower_hex(&s)
                .map(Some)
                .map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

/// Serde helper for fixed-size byte arrays encoded as lowercase hex.
pub mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(bytes: &[u8; N], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[u8; N], D::Error> {
        let s = String::deserialize(d)?;
        let v = super::decode_lower_hex(&s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|v: Vec<u8>| serde::de::Error::custom(format!("expected {N} bytes, got {}", v.len())))
    }
}
