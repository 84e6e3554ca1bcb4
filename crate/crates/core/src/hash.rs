//! Content hashing for provenance tracking.
//!
//! Every artifact that feeds a downstream stage (corpora, datasets, configs,
//! model payloads) is identified by the SHA-256 of its canonical JSON
//! serialization, so reports can state exactly which inputs produced them.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of raw bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Hex-encoded SHA-256 of a value's canonical JSON form.
///
/// Canonical means: struct fields in declaration order, map types backed by
/// `BTreeMap` (sorted keys), no insignificant whitespace. All serializable
/// types in this crate follow that convention, so equal values always hash
/// equal.
pub fn sha256_json<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let bytes = serde_json::to_vec(value)?;
    Ok(sha256_hex(&bytes))
}
