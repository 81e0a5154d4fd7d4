//! JSON records for emitted numbers and input digests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Whether a number is computed to a tolerance or only estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Computed,
    Estimated,
    EstimatedLowerBound,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub op: String,
    pub inputs_digest: String,
    pub value: f64,
    pub tol: f64,
    pub provenance: Provenance,
}

impl Record {
    pub fn computed(op: &str, inputs: &[u8], value: f64, tol: f64) -> Self {
        Record { op: op.into(), inputs_digest: sha256_hex(inputs), value, tol, provenance: Provenance::Computed }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Little-endian bytes of a float slice, for digests.
pub fn f64_bytes(xs: &[f64]) -> Vec<u8> {
    xs.iter().flat_map(|v| v.to_le_bytes()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
