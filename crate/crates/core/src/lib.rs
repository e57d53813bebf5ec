//! Template protection for binary biometric features.
//!
//! Four architectures share one feature model: syndrome sketches
//! ([`sketch`]), fuzzy commitment ([`commit`]), cancelable transforms
//! ([`cancelable`]) and matching under additively homomorphic encryption
//! ([`smc`]). [`metrics`] computes error rates, leakage and attack success
//! for them, exactly when the space is small enough to enumerate, and
//! [`multisys`] studies one biometric enrolled in several systems.

pub mod bits;
pub mod cancelable;
pub mod commit;
pub mod decision;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod metrics;
pub mod multisys;
pub mod presets;
pub mod rng;
pub mod sketch;
pub mod smc;
pub mod source;

use serde::{Deserialize, Serialize};

pub use bits::{bits, BitVector, FeatureVector};
pub use decision::Decision;
pub use error::{Error, Result};
pub use gf2::{BitMatrix, LinearCode};

/// Stored data `S` in whichever form its architecture keeps it. Keys are
/// never part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "snake_case")]
pub enum StoredTemplate {
    Sketch(sketch::SketchTemplate),
    Commit(commit::CommitTemplate),
    Cancelable(cancelable::CancelableTemplate),
    Smc(smc::StoredRecord),
}

impl StoredTemplate {
    /// Bits of the template body.
    pub fn storage_bits(&self) -> Result<u64> {
        Ok(match self {
            Self::Sketch(t) => t.storage_bits() as u64,
            Self::Commit(t) => t.storage_bits() as u64,
            Self::Cancelable(t) => t.bits.len() as u64,
            Self::Smc(r) => r.template()?.storage_bits(&r.public_key()?),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}
