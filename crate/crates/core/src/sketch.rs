//! Syndrome-based secure sketch.
//!
//! Enrollment stores the syndrome `S = H·A` of the feature vector. A probe is
//! accepted when it lies within normalized Hamming distance `tau` of the
//! enrollment coset, which is what syndrome decoding followed by a threshold
//! test computes. In two-factor mode both enrollment and probe first go
//! through a user-held permute-and-salt transform.

use serde::{Deserialize, Serialize};

use crate::bits::{BitVector, FeatureVector};
use crate::cancelable::TransformKey;
use crate::decision::{acceptance_radius, Decision};
use crate::error::{check_len, Error, Result};
use crate::gf2::{ensure_enumerable, LinearCode, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone)]
pub struct SketchSystem {
    code: LinearCode,
    tau: f64,
    two_factor: bool,
    cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchTemplate {
    pub syndrome: BitVector,
    pub n: usize,
    pub m: usize,
}

impl SketchTemplate {
    pub fn storage_bits(&self) -> usize {
        self.syndrome.len()
    }
}

/// Decision plus the syndrome-decoding estimate of the enrolled vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOutcome {
    pub decision: Decision,
    /// Closest coset member to the (transformed) probe; absent when the
    /// coset is too large to enumerate.
    pub estimate: Option<BitVector>,
}

impl SketchSystem {
    pub fn new(code: LinearCode, tau: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [0, 0.5), got {tau}")));
        }
        Ok(Self { code, tau, two_factor: false, cap: DEFAULT_ENUMERATION_CAP })
    }

    pub fn two_factor(code: LinearCode, tau: f64) -> Result<Self> {
        Ok(Self { two_factor: true, ..Self::new(code, tau)? })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut out = Self::new(self.code.clone(), tau)?;
        out.two_factor = self.two_factor;
        out.cap = self.cap;
        Ok(out)
    }

    pub fn is_two_factor(&self) -> bool {
        self.two_factor
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn radius(&self) -> usize {
        acceptance_radius(self.tau, self.n())
    }

    /// Applies the user transform in two-factor mode, the identity otherwise.
    fn prepare(&self, x: &FeatureVector, key: Option<&TransformKey>) -> Result<BitVector> {
        check_len(self.n(), x.len())?;
        match (self.two_factor, key) {
            (false, None) => Ok(x.clone()),
            (false, Some(_)) => Err(Error::InvalidParameter("keyless system given key material".into())),
            (true, None) => Err(Error::MissingKey),
            (true, Some(k)) => {
                check_len(self.n(), k.output_len())?;
                k.transform(x)
            }
        }
    }

    pub fn enroll(&self, a: &FeatureVector, key: Option<&TransformKey>) -> Result<SketchTemplate> {
        let x = self.prepare(a, key)?;
        Ok(SketchTemplate { syndrome: self.code.syndrome(&x)?, n: self.n(), m: self.code.m() })
    }

    fn check_template(&self, template: &SketchTemplate) -> Result<()> {
        check_len(self.n(), template.n)?;
        check_len(self.code.m(), template.syndrome.len())
    }

    /// Distance from the (transformed) probe to the enrollment coset.
    pub fn distance(&self, template: &SketchTemplate, d: &FeatureVector, key: Option<&TransformKey>) -> Result<usize> {
        self.check_template(template)?;
        let x = self.prepare(d, key)?;
        self.code.coset_distance(&x, &template.syndrome, self.cap)
    }

    pub fn accepts(&self, template: &SketchTemplate, d: &FeatureVector, key: Option<&TransformKey>) -> Result<bool> {
        Ok(self.distance(template, d, key)? <= self.radius())
    }

    pub fn authenticate(
        &self,
        template: &SketchTemplate,
        d: &FeatureVector,
        key: Option<&TransformKey>,
    ) -> Result<SketchOutcome> {
        self.check_template(template)?;
        let x = self.prepare(d, key)?;
        let (distance, estimate) = if ensure_enumerable(self.code.k(), self.cap).is_ok() {
            let estimate = self.code.syndrome_decode(&x, &template.syndrome, self.cap)?;
            (estimate.hamming_unchecked(&x), Some(estimate))
        } else {
            (self.code.coset_distance(&x, &template.syndrome, self.cap)?, None)
        };
        Ok(SketchOutcome {
            decision: Decision { accepted: distance <= self.radius(), distance, length: self.n() },
            estimate,
        })
    }

    /// Every probe the template accepts under `key`, in lexicographic order.
    pub fn acceptance_region(&self, template: &SketchTemplate, key: Option<&TransformKey>) -> Result<Vec<FeatureVector>> {
        ensure_enumerable(self.n(), self.cap)?;
        let mut out = Vec::new();
        for d in BitVector::all(self.n()) {
            if self.accepts(template, &d, key)? {
                out.push(d);
            }
        }
        Ok(out)
    }
}
