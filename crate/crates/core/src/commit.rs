//! Fuzzy commitment: a random message `Z` is bound to the biometric as
//! `S = Gᵀ Z ⊕ A`. Opening XORs a probe into `S` and decodes the result to
//! the nearest codeword, succeeding when that codeword is close enough.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BitVector, FeatureVector};
use crate::cancelable::TransformKey;
use crate::decision::{acceptance_radius, Decision};
use crate::error::{check_len, Error, Result};
use crate::gf2::{LinearCode, DEFAULT_ENUMERATION_CAP};

/// What to do when two or more codewords are nearest to the noisy codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Decode to the lexicographically smallest nearest codeword, as the
    /// sketch decoder does. Keeps the acceptance region equal to the
    /// sketch's.
    #[default]
    Lexicographic,
    /// Refuse to pick: an ambiguous decode rejects.
    Reject,
}

/// The random message bound at enrollment; never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecretMessage(pub BitVector);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitTemplate {
    pub bound: BitVector,
}

impl CommitTemplate {
    pub fn storage_bits(&self) -> usize {
        self.bound.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitOutcome {
    pub decision: Decision,
    pub message: Option<SecretMessage>,
    /// More than one codeword was nearest.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct FuzzyCommitment {
    code: LinearCode,
    tau: f64,
    ties: TiePolicy,
    cap: u64,
}

impl FuzzyCommitment {
    pub fn new(code: LinearCode, tau: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [0, 0.5), got {tau}")));
        }
        Ok(Self { code, tau, ties: TiePolicy::default(), cap: DEFAULT_ENUMERATION_CAP })
    }

    pub fn with_tie_policy(mut self, ties: TiePolicy) -> Self {
        self.ties = ties;
        self
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.ties
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn sample_message<R: Rng + ?Sized>(&self, rng: &mut R) -> SecretMessage {
        SecretMessage(BitVector::random(self.code.k(), rng))
    }

    fn prepare(&self, x: &FeatureVector, key: Option<&TransformKey>) -> Result<BitVector> {
        check_len(self.n(), x.len())?;
        match key {
            None => Ok(x.clone()),
            Some(k) => {
                check_len(self.n(), k.output_len())?;
                k.transform(x)
            }
        }
    }

    pub fn commit(&self, a: &FeatureVector, z: &SecretMessage, key: Option<&TransformKey>) -> Result<CommitTemplate> {
        check_len(self.code.k(), z.0.len())?;
        let mut bound = self.code.encode(&z.0)?;
        bound.xor_in_place(&self.prepare(a, key)?);
        Ok(CommitTemplate { bound })
    }

    pub fn open(&self, template: &CommitTemplate, d: &FeatureVector, key: Option<&TransformKey>) -> Result<CommitOutcome> {
        check_len(self.n(), template.bound.len())?;
        let mut noisy = self.prepare(d, key)?;
        noisy.xor_in_place(&template.bound);

        let mut best: Option<(usize, BitVector, BitVector)> = None;
        let mut tied = 0usize;
        for (z, c) in self.code.codewords(self.cap)? {
            let dist = c.hamming_unchecked(&noisy);
            match &best {
                Some((bd, bc, _)) if dist > *bd || (dist == *bd && c > *bc) => {
                    tied += (dist == *bd) as usize;
                }
                Some((bd, _, _)) => {
                    tied = if dist == *bd { tied + 1 } else { 1 };
                    best = Some((dist, c, z));
                }
                None => {
                    tied = 1;
                    best = Some((dist, c, z));
                }
            }
        }
        let (distance, _, z) = best.expect("a code always has the zero codeword");
        let ambiguous = tied > 1;
        let within = distance <= acceptance_radius(self.tau, self.n());
        let accepted = within && !(ambiguous && self.ties == TiePolicy::Reject);
        Ok(CommitOutcome {
            decision: Decision { accepted, distance, length: self.n() },
            message: accepted.then_some(SecretMessage(z)),
            ambiguous,
        })
    }

    pub fn accepts(&self, template: &CommitTemplate, d: &FeatureVector, key: Option<&TransformKey>) -> Result<bool> {
        Ok(self.open(template, d, key)?.decision.accepted)
    }
}
