use crate::bits::FeatureVector;
use crate::cancelable::TransformKey;
use crate::commit::{FuzzyCommitment, SecretMessage, TiePolicy};
use crate::error::{check_len, Result};
use crate::bits::BitVector;
use crate::sketch::SketchSystem;

/// A matcher reduced to the distance its threshold test is applied to.
///
/// `distance(a, d)` is the distance between enrollment `a` and probe `d` as
/// the system measures it, or `None` when the probe is rejected whatever the
/// threshold. Acceptance at `tau` is `distance <= floor(tau * len)`, the same
/// rule every architecture applies, so one pass over the probes yields the
/// whole ROC.
pub trait Scorer: Sync {
    /// Feature length `n`.
    fn n(&self) -> usize;

    /// Length the distance is normalized by.
    fn len(&self) -> usize {
        self.n()
    }

    fn distance(&self, a: &FeatureVector, d: &FeatureVector) -> Result<Option<usize>>;

    /// Whether `distance(a, a ⊕ e)` is the same for every `a`.
    fn translation_invariant(&self) -> bool {
        false
    }
}

/// Unprotected Hamming matcher.
#[derive(Debug, Clone, Copy)]
pub struct HammingScorer {
    pub n: usize,
}

impl Scorer for HammingScorer {
    fn n(&self) -> usize {
        self.n
    }

    fn distance(&self, a: &FeatureVector, d: &FeatureVector) -> Result<Option<usize>> {
        check_len(self.n, a.len())?;
        Ok(Some(a.hamming(d)?))
    }

    fn translation_invariant(&self) -> bool {
        true
    }
}

/// Secure sketch with an optional fixed user key.
#[derive(Debug, Clone)]
pub struct SketchScorer {
    pub system: SketchSystem,
    pub key: Option<TransformKey>,
}

impl SketchScorer {
    pub fn new(system: SketchSystem, key: Option<TransformKey>) -> Self {
        Self { system, key }
    }
}

impl Scorer for SketchScorer {
    fn n(&self) -> usize {
        self.system.n()
    }

    fn distance(&self, a: &FeatureVector, d: &FeatureVector) -> Result<Option<usize>> {
        let key = self.key.as_ref();
        let t = self.system.enroll(a, key)?;
        Ok(Some(self.system.distance(&t, d, key)?))
    }

    fn translation_invariant(&self) -> bool {
        // Permute-and-salt is affine, so the salt cancels in H·T(a) ⊕ H·T(d).
        !matches!(self.key, Some(TransformKey::RandomProjection { .. }))
    }
}

/// Fuzzy commitment with an optional fixed user key. The bound message is
/// the zero message; decisions do not depend on it.
#[derive(Debug, Clone)]
pub struct CommitScorer {
    pub system: FuzzyCommitment,
    pub key: Option<TransformKey>,
    pub ties: TiePolicy,
}

impl CommitScorer {
    pub fn new(system: FuzzyCommitment, key: Option<TransformKey>, ties: TiePolicy) -> Self {
        Self { system: system.with_tie_policy(ties), key, ties }
    }
}

impl Scorer for CommitScorer {
    fn n(&self) -> usize {
        self.system.n()
    }

    fn distance(&self, a: &FeatureVector, d: &FeatureVector) -> Result<Option<usize>> {
        let key = self.key.as_ref();
        let z = SecretMessage(BitVector::zeros(self.system.code().k()));
        let t = self.system.commit(a, &z, key)?;
        let out = self.system.open(&t, d, key)?;
        Ok((!(out.ambiguous && self.ties == TiePolicy::Reject)).then_some(out.decision.distance))
    }

    fn translation_invariant(&self) -> bool {
        !matches!(self.key, Some(TransformKey::RandomProjection { .. }))
    }
}

/// Matching in the distorted domain under the user's own key.
#[derive(Debug, Clone)]
pub struct CancelableScorer {
    pub key: TransformKey,
}

impl Scorer for CancelableScorer {
    fn n(&self) -> usize {
        self.key.input_len()
    }

    fn len(&self) -> usize {
        self.key.output_len()
    }

    fn distance(&self, a: &FeatureVector, d: &FeatureVector) -> Result<Option<usize>> {
        Ok(Some(self.key.transform(a)?.hamming(&self.key.transform(d)?)?))
    }

    fn translation_invariant(&self) -> bool {
        matches!(self.key, TransformKey::PermuteSalt { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cancelable::CancelableSystem;
    use crate::decision::acceptance_radius;
    use crate::gf2::LinearCode;
    use crate::rng;

    /// Thresholding the scorer's distance reproduces each system's own decision.
    #[test]
    fn scorers_agree_with_systems() {
        let mut r = rng::stream(1, "scorer");
        let code = LinearCode::random(8, 4, &mut r).unwrap();
        let key = TransformKey::random_permute_salt(8, &mut r);
        let proj = TransformKey::random_projection_key(6, 8, &mut r).unwrap();
        for tau in [0.0, 0.125, 0.25] {
            let sk = SketchSystem::new(code.clone(), tau).unwrap();
            let tf = SketchSystem::two_factor(code.clone(), tau).unwrap();
            let fc = FuzzyCommitment::new(code.clone(), tau).unwrap().with_tie_policy(TiePolicy::Reject);
            let cs = CancelableSystem::new(tau).unwrap();
            let s1 = SketchScorer::new(sk.clone(), None);
            let s2 = SketchScorer::new(tf.clone(), Some(key.clone()));
            let s3 = CommitScorer::new(fc.clone(), None, TiePolicy::Reject);
            let s4 = CancelableScorer { key: proj.clone() };
            let within = |s: &dyn Scorer, a: &BitVector, d: &BitVector| {
                s.distance(a, d).unwrap().is_some_and(|x| x <= acceptance_radius(tau, s.len()))
            };
            for _ in 0..40 {
                let a = BitVector::random(8, &mut r);
                let d = BitVector::random(8, &mut r);
                let t = sk.enroll(&a, None).unwrap();
                assert_eq!(within(&s1, &a, &d), sk.accepts(&t, &d, None).unwrap());
                let t = tf.enroll(&a, Some(&key)).unwrap();
                assert_eq!(within(&s2, &a, &d), tf.accepts(&t, &d, Some(&key)).unwrap());
                let t = fc.commit(&a, &fc.sample_message(&mut r), None).unwrap();
                assert_eq!(within(&s3, &a, &d), fc.accepts(&t, &d, None).unwrap());
                let t = cs.enroll(&proj, &a).unwrap();
                assert_eq!(within(&s4, &a, &d), cs.authenticate(&proj, &t, &d).unwrap().accepted);
            }
        }
    }
}
