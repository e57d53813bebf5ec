use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BitVector, FeatureVector};
use crate::cancelable::{CancelableSystem, TransformKey};
use crate::commit::FuzzyCommitment;
use crate::error::{Error, Result};
use crate::gf2::{ensure_enumerable, LinearCode, DEFAULT_ENUMERATION_CAP};
use crate::sketch::SketchSystem;
use crate::StoredTemplate;

use super::{far, monte_carlo_rate, AttackView, CancelableScorer, CommitScorer, Estimate, Method, Scorer, SketchScorer};

/// How the adversary builds a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// A uniform probe; needs nothing.
    BlindGuess,
    /// Present the victim's own feature vector; needs `A`.
    ReplayBiometric,
    /// Derive a probe that the stored data accepts; needs `S`.
    StoredDataInversion,
}

impl Strategy {
    fn check(&self, view: AttackView) -> Result<()> {
        match self {
            Strategy::ReplayBiometric if !view.knows_a => {
                Err(Error::UnavailableSideInformation("replaying the biometric needs A"))
            }
            Strategy::StoredDataInversion if !view.knows_s => {
                Err(Error::UnavailableSideInformation("inverting the stored data needs S"))
            }
            _ => Ok(()),
        }
    }
}

/// Shape of the keys a cancelable deployment issues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KeyShape {
    PermuteSalt,
    Projection { rows: usize },
}

/// A system under attack. Every user of a keyed system gets a fresh key;
/// an adversary without `K` presents a key of its own.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Sketch(&'a SketchSystem),
    Commit { system: &'a FuzzyCommitment, keyed: bool },
    Cancelable { system: &'a CancelableSystem, n: usize, shape: KeyShape },
}

fn random_codeword<R: Rng + ?Sized>(code: &LinearCode, rng: &mut R) -> BitVector {
    code.encode(&BitVector::random(code.k(), rng)).expect("message length is k")
}

impl Target<'_> {
    pub fn n(&self) -> usize {
        match self {
            Target::Sketch(s) => s.n(),
            Target::Commit { system, .. } => system.n(),
            Target::Cancelable { n, .. } => *n,
        }
    }

    pub fn keyed(&self) -> bool {
        match self {
            Target::Sketch(s) => s.is_two_factor(),
            Target::Commit { keyed, .. } => *keyed,
            Target::Cancelable { .. } => true,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Target::Sketch(s) => s.tau(),
            Target::Commit { system, .. } => system.tau(),
            Target::Cancelable { system, .. } => system.tau,
        }
    }

    pub fn fresh_key<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<TransformKey>> {
        if !self.keyed() {
            return Ok(None);
        }
        let n = self.n();
        Ok(Some(match self {
            Target::Cancelable { shape: KeyShape::Projection { rows }, .. } => {
                TransformKey::random_projection_key(*rows, n, rng)?
            }
            _ => TransformKey::random_permute_salt(n, rng),
        }))
    }

    /// Matcher with a fixed user key, for the nominal FAR.
    pub fn scorer(&self, key: Option<TransformKey>) -> Result<Box<dyn Scorer + '_>> {
        Ok(match self {
            Target::Sketch(s) => Box::new(SketchScorer::new((*s).clone(), key)),
            Target::Commit { system, .. } => Box::new(CommitScorer::new((*system).clone(), key, system.tie_policy())),
            Target::Cancelable { .. } => Box::new(CancelableScorer { key: key.ok_or(Error::MissingKey)? }),
        })
    }

    pub fn enroll<R: Rng + ?Sized>(&self, a: &FeatureVector, key: Option<&TransformKey>, rng: &mut R) -> Result<StoredTemplate> {
        Ok(match self {
            Target::Sketch(s) => StoredTemplate::Sketch(s.enroll(a, key)?),
            Target::Commit { system, .. } => {
                StoredTemplate::Commit(system.commit(a, &system.sample_message(rng), key)?)
            }
            Target::Cancelable { system, .. } => {
                StoredTemplate::Cancelable(system.enroll(key.ok_or(Error::MissingKey)?, a)?)
            }
        })
    }

    pub fn accepts(&self, stored: &StoredTemplate, d: &FeatureVector, key: Option<&TransformKey>) -> Result<bool> {
        match (self, stored) {
            (Target::Sketch(s), StoredTemplate::Sketch(t)) => s.accepts(t, d, key),
            (Target::Commit { system, .. }, StoredTemplate::Commit(t)) => system.accepts(t, d, key),
            (Target::Cancelable { system, .. }, StoredTemplate::Cancelable(t)) => {
                Ok(system.authenticate(key.ok_or(Error::MissingKey)?, t, d)?.accepted)
            }
            _ => Err(Error::InvalidParameter("template does not belong to this architecture".into())),
        }
    }

    /// A probe built from the stored data, to be presented with `key`.
    pub fn forge<R: Rng + ?Sized>(
        &self,
        stored: &StoredTemplate,
        key: Option<&TransformKey>,
        rng: &mut R,
    ) -> Result<FeatureVector> {
        let through_key = |x: BitVector| match key {
            Some(k) => k.invert(&x),
            None => Ok(x),
        };
        match (self, stored) {
            (Target::Sketch(s), StoredTemplate::Sketch(t)) => {
                let code = s.code();
                let mut x = code.h().solve(&t.syndrome)?.ok_or(Error::RankDeficient { rank: 0, rows: code.m() })?;
                x.xor_in_place(&random_codeword(code, rng));
                through_key(x)
            }
            (Target::Commit { system, .. }, StoredTemplate::Commit(t)) => {
                let mut y = t.bound.clone();
                y.xor_in_place(&random_codeword(system.code(), rng));
                through_key(y)
            }
            (Target::Cancelable { .. }, StoredTemplate::Cancelable(t)) => match key {
                Some(k @ TransformKey::PermuteSalt { .. }) => k.invert(&t.bits),
                Some(k) => {
                    // No inverse: search for the closest preimage.
                    let n = k.input_len();
                    ensure_enumerable(n, DEFAULT_ENUMERATION_CAP)?;
                    let mut best = (usize::MAX, BitVector::zeros(n));
                    for d in BitVector::all(n) {
                        let dist = k.transform(&d)?.hamming(&t.bits)?;
                        if dist < best.0 {
                            best = (dist, d);
                        }
                    }
                    Ok(best.1)
                }
                None => Err(Error::MissingKey),
            },
            _ => Err(Error::InvalidParameter("template does not belong to this architecture".into())),
        }
    }

    fn exact_sar(&self, strategy: Strategy) -> Result<f64> {
        if self.keyed() {
            return Err(Error::ExactUnsupported("keyed systems are evaluated by Monte Carlo"));
        }
        let n = self.n();
        match strategy {
            Strategy::BlindGuess => Ok(far(&*self.scorer(None)?, self.tau(), Method::Exact)?.value),
            Strategy::ReplayBiometric => {
                ensure_enumerable(n, DEFAULT_ENUMERATION_CAP)?;
                let mut rng = crate::rng::stream(0, "sar-replay");
                let mut hits = 0u64;
                for a in BitVector::all(n) {
                    let stored = self.enroll(&a, None, &mut rng)?;
                    hits += self.accepts(&stored, &a, None)? as u64;
                }
                Ok(hits as f64 / 2f64.powi(n as i32))
            }
            Strategy::StoredDataInversion => {
                // Average over enrollments of the fraction of candidates accepted.
                let code = match self {
                    Target::Sketch(s) => s.code(),
                    Target::Commit { system, .. } => system.code(),
                    Target::Cancelable { .. } => unreachable!("cancelable targets are keyed"),
                };
                ensure_enumerable(n + code.k(), DEFAULT_ENUMERATION_CAP)?;
                let mut rng = crate::rng::stream(0, "sar-inversion");
                let codewords = code.codewords(DEFAULT_ENUMERATION_CAP)?;
                let mut total = 0.0;
                for a in BitVector::all(n) {
                    let stored = self.enroll(&a, None, &mut rng)?;
                    let base = match &stored {
                        StoredTemplate::Sketch(t) => code.h().solve(&t.syndrome)?.expect("full-rank H"),
                        StoredTemplate::Commit(t) => t.bound.clone(),
                        _ => unreachable!(),
                    };
                    let mut hits = 0usize;
                    for (_, c) in &codewords {
                        hits += self.accepts(&stored, &base.xor(c)?, None)? as usize;
                    }
                    total += hits as f64 / codewords.len() as f64;
                }
                Ok(total / 2f64.powi(n as i32))
            }
        }
    }
}

/// Successful attack rate of `strategy` by an adversary holding `view`.
pub fn sar(target: Target<'_>, view: AttackView, strategy: Strategy, method: Method) -> Result<Estimate> {
    strategy.check(view)?;
    match method {
        Method::Exact => Ok(Estimate::exact(target.exact_sar(strategy)?)),
        Method::MonteCarlo { trials, seed } => {
            let n = target.n();
            monte_carlo_rate(trials, seed, "sar", |r| {
                let a = BitVector::random(n, r);
                let key = target.fresh_key(r)?;
                let stored = target.enroll(&a, key.as_ref(), r)?;
                let presented = if view.knows_k { key } else { target.fresh_key(r)? };
                let d = match strategy {
                    Strategy::BlindGuess => BitVector::random(n, r),
                    Strategy::ReplayBiometric => a,
                    Strategy::StoredDataInversion => target.forge(&stored, presented.as_ref(), r)?,
                };
                target.accepts(&stored, &d, presented.as_ref())
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitMatrix;
    use crate::rng;

    fn sidebar(tau: f64) -> SketchSystem {
        let h = BitMatrix::parse_rows(&["1011", "0111"]).unwrap();
        SketchSystem::new(LinearCode::new(h).unwrap(), tau).unwrap()
    }

    #[test]
    fn keyless_sketch() {
        let sys = sidebar(0.0);
        let t = Target::Sketch(&sys);
        let inv = sar(t, AttackView::S, Strategy::StoredDataInversion, Method::Exact).unwrap();
        assert_eq!(inv.value, 1.0);
        let blind = sar(t, AttackView::NONE, Strategy::BlindGuess, Method::Exact).unwrap();
        assert_eq!(blind.value, 0.25);
        assert_eq!(sar(t, AttackView::A, Strategy::ReplayBiometric, Method::Exact).unwrap().value, 1.0);
        assert!(matches!(
            sar(t, AttackView::NONE, Strategy::StoredDataInversion, Method::Exact),
            Err(Error::UnavailableSideInformation(_))
        ));
        assert!(matches!(
            sar(t, AttackView::S, Strategy::ReplayBiometric, Method::Exact),
            Err(Error::UnavailableSideInformation(_))
        ));
    }

    #[test]
    fn keyless_commitment_inverts() {
        let mut r = rng::stream(1, "fc");
        let code = LinearCode::random(8, 4, &mut r).unwrap();
        let fc = FuzzyCommitment::new(code, 0.125).unwrap();
        let t = Target::Commit { system: &fc, keyed: false };
        assert_eq!(sar(t, AttackView::S, Strategy::StoredDataInversion, Method::Exact).unwrap().value, 1.0);
        let mc = sar(t, AttackView::S, Strategy::StoredDataInversion, Method::MonteCarlo { trials: 2000, seed: 1 });
        assert_eq!(mc.unwrap().value, 1.0);
    }

    #[test]
    fn two_factor_replay_stays_at_far() {
        let mut r = rng::stream(2, "tf");
        let code = LinearCode::random(10, 5, &mut r).unwrap();
        let sys = SketchSystem::two_factor(code, 0.1).unwrap();
        let t = Target::Sketch(&sys);
        assert!(matches!(
            sar(t, AttackView::A, Strategy::ReplayBiometric, Method::Exact),
            Err(Error::ExactUnsupported(_))
        ));
        let nominal = far(&*t.scorer(t.fresh_key(&mut r).unwrap()).unwrap(), 0.1, Method::Exact).unwrap();
        let mc = sar(t, AttackView::A, Strategy::ReplayBiometric, Method::MonteCarlo { trials: 20_000, seed: 3 }).unwrap();
        assert!(mc.z_score(&nominal) < 4.0, "{mc:?} vs {nominal:?}");
        // with the key as well, replay always works
        let full = AttackView { knows_a: true, knows_k: true, knows_s: false };
        let mc = sar(t, full, Strategy::ReplayBiometric, Method::MonteCarlo { trials: 1000, seed: 3 }).unwrap();
        assert_eq!(mc.value, 1.0);
        // stored data alone suffices: the adversary picks its own key
        let mc = sar(t, AttackView::S, Strategy::StoredDataInversion, Method::MonteCarlo { trials: 1000, seed: 4 }).unwrap();
        assert_eq!(mc.value, 1.0);
    }

    #[test]
    fn cancelable_targets() {
        let sys = CancelableSystem::new(0.2).unwrap();
        let salted = Target::Cancelable { system: &sys, n: 10, shape: KeyShape::PermuteSalt };
        let mc = Method::MonteCarlo { trials: 2000, seed: 5 };
        assert_eq!(sar(salted, AttackView::S, Strategy::StoredDataInversion, mc).unwrap().value, 1.0);
        let proj = Target::Cancelable { system: &sys, n: 10, shape: KeyShape::Projection { rows: 6 } };
        let inv = sar(proj, AttackView::S, Strategy::StoredDataInversion, Method::MonteCarlo { trials: 300, seed: 6 }).unwrap();
        let blind = sar(proj, AttackView::NONE, Strategy::BlindGuess, Method::MonteCarlo { trials: 2000, seed: 6 }).unwrap();
        assert!(inv.value > blind.value);
    }
}
