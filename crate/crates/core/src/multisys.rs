//! One biometric enrolled in several sketch systems, and what an adversary
//! gains by combining their stored data.
//!
//! With identical enrollments, compromising systems `i₁..i_t` confines `A` to
//! the intersection of their cosets, which is the solution set of the
//! stacked parity checks. Its size is `2^(n - rank)`, so the leakage after
//! `t` compromises equals the rank of the stacked matrix.

use serde::{Deserialize, Serialize};

use crate::bits::{BitVector, FeatureVector};
use crate::cancelable::TransformKey;
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, Coset, LinearCode, DEFAULT_ENUMERATION_CAP};
use crate::metrics::{Estimate, Target};
use crate::sketch::{SketchSystem, SketchTemplate};
use crate::StoredTemplate;

#[derive(Debug, Clone)]
pub struct Deployment {
    labels: Vec<String>,
    systems: Vec<SketchSystem>,
    templates: Vec<SketchTemplate>,
    cap: u64,
}

/// Linkage between two systems of a deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub source: usize,
    pub target: usize,
    /// Rank of the two parity-check matrices stacked.
    pub stacked_rank: usize,
    pub intersection: usize,
    /// Success of replaying a uniform member of the source coset at the target.
    pub cross_sar: f64,
    /// Bits about `A` revealed by both stored syndromes.
    pub leakage: f64,
}

impl Deployment {
    /// Enrolls the same `a` in every system.
    pub fn enroll_identical(systems: Vec<(String, SketchSystem)>, a: &FeatureVector) -> Result<Self> {
        let copies = vec![a.clone(); systems.len()];
        Self::enroll_each(systems, &copies)
    }

    /// Enrolls `enrollments[i]` in system `i`, e.g. noisy readings of one biometric.
    pub fn enroll_each(systems: Vec<(String, SketchSystem)>, enrollments: &[FeatureVector]) -> Result<Self> {
        if systems.is_empty() {
            return Err(Error::InvalidParameter("a deployment needs at least one system".into()));
        }
        crate::error::check_len(systems.len(), enrollments.len())?;
        let n = systems[0].1.n();
        let mut templates = Vec::with_capacity(systems.len());
        for ((label, sys), a) in systems.iter().zip(enrollments) {
            crate::error::check_len(n, sys.n())?;
            if sys.is_two_factor() {
                return Err(Error::InvalidParameter(format!("system {label} is two-factor; linkage needs keyless sketches")));
            }
            templates.push(sys.enroll(a, None)?);
        }
        let (labels, systems) = systems.into_iter().unzip();
        Ok(Self { labels, systems, templates, cap: DEFAULT_ENUMERATION_CAP })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn n(&self) -> usize {
        self.systems[0].n()
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn system(&self, i: usize) -> &SketchSystem {
        &self.systems[i]
    }

    pub fn template(&self, i: usize) -> &SketchTemplate {
        &self.templates[i]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("no system {i} in a deployment of {}", self.len())))
        }
    }

    pub fn coset(&self, i: usize) -> Result<Coset> {
        self.check_index(i)?;
        self.systems[i].code().enumerate_coset(&self.templates[i].syndrome, self.cap)
    }

    /// Vectors consistent with every compromised template, in lexicographic order.
    pub fn intersect_candidates(&self, compromised: &[usize]) -> Result<Vec<BitVector>> {
        let Some((&first, rest)) = compromised.split_first() else {
            return Err(Error::InvalidParameter("no compromised systems".into()));
        };
        for &i in rest {
            self.check_index(i)?;
        }
        let mut members = self.coset(first)?.members;
        for &i in rest {
            let code = self.systems[i].code();
            let s = &self.templates[i].syndrome;
            members.retain(|x| code.syndrome(x).is_ok_and(|t| &t == s));
        }
        Ok(members)
    }

    /// Probability that a uniform member of the source coset is accepted by
    /// the target system.
    pub fn cross_sar(&self, source: usize, target: usize) -> Result<f64> {
        self.check_index(target)?;
        let members = self.coset(source)?.members;
        let sys = &self.systems[target];
        let t = &self.templates[target];
        let mut hits = 0usize;
        for x in &members {
            hits += sys.accepts(t, x, None)? as usize;
        }
        Ok(hits as f64 / members.len() as f64)
    }

    /// Leakage `n - log₂|candidates|` after each successive compromise, for uniform `A`.
    pub fn cumulative_leakage(&self, order: &[usize]) -> Result<Vec<f64>> {
        let n = self.n() as f64;
        (1..=order.len())
            .map(|t| Ok(n - (self.intersect_candidates(&order[..t])?.len() as f64).log2()))
            .collect()
    }

    /// Rank of the parity checks of `systems`, stacked.
    pub fn stacked_rank(&self, systems: &[usize]) -> Result<usize> {
        let mut stacked = BitMatrix::zeros(0, self.n());
        for &i in systems {
            self.check_index(i)?;
            stacked = stacked.stack(self.systems[i].code().h())?;
        }
        Ok(stacked.rank())
    }

    /// Every ordered pair of distinct systems.
    pub fn dependence_profile(&self) -> Result<Vec<PairProfile>> {
        let mut out = Vec::new();
        for source in 0..self.len() {
            for target in 0..self.len() {
                if source == target {
                    continue;
                }
                let intersection = self.intersect_candidates(&[source, target])?.len();
                out.push(PairProfile {
                    source,
                    target,
                    stacked_rank: self.stacked_rank(&[source, target])?,
                    intersection,
                    cross_sar: self.cross_sar(source, target)?,
                    leakage: self.n() as f64 - (intersection as f64).log2(),
                });
            }
        }
        Ok(out)
    }
}

/// Cross-system attack when each system saw its own noisy reading
/// `A ⊕ Bernoulli(p_e)ⁿ`: the adversary replays a uniform member of the
/// source coset at the target.
pub fn noisy_cross_sar(
    source: &SketchSystem,
    target: Target<'_>,
    p_e: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if !(0.0..=0.5).contains(&p_e) {
        return Err(Error::InvalidParameter(format!("enrollment noise {p_e} outside [0, 0.5]")));
    }
    if source.is_two_factor() {
        return Err(Error::InvalidParameter("source must be a keyless sketch".into()));
    }
    let n = source.n();
    crate::error::check_len(n, target.n())?;
    let code = source.code();
    crate::metrics::monte_carlo_rate(trials, seed, "noisy-cross-sar", |r| {
        let a = BitVector::random(n, r);
        let noisy = |r: &mut crate::rng::StreamRng| {
            let mut x = BitVector::bernoulli(n, p_e, r);
            x.xor_in_place(&a);
            x
        };
        let a_src = noisy(r);
        let a_tgt = noisy(r);
        let leaked = source.enroll(&a_src, None)?;
        let mut guess = code.h().solve(&leaked.syndrome)?.expect("full-rank H");
        guess.xor_in_place(&code.encode(&BitVector::random(code.k(), r))?);
        let key = target.fresh_key(r)?;
        let stored = target.enroll(&a_tgt, key.as_ref(), r)?;
        let presented = target.fresh_key(r)?;
        target.accepts(&stored, &guess, presented.as_ref())
    })
}

/// Anything that can answer "is this probe accepted?" for one enrolled user.
pub trait AcceptOracle {
    fn n(&self) -> usize;
    fn accepts(&self, d: &FeatureVector) -> Result<bool>;
}

/// An enrollment in any architecture, queried with a fixed presented key.
#[derive(Debug, Clone)]
pub struct Enrolled<'a> {
    pub target: Target<'a>,
    pub stored: StoredTemplate,
    pub presented: Option<TransformKey>,
}

impl AcceptOracle for Enrolled<'_> {
    fn n(&self) -> usize {
        self.target.n()
    }

    fn accepts(&self, d: &FeatureVector) -> Result<bool> {
        self.target.accepts(&self.stored, d, self.presented.as_ref())
    }
}

/// Fraction of `candidates` the oracle accepts.
pub fn oracle_sar(candidates: &[BitVector], oracle: &dyn AcceptOracle) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidates".into()));
    }
    let mut hits = 0usize;
    for c in candidates {
        hits += oracle.accepts(c)? as usize;
    }
    Ok(hits as f64 / candidates.len() as f64)
}

/// One system of a deployment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub label: String,
    pub h: BitMatrix,
    #[serde(default)]
    pub tau: f64,
}

/// Deployment file: systems, the shared enrollment and compromise scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    pub systems: Vec<SystemConfig>,
    pub enrollment: BitVector,
    /// Each scenario lists system indices in compromise order.
    #[serde(default)]
    pub scenarios: Vec<Vec<usize>>,
}

impl DeploymentConfig {
    pub fn build(&self) -> Result<Deployment> {
        let systems = self
            .systems
            .iter()
            .map(|s| Ok((s.label.clone(), SketchSystem::new(LinearCode::new(s.h.clone())?, s.tau)?)))
            .collect::<Result<Vec<_>>>()?;
        Deployment::enroll_identical(systems, &self.enrollment)
    }
}
