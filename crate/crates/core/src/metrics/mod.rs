//! Error rates, privacy leakage, attack success and storage.
//!
//! Exact paths enumerate the full probe (and, where needed, enrollment)
//! space under an enumeration cap. Monte Carlo paths split the trials into
//! fixed-size chunks, each with its own derived random stream, so results do
//! not depend on the number of worker threads.

mod leakage;
mod rates;
mod report;
mod sar;
mod scorer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::{self, StreamRng};

pub use leakage::{exact_mutual_information, mutual_information, AttackView, Scheme};
pub use rates::{eer, far, frr, roc, DistanceProfile, Eer, RocPoint};
pub use report::{MetricReport, MetricRow};
pub use sar::{sar, KeyShape, Strategy, Target};
pub use scorer::{CancelableScorer, CommitScorer, HammingScorer, Scorer, SketchScorer};

/// How a metric is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo { .. } => "montecarlo",
        }
    }

    pub fn trials(&self) -> u64 {
        match self {
            Method::Exact => 0,
            Method::MonteCarlo { trials, .. } => *trials,
        }
    }
}

/// A probability with its standard error (zero for exact values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, trials: 0 }
    }

    pub fn from_counts(hits: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self { value: f64::NAN, stderr: f64::NAN, trials };
        }
        let q = hits as f64 / trials as f64;
        Self { value: q, stderr: (q * (1.0 - q) / trials as f64).sqrt(), trials }
    }

    /// `|self - other|` in units of the combined standard error.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let se = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let diff = (self.value - other.value).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }
}

pub(crate) const CHUNK: u64 = 1024;

/// Runs `trials` independent trials and merges per-chunk accumulators.
pub(crate) fn parallel_trials<T, F, M>(trials: u64, seed: u64, label: &str, init: T, trial: F, merge: M) -> Result<T>
where
    T: Clone + Send + Sync,
    F: Fn(&mut StreamRng, &mut T) -> Result<()> + Sync,
    M: Fn(T, T) -> T + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::substream(seed, label, c);
            let mut acc = init.clone();
            for _ in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                trial(&mut rng, &mut acc)?;
            }
            Ok(acc)
        })
        .try_reduce(|| init.clone(), |a, b| Ok(merge(a, b)))
}

/// Fraction of successful trials.
pub(crate) fn monte_carlo_rate<F>(trials: u64, seed: u64, label: &str, trial: F) -> Result<Estimate>
where
    F: Fn(&mut StreamRng) -> Result<bool> + Sync,
{
    let hits = parallel_trials(trials, seed, label, 0u64, |r, acc| {
        *acc += trial(r)? as u64;
        Ok(())
    }, |a, b| a + b)?;
    Ok(Estimate::from_counts(hits, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn monte_carlo_is_deterministic_and_unbiased() {
        let run = || monte_carlo_rate(20_000, 5, "coin", |r| Ok(r.gen_bool(0.3))).unwrap();
        let a = run();
        assert_eq!(a, run());
        assert!((a.value - 0.3).abs() < 4.0 * a.stderr);
        assert_eq!(a.trials, 20_000);
        let empty = monte_carlo_rate(0, 5, "coin", |_| Ok(true)).unwrap();
        assert!(empty.value.is_nan());
    }

    #[test]
    fn z_scores() {
        assert_eq!(Estimate::exact(0.5).z_score(&Estimate::exact(0.5)), 0.0);
        assert!(Estimate::exact(0.5).z_score(&Estimate::exact(0.4)).is_infinite());
        let mc = Estimate { value: 0.52, stderr: 0.01, trials: 100 };
        assert!((mc.z_score(&Estimate::exact(0.5)) - 2.0).abs() < 1e-9);
    }
}
