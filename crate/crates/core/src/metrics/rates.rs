use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::decision::acceptance_radius;
use crate::error::{Error, Result};
use crate::gf2::ensure_enumerable;

use super::{monte_carlo_rate, Estimate, Method, Scorer};

/// Exact joint distribution of noise weight and matcher distance.
///
/// `mass[w][j]` is the number of noise patterns `e` of weight `w` whose
/// probe `a ⊕ e` scores distance `j`, averaged over enrollments `a`. The
/// last column collects probes that are never accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    n: usize,
    len: usize,
    mass: Vec<Vec<f64>>,
}

impl DistanceProfile {
    pub fn exact<S: Scorer + ?Sized>(scorer: &S, cap: u64) -> Result<Self> {
        let n = scorer.n();
        let len = scorer.len();
        let enrollments: Vec<BitVector> = if scorer.translation_invariant() {
            ensure_enumerable(n, cap)?;
            vec![BitVector::zeros(n)]
        } else {
            ensure_enumerable(2 * n, cap)?;
            BitVector::all(n).collect()
        };
        let weight = 1.0 / enrollments.len() as f64;
        let mut mass = vec![vec![0.0; len + 2]; n + 1];
        for a in &enrollments {
            for e in BitVector::all(n) {
                let d = a.xor(&e)?;
                let j = scorer.distance(a, &d)?.map_or(len + 1, |j| j.min(len));
                mass[e.weight()][j] += weight;
            }
        }
        Ok(Self { n, len, mass })
    }

    fn accepted_by_weight(&self, tau: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = acceptance_radius(tau, self.len).min(self.len);
        self.mass.iter().enumerate().map(move |(w, row)| (w, row[..=r].iter().sum()))
    }

    /// Acceptance probability for a uniform probe.
    pub fn far(&self, tau: f64) -> f64 {
        let total: f64 = self.accepted_by_weight(tau).map(|(_, m)| m).sum();
        total / 2f64.powi(self.n as i32)
    }

    /// Rejection probability for a probe through a BSC with crossover `p`.
    pub fn frr(&self, tau: f64, p: f64) -> f64 {
        // Summing rejected rather than accepted mass keeps an accept-all
        // system at exactly zero.
        let reject: f64 = self
            .accepted_by_weight(tau)
            .map(|(w, m)| {
                let row: f64 = self.mass[w].iter().sum();
                (row - m).max(0.0) * p.powi(w as i32) * (1.0 - p).powi((self.n - w) as i32)
            })
            .sum();
        reject.clamp(0.0, 1.0)
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("crossover probability {p} outside [0, 1]")))
    }
}

fn accepts_at<S: Scorer + ?Sized>(scorer: &S, a: &BitVector, d: &BitVector, tau: f64) -> Result<bool> {
    Ok(scorer.distance(a, d)?.is_some_and(|j| j <= acceptance_radius(tau, scorer.len())))
}

/// False accept rate: a uniform probe against a uniform enrollment.
pub fn far<S: Scorer + ?Sized>(scorer: &S, tau: f64, method: Method) -> Result<Estimate> {
    match method {
        Method::Exact => Ok(Estimate::exact(DistanceProfile::exact(scorer, crate::gf2::DEFAULT_ENUMERATION_CAP)?.far(tau))),
        Method::MonteCarlo { trials, seed } => {
            let n = scorer.n();
            monte_carlo_rate(trials, seed, "far", |r| {
                let a = BitVector::random(n, r);
                let d = BitVector::random(n, r);
                accepts_at(scorer, &a, &d, tau)
            })
        }
    }
}

/// False reject rate for genuine probes through a BSC with crossover `p`.
pub fn frr<S: Scorer + ?Sized>(scorer: &S, p: f64, tau: f64, method: Method) -> Result<Estimate> {
    check_p(p)?;
    match method {
        Method::Exact => Ok(Estimate::exact(DistanceProfile::exact(scorer, crate::gf2::DEFAULT_ENUMERATION_CAP)?.frr(tau, p))),
        Method::MonteCarlo { trials, seed } => {
            let n = scorer.n();
            monte_carlo_rate(trials, seed, "frr", |r| {
                let a = BitVector::random(n, r);
                let mut d = BitVector::bernoulli(n, p, r);
                d.xor_in_place(&a);
                Ok(!accepts_at(scorer, &a, &d, tau)?)
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub tau: f64,
    pub far: Estimate,
    pub frr: Estimate,
}

/// FAR and FRR at each threshold of `taus` (which must be sorted).
pub fn roc<S: Scorer + ?Sized>(scorer: &S, p: f64, taus: &[f64], method: Method) -> Result<Vec<RocPoint>> {
    check_p(p)?;
    if taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("threshold grid must be sorted".into()));
    }
    match method {
        Method::Exact => {
            let profile = DistanceProfile::exact(scorer, crate::gf2::DEFAULT_ENUMERATION_CAP)?;
            Ok(taus
                .iter()
                .map(|&tau| RocPoint {
                    tau,
                    far: Estimate::exact(profile.far(tau)),
                    frr: Estimate::exact(profile.frr(tau, p)),
                })
                .collect())
        }
        Method::MonteCarlo { trials, seed } => {
            // Sample distances once and threshold them at every grid point.
            let n = scorer.n();
            let len = scorer.len();
            let histogram = |label: &str, crossover: f64| {
                super::parallel_trials(
                    trials,
                    seed,
                    label,
                    vec![0u64; len + 2],
                    |r, h| {
                        let a = BitVector::random(n, r);
                        let d = if crossover == 0.5 {
                            BitVector::random(n, r)
                        } else {
                            let mut d = BitVector::bernoulli(n, crossover, r);
                            d.xor_in_place(&a);
                            d
                        };
                        h[scorer.distance(&a, &d)?.map_or(len + 1, |j| j.min(len))] += 1;
                        Ok(())
                    },
                    |mut x, y| {
                        x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                        x
                    },
                )
            };
            let impostor = histogram("roc-far", 0.5)?;
            let genuine = histogram("roc-frr", p)?;
            Ok(taus
                .iter()
                .map(|&tau| {
                    let r = acceptance_radius(tau, len).min(len);
                    let fa: u64 = impostor[..=r].iter().sum();
                    let ga: u64 = genuine[..=r].iter().sum();
                    RocPoint {
                        tau,
                        far: Estimate::from_counts(fa, trials),
                        frr: Estimate::from_counts(trials - ga, trials),
                    }
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eer {
    pub value: f64,
    pub tau: f64,
    /// No sign change of `FAR - FRR` on the grid: `value` is the midpoint of
    /// FAR and FRR at the grid point where they are closest.
    pub flagged: bool,
}

/// Equal error rate by linear interpolation where `FAR - FRR` changes sign.
pub fn eer(points: &[RocPoint]) -> Result<Eer> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty ROC".into()));
    }
    let diff = |p: &RocPoint| p.far.value - p.frr.value;
    for (i, p) in points.iter().enumerate() {
        if diff(p) == 0.0 {
            return Ok(Eer { value: p.far.value, tau: p.tau, flagged: false });
        }
        if let Some(q) = points.get(i + 1) {
            let (d0, d1) = (diff(p), diff(q));
            if d0.signum() != d1.signum() && d1 != 0.0 {
                let t = d0 / (d0 - d1);
                return Ok(Eer {
                    value: p.far.value + t * (q.far.value - p.far.value),
                    tau: p.tau + t * (q.tau - p.tau),
                    flagged: false,
                });
            }
        }
    }
    let closest = points
        .iter()
        .min_by(|a, b| diff(a).abs().total_cmp(&diff(b).abs()))
        .expect("non-empty");
    Ok(Eer { value: (closest.far.value + closest.frr.value) / 2.0, tau: closest.tau, flagged: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{BitMatrix, LinearCode};
    use crate::metrics::{HammingScorer, SketchScorer};
    use crate::rng;
    use crate::sketch::SketchSystem;

    fn sidebar() -> SketchScorer {
        let h = BitMatrix::parse_rows(&["1011", "0111"]).unwrap();
        SketchScorer::new(SketchSystem::new(LinearCode::new(h).unwrap(), 0.0).unwrap(), None)
    }

    #[test]
    fn sidebar_rates() {
        let s = sidebar();
        assert_eq!(far(&s, 0.0, Method::Exact).unwrap().value, 0.25);
        // accepted iff the noise is a codeword: 0000, 0011, 1101, 1110
        let expected = 1.0 - (0.9f64.powi(4) + 2.0 * 0.1f64.powi(3) * 0.9 + 0.1f64.powi(2) * 0.9f64.powi(2));
        assert!((frr(&s, 0.1, 0.0, Method::Exact).unwrap().value - expected).abs() < 1e-12);
        assert!((expected - 0.334).abs() < 1e-12);
        assert_eq!(frr(&s, 0.0, 0.0, Method::Exact).unwrap().value, 0.0);
        // radius 1 reaches every coset leader of this code
        assert_eq!(far(&s, 0.49, Method::Exact).unwrap().value, 1.0);
    }

    #[test]
    fn trivial_code_accepts_everything() {
        let sys = SketchSystem::new(LinearCode::new(BitMatrix::zeros(0, 5)).unwrap(), 0.0).unwrap();
        let s = SketchScorer::new(sys, None);
        for tau in [0.0, 0.2, 0.4] {
            assert_eq!(far(&s, tau, Method::Exact).unwrap().value, 1.0);
            assert_eq!(frr(&s, 0.3, tau, Method::Exact).unwrap().value, 0.0);
        }
    }

    #[test]
    fn exact_matches_brute_force_over_enrollments() {
        let mut r = rng::stream(2, "bf");
        let sys = SketchSystem::new(LinearCode::random(6, 3, &mut r).unwrap(), 0.2).unwrap();
        let s = SketchScorer::new(sys.clone(), None);
        let mut accepted = 0;
        for a in BitVector::all(6) {
            let t = sys.enroll(&a, None).unwrap();
            accepted += BitVector::all(6).filter(|d| sys.accepts(&t, d, None).unwrap()).count();
        }
        assert_eq!(far(&s, 0.2, Method::Exact).unwrap().value, accepted as f64 / 4096.0);
    }

    #[test]
    fn exact_and_monte_carlo_agree() {
        let mut r = rng::stream(3, "mc");
        let s = SketchScorer::new(SketchSystem::new(LinearCode::random(10, 5, &mut r).unwrap(), 0.0).unwrap(), None);
        let mc = Method::MonteCarlo { trials: 20_000, seed: 9 };
        for tau in [0.0, 0.1, 0.2] {
            let (fe, fm) = (far(&s, tau, Method::Exact).unwrap(), far(&s, tau, mc).unwrap());
            assert!(fe.z_score(&fm) < 4.0, "far {fe:?} {fm:?}");
            let (re, rm) = (frr(&s, 0.1, tau, Method::Exact).unwrap(), frr(&s, 0.1, tau, mc).unwrap());
            assert!(re.z_score(&rm) < 4.0, "frr {re:?} {rm:?}");
        }
        let taus = [0.0, 0.1, 0.2, 0.3];
        let exact = roc(&s, 0.1, &taus, Method::Exact).unwrap();
        let sampled = roc(&s, 0.1, &taus, mc).unwrap();
        for (e, m) in exact.iter().zip(&sampled) {
            assert!(e.far.z_score(&m.far) < 4.0 && e.frr.z_score(&m.frr) < 4.0);
        }
    }

    #[test]
    fn roc_is_monotone() {
        let mut r = rng::stream(4, "mono");
        let s = SketchScorer::new(SketchSystem::new(LinearCode::random(8, 4, &mut r).unwrap(), 0.0).unwrap(), None);
        let taus: Vec<f64> = (0..8).map(|i| i as f64 / 16.0).collect();
        let points = roc(&s, 0.05, &taus, Method::Exact).unwrap();
        for w in points.windows(2) {
            assert!(w[0].far.value <= w[1].far.value);
            assert!(w[0].frr.value >= w[1].frr.value);
        }
        assert!(roc(&s, 0.05, &[0.2, 0.1], Method::Exact).is_err());
    }

    #[test]
    fn eer_interpolation() {
        let pt = |tau, far, frr| RocPoint { tau, far: Estimate::exact(far), frr: Estimate::exact(frr) };
        let e = eer(&[pt(0.0, 0.0, 0.4), pt(0.1, 0.2, 0.2), pt(0.2, 0.5, 0.0)]).unwrap();
        assert_eq!((e.value, e.tau, e.flagged), (0.2, 0.1, false));
        let e = eer(&[pt(0.0, 0.1, 0.5), pt(0.2, 0.3, 0.1)]).unwrap();
        // FAR - FRR goes from -0.4 to 0.2: crossing two thirds of the way
        assert!((e.value - (0.1 + 2.0 / 3.0 * 0.2)).abs() < 1e-12 && !e.flagged);
        assert!((e.tau - 0.4 / 3.0).abs() < 1e-12);
        let all = eer(&[pt(0.0, 1.0, 0.0), pt(0.3, 1.0, 0.0)]).unwrap();
        assert!(all.flagged);
        assert_eq!(all.tau, 0.0);
        assert!(eer(&[]).is_err());
    }

    /// The plaintext matcher's ROC, linearly interpolated, lies on or below
    /// the sketch's at every sketch operating point.
    #[test]
    fn plaintext_roc_dominates_sketch() {
        let mut r = rng::stream(5, "dominate");
        let n = 12;
        let sk = SketchScorer::new(SketchSystem::new(LinearCode::random(n, 6, &mut r).unwrap(), 0.0).unwrap(), None);
        let plain = HammingScorer { n };
        let taus: Vec<f64> = (0..=n / 2).map(|i| i as f64 / n as f64).collect();
        let p = 0.05;
        let sk_roc = roc(&sk, p, &taus, Method::Exact).unwrap();
        // accepting everything is the plaintext curve's far end
        let plain_taus: Vec<f64> = taus.iter().copied().chain([1.0]).collect();
        let pl_roc = roc(&plain, p, &plain_taus, Method::Exact).unwrap();
        let mut strictly_better = false;
        for s in &sk_roc {
            let i = pl_roc.iter().rposition(|q| q.far.value <= s.far.value).unwrap();
            let frr_at = match pl_roc.get(i + 1) {
                Some(q) if q.far.value > pl_roc[i].far.value => {
                    let t = (s.far.value - pl_roc[i].far.value) / (q.far.value - pl_roc[i].far.value);
                    pl_roc[i].frr.value + t * (q.frr.value - pl_roc[i].frr.value)
                }
                _ => pl_roc[i].frr.value,
            };
            assert!(frr_at <= s.frr.value + 1e-12, "tau {}: {frr_at} > {}", s.tau, s.frr.value);
            strictly_better |= frr_at < s.frr.value - 1e-9;
        }
        assert!(strictly_better);
    }
}
