//! Experiment descriptions and the runs built from them.
//!
//! An [`ExperimentConfig`] names one architecture, its parameters and a
//! threshold grid. Everything the command line does goes through here.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bits::{BitVector, FeatureVector};
use crate::cancelable::{CancelableSystem, TransformKey};
use crate::commit::{FuzzyCommitment, TiePolicy};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, LinearCode};
use crate::metrics::{
    eer, roc, sar, AttackView, Estimate, HammingScorer, KeyShape, Method, MetricReport, MetricRow, Scheme, Scorer,
    Strategy, Target,
};
use crate::multisys::DeploymentConfig;
use crate::rng;
use crate::sketch::SketchSystem;
use crate::smc::{encrypt_template, features_of, Keypair};
use crate::StoredTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Sketch,
    TwoFactorSketch,
    Commit,
    Cancelable,
    Smc,
}

/// Parity-check matrix given outright, or drawn from the experiment seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeSpec {
    H(BitMatrix),
    Random { n: usize, m: usize },
}

fn default_p() -> f64 {
    0.05
}

fn default_taus() -> Vec<f64> {
    vec![0.0]
}

fn default_views() -> Vec<String> {
    vec!["none".into(), "s".into()]
}

fn default_trials() -> u64 {
    10_000
}

fn default_true() -> bool {
    true
}

fn default_key_bits() -> u64 {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub architecture: Architecture,
    /// Required for the code-based architectures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSpec>,
    /// Feature length when there is no code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_key_shape")]
    pub key: KeyShape,
    #[serde(default)]
    pub ties: TiePolicy,
    /// Mask the commitment's input with a user key.
    #[serde(default)]
    pub keyed_commit: bool,
    /// Intra-user crossover probability.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Threshold for single enroll and auth runs.
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_views")]
    pub views: Vec<String>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub exact: bool,
    /// Prime size for the encrypted-domain storage figure.
    #[serde(default = "default_key_bits")]
    pub smc_key_bits: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployment: Option<DeploymentConfig>,
}

fn default_key_shape() -> KeyShape {
    KeyShape::PermuteSalt
}

/// A built system at one threshold.
#[derive(Debug, Clone)]
pub enum System {
    Sketch(SketchSystem),
    Commit { system: FuzzyCommitment, keyed: bool },
    Cancelable { system: CancelableSystem, n: usize, shape: KeyShape },
    Smc { n: usize, tau: f64 },
}

impl System {
    /// `None` for the encrypted-domain architecture, which runs over the network.
    pub fn target(&self) -> Option<Target<'_>> {
        Some(match self {
            System::Sketch(s) => Target::Sketch(s),
            System::Commit { system, keyed } => Target::Commit { system, keyed: *keyed },
            System::Cancelable { system, n, shape } => Target::Cancelable { system, n: *n, shape: *shape },
            System::Smc { .. } => return None,
        })
    }

    fn local(&self) -> Result<Target<'_>> {
        self.target()
            .ok_or_else(|| Error::InvalidParameter("the smc architecture runs through smc-serve and smc-auth".into()))
    }
}

/// The adversary's best strategy for a view.
pub fn strategy_for(view: AttackView) -> Strategy {
    if view.knows_s {
        Strategy::StoredDataInversion
    } else if view.knows_a {
        Strategy::ReplayBiometric
    } else {
        Strategy::BlindGuess
    }
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn method(&self) -> Method {
        if self.exact {
            Method::Exact
        } else {
            Method::MonteCarlo { trials: self.trials, seed: self.seed }
        }
    }

    pub fn attack_views(&self) -> Result<Vec<AttackView>> {
        self.views
            .iter()
            .map(|v| AttackView::parse(v).ok_or_else(|| Error::InvalidParameter(format!("unknown attack view {v:?}"))))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(0.0..0.5).contains(&self.p) {
            return bad(format!("p = {} outside [0, 0.5)", self.p));
        }
        let taus = self.taus.iter().chain([&self.tau]);
        if let Some(t) = taus.into_iter().find(|t| !(0.0..0.5).contains(*t)) {
            return bad(format!("threshold {t} outside [0, 0.5)"));
        }
        if self.taus.is_empty() || self.taus.windows(2).any(|w| w[0] > w[1]) {
            return bad("taus must be a non-empty ascending list".into());
        }
        self.attack_views()?;
        let needs_code = matches!(self.architecture, Architecture::Sketch | Architecture::TwoFactorSketch | Architecture::Commit);
        match (&self.code, self.n) {
            (None, _) if needs_code => return bad("this architecture needs a code".into()),
            (None, None) => return bad("give either a code or n".into()),
            (Some(CodeSpec::H(h)), Some(n)) if h.num_cols() != n => {
                return bad(format!("n = {n} but H has {} columns", h.num_cols()))
            }
            (Some(CodeSpec::Random { n: cn, .. }), Some(n)) if *cn != n => {
                return bad(format!("n = {n} but the random code has length {cn}"))
            }
            _ => {}
        }
        if let Some(d) = &self.deployment {
            d.build()?;
        }
        self.n_features().and_then(|n| if n == 0 { bad("n must be positive".into()) } else { Ok(()) })
    }

    pub fn n_features(&self) -> Result<usize> {
        match (&self.code, self.n) {
            (Some(CodeSpec::H(h)), _) => Ok(h.num_cols()),
            (Some(CodeSpec::Random { n, .. }), _) => Ok(*n),
            (None, Some(n)) => Ok(n),
            (None, None) => Err(Error::InvalidParameter("give either a code or n".into())),
        }
    }

    pub fn code(&self) -> Result<Option<LinearCode>> {
        Ok(match &self.code {
            None => None,
            Some(CodeSpec::H(h)) => Some(LinearCode::new(h.clone())?),
            Some(CodeSpec::Random { n, m }) => Some(LinearCode::random(*n, *m, &mut rng::stream(self.seed, "code"))?),
        })
    }

    pub fn system(&self, tau: f64) -> Result<System> {
        let n = self.n_features()?;
        let code = self.code()?;
        let need = || code.clone().ok_or_else(|| Error::InvalidParameter("this architecture needs a code".into()));
        Ok(match self.architecture {
            Architecture::Sketch => System::Sketch(SketchSystem::new(need()?, tau)?),
            Architecture::TwoFactorSketch => System::Sketch(SketchSystem::two_factor(need()?, tau)?),
            Architecture::Commit => System::Commit {
                system: FuzzyCommitment::new(need()?, tau)?.with_tie_policy(self.ties),
                keyed: self.keyed_commit,
            },
            Architecture::Cancelable => System::Cancelable { system: CancelableSystem::new(tau)?, n, shape: self.key },
            Architecture::Smc => System::Smc { n, tau },
        })
    }

    /// A key for a new user, or `None` when the architecture takes none.
    pub fn fresh_key<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<TransformKey>> {
        self.system(self.tau)?.local()?.fresh_key(rng)
    }

    pub fn enroll<R: Rng + ?Sized>(&self, a: &FeatureVector, key: Option<&TransformKey>, rng: &mut R) -> Result<StoredTemplate> {
        let sys = self.system(self.tau)?;
        let target = sys.local()?;
        if target.keyed() && key.is_none() {
            return Err(Error::MissingKey);
        }
        target.enroll(a, key, rng)
    }

    pub fn authenticate(&self, stored: &StoredTemplate, d: &FeatureVector, key: Option<&TransformKey>) -> Result<bool> {
        let sys = self.system(self.tau)?;
        let target = sys.local()?;
        if target.keyed() && key.is_none() {
            return Err(Error::MissingKey);
        }
        target.accepts(stored, d, key)
    }

    fn leakage_scheme<'c>(&self, code: Option<&'c LinearCode>) -> Result<Option<Scheme<'c>>> {
        let n = self.n_features()?;
        Ok(match (self.architecture, code) {
            (Architecture::Sketch, Some(c)) => Some(Scheme::KeylessSketch(c)),
            (Architecture::TwoFactorSketch, Some(c)) => Some(Scheme::TwoFactorSketch(c)),
            (Architecture::Commit, Some(c)) if !self.keyed_commit => Some(Scheme::Commitment(c)),
            (Architecture::Cancelable, _) if self.key == KeyShape::PermuteSalt => Some(Scheme::CancelableSalt { n }),
            _ => None,
        })
    }

    /// FAR, FRR, SAR and leakage over the threshold grid. Values that cannot
    /// be computed under the enumeration cap are left out of their row.
    pub fn run_metrics(&self) -> Result<MetricReport> {
        self.validate()?;
        let method = self.method();
        let n = self.n_features()?;
        let views = self.attack_views()?;
        let base = self.system(0.0)?;
        let mut r = rng::stream(self.seed, "metrics");

        let (points, storage_bits) = match base.target() {
            Some(target) => {
                let key = target.fresh_key(&mut r)?;
                let stored = target.enroll(&BitVector::random(n, &mut r), key.as_ref(), &mut r)?;
                let scorer = target.scorer(key)?;
                (roc(scorer.as_ref(), self.p, &self.taus, method)?, stored.storage_bits()?)
            }
            None => {
                let kp = Keypair::generate(self.smc_key_bits, self.seed)?;
                let t = encrypt_template(kp.public(), &features_of(&BitVector::random(n, &mut r)), &mut r);
                let scorer = HammingScorer { n };
                (roc(&scorer as &dyn Scorer, self.p, &self.taus, method)?, t.storage_bits(kp.public()))
            }
        };

        let code = self.code()?;
        let scheme = self.leakage_scheme(code.as_ref())?;
        let mut leakage = BTreeMap::new();
        if let Some(scheme) = scheme {
            for v in &views {
                match scheme.leakage(*v) {
                    Ok(bits) => {
                        leakage.insert(v.label(), bits);
                    }
                    Err(Error::EnumerationCap { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }

        let mut rows = Vec::with_capacity(points.len());
        for point in &points {
            let mut row = MetricRow::new(point.tau, method);
            row.far = point.far.value;
            row.frr = point.frr.value;
            row.note_stderr(point.far.stderr);
            row.note_stderr(point.frr.stderr);
            row.storage_bits = storage_bits;
            row.leakage = leakage.clone();
            let sys = self.system(point.tau)?;
            if let Some(target) = sys.target() {
                for v in &views {
                    if let Some(e) = self.sar_at(target, *v)? {
                        row.sar.insert(v.label(), e.value);
                        row.note_stderr(e.stderr);
                    }
                }
            }
            rows.push(row);
        }

        let mut report = MetricReport::new(rows);
        report.eer = eer(&points).ok();
        if let Some(d) = &self.deployment {
            report.extra.insert("deployment".into(), deployment_summary(d)?);
        }
        Ok(report)
    }

    /// Exact where the architecture allows it, else sampled when trials remain.
    fn sar_at(&self, target: Target<'_>, view: AttackView) -> Result<Option<Estimate>> {
        let strategy = strategy_for(view);
        let sampled = Method::MonteCarlo { trials: self.trials, seed: self.seed };
        match sar(target, view, strategy, self.method()) {
            Ok(e) => Ok(Some(e)),
            Err(Error::ExactUnsupported(_) | Error::EnumerationCap { .. }) if self.trials > 0 => {
                sar(target, view, strategy, sampled).map(Some)
            }
            Err(Error::ExactUnsupported(_) | Error::EnumerationCap { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// SAR of `strategy` under `view` at every threshold of the grid.
    pub fn run_attack(&self, view: AttackView, strategy: Strategy) -> Result<Vec<(f64, Estimate)>> {
        self.validate()?;
        self.taus
            .iter()
            .map(|&tau| {
                let sys = self.system(tau)?;
                Ok((tau, sar(sys.local()?, view, strategy, self.method())?))
            })
            .collect()
    }
}

/// Cross-SAR matrix, ranks and per-scenario intersections of a deployment.
pub fn deployment_summary(cfg: &DeploymentConfig) -> Result<serde_json::Value> {
    let d = cfg.build()?;
    let k = d.len();
    let mut cross = vec![vec![0.0; k]; k];
    let mut ranks = vec![vec![0usize; k]; k];
    for i in 0..k {
        for j in 0..k {
            cross[i][j] = d.cross_sar(i, j)?;
            ranks[i][j] = d.stacked_rank(&[i, j])?;
        }
    }
    let scenarios = cfg
        .scenarios
        .iter()
        .map(|order| {
            let candidates = d.intersect_candidates(order)?;
            Ok(json!({
                "compromised": order,
                "candidates": candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "leakage": d.cumulative_leakage(order)?,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "labels": (0..k).map(|i| d.label(i).to_string()).collect::<Vec<_>>(),
        "syndromes": (0..k).map(|i| d.template(i).syndrome.to_string()).collect::<Vec<_>>(),
        "cross_sar": cross,
        "stacked_rank": ranks,
        "scenarios": scenarios,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    fn sidebar_sketch() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"architecture": "sketch",
                "code": {"h": {"rows": 2, "cols": 4, "bits": [[1,0,1,1],[0,1,1,1]]}},
                "taus": [0.0, 0.25], "p": 0.1, "views": ["none", "s"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn sketch_report() {
        let report = sidebar_sketch().run_metrics().unwrap();
        let row = &report.rows[0];
        assert_eq!(row.far, 0.25);
        assert_eq!(row.sar["s"], 1.0);
        assert_eq!(row.sar["none"], 0.25);
        assert_eq!(row.leakage["s"], 2.0);
        assert_eq!(row.storage_bits, 2);
        assert_eq!(row.method, "exact");
    }

    #[test]
    fn enroll_and_authenticate() {
        let cfg = sidebar_sketch();
        let mut r = rng::stream(0, "t");
        let stored = cfg.enroll(&bits("1011"), None, &mut r).unwrap();
        match &stored {
            StoredTemplate::Sketch(t) => assert_eq!(t.syndrome.to_string(), "10"),
            other => panic!("{other:?}"),
        }
        assert!(cfg.authenticate(&stored, &bits("0101"), None).unwrap());
        assert!(!cfg.authenticate(&stored, &bits("1111"), None).unwrap());
    }

    #[test]
    fn keyed_architectures_need_keys() {
        let cfg = ExperimentConfig::from_json(r#"{"architecture": "cancelable", "n": 6, "taus": [0.0, 0.25]}"#).unwrap();
        let mut r = rng::stream(0, "k");
        assert!(matches!(cfg.enroll(&BitVector::zeros(6), None, &mut r), Err(Error::MissingKey)));
        let key = cfg.fresh_key(&mut r).unwrap().unwrap();
        let stored = cfg.enroll(&BitVector::zeros(6), Some(&key), &mut r).unwrap();
        assert!(cfg.authenticate(&stored, &BitVector::zeros(6), Some(&key)).unwrap());
        // exact SAR is unavailable for keyed systems, so it is sampled
        let report = cfg.run_metrics().unwrap();
        assert_eq!(report.rows[0].leakage["s"], 0.0);
        assert!(report.rows[0].sar.contains_key("s"));
    }

    #[test]
    fn rejects_bad_configs() {
        for json in [
            r#"{"architecture": "sketch", "n": 4}"#,
            r#"{"architecture": "cancelable", "n": 4, "p": 0.7}"#,
            r#"{"architecture": "cancelable", "n": 4, "taus": [0.5, 0.1]}"#,
            r#"{"architecture": "cancelable", "n": 4, "views": ["q"]}"#,
            r#"{"architecture": "cancelable", "n": 4, "bogus": 1}"#,
        ] {
            assert!(ExperimentConfig::from_json(json).is_err(), "{json}");
        }
    }

    #[test]
    fn smc_metrics_use_plaintext_matching() {
        let cfg = ExperimentConfig::from_json(
            r#"{"architecture": "smc", "n": 6, "taus": [0.0], "smc_key_bits": 16, "views": []}"#,
        )
        .unwrap();
        let report = cfg.run_metrics().unwrap();
        assert_eq!(report.rows[0].far, 1.0 / 64.0);
        assert!(report.rows[0].storage_bits > 0);
    }
}
