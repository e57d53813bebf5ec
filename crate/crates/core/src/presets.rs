//! Ready-made experiments and the reference regression suite.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::{bits, BitVector};
use crate::error::{Error, Result};
use crate::experiment::{Architecture, CodeSpec, ExperimentConfig};
use crate::gf2::{BitMatrix, LinearCode, DEFAULT_ENUMERATION_CAP};
use crate::metrics::{far, sar, AttackView, KeyShape, Method, Scheme, SketchScorer, Strategy, Target};
use crate::multisys::{DeploymentConfig, SystemConfig};
use crate::commit::{FuzzyCommitment, TiePolicy};
use crate::sketch::SketchSystem;

pub const PRESETS: &[&str] = &["sidebar-b", "bsc16"];

/// The three-system worked example: parity checks and the shared enrollment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebarFixture {
    pub h: [BitMatrix; 3],
    pub enrollment: BitVector,
}

impl Default for SidebarFixture {
    fn default() -> Self {
        let m = |rows: &[&str]| BitMatrix::parse_rows(rows).expect("valid rows");
        Self {
            h: [m(&["1011", "0111"]), m(&["1011", "0101"]), m(&["1110", "1101"])],
            enrollment: bits("1011"),
        }
    }
}

impl SidebarFixture {
    pub fn deployment(&self) -> DeploymentConfig {
        DeploymentConfig {
            systems: self
                .h
                .iter()
                .enumerate()
                .map(|(i, h)| SystemConfig { label: format!("H{}", i + 1), h: h.clone(), tau: 0.0 })
                .collect(),
            enrollment: self.enrollment.clone(),
            scenarios: vec![vec![0], vec![0, 0], vec![0, 1], vec![0, 2]],
        }
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "sidebar-b" => Ok(sidebar_b(&SidebarFixture::default())),
        "bsc16" => Ok(bsc16()),
        _ => Err(Error::InvalidParameter(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))),
    }
}

pub fn sidebar_b(fixture: &SidebarFixture) -> ExperimentConfig {
    ExperimentConfig {
        architecture: Architecture::Sketch,
        code: Some(CodeSpec::H(fixture.h[0].clone())),
        n: None,
        key: KeyShape::PermuteSalt,
        ties: TiePolicy::default(),
        keyed_commit: false,
        p: 0.1,
        tau: 0.0,
        taus: vec![0.0, 0.25],
        views: vec!["none".into(), "s".into()],
        trials: 10_000,
        seed: 1,
        exact: true,
        smc_key_bits: 64,
        deployment: Some(fixture.deployment()),
    }
}

/// Random (16, 8) code under a binary symmetric channel with p = 0.05.
pub fn bsc16() -> ExperimentConfig {
    ExperimentConfig {
        architecture: Architecture::Sketch,
        code: Some(CodeSpec::Random { n: 16, m: 8 }),
        n: None,
        key: KeyShape::PermuteSalt,
        ties: TiePolicy::default(),
        keyed_commit: false,
        p: 0.05,
        tau: 0.125,
        taus: (0..8).map(|i| i as f64 / 16.0).collect(),
        views: vec!["none".into(), "s".into(), "a".into()],
        trials: 10_000,
        seed: 16,
        exact: true,
        smc_key_bits: 64,
        deployment: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn check<T: PartialEq + fmt::Debug>(name: &'static str, got: Result<T>, want: T) -> Check {
    match got {
        Ok(g) if g == want => Check { name, passed: true, detail: format!("{g:?}") },
        Ok(g) => Check { name, passed: false, detail: format!("got {g:?}, expected {want:?}") },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn strings(v: Vec<BitVector>) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn sketch(h: &BitMatrix, two_factor: bool) -> Result<SketchSystem> {
    let code = LinearCode::new(h.clone())?;
    if two_factor {
        SketchSystem::two_factor(code, 0.0)
    } else {
        SketchSystem::new(code, 0.0)
    }
}

/// Every worked example with a published value. Deterministic: sampled
/// checks use fixed seeds.
pub fn reference_checks(fixture: &SidebarFixture) -> Vec<Check> {
    let a = &fixture.enrollment;
    let h = &fixture.h;
    let code = |i: usize| LinearCode::new(h[i].clone());
    let deployment = || fixture.deployment().build();
    let mut out = Vec::new();

    out.push(check(
        "sidebarB.syndrome",
        (0..3).map(|i| Ok(code(i)?.syndrome(a)?.to_string())).collect::<Result<Vec<_>>>(),
        vec!["10".into(), "11".into(), "00".into()],
    ));
    out.push(check(
        "sidebarB.codewords",
        (|| {
            let mut c1: Vec<String> = code(0)?.codewords(DEFAULT_ENUMERATION_CAP)?.into_iter().map(|(_, c)| c.to_string()).collect();
            c1.sort();
            Ok(c1)
        })(),
        strings(vec![bits("0000"), bits("0011"), bits("1101"), bits("1110")]),
    ));
    out.push(check(
        "sidebarB.cosets",
        (|| {
            let d = deployment()?;
            (0..3).map(|i| Ok(strings(d.coset(i)?.members))).collect::<Result<Vec<_>>>()
        })(),
        vec![
            strings(vec![bits("0101"), bits("0110"), bits("1000"), bits("1011")]),
            strings(vec![bits("0001"), bits("0110"), bits("1011"), bits("1100")]),
            strings(vec![bits("0000"), bits("0111"), bits("1011"), bits("1100")]),
        ],
    ));
    out.push(check(
        "sidebarB.intersection",
        (|| {
            let d = deployment()?;
            [[0, 0], [0, 1], [0, 2]].iter().map(|p| Ok(d.intersect_candidates(p)?.len())).collect::<Result<Vec<_>>>()
        })(),
        vec![4, 2, 1],
    ));
    out.push(check(
        "sidebarB.cross_sar",
        (|| {
            let d = deployment()?;
            (0..3).map(|j| d.cross_sar(0, j)).collect::<Result<Vec<_>>>()
        })(),
        vec![1.0, 0.5, 0.25],
    ));
    out.push(check(
        "sidebarB.leakage",
        (|| {
            let d = deployment()?;
            Ok((d.cumulative_leakage(&[0, 1])?, d.cumulative_leakage(&[0, 2])?))
        })(),
        (vec![2.0, 3.0], vec![2.0, 4.0]),
    ));
    out.push(check(
        "sidebarB.far",
        (|| Ok(far(&SketchScorer::new(sketch(&h[0], false)?, None), 0.0, Method::Exact)?.value))(),
        0.25,
    ));
    out.push(check(
        "sidebarB.acceptance",
        (|| {
            let sys = sketch(&h[0], false)?;
            let t = sys.enroll(a, None)?;
            Ok((sys.accepts(&t, &bits("0101"), None)?, sys.acceptance_region(&t, None)?.len()))
        })(),
        (true, 4),
    ));
    out.push(check(
        "sketch.leakage",
        (|| Scheme::KeylessSketch(&code(0)?).leakage(AttackView::S))(),
        2.0,
    ));
    out.push(check(
        "sketch.sar",
        (|| {
            let sys = sketch(&h[0], false)?;
            let t = Target::Sketch(&sys);
            Ok((
                sar(t, AttackView::S, Strategy::StoredDataInversion, Method::Exact)?.value,
                sar(t, AttackView::NONE, Strategy::BlindGuess, Method::Exact)?.value,
            ))
        })(),
        (1.0, 0.25),
    ));
    out.push(check(
        "twofactor.leakage",
        (|| Scheme::TwoFactorSketch(&code(0)?).leakage(AttackView::S))(),
        0.0,
    ));
    out.push(check(
        "twofactor.sar_replay",
        (|| {
            let sys = sketch(&h[0], true)?;
            let e = sar(Target::Sketch(&sys), AttackView::A, Strategy::ReplayBiometric, Method::MonteCarlo { trials: 20_000, seed: 7 })?;
            Ok((e.value - 0.25).abs() <= 3.0 * e.stderr)
        })(),
        true,
    ));
    out.push(check(
        "negation.leakage",
        Scheme::BitNegation { n: 4 }.leakage(AttackView::S),
        3.0,
    ));
    out.push(check(
        "negation.distortion",
        Scheme::BitNegation { n: 4 }.reconstruction_distortion(AttackView::S),
        0.5,
    ));
    out.push(check(
        "storage.bits",
        (|| {
            let sys = sketch(&h[0], false)?;
            let fc = FuzzyCommitment::new(code(0)?, 0.0)?;
            let z = crate::commit::SecretMessage(BitVector::zeros(fc.code().k()));
            Ok((sys.enroll(a, None)?.storage_bits(), fc.commit(a, &z, None)?.storage_bits()))
        })(),
        (2, 4),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_reference_checks_pass() {
        for c in reference_checks(&SidebarFixture::default()) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn corrupted_matrix_names_the_failure() {
        let mut fixture = SidebarFixture::default();
        fixture.h[0] = BitMatrix::parse_rows(&["1011", "1111"]).unwrap();
        let failed: Vec<_> = reference_checks(&fixture).into_iter().filter(|c| !c.passed).map(|c| c.name).collect();
        assert!(failed.contains(&"sidebarB.syndrome"), "{failed:?}");
    }

    #[test]
    fn deterministic() {
        let f = SidebarFixture::default();
        assert_eq!(reference_checks(&f), reference_checks(&f));
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_err());
        let report = preset("sidebar-b").unwrap().run_metrics().unwrap();
        assert_eq!(report.rows[0].far, 0.25);
        assert_eq!(report.rows[0].leakage["s"], 2.0);
        assert_eq!(report.extra["deployment"]["cross_sar"][0], serde_json::json!([1.0, 0.5, 0.25]));
    }
}
