use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{Eer, Method};

/// Metrics at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub tau: f64,
    pub far: f64,
    pub frr: f64,
    /// Keyed by attack-view label.
    pub sar: BTreeMap<String, f64>,
    pub leakage: BTreeMap<String, f64>,
    pub storage_bits: u64,
    pub method: String,
    pub trials: u64,
    /// Largest standard error among the row's estimates.
    pub stderr: f64,
}

impl MetricRow {
    pub fn new(tau: f64, method: Method) -> Self {
        Self {
            tau,
            far: 0.0,
            frr: 0.0,
            sar: BTreeMap::new(),
            leakage: BTreeMap::new(),
            storage_bits: 0,
            method: method.label().into(),
            trials: method.trials(),
            stderr: 0.0,
        }
    }

    pub fn note_stderr(&mut self, stderr: f64) {
        if stderr.is_finite() {
            self.stderr = self.stderr.max(stderr);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eer: Option<Eer>,
    /// Results that are not per-threshold, such as linkage attacks.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        // Shortest representation that round-trips.
        format!("{x}")
    }
}

impl MetricReport {
    pub fn new(rows: Vec<MetricRow>) -> Self {
        Self { rows, eer: None, extra: BTreeMap::new() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns: `tau, far, frr, sar_<view>…, leakage_<view>…, storage_bits,
    /// method, trials, stderr`. A view missing from a row leaves its cell empty.
    pub fn to_csv(&self) -> String {
        let sar_views: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.sar.keys()).collect();
        let leak_views: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.leakage.keys()).collect();
        let mut out = String::from("tau,far,frr");
        for v in &sar_views {
            let _ = write!(out, ",sar_{v}");
        }
        for v in &leak_views {
            let _ = write!(out, ",leakage_{v}");
        }
        out.push_str(",storage_bits,method,trials,stderr\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", number(r.tau), number(r.far), number(r.frr));
            for v in &sar_views {
                out.push(',');
                out.push_str(&r.sar.get(*v).map(|&x| number(x)).unwrap_or_default());
            }
            for v in &leak_views {
                out.push(',');
                out.push_str(&r.leakage.get(*v).map(|&x| number(x)).unwrap_or_default());
            }
            let _ = writeln!(out, ",{},{},{},{}", r.storage_bits, r.method, r.trials, number(r.stderr));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut row = MetricRow::new(0.0, Method::Exact);
        row.far = 0.25;
        row.frr = 0.5;
        row.sar.insert("s".into(), 1.0);
        row.sar.insert("none".into(), 0.25);
        row.leakage.insert("s".into(), 2.0);
        row.storage_bits = 2;
        let mut other = MetricRow::new(0.25, Method::MonteCarlo { trials: 10, seed: 1 });
        other.note_stderr(0.01);
        other.note_stderr(f64::NAN);
        let report = MetricReport::new(vec![row, other]);
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tau,far,frr,sar_none,sar_s,leakage_s,storage_bits,method,trials,stderr");
        assert_eq!(lines[1], "0,0.25,0.5,0.25,1,2,2,exact,0,0");
        assert_eq!(lines[2], "0.25,0,0,,,,0,montecarlo,10,0.01");
        let back: MetricReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
