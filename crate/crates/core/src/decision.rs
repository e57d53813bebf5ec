use serde::{Deserialize, Serialize};

/// Outcome of one authentication attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub accepted: bool,
    /// Hamming distance the threshold test was applied to.
    pub distance: usize,
    /// Length the distance is normalized by.
    pub length: usize,
}

impl Decision {
    pub fn normalized_distance(&self) -> f64 {
        if self.length == 0 {
            0.0
        } else {
            self.distance as f64 / self.length as f64
        }
    }
}

/// Largest integer distance `d` with `d / len <= tau`.
pub fn acceptance_radius(tau: f64, len: usize) -> usize {
    if tau < 0.0 {
        return 0;
    }
    (tau * len as f64 + 1e-9).floor() as usize
}
