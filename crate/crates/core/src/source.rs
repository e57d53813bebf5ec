//! Synthetic biometric sources.
//!
//! Two generators are provided. [`BscUserModel`] draws enrollment vectors
//! uniformly and produces probes through a binary symmetric channel: a low
//! crossover probability for the same user and (typically) one half for a
//! different user. The minutia model maps a set of `(x, y, theta)` points to
//! bits by counting points inside random cuboids and comparing each count to
//! the corpus median for that cuboid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::FeatureVector;
use crate::error::{check_len, Error, Result};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscUserModel {
    n: usize,
    p: f64,
    p_prime: f64,
    seed: u64,
}

impl BscUserModel {
    pub fn new(n: usize, p: f64, p_prime: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("feature length must be at least 1".into()));
        }
        // p = 0 is admitted as the noiseless channel.
        if !(0.0..0.5).contains(&p) || !(p < p_prime && p_prime <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "crossover probabilities must satisfy 0 <= p < p' <= 0.5 (got p={p}, p'={p_prime})"
            )));
        }
        Ok(Self { n, p, p_prime, seed })
    }

    /// Model with independent users (`p' = 0.5`).
    pub fn with_independent_users(n: usize, p: f64, seed: u64) -> Result<Self> {
        Self::new(n, p, 0.5, seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_prime(&self) -> f64 {
        self.p_prime
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Random stream for `label`, derived from the model seed.
    pub fn stream(&self, label: &str) -> StreamRng {
        rng::stream(self.seed, label)
    }

    /// Enrollment vector of user number `user`; identical across calls.
    pub fn enrollment(&self, user: u64) -> FeatureVector {
        self.sample_enrollment(&mut rng::substream(self.seed, "enrollment", user))
    }

    pub fn sample_enrollment<R: Rng + ?Sized>(&self, rng: &mut R) -> FeatureVector {
        FeatureVector::random(self.n, rng)
    }

    /// Passes `enrollment` through the intra-user (`same_user`) or inter-user channel.
    pub fn sample_probe<R: Rng + ?Sized>(
        &self,
        enrollment: &FeatureVector,
        same_user: bool,
        rng: &mut R,
    ) -> Result<FeatureVector> {
        check_len(self.n, enrollment.len())?;
        let crossover = if same_user { self.p } else { self.p_prime };
        let noise = FeatureVector::bernoulli(self.n, crossover, rng);
        let mut probe = enrollment.clone();
        probe.xor_in_place(&noise);
        Ok(probe)
    }
}

/// Extents of the minutia space; `theta` wraps modulo `theta_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct Bounds {
    pub x_max: f64,
    pub y_max: f64,
    pub theta_max: f64,
}

impl From<(f64, f64, f64)> for Bounds {
    fn from((x_max, y_max, theta_max): (f64, f64, f64)) -> Self {
        Self { x_max, y_max, theta_max }
    }
}

impl From<Bounds> for (f64, f64, f64) {
    fn from(b: Bounds) -> Self {
        (b.x_max, b.y_max, b.theta_max)
    }
}

impl Bounds {
    fn validate(&self) -> Result<()> {
        if [self.x_max, self.y_max, self.theta_max].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bounds must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<(f64, f64, f64)> for Minutia {
    fn from((x, y, theta): (f64, f64, f64)) -> Self {
        Self { x, y, theta }
    }
}

impl From<Minutia> for (f64, f64, f64) {
    fn from(m: Minutia) -> Self {
        (m.x, m.y, m.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMinutiaMap")]
pub struct MinutiaMap {
    points: Vec<Minutia>,
    bounds: Bounds,
}

#[derive(Deserialize)]
struct RawMinutiaMap {
    points: Vec<Minutia>,
    bounds: Bounds,
}

impl TryFrom<RawMinutiaMap> for MinutiaMap {
    type Error = Error;

    fn try_from(raw: RawMinutiaMap) -> Result<Self> {
        MinutiaMap::new(raw.points, raw.bounds)
    }
}

impl MinutiaMap {
    /// Validates that every point lies within `bounds`; angles are reduced modulo `theta_max`.
    pub fn new(points: Vec<Minutia>, bounds: Bounds) -> Result<Self> {
        bounds.validate()?;
        let points = points
            .into_iter()
            .map(|m| {
                if !(0.0..=bounds.x_max).contains(&m.x) || !(0.0..=bounds.y_max).contains(&m.y) {
                    return Err(Error::InvalidParameter(format!("minutia {m:?} outside {bounds:?}")));
                }
                Ok(Minutia { theta: m.theta.rem_euclid(bounds.theta_max), ..m })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, bounds })
    }

    /// `count` minutiae placed uniformly at random.
    pub fn random<R: Rng + ?Sized>(count: usize, bounds: Bounds, rng: &mut R) -> Result<Self> {
        bounds.validate()?;
        let points = (0..count)
            .map(|_| Minutia {
                x: rng.gen_range(0.0..bounds.x_max),
                y: rng.gen_range(0.0..bounds.y_max),
                theta: rng.gen_range(0.0..bounds.theta_max),
            })
            .collect();
        Self::new(points, bounds)
    }

    pub fn points(&self) -> &[Minutia] {
        &self.points
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Loads a JSON array of maps.
    pub fn load_corpus(json: &str) -> Result<Vec<MinutiaMap>> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Half-open axis-aligned box `[min, max)` in the x-y-theta space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Cuboid {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        if (0..3).all(|i| min[i] < max[i]) {
            Ok(Self { min, max })
        } else {
            Err(Error::InvalidParameter(format!("empty cuboid {min:?}..{max:?}")))
        }
    }

    pub fn contains(&self, m: &Minutia) -> bool {
        let p = [m.x, m.y, m.theta];
        (0..3).all(|i| self.min[i] <= p[i] && p[i] < self.max[i])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.max[i] - self.min[i]).product()
    }

    pub fn count(&self, map: &MinutiaMap) -> usize {
        map.points.iter().filter(|m| self.contains(m)).count()
    }
}

/// `n` cuboids drawn uniformly inside `bounds`, each with at least
/// `min_volume_fraction` of the total volume.
pub fn random_cuboids<R: Rng + ?Sized>(
    n: usize,
    bounds: Bounds,
    min_volume_fraction: f64,
    rng: &mut R,
) -> Result<Vec<Cuboid>> {
    bounds.validate()?;
    if !(0.0..1.0).contains(&min_volume_fraction) {
        return Err(Error::InvalidParameter("minimum volume fraction must lie in [0, 1)".into()));
    }
    let extents = [bounds.x_max, bounds.y_max, bounds.theta_max];
    let total: f64 = extents.iter().product();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut min = [0.0; 3];
        let mut max = [0.0; 3];
        for i in 0..3 {
            let a = rng.gen_range(0.0..extents[i]);
            let b = rng.gen_range(0.0..extents[i]);
            min[i] = a.min(b);
            max[i] = a.max(b);
        }
        if let Ok(c) = Cuboid::new(min, max) {
            if c.volume() >= min_volume_fraction * total {
                out.push(c);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuboidBank {
    cuboids: Vec<Cuboid>,
    thresholds: Vec<f64>,
}

impl CuboidBank {
    pub fn new(cuboids: Vec<Cuboid>, thresholds: Vec<f64>) -> Result<Self> {
        check_len(cuboids.len(), thresholds.len())?;
        for c in &cuboids {
            Cuboid::new(c.min, c.max)?;
        }
        Ok(Self { cuboids, thresholds })
    }

    pub fn len(&self) -> usize {
        self.cuboids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuboids.is_empty()
    }

    pub fn cuboids(&self) -> &[Cuboid] {
        &self.cuboids
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}

fn median(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] + values[mid]) as f64 / 2.0
    }
}

/// Sets each cuboid's threshold to the median of its counts over `corpus`.
pub fn calibrate_thresholds(corpus: &[MinutiaMap], cuboids: Vec<Cuboid>) -> Result<CuboidBank> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let thresholds = cuboids
        .iter()
        .map(|c| {
            let mut counts: Vec<usize> = corpus.iter().map(|m| c.count(m)).collect();
            median(&mut counts)
        })
        .collect();
    CuboidBank::new(cuboids, thresholds)
}

/// Bit `i` is 1 iff cuboid `i` holds at least `threshold[i]` minutiae.
pub fn extract_features(map: &MinutiaMap, bank: &CuboidBank) -> FeatureVector {
    FeatureVector::from_bits(
        bank.cuboids
            .iter()
            .zip(&bank.thresholds)
            .map(|(c, &t)| c.count(map) as f64 >= t),
    )
}
