//! Cancelable biometrics: keyed, revocable distortions matched in the
//! distorted domain.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BitVector, FeatureVector};
use crate::decision::{acceptance_radius, Decision};
use crate::error::{check_len, Error, Result};

/// Secret transform parameters held by the user.
///
/// `PermuteSalt` maps `x` to `y[i] = x[perm[i]] ⊕ salt[i]`, an isometry of
/// Hamming space. `RandomProjection` keeps the sign of each row of a ±1
/// matrix applied to the bipolar form `2x - 1`, with a zero dot product
/// mapped to bit 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KeyJson", into = "KeyJson")]
pub enum TransformKey {
    PermuteSalt { perm: Vec<usize>, salt: BitVector },
    RandomProjection { proj: Vec<Vec<i8>> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum KeyJson {
    PermuteSalt { perm: Vec<usize>, salt: BitVector },
    RandomProjection { proj: Vec<Vec<i8>> },
}

impl TryFrom<KeyJson> for TransformKey {
    type Error = Error;

    fn try_from(raw: KeyJson) -> Result<Self> {
        match raw {
            KeyJson::PermuteSalt { perm, salt } => TransformKey::permute_salt(perm, salt),
            KeyJson::RandomProjection { proj } => TransformKey::random_projection(proj),
        }
    }
}

impl From<TransformKey> for KeyJson {
    fn from(k: TransformKey) -> Self {
        match k {
            TransformKey::PermuteSalt { perm, salt } => KeyJson::PermuteSalt { perm, salt },
            TransformKey::RandomProjection { proj } => KeyJson::RandomProjection { proj },
        }
    }
}

impl TransformKey {
    pub fn permute_salt(perm: Vec<usize>, salt: BitVector) -> Result<Self> {
        check_len(perm.len(), salt.len())?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
            }
        }
        Ok(Self::PermuteSalt { perm, salt })
    }

    pub fn random_projection(proj: Vec<Vec<i8>>) -> Result<Self> {
        let n = proj.first().map_or(0, Vec::len);
        if proj.is_empty() || proj.len() > n {
            return Err(Error::InvalidParameter(format!(
                "projection must have between 1 and n rows (got {} x {n})",
                proj.len()
            )));
        }
        for row in &proj {
            check_len(n, row.len())?;
            if row.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::InvalidParameter("projection entries must be +1 or -1".into()));
            }
        }
        Ok(Self::RandomProjection { proj })
    }

    /// Identity permutation with a zero salt.
    pub fn identity(n: usize) -> Self {
        Self::PermuteSalt { perm: (0..n).collect(), salt: BitVector::zeros(n) }
    }

    pub fn random_permute_salt<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Self::PermuteSalt { perm, salt: BitVector::random(n, rng) }
    }

    pub fn random_projection_key<R: Rng + ?Sized>(rows: usize, n: usize, rng: &mut R) -> Result<Self> {
        let proj = (0..rows)
            .map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
            .collect();
        Self::random_projection(proj)
    }

    pub fn input_len(&self) -> usize {
        match self {
            Self::PermuteSalt { perm, .. } => perm.len(),
            Self::RandomProjection { proj } => proj[0].len(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            Self::PermuteSalt { perm, .. } => perm.len(),
            Self::RandomProjection { proj } => proj.len(),
        }
    }

    pub fn transform(&self, x: &FeatureVector) -> Result<BitVector> {
        check_len(self.input_len(), x.len())?;
        Ok(match self {
            Self::PermuteSalt { perm, salt } => {
                BitVector::from_bits(perm.iter().enumerate().map(|(i, &p)| x.get(p) ^ salt.get(i)))
            }
            Self::RandomProjection { proj } => BitVector::from_bits(proj.iter().map(|row| {
                let dot: i64 = row
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| w as i64 * if x.get(j) { 1 } else { -1 })
                    .sum();
                dot >= 0
            })),
        })
    }

    /// Preimage under a permute-and-salt key. Projections are not invertible.
    pub fn invert(&self, y: &BitVector) -> Result<FeatureVector> {
        match self {
            Self::PermuteSalt { perm, salt } => {
                check_len(perm.len(), y.len())?;
                let mut x = BitVector::zeros(perm.len());
                for (i, &p) in perm.iter().enumerate() {
                    x.set(p, y.get(i) ^ salt.get(i));
                }
                Ok(x)
            }
            Self::RandomProjection { .. } => {
                Err(Error::InvalidParameter("random projections have no inverse".into()))
            }
        }
    }

    /// Number of bits needed to store the key.
    pub fn storage_bits(&self) -> usize {
        match self {
            Self::PermuteSalt { perm, .. } => {
                let n = perm.len();
                let index_bits = if n <= 1 { 0 } else { (usize::BITS - (n - 1).leading_zeros()) as usize };
                n * index_bits + n
            }
            Self::RandomProjection { proj } => proj.len() * proj[0].len(),
        }
    }
}

/// Replaces `old` with a fresh, independently drawn key of the same shape.
pub fn revoke<R: Rng + ?Sized>(old: &TransformKey, rng: &mut R) -> TransformKey {
    match old {
        TransformKey::PermuteSalt { perm, .. } => TransformKey::random_permute_salt(perm.len(), rng),
        TransformKey::RandomProjection { proj } => {
            TransformKey::random_projection_key(proj.len(), proj[0].len(), rng)
                .expect("same shape as a valid key")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancelableTemplate {
    pub bits: BitVector,
    pub tau: f64,
}

/// Matching in the distorted domain with a normalized Hamming threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancelableSystem {
    pub tau: f64,
}

impl CancelableSystem {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [0, 0.5), got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn enroll(&self, key: &TransformKey, a: &FeatureVector) -> Result<CancelableTemplate> {
        Ok(CancelableTemplate { bits: key.transform(a)?, tau: self.tau })
    }

    pub fn authenticate(
        &self,
        presented: &TransformKey,
        template: &CancelableTemplate,
        d: &FeatureVector,
    ) -> Result<Decision> {
        let y = presented.transform(d)?;
        let distance = y.hamming(&template.bits)?;
        let length = template.bits.len();
        Ok(Decision {
            accepted: distance <= acceptance_radius(template.tau, length),
            distance,
            length,
        })
    }
}
