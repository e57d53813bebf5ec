//! Encrypted squared-distance evaluation and the blinded threshold comparison.
//!
//! The device holds `E(aᵢ)` and `E(Σaᵢ²)` under the claimant's public key and
//! evaluates `E(Σaᵢ²)·E(Σdᵢ²)·∏E(aᵢ)^(-2dᵢ) = E(Σ(aᵢ-dᵢ)²)`. To compare the
//! distance against its private threshold `θ` it sends the claimant
//! `E(s·(dist-θ-1) + r)` for random `s ≥ 1` and `0 ≤ r < s`. The sign of that
//! value equals the sign of `dist-θ-1`, so the claimant can report "below
//! threshold" without seeing the distance or the threshold directly.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use rand::Rng;

use crate::bits::FeatureVector;
use crate::error::{check_len, Error, Result};
use crate::smc::paillier::{Ciphertext, Keypair, PublicKey};

/// Upper bound on the multiplicative blinding factor.
pub const DEFAULT_MAX_BLINDING: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedTemplate {
    pub elements: Vec<Ciphertext>,
    pub sum_squares: Ciphertext,
}

impl EncryptedTemplate {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `n + 1` ciphertexts of `⌈log₂ N²⌉` bits each.
    pub fn storage_bits(&self, pk: &PublicKey) -> u64 {
        (self.elements.len() as u64 + 1) * pk.ciphertext_bits()
    }
}

pub fn features_of(v: &FeatureVector) -> Vec<u64> {
    v.iter().map(u64::from).collect()
}

pub fn encrypt_template<R: Rng + ?Sized>(pk: &PublicKey, a: &[u64], rng: &mut R) -> EncryptedTemplate {
    let sum_squares: BigUint = a.iter().map(|&x| BigUint::from(x) * x).sum();
    EncryptedTemplate {
        elements: a.iter().map(|&x| pk.encrypt(&BigUint::from(x), rng)).collect(),
        sum_squares: pk.encrypt(&sum_squares, rng),
    }
}

/// `E(Σ(aᵢ - dᵢ)²)` computed from the encrypted template and a plaintext probe.
pub fn encrypted_distance<R: Rng + ?Sized>(
    pk: &PublicKey,
    template: &EncryptedTemplate,
    d: &[u64],
    rng: &mut R,
) -> Result<Ciphertext> {
    check_len(template.len(), d.len())?;
    let probe_squares: BigUint = d.iter().map(|&x| BigUint::from(x) * x).sum();
    let mut acc = pk.add(&template.sum_squares, &pk.encrypt(&probe_squares, rng))?;

    // ∏ E(aᵢ)^(-2dᵢ): group equal dᵢ so each distinct value costs one exponentiation.
    let mut groups: BTreeMap<u64, BigUint> = BTreeMap::new();
    for (c, &x) in template.elements.iter().zip(d) {
        if x != 0 {
            let slot = groups.entry(x).or_insert_with(|| BigUint::from(1u32));
            *slot = (&*slot * &c.0) % pk.modulus_squared();
        }
    }
    for (x, product) in groups {
        let k = BigInt::from(x) * -2;
        acc = pk.add(&acc, &pk.scalar_mul(&Ciphertext(product), &k)?)?;
    }
    Ok(acc)
}

/// Multiplicative and additive masks for one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blinding {
    pub s: u64,
    pub r: u64,
}

impl Blinding {
    pub fn new(s: u64, r: u64) -> Result<Self> {
        if s == 0 || r >= s {
            return Err(Error::InvalidParameter(format!("blinding needs s >= 1 and r < s (s={s}, r={r})")));
        }
        Ok(Self { s, r })
    }

    /// Largest admissible `s` such that `|s·x' + r| < N/2` for every
    /// `x' ∈ [-θ-1, max_distance-θ-1]`.
    pub fn max_factor(pk: &PublicKey, max_distance: u64, theta: u64, cap: u64) -> Result<u64> {
        let spread = BigUint::from(max_distance.max(theta + 1)) + 1u32;
        let half = pk.modulus() / 2u32;
        let limit = half / spread;
        let limit = u64::try_from(limit).unwrap_or(u64::MAX).min(cap);
        if limit == 0 {
            return Err(Error::InvalidParameter(
                "modulus too small to blind this distance range".into(),
            ));
        }
        Ok(limit)
    }

    pub fn draw<R: Rng + ?Sized>(pk: &PublicKey, max_distance: u64, theta: u64, cap: u64, rng: &mut R) -> Result<Self> {
        let s_max = Self::max_factor(pk, max_distance, theta, cap)?;
        let s = rng.gen_range(1..=s_max);
        let r = rng.gen_range(0..s);
        Self::new(s, r)
    }
}

/// Device side: `E(s·(dist - θ - 1) + r)`.
pub fn blind<R: Rng + ?Sized>(
    pk: &PublicKey,
    distance: &Ciphertext,
    theta: u64,
    blinding: Blinding,
    rng: &mut R,
) -> Result<Ciphertext> {
    let shift = pk.encrypt(&pk.reduce(&(-BigInt::from(theta) - 1)), rng);
    let shifted = pk.add(distance, &shift)?;
    let scaled = pk.scalar_mul(&shifted, &BigInt::from(blinding.s))?;
    pk.add(&scaled, &pk.encrypt(&BigUint::from(blinding.r), rng))
}

/// Claimant side: decrypts the blinded value and reports whether it is negative.
pub fn claimant_sign(keypair: &Keypair, blinded: &Ciphertext) -> Result<bool> {
    Ok(keypair.decrypt_signed(blinded)?.is_negative())
}

/// Full comparison with both roles in one process: accepts iff `dist ≤ θ`.
pub fn compare_local<R: Rng + ?Sized>(
    keypair: &Keypair,
    distance: &Ciphertext,
    theta: u64,
    blinding: Blinding,
    rng: &mut R,
) -> Result<bool> {
    let blinded = blind(keypair.public(), distance, theta, blinding, rng)?;
    claimant_sign(keypair, &blinded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::rng;

    #[test]
    fn distance_examples() {
        let kp = Keypair::from_u64_primes(5, 7).unwrap();
        let pk = kp.public();
        let mut r = rng::stream(1, "dist");
        let a = features_of(&bits("1011"));
        let t = encrypt_template(pk, &a, &mut r);
        let d = features_of(&bits("1101"));
        let c = encrypted_distance(pk, &t, &d, &mut r).unwrap();
        assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(2u32));
        let c = encrypted_distance(pk, &t, &a, &mut r).unwrap();
        assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(0u32));
        let zeros = encrypt_template(pk, &[0; 6], &mut r);
        let c = encrypted_distance(pk, &zeros, &[1; 6], &mut r).unwrap();
        assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(6u32));
        assert!(encrypted_distance(pk, &zeros, &[1; 5], &mut r).is_err());
    }

    #[test]
    fn integer_features() {
        let kp = Keypair::generate(32, 3).unwrap();
        let pk = kp.public();
        let mut r = rng::stream(2, "int");
        let a = [3u64, 0, 7, 2];
        let d = [1u64, 4, 7, 0];
        let t = encrypt_template(pk, &a, &mut r);
        let c = encrypted_distance(pk, &t, &d, &mut r).unwrap();
        assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(4u32 + 16 + 0 + 4));
    }

    #[test]
    fn comparison_examples() {
        let kp = Keypair::from_u64_primes(5, 7).unwrap();
        let pk = kp.public();
        let mut r = rng::stream(3, "cmp");
        // dist = 2, theta = 3, s = 2, r = 1: blinded value 2(2-4)+1 = -3
        let dist = pk.encrypt(&BigUint::from(2u32), &mut r);
        let blinded = blind(pk, &dist, 3, Blinding::new(2, 1).unwrap(), &mut r).unwrap();
        assert_eq!(kp.decrypt_signed(&blinded).unwrap(), BigInt::from(-3));
        assert!(claimant_sign(&kp, &blinded).unwrap());

        let kp = Keypair::generate(64, 4).unwrap();
        let pk = kp.public();
        let at_boundary = pk.encrypt(&BigUint::from(4u32), &mut r);
        let at_theta = pk.encrypt(&BigUint::from(3u32), &mut r);
        for _ in 0..50 {
            let b = Blinding::draw(pk, 12, 3, DEFAULT_MAX_BLINDING, &mut r).unwrap();
            assert!(!compare_local(&kp, &at_boundary, 3, b, &mut r).unwrap());
            assert!(compare_local(&kp, &at_theta, 3, b, &mut r).unwrap());
        }
    }

    #[test]
    fn blinding_bounds() {
        assert!(Blinding::new(0, 0).is_err());
        assert!(Blinding::new(3, 3).is_err());
        let tiny = Keypair::from_u64_primes(5, 7).unwrap();
        // N/2 = 17 and the spread is max(12, 4) + 1 = 13: only s = 1 fits
        assert_eq!(Blinding::max_factor(tiny.public(), 12, 3, DEFAULT_MAX_BLINDING).unwrap(), 1);
        assert!(Blinding::max_factor(tiny.public(), 40, 3, DEFAULT_MAX_BLINDING).is_err());
    }

    #[test]
    fn blinded_values_vary() {
        let kp = Keypair::generate(64, 5).unwrap();
        let pk = kp.public();
        let mut r = rng::stream(4, "vary");
        let dist = pk.encrypt(&BigUint::from(5u32), &mut r);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..20 {
            let b = Blinding::draw(pk, 16, 7, DEFAULT_MAX_BLINDING, &mut r).unwrap();
            let c = blind(pk, &dist, 7, b, &mut r).unwrap();
            seen.insert(kp.decrypt_signed(&c).unwrap());
        }
        assert!(seen.len() > 1);
        assert!(seen.iter().all(|v| v.is_negative()));
    }
}
