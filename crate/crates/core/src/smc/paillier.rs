//! Paillier encryption with generator `n + 1`.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

const SMALL_PRIMES: [u32; 24] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];
const MILLER_RABIN_ROUNDS: usize = 40;

/// Miller-Rabin with random bases drawn from `rng`.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if n.is_even() {
        return *n == two;
    }
    let n_minus_one = n - 1u32;
    let shift = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd = &n_minus_one >> shift;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&odd, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..shift {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn random_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R, max_candidates: usize) -> Result<BigUint> {
    for _ in 0..max_candidates {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS, rng) {
            return Ok(candidate);
        }
    }
    Err(Error::PrimeSearchExhausted(max_candidates))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PublicKey {
    n: BigUint,
    n_squared: BigUint,
}

impl PublicKey {
    pub fn new(n: BigUint) -> Self {
        let n_squared = &n * &n;
        Self { n, n_squared }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn modulus_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn generator(&self) -> BigUint {
        &self.n + 1u32
    }

    /// Bits needed to store one ciphertext, `⌈log₂ n²⌉`.
    pub fn ciphertext_bits(&self) -> u64 {
        (&self.n_squared - 1u32).bits()
    }

    /// Reduces a signed plaintext into `[0, n)`.
    pub fn reduce(&self, m: &BigInt) -> BigUint {
        let n = BigInt::from_biguint(Sign::Plus, self.n.clone());
        m.mod_floor(&n).to_biguint().expect("mod_floor by a positive modulus is non-negative")
    }

    fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        loop {
            let r = rng.gen_biguint_range(&BigUint::one(), &self.n);
            if r.gcd(&self.n).is_one() {
                return r;
            }
        }
    }

    /// `E(m) = (1 + m n) · rⁿ mod n²` for `m` reduced modulo `n`.
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Ciphertext {
        let m = m % &self.n;
        let r = self.random_unit(rng);
        let gm = (BigUint::one() + m * &self.n) % &self.n_squared;
        Ciphertext((gm * r.modpow(&self.n, &self.n_squared)) % &self.n_squared)
    }

    pub fn encrypt_signed<R: Rng + ?Sized>(&self, m: i64, rng: &mut R) -> Ciphertext {
        self.encrypt(&self.reduce(&BigInt::from(m)), rng)
    }

    fn check(&self, c: &Ciphertext) -> Result<()> {
        if c.0 >= self.n_squared || c.0.is_zero() || !c.0.gcd(&self.n).is_one() {
            Err(Error::NotCoprime)
        } else {
            Ok(())
        }
    }

    /// Ciphertext of the plaintext sum.
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        self.check(a)?;
        self.check(b)?;
        Ok(Ciphertext((&a.0 * &b.0) % &self.n_squared))
    }

    /// Ciphertext of `k · m`; a negative `k` becomes the exponent `n + k`
    /// (reduced modulo `n`).
    pub fn scalar_mul(&self, c: &Ciphertext, k: &BigInt) -> Result<Ciphertext> {
        self.check(c)?;
        Ok(Ciphertext(c.0.modpow(&self.reduce(k), &self.n_squared)))
    }

    pub fn scalar_mul_i64(&self, c: &Ciphertext, k: i64) -> Result<Ciphertext> {
        self.scalar_mul(c, &BigInt::from(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext(pub BigUint);

impl Ciphertext {
    pub fn to_hex(&self) -> String {
        self.0.to_str_radix(16)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        BigUint::parse_bytes(s.as_bytes(), 16)
            .map(Ciphertext)
            .ok_or_else(|| Error::Parse(format!("invalid hex integer {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keypair {
    public: PublicKey,
    lambda: BigUint,
    mu: BigUint,
}

impl Keypair {
    /// Keypair from two distinct primes. Primality is the caller's
    /// responsibility; the remaining structural conditions are checked.
    pub fn from_primes(p: &BigUint, q: &BigUint) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidParameter("primes must be distinct".into()));
        }
        let one = BigUint::one();
        if *p <= one || *q <= one {
            return Err(Error::InvalidParameter("primes must exceed 1".into()));
        }
        let n = p * q;
        let phi = (p - 1u32) * (q - 1u32);
        if !n.gcd(&phi).is_one() {
            return Err(Error::InvalidParameter("gcd(pq, (p-1)(q-1)) must be 1".into()));
        }
        let lambda = (p - 1u32).lcm(&(q - 1u32));
        // With g = n + 1, L(g^λ mod n²) = λ mod n.
        let mu = mod_inverse(&(&lambda % &n), &n)
            .ok_or_else(|| Error::InvalidParameter("lambda is not invertible modulo n".into()))?;
        Ok(Self { public: PublicKey::new(n), lambda, mu })
    }

    pub fn from_u64_primes(p: u64, q: u64) -> Result<Self> {
        Self::from_primes(&BigUint::from(p), &BigUint::from(q))
    }

    /// Deterministic keypair with two `prime_bits`-bit primes.
    pub fn generate(prime_bits: u64, seed: u64) -> Result<Self> {
        if prime_bits < 4 {
            return Err(Error::InvalidParameter("prime_bits must be at least 4".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let budget = 64 * prime_bits as usize + 1000;
        loop {
            let p = random_prime(prime_bits, &mut rng, budget)?;
            let q = random_prime(prime_bits, &mut rng, budget)?;
            if let Ok(kp) = Self::from_primes(&p, &q) {
                return Ok(kp);
            }
        }
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint> {
        let pk = &self.public;
        pk.check(c)?;
        // Every unit modulo n² is a valid ciphertext, so a ciphertext made
        // under another key decrypts to an unrelated value here.
        let u = c.0.modpow(&self.lambda, &pk.n_squared);
        let l = (u - 1u32) / &pk.n;
        Ok((l * &self.mu) % &pk.n)
    }

    /// Decrypts and maps `[⌈n/2⌉, n)` onto the negative integers.
    pub fn decrypt_signed(&self, c: &Ciphertext) -> Result<BigInt> {
        let m = BigInt::from_biguint(Sign::Plus, self.decrypt(c)?);
        let n = BigInt::from_biguint(Sign::Plus, self.public.n.clone());
        Ok(if &m * 2 >= n { m - n } else { m })
    }
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, m.clone());
    let e = a.extended_gcd(&m);
    if !e.gcd.is_one() {
        return None;
    }
    let x = e.x.mod_floor(&m);
    debug_assert!(!x.is_negative());
    x.to_biguint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn tiny_keypair() {
        let kp = Keypair::from_u64_primes(5, 7).unwrap();
        assert_eq!(kp.public().modulus(), &BigUint::from(35u32));
        assert_eq!(kp.public().generator(), BigUint::from(36u32));
        let mut r = rng::stream(1, "tiny");
        for m in 0..35u32 {
            let c = kp.public().encrypt(&BigUint::from(m), &mut r);
            assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(m));
        }
        assert!(Keypair::from_u64_primes(7, 7).is_err());
        // 3 divides (7-1)
        assert!(Keypair::from_u64_primes(3, 7).is_err());
    }

    #[test]
    fn tiny_homomorphisms() {
        let kp = Keypair::from_u64_primes(5, 7).unwrap();
        let pk = kp.public();
        let mut r = rng::stream(2, "hom");
        let e = |m: i64, r: &mut rng::StreamRng| pk.encrypt_signed(m, r);
        let sum = pk.add(&e(3, &mut r), &e(4, &mut r)).unwrap();
        assert_eq!(kp.decrypt(&sum).unwrap(), BigUint::from(7u32));
        let prod = pk.scalar_mul_i64(&e(2, &mut r), 5).unwrap();
        assert_eq!(kp.decrypt(&prod).unwrap(), BigUint::from(10u32));
        let same = pk.add(&e(9, &mut r), &e(0, &mut r)).unwrap();
        assert_eq!(kp.decrypt(&same).unwrap(), BigUint::from(9u32));
        let neg = pk.scalar_mul_i64(&e(3, &mut r), -2).unwrap();
        assert_eq!(kp.decrypt_signed(&neg).unwrap(), BigInt::from(-6));
    }

    #[test]
    fn generated_keys_are_deterministic() {
        let a = Keypair::generate(32, 9).unwrap();
        assert_eq!(a, Keypair::generate(32, 9).unwrap());
        assert_ne!(a.public(), Keypair::generate(32, 10).unwrap().public());
        assert_eq!(a.public().modulus().bits(), 64);
        assert!(Keypair::generate(3, 1).is_err());
        let small = Keypair::generate(4, 1).unwrap();
        let mut r = rng::stream(3, "small");
        let c = small.public().encrypt(&BigUint::from(5u32), &mut r);
        assert_eq!(small.decrypt(&c).unwrap(), BigUint::from(5u32));
    }

    #[test]
    fn primality() {
        let mut r = rng::stream(4, "mr");
        let primes = [2u64, 3, 97, 7919, 2_147_483_647, 1_000_000_007];
        let composites = [1u64, 4, 561, 1105, 7917, 2_147_483_649, 3_215_031_751];
        for p in primes {
            assert!(is_probable_prime(&BigUint::from(p), 20, &mut r), "{p}");
        }
        for c in composites {
            assert!(!is_probable_prime(&BigUint::from(c), 20, &mut r), "{c}");
        }
    }

    #[test]
    fn wrong_key_fails_to_decrypt() {
        let a = Keypair::generate(64, 1).unwrap();
        let b = Keypair::generate(64, 2).unwrap();
        let mut r = rng::stream(5, "wrong");
        let c = a.public().encrypt(&BigUint::from(12u32), &mut r);
        assert!(b.decrypt(&c).map_or(true, |m| m != BigUint::from(12u32)));
        assert!(matches!(a.decrypt(&Ciphertext(BigUint::zero())), Err(Error::NotCoprime)));
        assert!(matches!(a.decrypt(&Ciphertext(a.public().modulus().clone())), Err(Error::NotCoprime)));
    }

    #[test]
    fn hex_round_trip() {
        let c = Ciphertext(BigUint::from(0xdead_beefu64));
        assert_eq!(c.to_hex(), "deadbeef");
        assert_eq!(Ciphertext::from_hex("deadbeef").unwrap(), c);
        assert!(Ciphertext::from_hex("xyz").is_err());
    }
}
