use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::Result;
use crate::gf2::{ensure_enumerable, LinearCode, DEFAULT_ENUMERATION_CAP};

/// Side information held by the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct AttackView {
    pub knows_s: bool,
    pub knows_k: bool,
    pub knows_a: bool,
}

impl AttackView {
    pub const NONE: Self = Self { knows_s: false, knows_k: false, knows_a: false };
    pub const S: Self = Self { knows_s: true, knows_k: false, knows_a: false };
    pub const K: Self = Self { knows_s: false, knows_k: true, knows_a: false };
    pub const A: Self = Self { knows_s: false, knows_k: false, knows_a: true };
    pub const SK: Self = Self { knows_s: true, knows_k: true, knows_a: false };

    /// Short column label: `none`, `s`, `k`, `a`, `s_k`, ...
    pub fn label(&self) -> String {
        let parts: Vec<&str> = [(self.knows_s, "s"), (self.knows_k, "k"), (self.knows_a, "a")]
            .into_iter()
            .filter_map(|(on, l)| on.then_some(l))
            .collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("_")
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        if label == "none" {
            return Some(Self::NONE);
        }
        let mut v = Self::NONE;
        for part in label.split(['_', ',', '+']) {
            match part.trim().to_ascii_lowercase().as_str() {
                "s" => v.knows_s = true,
                "k" => v.knows_k = true,
                "a" => v.knows_a = true,
                _ => return None,
            }
        }
        Some(v)
    }
}

/// `I(X; Y)` in bits from a (not necessarily normalized) joint distribution.
pub fn mutual_information<X: Ord, Y: Ord>(joint: impl IntoIterator<Item = (X, Y, f64)>) -> f64 {
    let mut pxy: BTreeMap<(X, Y), f64> = BTreeMap::new();
    for (x, y, p) in joint {
        *pxy.entry((x, y)).or_default() += p;
    }
    let total: f64 = pxy.values().sum();
    let mut px: BTreeMap<&X, f64> = BTreeMap::new();
    let mut py: BTreeMap<&Y, f64> = BTreeMap::new();
    for ((x, y), p) in &pxy {
        *px.entry(x).or_default() += p;
        *py.entry(y).or_default() += p;
    }
    let mi: f64 = pxy
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((x, y), &p)| p / total * (p * total / (px[x] * py[y])).log2())
        .sum();
    mi.max(0.0)
}

/// `I(X(U); Y(U))` for `U` uniform over `bits`-bit vectors.
pub fn exact_mutual_information<X, Y, FX, FY>(bits: usize, cap: u64, x: FX, y: FY) -> Result<f64>
where
    X: Ord,
    Y: Ord,
    FX: Fn(&BitVector) -> X,
    FY: Fn(&BitVector) -> Y,
{
    ensure_enumerable(bits, cap)?;
    Ok(mutual_information(BitVector::all(bits).map(|u| (x(&u), y(&u), 1.0))))
}

/// Enrollment schemes whose stored data can be enumerated exactly. Each is
/// driven by a uniform enrollment `A` and uniform auxiliary randomness.
#[derive(Debug, Clone, Copy)]
pub enum Scheme<'a> {
    /// `S = H A`.
    KeylessSketch(&'a LinearCode),
    /// `S = H (A ⊕ K)` with a uniform salt `K`.
    TwoFactorSketch(&'a LinearCode),
    /// `S = Gᵀ Z ⊕ A` with a uniform message `Z`, which plays the key's part.
    Commitment(&'a LinearCode),
    /// `S = A ⊕ K` with a uniform salt `K`.
    CancelableSalt { n: usize },
    /// `S = A` or its complement, with a fair coin `K` choosing which.
    BitNegation { n: usize },
}

impl Scheme<'_> {
    pub fn n(&self) -> usize {
        match self {
            Scheme::KeylessSketch(c) | Scheme::TwoFactorSketch(c) | Scheme::Commitment(c) => c.n(),
            Scheme::CancelableSalt { n } | Scheme::BitNegation { n } => *n,
        }
    }

    fn aux_bits(&self) -> usize {
        match self {
            Scheme::KeylessSketch(_) => 0,
            Scheme::TwoFactorSketch(_) | Scheme::CancelableSalt { .. } => self.n(),
            Scheme::Commitment(c) => c.k(),
            Scheme::BitNegation { .. } => 1,
        }
    }

    /// Splits the joint outcome into `(A, K, S)`.
    fn realize(&self, u: &BitVector) -> (BitVector, BitVector, BitVector) {
        let n = self.n();
        let a = BitVector::from_bits(u.iter().take(n));
        let k = BitVector::from_bits(u.iter().skip(n));
        let s = match self {
            Scheme::KeylessSketch(c) => c.syndrome(&a).expect("length n"),
            Scheme::TwoFactorSketch(c) => c.syndrome(&a.xor(&k).expect("length n")).expect("length n"),
            Scheme::Commitment(c) => {
                let mut s = c.encode(&k).expect("length k");
                s.xor_in_place(&a);
                s
            }
            Scheme::CancelableSalt { .. } => a.xor(&k).expect("length n"),
            Scheme::BitNegation { .. } => {
                if k.get(0) {
                    a.not()
                } else {
                    a.clone()
                }
            }
        };
        (a, k, s)
    }

    fn visible(view: AttackView, a: &BitVector, k: &BitVector, s: &BitVector) -> Vec<BitVector> {
        let mut v = Vec::new();
        if view.knows_s {
            v.push(s.clone());
        }
        if view.knows_k {
            v.push(k.clone());
        }
        if view.knows_a {
            v.push(a.clone());
        }
        v
    }

    fn outcomes(&self) -> Result<impl Iterator<Item = (BitVector, BitVector, BitVector)> + '_> {
        let bits = self.n() + self.aux_bits();
        ensure_enumerable(bits, DEFAULT_ENUMERATION_CAP)?;
        Ok(BitVector::all(bits).map(|u| self.realize(&u)))
    }

    /// `I(A; V)` in bits.
    pub fn leakage(&self, view: AttackView) -> Result<f64> {
        Ok(mutual_information(self.outcomes()?.map(|(a, k, s)| {
            let v = Self::visible(view, &a, &k, &s);
            (a, v, 1.0)
        })))
    }

    /// `I(K; S)`: for the commitment, how much the stored data reveals about
    /// the bound message.
    pub fn key_leakage(&self) -> Result<f64> {
        Ok(mutual_information(self.outcomes()?.map(|(_, k, s)| (k, s, 1.0))))
    }

    /// Expected normalized Hamming distortion of the best estimate of `A`
    /// from `V`, attained by the bitwise posterior mode.
    pub fn reconstruction_distortion(&self, view: AttackView) -> Result<f64> {
        let n = self.n();
        // For each view value: total mass and per-bit mass of A_i = 1.
        let mut table: BTreeMap<Vec<BitVector>, (f64, Vec<f64>)> = BTreeMap::new();
        let mut total = 0.0;
        for (a, k, s) in self.outcomes()? {
            let entry = table.entry(Self::visible(view, &a, &k, &s)).or_insert_with(|| (0.0, vec![0.0; n]));
            entry.0 += 1.0;
            for (i, bit) in a.iter().enumerate() {
                entry.1[i] += u8::from(bit) as f64;
            }
            total += 1.0;
        }
        let errors: f64 = table
            .values()
            .map(|(mass, ones)| ones.iter().map(|&o| o.min(mass - o)).sum::<f64>())
            .sum();
        Ok(if n == 0 { 0.0 } else { errors / (total * n as f64) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitMatrix;
    use crate::rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn mutual_information_basics() {
        // X = Y uniform on 4 values: 2 bits
        assert!(close(mutual_information((0..4).map(|i| (i, i, 0.25))), 2.0));
        // independent
        assert!(close(mutual_information((0..4).map(|i| (i % 2, i / 2, 1.0))), 0.0));
        let parity = exact_mutual_information(3, 1 << 10, |u| u.get(0), |u| u.weight() % 2).unwrap();
        assert!(close(parity, 0.0));
        assert!(exact_mutual_information(30, 1 << 10, |u| u.get(0), |u| u.get(0)).is_err());
    }

    #[test]
    fn sketch_leaks_m_bits() {
        let h = BitMatrix::parse_rows(&["1011", "0111"]).unwrap();
        let code = LinearCode::new(h).unwrap();
        assert!(close(Scheme::KeylessSketch(&code).leakage(AttackView::S).unwrap(), 2.0));
        assert!(close(Scheme::KeylessSketch(&code).leakage(AttackView::NONE).unwrap(), 0.0));
        let mut r = rng::stream(1, "leak");
        for (n, m) in [(8, 3), (6, 5)] {
            let code = LinearCode::random(n, m, &mut r).unwrap();
            assert!(close(Scheme::KeylessSketch(&code).leakage(AttackView::S).unwrap(), m as f64));
            let tf = Scheme::TwoFactorSketch(&code);
            assert!(close(tf.leakage(AttackView::S).unwrap(), 0.0));
            assert!(close(tf.leakage(AttackView::K).unwrap(), 0.0));
            assert!(close(tf.leakage(AttackView::SK).unwrap(), m as f64));
            let fc = Scheme::Commitment(&code);
            assert!(close(fc.leakage(AttackView::S).unwrap(), m as f64));
            assert!(close(fc.key_leakage().unwrap(), 0.0));
        }
    }

    #[test]
    fn salt_and_negation() {
        let salt = Scheme::CancelableSalt { n: 6 };
        assert!(close(salt.leakage(AttackView::S).unwrap(), 0.0));
        assert!(close(salt.leakage(AttackView::SK).unwrap(), 6.0));
        let neg = Scheme::BitNegation { n: 4 };
        assert!(close(neg.leakage(AttackView::S).unwrap(), 3.0));
        assert!(close(neg.reconstruction_distortion(AttackView::S).unwrap(), 0.5));
        assert!(close(neg.reconstruction_distortion(AttackView::A).unwrap(), 0.0));
        assert!(close(neg.reconstruction_distortion(AttackView::NONE).unwrap(), 0.5));
        assert!(close(neg.reconstruction_distortion(AttackView::SK).unwrap(), 0.0));
    }

    #[test]
    fn view_labels() {
        assert_eq!(AttackView::NONE.label(), "none");
        assert_eq!(AttackView::SK.label(), "s_k");
        for v in [AttackView::NONE, AttackView::S, AttackView::SK, AttackView::A] {
            assert_eq!(AttackView::parse(&v.label()), Some(v));
        }
        assert_eq!(AttackView::parse("x"), None);
    }

    #[test]
    fn knowing_more_never_leaks_less() {
        let mut r = rng::stream(2, "dp");
        let code = LinearCode::random(6, 3, &mut r).unwrap();
        for scheme in [Scheme::KeylessSketch(&code), Scheme::TwoFactorSketch(&code), Scheme::Commitment(&code)] {
            assert!(scheme.leakage(AttackView::S).unwrap() <= scheme.leakage(AttackView::SK).unwrap() + 1e-9);
        }
    }
}
