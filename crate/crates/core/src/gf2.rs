//! Dense linear algebra over GF(2): parity-check and generator matrices,
//! syndromes, cosets and exhaustive decoding.

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{check_len, Error, Result};

/// Default bound on the number of vectors any enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// Largest syndrome length for which a coset-leader table is built.
const LEADER_TABLE_MAX_M: usize = 24;

pub(crate) fn ensure_enumerable(log2_size: usize, cap: u64) -> Result<()> {
    if log2_size >= 64 || (1u64 << log2_size) > cap {
        Err(Error::EnumerationCap { log2_size, cap })
    } else {
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn from_rows(rows: Vec<BitVector>, cols: usize) -> Result<Self> {
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(Self { cols, rows })
    }

    /// Parses rows written as bit strings, e.g. `["1011", "0111"]`.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let rows = rows.iter().map(|r| r.parse()).collect::<Result<Vec<BitVector>>>()?;
        let cols = rows.first().map_or(0, BitVector::len);
        Self::from_rows(rows, cols)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { cols, rows: vec![BitVector::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self { cols, rows: (0..rows).map(|_| BitVector::random(cols, rng)).collect() }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    /// `self · x` over GF(2).
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector> {
        check_len(self.cols, x.len())?;
        Ok(BitVector::from_bits(self.rows.iter().map(|r| r.dot(x))))
    }

    /// `selfᵀ · z`: the XOR of the rows selected by `z`.
    pub fn transpose_mul_vec(&self, z: &BitVector) -> Result<BitVector> {
        check_len(self.rows.len(), z.len())?;
        let mut out = BitVector::zeros(self.cols);
        for (i, r) in self.rows.iter().enumerate() {
            if z.get(i) {
                out.xor_in_place(r);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            for j in 0..self.cols {
                if r.get(j) {
                    t.rows[j].set(i, true);
                }
            }
        }
        t
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        check_len(self.cols, other.rows.len())?;
        let rows = self.rows.iter().map(|r| other.transpose_mul_vec(r)).collect::<Result<Vec<_>>>()?;
        BitMatrix::from_rows(rows, other.cols)
    }

    /// Vertical concatenation `[self; other]`.
    pub fn stack(&self, other: &BitMatrix) -> Result<BitMatrix> {
        check_len(self.cols, other.cols)?;
        let rows = self.rows.iter().chain(&other.rows).cloned().collect();
        BitMatrix::from_rows(rows, self.cols)
    }

    /// Reduced row-echelon form and its pivot columns. Pivots are chosen
    /// left to right, taking the first eligible row each time.
    pub fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.cols {
            let Some(found) = (next..m.rows.len()).find(|&r| m.rows[r].get(col)) else {
                continue;
            };
            m.rows.swap(next, found);
            let pivot_row = m.rows[next].clone();
            for r in 0..m.rows.len() {
                if r != next && m.rows[r].get(col) {
                    m.rows[r].xor_in_place(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
            if next == m.rows.len() {
                break;
            }
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : self · x = 0}`, one vector per free column.
    pub fn null_space(&self) -> Vec<BitVector> {
        let (r, pivots) = self.rref();
        (0..self.cols)
            .filter(|c| !pivots.contains(c))
            .map(|free| {
                let mut x = BitVector::zeros(self.cols);
                x.set(free, true);
                for (row, &p) in pivots.iter().enumerate() {
                    if r.rows[row].get(free) {
                        x.set(p, true);
                    }
                }
                x
            })
            .collect()
    }

    /// Some `x` with `self · x = s`, or `None` when `s` is outside the column space.
    pub fn solve(&self, s: &BitVector) -> Result<Option<BitVector>> {
        check_len(self.rows.len(), s.len())?;
        let augmented = BitMatrix {
            cols: self.cols + 1,
            rows: self
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.concat(&BitVector::from_bits([s.get(i)])))
                .collect(),
        };
        let (r, pivots) = augmented.rref();
        if pivots.contains(&self.cols) {
            return Ok(None);
        }
        let mut x = BitVector::zeros(self.cols);
        for (row, &p) in pivots.iter().enumerate() {
            x.set(p, r.rows[row].get(self.cols));
        }
        Ok(Some(x))
    }

    /// Plain-text form: one row of `0`/`1` per line. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<Vec<BitVector>>>()?;
        let cols = rows.first().map_or(0, BitVector::len);
        Self::from_rows(rows, cols)
    }

    pub fn to_text(&self) -> String {
        self.rows.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let m: BitMatrix = serde_json::from_str(json)?;
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.to_string())).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    bits: Vec<Vec<u8>>,
}

impl Serialize for BitMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows.len(),
            cols: self.cols,
            bits: self.rows.iter().map(|r| r.iter().map(u8::from).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MatrixJson::deserialize(d)?;
        if raw.bits.len() != raw.rows {
            return Err(D::Error::custom(format!("expected {} rows, found {}", raw.rows, raw.bits.len())));
        }
        let rows = raw
            .bits
            .iter()
            .map(|r| {
                if r.len() != raw.cols {
                    return Err(D::Error::custom(format!("row of length {} in a {}-column matrix", r.len(), raw.cols)));
                }
                r.iter()
                    .map(|&b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(D::Error::custom(format!("matrix entry {other} is not a bit"))),
                    })
                    .collect::<std::result::Result<Vec<bool>, _>>()
                    .map(BitVector::from_bits)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(BitMatrix { cols: raw.cols, rows })
    }
}

/// Generator matrix whose rows form a basis of the null space of `h`.
pub fn derive_generator(h: &BitMatrix) -> Result<BitMatrix> {
    let rank = h.rank();
    if rank != h.num_rows() {
        return Err(Error::RankDeficient { rank, rows: h.num_rows() });
    }
    BitMatrix::from_rows(h.null_space(), h.num_cols())
}

/// All vectors sharing one syndrome, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coset {
    pub syndrome: BitVector,
    pub members: Vec<BitVector>,
}

impl Coset {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &BitVector) -> bool {
        self.members.binary_search(x).is_ok()
    }

    /// Smallest Hamming distance from `x` to a member.
    pub fn distance(&self, x: &BitVector) -> Option<usize> {
        self.members.iter().map(|c| c.hamming_unchecked(x)).min()
    }
}

/// Minimum noise weight per syndrome, found by breadth-first search over the
/// syndrome space with the columns of `H` as generators.
#[derive(Debug, Clone)]
pub struct CosetLeaderTable {
    weights: Vec<u8>,
}

impl CosetLeaderTable {
    fn build(h: &BitMatrix) -> Option<Self> {
        let m = h.num_rows();
        if m > LEADER_TABLE_MAX_M {
            return None;
        }
        let columns: Vec<u32> = (0..h.num_cols())
            .map(|c| (0..m).fold(0u32, |acc, r| acc | ((h.get(r, c) as u32) << r)))
            .collect();
        let mut weights = vec![u8::MAX; 1 << m];
        weights[0] = 0;
        let mut queue = VecDeque::from([0u32]);
        while let Some(s) = queue.pop_front() {
            let w = weights[s as usize];
            for &c in &columns {
                let t = (s ^ c) as usize;
                if weights[t] == u8::MAX {
                    weights[t] = w + 1;
                    queue.push_back(t as u32);
                }
            }
        }
        Some(Self { weights })
    }

    /// Weight of the lightest vector with this syndrome.
    pub fn leader_weight(&self, syndrome: &BitVector) -> usize {
        self.weights[syndrome.low_word() as usize] as usize
    }

    /// Number of syndromes whose coset leader weighs at most `radius`.
    pub fn count_within(&self, radius: usize) -> usize {
        self.weights.iter().filter(|&&w| (w as usize) <= radius).count()
    }
}

/// A binary linear code given by a full-rank parity-check matrix.
#[derive(Clone)]
pub struct LinearCode {
    h: BitMatrix,
    g: BitMatrix,
    leaders: OnceLock<Option<CosetLeaderTable>>,
}

impl fmt::Debug for LinearCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearCode").field("h", &self.h).field("g", &self.g).finish()
    }
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h
    }
}

impl LinearCode {
    pub fn new(h: BitMatrix) -> Result<Self> {
        let g = derive_generator(&h)?;
        Ok(Self { h, g, leaders: OnceLock::new() })
    }

    /// Random `m x n` code with full row rank.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidParameter(format!("m={m} exceeds n={n}")));
        }
        loop {
            let h = BitMatrix::random(m, n, rng);
            if h.rank() == m {
                return Self::new(h);
            }
        }
    }

    pub fn h(&self) -> &BitMatrix {
        &self.h
    }

    pub fn g(&self) -> &BitMatrix {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.h.num_cols()
    }

    pub fn m(&self) -> usize {
        self.h.num_rows()
    }

    pub fn k(&self) -> usize {
        self.n() - self.m()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn syndrome(&self, x: &BitVector) -> Result<BitVector> {
        self.h.mul_vec(x)
    }

    /// The codeword `Gᵀ z`.
    pub fn encode(&self, z: &BitVector) -> Result<BitVector> {
        self.g.transpose_mul_vec(z)
    }

    /// All codewords, paired with their messages, in message order.
    pub fn codewords(&self, cap: u64) -> Result<Vec<(BitVector, BitVector)>> {
        ensure_enumerable(self.k(), cap)?;
        Ok(BitVector::all(self.k())
            .map(|z| {
                let c = self.g.transpose_mul_vec(&z).expect("message length is k");
                (z, c)
            })
            .collect())
    }

    /// Exact solution set of `H x = syndrome`.
    pub fn enumerate_coset(&self, syndrome: &BitVector, cap: u64) -> Result<Coset> {
        check_len(self.m(), syndrome.len())?;
        ensure_enumerable(self.k(), cap)?;
        let base = self.h.solve(syndrome)?.expect("full-rank H reaches every syndrome");
        let mut members: Vec<BitVector> = BitVector::all(self.k())
            .map(|z| {
                let mut x = self.g.transpose_mul_vec(&z).expect("message length is k");
                x.xor_in_place(&base);
                x
            })
            .collect();
        members.sort();
        Ok(Coset { syndrome: syndrome.clone(), members })
    }

    /// Coset member closest to `probe`; ties go to the lexicographically smallest member.
    pub fn syndrome_decode(&self, probe: &BitVector, syndrome: &BitVector, cap: u64) -> Result<BitVector> {
        check_len(self.n(), probe.len())?;
        let coset = self.enumerate_coset(syndrome, cap)?;
        Ok(coset
            .members
            .into_iter()
            .min_by_key(|c| c.hamming_unchecked(probe))
            .expect("cosets are never empty"))
    }

    /// Hamming distance from `x` to the coset of `syndrome`, i.e. the weight
    /// of the coset leader of `H x ⊕ syndrome`.
    pub fn coset_distance(&self, x: &BitVector, syndrome: &BitVector, cap: u64) -> Result<usize> {
        let mut s = self.syndrome(x)?;
        check_len(self.m(), syndrome.len())?;
        s.xor_in_place(syndrome);
        match self.leader_table() {
            Some(table) => Ok(table.leader_weight(&s)),
            None => {
                let coset = self.enumerate_coset(syndrome, cap)?;
                Ok(coset.distance(x).expect("cosets are never empty"))
            }
        }
    }

    /// Lazily built coset-leader weights; `None` when `m` is too large.
    pub fn leader_table(&self) -> Option<&CosetLeaderTable> {
        self.leaders.get_or_init(|| CosetLeaderTable::build(&self.h)).as_ref()
    }

    /// Minimum distance by enumeration of nonzero codewords; `None` when `k = 0`.
    pub fn min_distance(&self, cap: u64) -> Result<Option<usize>> {
        Ok(self.codewords(cap)?.iter().map(|(_, c)| c.weight()).filter(|&w| w > 0).min())
    }
}

impl Serialize for LinearCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.h.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let h = BitMatrix::deserialize(d)?;
        LinearCode::new(h).map_err(serde::de::Error::custom)
    }
}
