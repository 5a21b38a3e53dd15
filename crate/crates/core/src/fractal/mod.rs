//! Discrete fractal percolation `Q_d(p; k)` as Bernoulli bond percolation on
//! the `2^d`-ary tree of height `k`.
//!
//! Vertices are words over the alphabet `{0,1}^d`; the word `(θ_1, …, θ_j)`
//! labels the block `−2^{k−1}·1 + Σ_i 2^{k−i} θ_i + Δ_{k−j}` of `Δ_k`. A leaf
//! point survives iff every edge on its root path is open. Edge coins come
//! from [`StreamKey`]s split along the word, so a coin depends only on the
//! run key and the path.

mod chain;
mod exact;
mod sampler;

pub use chain::{
    chain_chi_square, chain_transition_kernel, leaf_chain, ChiSquareReport, LeafChainState, TransitionKernel,
};
pub use exact::{hit_probability_exact, pair_probability, survival_probability, PairProbability};
pub use sampler::{
    sample, sample_from_key, sample_pruned, sample_pruned_from_key, survives, survives_path, PercolationSample,
};

use crate::error::{Error, Result};
use crate::lattice::{cube_offset, LatticePoint, MAX_DIM};
use crate::rng::StreamKey;

/// Largest `d·k` supported by the word encoding.
pub const MAX_WORD_BITS: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PercolationParams {
    d: usize,
    p: f64,
    k: u32,
}

impl PercolationParams {
    pub fn new(d: usize, p: f64, k: u32) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidDimension(d));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
        }
        if d as u32 * k > MAX_WORD_BITS {
            return Err(Error::InvalidParameter(format!(
                "d·k = {} exceeds {MAX_WORD_BITS}",
                d as u32 * k
            )));
        }
        Ok(PercolationParams { d, p, k })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn with_level(&self, k: u32) -> Result<Self> {
        Self::new(self.d, self.p, k)
    }

    /// Mean offspring `2^d p` of the cube-counting branching process.
    pub fn mean_offspring(&self) -> f64 {
        (1u64 << self.d) as f64 * self.p
    }

    /// `p > 2^{-d}`.
    pub fn is_supercritical(&self) -> bool {
        self.mean_offspring() > 1.0
    }

    /// `β = −log₂(2^d p q)` for a partner retention probability `q`.
    pub fn sum_exponent(&self, q: f64) -> f64 {
        -((1u64 << self.d) as f64 * self.p * q).log2()
    }

    /// Both parameters above `2^{-d}` and `β > 0`.
    pub fn sum_condition_holds(&self, q: f64) -> bool {
        let thr = 1.0 / (1u64 << self.d) as f64;
        self.p > thr && q > thr && self.sum_exponent(q) > 0.0
    }

    pub fn children(&self) -> usize {
        1 << self.d
    }
}

/// Word over `{0,1}^d`. Letter bit `d−1−a` holds coordinate `a`, so numeric
/// order of letters (and of concatenated indices) is lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeWord {
    d: u8,
    letters: Vec<u8>,
}

impl TreeWord {
    pub fn new(d: usize, letters: Vec<u8>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidDimension(d));
        }
        if let Some(bad) = letters.iter().find(|&&l| (l as usize) >= (1 << d)) {
            return Err(Error::InvalidParameter(format!("letter {bad} has more than {d} bits")));
        }
        Ok(TreeWord { d: d as u8, letters })
    }

    pub fn empty(d: usize) -> Result<Self> {
        Self::new(d, Vec::new())
    }

    /// Word of length `len` with the given base-`2^d` index.
    pub fn from_index(d: usize, len: u32, index: u64) -> Result<Self> {
        let letters = (0..len)
            .rev()
            .map(|t| ((index >> (t as usize * d)) & ((1 << d) - 1)) as u8)
            .collect();
        Self::new(d, letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    /// Concatenated letters as a base-`2^d` integer.
    pub fn index(&self) -> u64 {
        self.letters.iter().fold(0u64, |acc, &l| (acc << self.d) | l as u64)
    }

    /// The bit vector `θ_i ∈ {0,1}^d` of letter `i` (0-based).
    pub fn theta(&self, i: usize) -> Vec<u8> {
        letter_bits(self.d as usize, self.letters[i])
    }

    /// Key of the vertex this word names, derived from the root key.
    pub fn key(&self, root: StreamKey) -> StreamKey {
        self.letters.iter().fold(root, |k, &l| k.split(l as u64))
    }

    /// Length of the common prefix with another word.
    pub fn common_prefix(&self, other: &TreeWord) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }
}

pub(crate) fn letter_bits(d: usize, letter: u8) -> Vec<u8> {
    (0..d).map(|a| (letter >> (d - 1 - a)) & 1).collect()
}

/// The block `𝒮R_k(w)`: lower corner and side `2^{k−j}`.
pub fn word_to_cube(w: &TreeWord, k: u32) -> Result<(LatticePoint, i64)> {
    let j = w.len() as u32;
    if j > k {
        return Err(Error::InvalidParameter(format!("word length {j} exceeds level {k}")));
    }
    let d = w.d as usize;
    let mut c = vec![-cube_offset(k); d];
    for (i, &letter) in w.letters.iter().enumerate() {
        let scale = 1i64 << (k - 1 - i as u32);
        for (a, ca) in c.iter_mut().enumerate() {
            *ca += scale * ((letter >> (d - 1 - a)) & 1) as i64;
        }
    }
    Ok((LatticePoint::new(&c)?, 1i64 << (k - j)))
}

/// Inverse of [`word_to_cube`] on leaves: the length-`k` word of `x ∈ Δ_k`.
pub fn point_to_word(x: &LatticePoint, k: u32) -> Result<TreeWord> {
    let d = x.dim();
    let off = cube_offset(k);
    let side = 1i64 << k;
    let shifted: Vec<i64> = x.coords().iter().map(|c| c + off).collect();
    if shifted.iter().any(|&s| s < 0 || s >= side) {
        return Err(Error::OutOfDomain(format!("{x:?} is not in Δ_{k}")));
    }
    let letters = (0..k)
        .map(|i| {
            let bit = k - 1 - i;
            (0..d).fold(0u8, |acc, a| (acc << 1) | ((shifted[a] >> bit) & 1) as u8)
        })
        .collect();
    TreeWord::new(d, letters)
}

/// Leaf index (position in lexicographic order, 0-based) of `x ∈ Δ_k`.
pub fn leaf_index(x: &LatticePoint, k: u32) -> Result<u64> {
    point_to_word(x, k).map(|w| w.index())
}

/// Ancestor at level `j` of a point of `Δ_k`, as a point of `Δ_j`.
pub fn ancestor(x: &LatticePoint, k: u32, j: u32) -> Result<LatticePoint> {
    if j > k {
        return Err(Error::InvalidParameter(format!("level {j} above {k}")));
    }
    let off_k = cube_offset(k);
    let off_j = cube_offset(j);
    let c: Vec<i64> = x.coords().iter().map(|&v| ((v + off_k) >> (k - j)) - off_j).collect();
    LatticePoint::new(&c)
}
