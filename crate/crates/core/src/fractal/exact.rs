use super::{leaf_index, PercolationParams};
use crate::error::{Error, Result};
use crate::lattice::{cube_offset, LatticePoint, PointSet};

fn shifted(params: &PercolationParams, x: &LatticePoint) -> Option<Vec<u64>> {
    let off = cube_offset(params.k());
    let side = 1i64 << params.k();
    x.coords()
        .iter()
        .map(|&c| {
            let s = c + off;
            (0..side).contains(&s).then_some(s as u64)
        })
        .collect()
}

fn check_dim(params: &PercolationParams, d: usize) -> Result<()> {
    if d != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            found: d,
        });
    }
    Ok(())
}

/// `P(x ∈ Q_d(p; k))`: `p^k` on `Δ_k`, zero elsewhere.
pub fn survival_probability(params: &PercolationParams, x: &LatticePoint) -> Result<f64> {
    check_dim(params, x.dim())?;
    Ok(match shifted(params, x) {
        Some(_) => params.p().powi(params.k() as i32),
        None => 0.0,
    })
}

/// Joint survival of two points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairProbability {
    /// `P(x, y ∈ Q)` on the tree.
    pub exact: f64,
    /// `p^{k + log₂|x−y| − ½ log₂ d}`, an upper bound for `x ≠ y`.
    pub bound: f64,
    /// Number of distinct edges on the two root paths.
    pub edges: u32,
}

pub fn pair_probability(params: &PercolationParams, x: &LatticePoint, y: &LatticePoint) -> Result<PairProbability> {
    check_dim(params, x.dim())?;
    check_dim(params, y.dim())?;
    let p = params.p();
    let k = params.k();
    let (Some(sx), Some(sy)) = (shifted(params, x), shifted(params, y)) else {
        return Err(Error::OutOfDomain(format!("{x:?} or {y:?} is not in Δ_{k}")));
    };
    let diff = sx.iter().zip(&sy).fold(0u64, |acc, (a, b)| acc | (a ^ b));
    let h = 64 - diff.leading_zeros();
    let edges = k + h;
    let bound = if x == y {
        p.powi(k as i32)
    } else {
        let e = k as f64 + x.dist(y).log2() - 0.5 * (params.d() as f64).log2();
        p.powf(e)
    };
    Ok(PairProbability {
        exact: p.powi(edges as i32),
        bound,
        edges,
    })
}

/// Exact `P(Q_d(p; k) ∩ A ≠ ∅)` by recursion over the subtree spanned by `A ∩ Δ_k`.
///
/// Cost is `O(k·|A|)`; points outside `Δ_k` are ignored.
pub fn hit_probability_exact(params: &PercolationParams, a: &PointSet) -> Result<f64> {
    check_dim(params, a.dim())?;
    let mut leaves: Vec<u64> = a
        .iter()
        .filter(|x| shifted(params, x).is_some())
        .map(|x| leaf_index(x, params.k()))
        .collect::<Result<_>>()?;
    if leaves.is_empty() {
        return Ok(0.0);
    }
    // In leaf-index order every subtree is a contiguous run.
    leaves.sort_unstable();
    Ok(node(&leaves, params.k(), params.d() as u32, params.p()))
}

/// Probability that the root of a height-`height` subtree connects to one of `leaves`.
fn node(leaves: &[u64], height: u32, d: u32, p: f64) -> f64 {
    if leaves.len() == 1 {
        // a bare path: same rounding as `survival_probability`
        return p.powi(height as i32);
    }
    let shift = d * (height - 1);
    let mut log_miss = 0.0f64;
    let mut groups = 0usize;
    let mut single = 0.0;
    let mut start = 0;
    while start < leaves.len() {
        let l = leaves[start] >> shift;
        let end = start + leaves[start..].partition_point(|&x| x >> shift == l);
        let through = p * node(&leaves[start..end], height - 1, d, p);
        single = through;
        log_miss += (-through).ln_1p();
        groups += 1;
        start = end;
    }
    if groups == 1 {
        single
    } else {
        -log_miss.exp_m1()
    }
}
