//! Discrete Riesz capacity
//!
//! `Cap_β(A) = 1 / min_μ Σ_{x,y∈A} μ(x) μ(y) (|x−y| ∨ 1)^{−β}`, the minimum taken
//! over probability measures on `A`.
//!
//! The kernel diagonal is exactly 1. Off-diagonal entries between lattice
//! neighbours are also 1, so the kernel matrix is in general indefinite and
//! the energy is not convex on the simplex; the solver therefore combines a
//! positive-definite fast path, Frank–Wolfe with away steps, an active-set
//! polish and (for small supports) multiple starts.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{write_weighted, LatticePoint, PointSet};

/// Riesz kernel `k(x, y) = (|x − y| ∨ 1)^{−β}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    beta: f64,
}

impl Kernel {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        Ok(Kernel { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Kernel value from an exact squared distance.
    #[inline]
    pub fn from_dist2(&self, d2: u128) -> f64 {
        if d2 <= 1 {
            1.0
        } else {
            (d2 as f64).powf(-0.5 * self.beta)
        }
    }

    #[inline]
    pub fn eval(&self, x: &LatticePoint, y: &LatticePoint) -> f64 {
        self.from_dist2(x.dist2(y))
    }

    /// Dense row-major kernel matrix over the points of `set`.
    pub fn matrix(&self, set: &PointSet) -> Vec<f64> {
        let pts = set.points();
        let n = pts.len();
        let mut k = vec![0.0; n * n];
        k.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.eval(&pts[i], &pts[j]);
            }
        });
        k
    }
}

/// Probability weights over a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    support: PointSet,
    weights: Vec<f64>,
}

impl Measure {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(support: PointSet, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySet);
        }
        if weights.len() != support.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} points",
                weights.len(),
                support.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Measure { support, weights })
    }

    /// Rescales nonnegative weights to total mass one.
    pub fn normalized(support: PointSet, mut weights: Vec<f64>) -> Result<Self> {
        let total = neumaier_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("weights have no mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(support, weights)
    }

    pub fn uniform(support: PointSet) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn dirac(p: LatticePoint) -> Self {
        Measure {
            support: PointSet::singleton(p),
            weights: vec![1.0],
        }
    }

    pub fn support(&self) -> &PointSet {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, p: &LatticePoint) -> f64 {
        self.support.position(p).map_or(0.0, |i| self.weights[i])
    }

    /// Pairs of (point, weight) with positive weight.
    pub fn atoms(&self) -> impl Iterator<Item = (&LatticePoint, f64)> {
        self.support
            .iter()
            .zip(self.weights.iter().copied())
            .filter(|(_, w)| *w > 0.0)
    }

    /// Potential `Σ_y k(x, y) μ(y)` at an arbitrary point.
    pub fn potential(&self, kernel: &Kernel, x: &LatticePoint) -> f64 {
        neumaier_sum(self.atoms().map(|(y, w)| w * kernel.eval(x, y)))
    }
}

/// Compensated summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `μᵀ K μ`.
pub fn energy(mu: &Measure, beta: f64) -> Result<f64> {
    let kernel = Kernel::new(beta)?;
    let pts = mu.support.points();
    let w = &mu.weights;
    let terms = (0..pts.len()).flat_map(|i| {
        let diag = std::iter::once(w[i] * w[i]);
        let off = ((i + 1)..pts.len()).map(move |j| 2.0 * w[i] * w[j] * kernel.eval(&pts[i], &pts[j]));
        diag.chain(off)
    });
    Ok(neumaier_sum(terms))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Analytic,
    LinearSolve,
    FrankWolfe,
    BruteForce,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::LinearSolve => "linear_solve",
            Method::FrankWolfe => "frank_wolfe",
            Method::BruteForce => "brute_force",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CapacityResult {
    pub value: f64,
    pub energy: f64,
    pub equilibrium: Measure,
    /// Frank–Wolfe gap `max_i (2E − 2(Kμ)_i)` divided by the energy.
    pub duality_gap: f64,
    pub iterations: usize,
    pub method: Method,
    pub beta: f64,
}

impl CapacityResult {
    /// Flat `key=value` block followed by the equilibrium measure in the
    /// point-set format with a weight column.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "value={}", self.value).unwrap();
        writeln!(s, "energy={}", self.energy).unwrap();
        writeln!(s, "beta={}", self.beta).unwrap();
        writeln!(s, "duality_gap={}", self.duality_gap).unwrap();
        writeln!(s, "iterations={}", self.iterations).unwrap();
        writeln!(s, "method={}", self.method.as_str()).unwrap();
        s.push_str(&write_weighted(self.equilibrium.support(), self.equilibrium.weights()));
        s
    }
}

#[derive(Clone, Debug)]
pub struct CapacityOptions {
    /// Relative Frank–Wolfe gap at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Condition estimate above which the Cholesky fast path is abandoned.
    pub cond_limit: f64,
    /// Supports up to this size get additional vertex starts when the
    /// kernel matrix is not positive definite.
    pub multistart_limit: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions {
            tol: 1e-8,
            max_iter: 100_000,
            cond_limit: 1e12,
            multistart_limit: 24,
        }
    }
}

pub fn capacity(a: &PointSet, beta: f64, tol: f64) -> Result<CapacityResult> {
    capacity_with(
        a,
        beta,
        &CapacityOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn capacity_with(a: &PointSet, beta: f64, opts: &CapacityOptions) -> Result<CapacityResult> {
    let kernel = Kernel::new(beta)?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", opts.tol)));
    }
    let n = a.len();
    if n == 1 {
        return Ok(CapacityResult {
            value: 1.0,
            energy: 1.0,
            equilibrium: Measure::uniform(a.clone())?,
            duality_gap: 0.0,
            iterations: 0,
            method: Method::Analytic,
            beta,
        });
    }
    let k = kernel.matrix(a);
    let mat = DMatrix::from_row_slice(n, n, &k);

    let mut positive_definite = false;
    if let Some(chol) = mat.clone().cholesky() {
        positive_definite = true;
        let l = chol.l_dirty();
        let diag: Vec<f64> = (0..n).map(|i| l[(i, i)]).collect();
        let max = diag.iter().cloned().fold(f64::MIN, f64::max);
        let min = diag.iter().cloned().fold(f64::MAX, f64::min);
        let cond = (max / min).powi(2);
        if cond <= opts.cond_limit {
            let w = chol.solve(&DVector::from_element(n, 1.0));
            if w.iter().all(|&x| x >= 0.0) {
                let weights: Vec<f64> = w.iter().copied().collect();
                return finish(a, &k, weights, 0, Method::LinearSolve, beta);
            }
        }
    }

    let mut starts = vec![Start::Uniform];
    if !positive_definite && n <= opts.multistart_limit {
        starts.extend((0..n).map(Start::Vertex));
    }
    let mut best: Option<FwOutcome> = None;
    let mut total_iter = 0;
    for start in starts {
        let out = frank_wolfe(&k, n, start, opts);
        total_iter += out.iterations;
        let polished = polish(&k, n, &out.weights, opts.tol).unwrap_or(out.clone());
        let polished = FwOutcome {
            iterations: out.iterations,
            converged: out.converged || polished.converged,
            ..polished
        };
        if best.as_ref().is_none_or(|b| polished.energy < b.energy) {
            best = Some(polished);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        return Err(Error::NonConvergence {
            iterations: total_iter,
            gap: best.gap,
            energy: best.energy,
        });
    }
    finish(a, &k, best.weights, total_iter, Method::FrankWolfe, beta)
}

fn finish(
    a: &PointSet,
    k: &[f64],
    weights: Vec<f64>,
    iterations: usize,
    method: Method,
    beta: f64,
) -> Result<CapacityResult> {
    let n = a.len();
    let equilibrium = Measure::normalized(a.clone(), weights)?;
    let w = equilibrium.weights();
    let pot = potentials(k, n, w);
    let energy = neumaier_sum(w.iter().zip(&pot).map(|(a, b)| a * b));
    let min_pot = pot.iter().cloned().fold(f64::INFINITY, f64::min);
    let duality_gap = (2.0 * (energy - min_pot) / energy).max(0.0);
    Ok(CapacityResult {
        value: 1.0 / energy,
        energy,
        equilibrium,
        duality_gap,
        iterations,
        method,
        beta,
    })
}

fn potentials(k: &[f64], n: usize, w: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| neumaier_sum((0..n).filter(|&j| w[j] != 0.0).map(|j| k[i * n + j] * w[j])))
        .collect()
}

#[derive(Clone, Copy, Debug)]
enum Start {
    Uniform,
    Vertex(usize),
}

#[derive(Clone, Debug)]
struct FwOutcome {
    weights: Vec<f64>,
    energy: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
}

fn frank_wolfe(k: &[f64], n: usize, start: Start, opts: &CapacityOptions) -> FwOutcome {
    let mut mu = match start {
        Start::Uniform => vec![1.0 / n as f64; n],
        Start::Vertex(v) => {
            let mut m = vec![0.0; n];
            m[v] = 1.0;
            m
        }
    };
    let mut u = potentials(k, n, &mu);
    let mut e: f64 = mu.iter().zip(&u).map(|(a, b)| a * b).sum();
    let mut gap = f64::INFINITY;
    let mut it = 0;
    while it < opts.max_iter {
        if it % 512 == 511 {
            u = potentials(k, n, &mu);
            e = neumaier_sum(mu.iter().zip(&u).map(|(a, b)| a * b));
        }
        let (s, u_s) = u
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc });
        let (v, u_v) = u.iter().copied().enumerate().filter(|(i, _)| mu[*i] > 0.0).fold(
            (usize::MAX, f64::NEG_INFINITY),
            |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
        );
        gap = 2.0 * (e - u_s);
        if gap <= opts.tol * e {
            break;
        }
        it += 1;
        let toward = e - u_s >= u_v - e || mu[v] >= 1.0;
        let (slope, curv, gmax) = if toward {
            (u_s - e, k[s * n + s] - 2.0 * u_s + e, 1.0)
        } else {
            (e - u_v, e - 2.0 * u_v + k[v * n + v], mu[v] / (1.0 - mu[v]))
        };
        let gamma = if curv > 0.0 {
            (-slope / curv).clamp(0.0, gmax)
        } else {
            gmax
        };
        if gamma <= 0.0 {
            break;
        }
        if toward {
            for (i, m) in mu.iter_mut().enumerate() {
                *m *= 1.0 - gamma;
                u[i] = (1.0 - gamma) * u[i] + gamma * k[i * n + s];
            }
            mu[s] += gamma;
        } else {
            for (i, m) in mu.iter_mut().enumerate() {
                *m *= 1.0 + gamma;
                u[i] = (1.0 + gamma) * u[i] - gamma * k[i * n + v];
            }
            mu[v] -= gamma;
            if gamma == gmax || mu[v] < 0.0 {
                mu[v] = 0.0;
            }
        }
        e += 2.0 * gamma * slope + gamma * gamma * curv;
    }
    let u = potentials(k, n, &mu);
    let e = neumaier_sum(mu.iter().zip(&u).map(|(a, b)| a * b));
    let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let final_gap = 2.0 * (e - min_u);
    FwOutcome {
        converged: final_gap <= opts.tol * e || gap <= opts.tol * e,
        weights: mu,
        energy: e,
        gap: final_gap / e,
        iterations: it,
    }
}

/// Solves the equal-potential system on the current support. Accepted only
/// when the weights are positive, the KKT inequality holds off the support
/// and the energy does not increase.
fn polish(k: &[f64], n: usize, mu: &[f64], tol: f64) -> Option<FwOutcome> {
    let max_w = mu.iter().cloned().fold(0.0, f64::max);
    let support: Vec<usize> = (0..n).filter(|&i| mu[i] > 1e-9 * max_w).collect();
    let m = support.len();
    let sub = DMatrix::from_fn(m, m, |r, c| k[support[r] * n + support[c]]);
    let w = sub.lu().solve(&DVector::from_element(m, 1.0))?;
    if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return None;
    }
    let total: f64 = w.iter().sum();
    let mut weights = vec![0.0; n];
    for (r, &i) in support.iter().enumerate() {
        weights[i] = w[r] / total;
    }
    let u = potentials(k, n, &weights);
    let e = neumaier_sum(weights.iter().zip(&u).map(|(a, b)| a * b));
    let old_e = neumaier_sum(mu.iter().zip(potentials(k, n, mu)).map(|(a, b)| a * b));
    if e > old_e * (1.0 + 1e-12) {
        return None;
    }
    let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap = 2.0 * (e - min_u);
    if gap > tol * e {
        return None;
    }
    Some(FwOutcome {
        weights,
        energy: e,
        gap: gap.max(0.0) / e,
        iterations: 0,
        converged: true,
    })
}

pub const BRUTE_FORCE_MAX_SUPPORT: usize = 6;
const BRUTE_FORCE_GRID_BUDGET: u128 = 200_000;

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Exhaustive simplex grid search followed by a pairwise mass-transfer
/// refinement down to a fraction of `grid_step`. Test oracle only.
///
/// When the full grid at `grid_step` would exceed a fixed point budget the
/// exhaustive pass runs on the finest affordable grid and the refinement
/// carries the resolution down to `grid_step`.
pub fn capacity_bruteforce(a: &PointSet, beta: f64, grid_step: f64) -> Result<CapacityResult> {
    let kernel = Kernel::new(beta)?;
    let n = a.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    if n > BRUTE_FORCE_MAX_SUPPORT {
        return Err(Error::SupportTooLarge {
            size: n,
            limit: BRUTE_FORCE_MAX_SUPPORT,
        });
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!("grid_step {grid_step} not in (0, 1]")));
    }
    let k = kernel.matrix(a);
    let quad = |w: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += w[i] * w[j] * k[i * n + j];
            }
        }
        s
    };

    let mut res = (1.0 / grid_step).round().max(1.0) as u128;
    while res > 1 && binomial(res + n as u128 - 1, n as u128 - 1) > BRUTE_FORCE_GRID_BUDGET {
        res -= 1;
    }
    let res = res as usize;

    let mut best_e = f64::INFINITY;
    let mut best = vec![0.0; n];
    let mut parts = vec![0usize; n];
    let mut w = vec![0.0; n];
    // enumerate compositions of `res` into n nonnegative parts
    fn rec(idx: usize, left: usize, parts: &mut [usize], visit: &mut dyn FnMut(&[usize])) {
        if idx + 1 == parts.len() {
            parts[idx] = left;
            visit(parts);
            return;
        }
        for c in 0..=left {
            parts[idx] = c;
            rec(idx + 1, left - c, parts, visit);
        }
    }
    rec(0, res, &mut parts, &mut |p: &[usize]| {
        for i in 0..n {
            w[i] = p[i] as f64 / res as f64;
        }
        let e = quad(&w);
        if e < best_e {
            best_e = e;
            best.copy_from_slice(&w);
        }
    });

    let mut step = 1.0 / res as f64;
    let floor = grid_step * 1e-3;
    let mut iterations = 0usize;
    while step >= floor {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || best[i] <= 0.0 {
                        continue;
                    }
                    let delta = step.min(best[i]);
                    let mut trial = best.clone();
                    trial[i] -= delta;
                    trial[j] += delta;
                    let e = quad(&trial);
                    iterations += 1;
                    if e < best_e {
                        best_e = e;
                        best = trial;
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    best.iter_mut().for_each(|x| *x = x.max(0.0));
    finish(a, &k, best, iterations, Method::BruteForce, beta)
}

/// Closed sets in `[-1/2, 1/2]^d` with exact box-intersection tests.
#[derive(Clone, Debug, PartialEq)]
pub enum ShapeSpec {
    Point(Vec<f64>),
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    AxisBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Union(Vec<ShapeSpec>),
    /// Middle-thirds Cantor construction on `[-1/2, 1/2]` to the given depth (d = 1).
    Cantor {
        depth: u32,
    },
}

impl ShapeSpec {
    pub fn dim(&self) -> Result<usize> {
        match self {
            ShapeSpec::Point(p) => Ok(p.len()),
            ShapeSpec::Ball { center, .. } => Ok(center.len()),
            ShapeSpec::Segment { from, to } => {
                if from.len() != to.len() {
                    return Err(Error::DimensionMismatch {
                        expected: from.len(),
                        found: to.len(),
                    });
                }
                Ok(from.len())
            }
            ShapeSpec::AxisBox { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lo.len(),
                        found: hi.len(),
                    });
                }
                Ok(lo.len())
            }
            ShapeSpec::Union(parts) => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("empty union".into()))?
                    .dim()?;
                for p in parts {
                    let d = p.dim()?;
                    if d != first {
                        return Err(Error::DimensionMismatch {
                            expected: first,
                            found: d,
                        });
                    }
                }
                Ok(first)
            }
            ShapeSpec::Cantor { .. } => Ok(1),
        }
    }

    /// Per-axis bounding interval.
    pub fn bounds(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.dim()?;
        Ok(match self {
            ShapeSpec::Point(p) => (p.clone(), p.clone()),
            ShapeSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            ShapeSpec::Segment { from, to } => (
                (0..d).map(|i| from[i].min(to[i])).collect(),
                (0..d).map(|i| from[i].max(to[i])).collect(),
            ),
            ShapeSpec::AxisBox { lo, hi } => (lo.clone(), hi.clone()),
            ShapeSpec::Union(parts) => {
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in parts {
                    let (l, h) = p.bounds()?;
                    for i in 0..d {
                        lo[i] = lo[i].min(l[i]);
                        hi[i] = hi[i].max(h[i]);
                    }
                }
                (lo, hi)
            }
            ShapeSpec::Cantor { .. } => (vec![-0.5], vec![0.5]),
        })
    }

    fn validate(&self) -> Result<usize> {
        let d = self.dim()?;
        if d == 0 || d > crate::lattice::MAX_DIM {
            return Err(Error::InvalidDimension(d));
        }
        if let ShapeSpec::Ball { radius, .. } = self {
            if !(*radius >= 0.0) {
                return Err(Error::InvalidParameter("negative radius".into()));
            }
        }
        if let ShapeSpec::AxisBox { lo, hi } = self {
            if lo.iter().zip(hi).any(|(l, h)| l > h) {
                return Err(Error::InvalidParameter("box corners out of order".into()));
            }
        }
        if let ShapeSpec::Cantor { depth } = self {
            if *depth > 20 {
                return Err(Error::InvalidParameter(format!("cantor depth {depth} > 20")));
            }
        }
        if let ShapeSpec::Union(parts) = self {
            for p in parts {
                p.validate()?;
            }
        }
        let (lo, hi) = self.bounds()?;
        if lo.iter().chain(&hi).any(|v| !(v.abs() <= 0.5)) {
            return Err(Error::OutOfDomain("shape leaves [-1/2, 1/2]^d".into()));
        }
        Ok(d)
    }

    /// Does the closed cube `center + [-half, half]^d` meet the shape?
    pub fn meets_cube(&self, center: &[f64], half: f64) -> bool {
        match self {
            ShapeSpec::Point(p) => p.iter().zip(center).all(|(x, c)| (x - c).abs() <= half),
            ShapeSpec::Ball { center: bc, radius } => {
                let d2: f64 = bc
                    .iter()
                    .zip(center)
                    .map(|(x, c)| {
                        let nearest = x.clamp(c - half, c + half);
                        (x - nearest) * (x - nearest)
                    })
                    .sum();
                d2 <= radius * radius
            }
            ShapeSpec::Segment { from, to } => {
                let (mut t0, mut t1) = (0.0f64, 1.0f64);
                for i in 0..center.len() {
                    let (lo, hi) = (center[i] - half, center[i] + half);
                    let dir = to[i] - from[i];
                    if dir == 0.0 {
                        if from[i] < lo || from[i] > hi {
                            return false;
                        }
                    } else {
                        let (a, b) = ((lo - from[i]) / dir, (hi - from[i]) / dir);
                        t0 = t0.max(a.min(b));
                        t1 = t1.min(a.max(b));
                    }
                }
                t0 <= t1
            }
            ShapeSpec::AxisBox { lo, hi } => {
                (0..center.len()).all(|i| lo[i] <= center[i] + half && center[i] - half <= hi[i])
            }
            ShapeSpec::Union(parts) => parts.iter().any(|p| p.meets_cube(center, half)),
            ShapeSpec::Cantor { depth } => cantor_intervals(*depth)
                .iter()
                .any(|(l, h)| *l <= center[0] + half && center[0] - half <= *h),
        }
    }
}

/// The `2^depth` closed intervals of the middle-thirds construction, shifted to `[-1/2, 1/2]`.
pub fn cantor_intervals(depth: u32) -> Vec<(f64, f64)> {
    let mut iv = vec![(0.0f64, 1.0f64)];
    for _ in 0..depth {
        iv = iv
            .into_iter()
            .flat_map(|(a, b)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    iv.into_iter().map(|(a, b)| (a - 0.5, b - 0.5)).collect()
}

/// `2^k T_k(Λ) ∩ Z^d`: every lattice point within ℓ∞-distance 2 of a
/// centre `z ∈ Z^d` whose closed cell `2^{-k} z + [-2^{1-k}, 2^{1-k}]^d`
/// meets the shape.
pub fn discretize_shape(shape: &ShapeSpec, k: u32) -> Result<PointSet> {
    let d = shape.validate()?;
    if k > 24 {
        return Err(Error::InvalidParameter(format!("level {k} too large")));
    }
    let scale = (1u64 << k) as f64;
    let half = 2.0 / scale;
    let (lo, hi) = shape.bounds()?;
    let lo_i: Vec<i64> = lo.iter().map(|v| (v * scale).floor() as i64 - 2).collect();
    let hi_i: Vec<i64> = hi.iter().map(|v| (v * scale).ceil() as i64 + 2).collect();
    let cand = crate::lattice::LatticeBox::new(LatticePoint::new(&lo_i)?, LatticePoint::new(&hi_i)?)?;
    let mut centre = vec![0.0; d];
    let good: Vec<LatticePoint> = cand
        .points()
        .into_iter()
        .filter(|z| {
            for (i, c) in centre.iter_mut().enumerate() {
                *c = z.coord(i) as f64 / scale;
            }
            shape.meets_cube(&centre, half)
        })
        .collect();
    let good = PointSet::new(d, good)?;
    let cell = crate::lattice::LatticeBox::new(LatticePoint::splat(d, -2)?, LatticePoint::splat(d, 2)?)?;
    let cell = PointSet::new(d, cell.points())?;
    crate::lattice::minkowski_sum(&good, &cell)
}
