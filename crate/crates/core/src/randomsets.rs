//! Random sets satisfying a hitting–capacity hypothesis
//! `P(𝓡 ∩ (x + B) ≠ ∅) ≍ |x|^{−β} Cap_α(B)`: truncated simple random walk
//! ranges, and fractal percolation for cross-checks.

use std::collections::HashSet;
use std::hash::{BuildHasherDefault, Hasher};

use rayon::prelude::*;

use crate::capacity::capacity;
use crate::error::{Error, Result};
use crate::fractal::{hit_probability_exact, sample_pruned_from_key, PercolationParams};
use crate::hitting::{sum_hit_exact_enum, sum_hit_trial, SumHitSpec, REPORT_CONFIDENCE};
use crate::lattice::{LatticePoint, PointSet, MAX_DIM};
use crate::rng::{mix64, CounterRng, StreamKey};
use crate::stats::wilson;

/// Default cap on walk length.
pub const DEFAULT_STEP_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum RandomSetKind {
    FractalPercolation(PercolationParams),
    /// Simple random walk from `start`, stopped on first leaving the closed
    /// Euclidean ball of radius `radius` about `start`.
    SrwRange {
        radius: f64,
        start: LatticePoint,
    },
    /// Branching random walk ranges; recognised but not sampled.
    BranchingRandomWalk,
}

impl RandomSetKind {
    pub fn name(&self) -> &'static str {
        match self {
            RandomSetKind::FractalPercolation(_) => "fractal_percolation",
            RandomSetKind::SrwRange { .. } => "srw_range",
            RandomSetKind::BranchingRandomWalk => "branching_random_walk",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSetSpec {
    pub kind: RandomSetKind,
    pub d: usize,
    /// Capacity exponent `α` of the hypothesis.
    pub alpha: f64,
    /// Distance exponent `β` of the hypothesis.
    pub beta: f64,
    pub step_budget: u64,
}

impl RandomSetSpec {
    /// Range of a walk in `d ≥ 3` with `α = β = d − 2`.
    pub fn srw(d: usize, radius: f64, start: LatticePoint) -> Result<Self> {
        if !(3..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidDimension(d));
        }
        if start.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: start.dim(),
            });
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be finite and ≥ 0, got {radius}"
            )));
        }
        let bits = 64 / d as u32;
        if radius >= (1u64 << (bits - 1)) as f64 {
            return Err(Error::InvalidParameter(format!(
                "radius {radius} too large for d = {d}"
            )));
        }
        Ok(RandomSetSpec {
            kind: RandomSetKind::SrwRange { radius, start },
            d,
            alpha: d as f64 - 2.0,
            beta: d as f64 - 2.0,
            step_budget: DEFAULT_STEP_BUDGET,
        })
    }

    /// `Q_d(p; k)` with `α = β = −log₂ p`.
    pub fn fractal(params: PercolationParams) -> Self {
        let e = -params.p().log2();
        RandomSetSpec {
            kind: RandomSetKind::FractalPercolation(params),
            d: params.d(),
            alpha: e,
            beta: e,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn branching_random_walk(_d: usize) -> Result<Self> {
        Err(Error::UnsupportedKind(
            "branching random walk ranges are not sampled".into(),
        ))
    }

    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget;
        self
    }

    pub fn radius(&self) -> Option<f64> {
        match &self.kind {
            RandomSetKind::SrwRange { radius, .. } => Some(*radius),
            _ => None,
        }
    }
}

#[derive(Default)]
struct MixHasher(u64);

impl Hasher for MixHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = mix64(self.0 ^ *b as u64);
        }
    }
    fn write_u64(&mut self, v: u64) {
        self.0 = mix64(self.0 ^ v);
    }
}

type FastSet = HashSet<u64, BuildHasherDefault<MixHasher>>;

/// A walk confined to a ball, with positions packed relative to the start.
struct Walker {
    d: usize,
    bits: u32,
    pos: [i64; MAX_DIM],
    r2: f64,
    steps: u64,
    budget: u64,
    rng: CounterRng,
}

impl Walker {
    fn new(spec: &RandomSetSpec, key: StreamKey) -> Result<Self> {
        let RandomSetKind::SrwRange { radius, .. } = spec.kind else {
            return Err(Error::UnsupportedKind(format!("{} is not a walk", spec.kind.name())));
        };
        Ok(Walker {
            d: spec.d,
            bits: 64 / spec.d as u32,
            pos: [0; MAX_DIM],
            r2: radius * radius,
            steps: 0,
            budget: spec.step_budget,
            rng: key.stream(),
        })
    }

    fn pack(&self, rel: &[i64]) -> Option<u64> {
        let half = 1i64 << (self.bits - 1);
        let mut key = 0u64;
        for (a, &c) in rel.iter().enumerate().take(self.d) {
            if c < -half || c >= half {
                return None;
            }
            key |= ((c + half) as u64) << (a as u32 * self.bits);
        }
        Some(key)
    }

    fn here(&self) -> u64 {
        self.pack(&self.pos).expect("inside the ball")
    }

    /// Takes one step; `Ok(false)` once the walk has left the ball.
    fn step(&mut self) -> Result<bool> {
        if self.steps >= self.budget {
            return Err(Error::BudgetExceeded(format!("walk exceeded {} steps", self.budget)));
        }
        self.steps += 1;
        let dir = self.rng.below(2 * self.d as u64) as usize;
        self.pos[dir / 2] += if dir.is_multiple_of(2) { 1 } else { -1 };
        let n2: i64 = self.pos[..self.d].iter().map(|c| c * c).sum();
        Ok(n2 as f64 <= self.r2)
    }
}

fn walk_range(spec: &RandomSetSpec, key: StreamKey) -> Result<(FastSet, Walker)> {
    let mut w = Walker::new(spec, key)?;
    let mut set = FastSet::default();
    set.insert(w.here());
    while w.step()? {
        set.insert(w.here());
    }
    Ok((set, w))
}

fn start_of(spec: &RandomSetSpec) -> LatticePoint {
    match &spec.kind {
        RandomSetKind::SrwRange { start, .. } => *start,
        _ => unreachable!("walk kinds only"),
    }
}

/// Visited set of the walk with this seed, excluding the exit point.
pub fn sample_srw_range(spec: &RandomSetSpec, seed: u64) -> Result<PointSet> {
    sample_srw_range_from_key(spec, StreamKey::new(seed))
}

pub fn sample_srw_range_from_key(spec: &RandomSetSpec, key: StreamKey) -> Result<PointSet> {
    let mut w = Walker::new(spec, key)?;
    let start = start_of(spec);
    let mut pts = vec![start];
    while w.step()? {
        pts.push(start.checked_add(&LatticePoint::new(&w.pos[..w.d])?)?);
    }
    PointSet::new(spec.d, pts)
}

/// One row of a hitting table.
#[derive(Clone, Debug, PartialEq)]
pub struct HitRow {
    pub x: LatticePoint,
    pub norm: f64,
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Predicted order of magnitude (walks) or exact value (fractal kinds).
    pub reference: Option<f64>,
    pub ratio: Option<f64>,
    pub radius: Option<f64>,
}

impl HitRow {
    fn new(x: LatticePoint, hits: u64, trials: u64, reference: Option<f64>, radius: Option<f64>) -> Self {
        let estimate = hits as f64 / trials as f64;
        let (ci_low, ci_high) = wilson(hits, trials, REPORT_CONFIDENCE);
        HitRow {
            x,
            norm: x.norm(),
            hits,
            trials,
            estimate,
            ci_low,
            ci_high,
            reference,
            ratio: reference.map(|r| estimate / r),
            radius,
        }
    }

    pub fn interval(&self, confidence: f64) -> (f64, f64) {
        wilson(self.hits, self.trials, confidence)
    }
}

fn count_hits<F: Fn(u64) -> Result<bool> + Sync>(trials: u64, f: F) -> Result<u64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| f(t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn translate_target(a: &PointSet, x: &LatticePoint) -> Result<PointSet> {
    a.translate(x)
}

/// Does the walk meet `target` before leaving its ball?
pub fn srw_hits(spec: &RandomSetSpec, key: StreamKey, target: &PointSet) -> Result<bool> {
    let mut w = Walker::new(spec, key)?;
    let start = start_of(spec);
    let rel: FastSet = target
        .iter()
        .filter_map(|p| {
            let r: Vec<i64> = p.coords().iter().zip(start.coords()).map(|(a, b)| a - b).collect();
            w.pack(&r)
        })
        .collect();
    if rel.contains(&w.here()) {
        return Ok(true);
    }
    while w.step()? {
        if rel.contains(&w.here()) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn check_separation(a: &PointSet, x: &LatticePoint) -> Result<()> {
    let diam = a.diameter()?;
    if x.norm() < 2.0 * diam {
        return Err(Error::InvalidParameter(format!(
            "|x| = {} is below 2·diam(A) = {}",
            x.norm(),
            2.0 * diam
        )));
    }
    Ok(())
}

/// Estimates `P(𝓡 ∩ (x + a) ≠ ∅)` for each `x` and compares it with
/// `|x|^{−β} Cap_α(a)` (walks) or the exact oracle (fractal percolation).
pub fn single_set_hit_check(
    spec: &RandomSetSpec,
    a: &PointSet,
    x_values: &[LatticePoint],
    trials: u64,
    seed: u64,
) -> Result<Vec<HitRow>> {
    if a.dim() != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            found: a.dim(),
        });
    }
    let cap = match spec.kind {
        RandomSetKind::SrwRange { .. } => Some(capacity(a, spec.alpha, 1e-10)?.value),
        _ => None,
    };
    let mut rows = Vec::with_capacity(x_values.len());
    for (i, x) in x_values.iter().enumerate() {
        check_separation(a, x)?;
        let target = translate_target(a, x)?;
        let cell = StreamKey::new(seed).split(i as u64);
        let row = match &spec.kind {
            RandomSetKind::SrwRange { radius, .. } => {
                let hits = count_hits(trials, |t| srw_hits(spec, cell.split(t), &target))?;
                let reference = x.norm().powf(-spec.beta) * cap.expect("walk capacity");
                HitRow::new(*x, hits, trials, Some(reference), Some(*radius))
            }
            RandomSetKind::FractalPercolation(pp) => {
                let hits = count_hits(trials, |t| {
                    Ok(sample_pruned_from_key(pp, cell.split(t), &target, None)?
                        .survivors
                        .meets(&target))
                })?;
                HitRow::new(*x, hits, trials, Some(hit_probability_exact(pp, &target)?), None)
            }
            RandomSetKind::BranchingRandomWalk => {
                return Err(Error::UnsupportedKind(spec.kind.name().into()));
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// `γ = α_1 + ⋯ + α_k − (k − 1) d`.
pub fn gamma(specs: &[RandomSetSpec]) -> f64 {
    let d = specs.first().map(|s| s.d).unwrap_or(0) as f64;
    specs.iter().map(|s| s.alpha).sum::<f64>() - (specs.len() as f64 - 1.0) * d
}

/// Smallest admissible `|x|` for a sum of sets with the given exponents:
/// `2 diam(A) + max_i 1{α_i ≤ β_i} diam(A)^{(d−α_i)/(d−β_i)} log^{1/(d−β_i)}(diam(A) + 1)`.
pub fn radius_threshold(specs: &[RandomSetSpec], a: &PointSet) -> Result<f64> {
    let diam = a.diameter()?;
    let extra = specs
        .iter()
        .filter(|s| s.alpha <= s.beta)
        .map(|s| {
            let d = s.d as f64;
            diam.powf((d - s.alpha) / (d - s.beta)) * (diam + 1.0).ln().powf(1.0 / (d - s.beta))
        })
        .fold(0.0f64, f64::max);
    Ok(2.0 * diam + extra)
}

/// Estimates `P((𝓡_1 + 𝓡_2) ∩ (x + a) ≠ ∅)` via `𝓡_1 ∩ (x + a − 𝓡_2) ≠ ∅`.
///
/// Walk ranges are compared with `|x|^{d−β_1−β_2} Cap_γ(a)`. Two fractal
/// percolations delegate to the hitting module (the sets play the roles of
/// `Q` and `Q̂`), sharing its per-trial keys.
pub fn sum_of_ranges_hit(
    specs: &[RandomSetSpec; 2],
    a: &PointSet,
    x_values: &[LatticePoint],
    trials: u64,
    seed: u64,
) -> Result<Vec<HitRow>> {
    let d = specs[0].d;
    if specs[1].d != d || a.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if specs[1].d != d { specs[1].d } else { a.dim() },
        });
    }
    match (&specs[0].kind, &specs[1].kind) {
        (RandomSetKind::SrwRange { .. }, RandomSetKind::SrwRange { .. }) => srw_sum(specs, a, x_values, trials, seed),
        (RandomSetKind::FractalPercolation(p1), RandomSetKind::FractalPercolation(p2)) => {
            let mut rows = Vec::with_capacity(x_values.len());
            for x in x_values {
                let spec = SumHitSpec::new(d, p1.p(), p2.p(), p1.k(), p2.k(), translate_target(a, x)?)?;
                let hits = count_hits(trials, |t| sum_hit_trial(&spec, seed, t))?;
                let reference = match sum_hit_exact_enum(&spec) {
                    Ok(e) => Some(e.estimate),
                    Err(Error::BudgetExceeded(_)) => None,
                    Err(e) => return Err(e),
                };
                rows.push(HitRow::new(*x, hits, trials, reference, None));
            }
            Ok(rows)
        }
        (k1, k2) => Err(Error::UnsupportedKind(format!(
            "sum of {} and {}",
            k1.name(),
            k2.name()
        ))),
    }
}

/// One trial of the two-walk sum test: `𝓡_1 ∩ (target − 𝓡_2) ≠ ∅`.
/// `𝓡_1` is stored; `𝓡_2` is walked step by step and stops at the first hit.
pub fn srw_sum_trial(specs: &[RandomSetSpec; 2], target: &PointSet, key: StreamKey) -> Result<bool> {
    let d = specs[0].d;
    let (s1, s2) = (start_of(&specs[0]), start_of(&specs[1]));
    let (r1, w1) = walk_range(&specs[0], key.split(0))?;
    let mut w2 = Walker::new(&specs[1], key.split(1))?;
    let mut rel = [0i64; MAX_DIM];
    let mut probe = |w2: &Walker| {
        target.iter().any(|p| {
            for (j, r) in rel.iter_mut().enumerate().take(d) {
                *r = p.coord(j) - s2.coord(j) - w2.pos[j] - s1.coord(j);
            }
            w1.pack(&rel[..d]).is_some_and(|k| r1.contains(&k))
        })
    };
    if probe(&w2) {
        return Ok(true);
    }
    while w2.step()? {
        if probe(&w2) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn srw_sum(
    specs: &[RandomSetSpec; 2],
    a: &PointSet,
    x_values: &[LatticePoint],
    trials: u64,
    seed: u64,
) -> Result<Vec<HitRow>> {
    let d = specs[0].d;
    if d < 5 {
        return Err(Error::InvalidDimension(d));
    }
    let g = gamma(specs);
    if g <= 0.0 {
        return Err(Error::ExponentCondition(format!("γ = {g} must be positive")));
    }
    let threshold = radius_threshold(specs, a)?;
    let cap = capacity(a, g, 1e-10)?.value;
    let exponent = d as f64 - specs[0].beta - specs[1].beta;
    let mut rows = Vec::with_capacity(x_values.len());
    for (i, x) in x_values.iter().enumerate() {
        if x.norm() < threshold {
            return Err(Error::InvalidParameter(format!(
                "|x| = {} is below the admissible radius {threshold}",
                x.norm()
            )));
        }
        let cell = StreamKey::new(seed).split(i as u64);
        let target = translate_target(a, x)?;
        let hits = count_hits(trials, |t| srw_sum_trial(specs, &target, cell.split(t)))?;
        let reference = x.norm().powf(exponent) * cap;
        rows.push(HitRow::new(*x, hits, trials, Some(reference), specs[0].radius()));
    }
    Ok(rows)
}
