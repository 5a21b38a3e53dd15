//! Hitting probabilities of Minkowski sums `Q_d(p; m) + Q̂_d(q; n)`.
//!
//! Every estimator uses the identity `(Q + Q̂) ∩ A ≠ ∅ ⟺ Q ∩ (A − Q̂) ≠ ∅`.
//! Trial `t` of a run with seed `s` draws `Q̂` from `key(s).split(t).split(1)`
//! and `Q` from `key(s).split(t).split(0)`, so Monte Carlo and Rao–Blackwell
//! runs with the same seed see the same `Q̂` realizations.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::capacity::{neumaier_sum, Measure};
use crate::error::{Error, Result};
use crate::fractal::{
    hit_probability_exact, leaf_index, sample_pruned_from_key, word_to_cube, PercolationParams, TreeWord,
};
use crate::lattice::{cube_offset, CenteredCube, LatticeBox, LatticePoint, PointSet};
use crate::rng::StreamKey;
use crate::stats::{mean_variance, normal_interval, wilson};

/// Confidence level of the intervals stored in [`EstimateResult`].
pub const REPORT_CONFIDENCE: f64 = 0.95;
/// Confidence level used by assertions.
pub const ASSERT_CONFIDENCE: f64 = 0.999;
/// Largest joint edge count accepted by [`sum_hit_exact_enum`].
pub const MAX_ENUM_EDGES: u64 = 24;
/// Largest `2^{dm}` for the Rao–Blackwell conditional oracle.
pub const RB_FRONTIER_LIMIT: u64 = 1 << 24;
/// Default cap on the number of term pairs in the second moment.
pub const PZ_PAIR_BUDGET: u64 = 200_000_000;

#[derive(Clone, Debug)]
pub struct SumHitSpec {
    d: usize,
    p: f64,
    q: f64,
    m: u32,
    n: u32,
    target: PointSet,
    beta: f64,
    condition_holds: bool,
}

impl SumHitSpec {
    pub fn new(d: usize, p: f64, q: f64, m: u32, n: u32, target: PointSet) -> Result<Self> {
        let pp = PercolationParams::new(d, p, m)?;
        PercolationParams::new(d, q, n)?;
        if m > n {
            return Err(Error::InvalidParameter(format!("need m ≤ n, got m={m}, n={n}")));
        }
        if target.is_empty() {
            return Err(Error::EmptySet);
        }
        if target.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: target.dim(),
            });
        }
        let ext = Self::extended_box_for(d, m, n)?;
        if let Some(x) = target.iter().find(|x| !ext.contains(x)) {
            return Err(Error::OutOfDomain(format!(
                "target point {x:?} outside [-{0}, {0})^{d}",
                cube_offset(n) + cube_offset(m)
            )));
        }
        Ok(SumHitSpec {
            d,
            p,
            q,
            m,
            n,
            target,
            beta: pp.sum_exponent(q),
            condition_holds: pp.sum_condition_holds(q),
        })
    }

    fn extended_box_for(d: usize, m: u32, n: u32) -> Result<LatticeBox> {
        let r = cube_offset(n) + cube_offset(m);
        LatticeBox::new(LatticePoint::splat(d, -r)?, LatticePoint::splat(d, r - 1)?)
    }

    /// `[−2^{n−1}−2^{m−1}, 2^{n−1}+2^{m−1})^d`.
    pub fn extended_box(&self) -> LatticeBox {
        Self::extended_box_for(self.d, self.m, self.n).expect("validated")
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn target(&self) -> &PointSet {
        &self.target
    }

    /// `β = −log₂(2^d p q)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `p, q > 2^{−d}` and `β > 0`.
    pub fn condition_holds(&self) -> bool {
        self.condition_holds
    }

    /// Parameters of `Q = Q_d(p; m)`.
    pub fn p_params(&self) -> PercolationParams {
        PercolationParams::new(self.d, self.p, self.m).expect("validated")
    }

    /// Parameters of `Q̂ = Q̂_d(q; n)`.
    pub fn q_params(&self) -> PercolationParams {
        PercolationParams::new(self.d, self.q, self.n).expect("validated")
    }

    /// Number of edges in both trees, `Σ_{1≤j≤m} 2^{dj} + Σ_{1≤j≤n} 2^{dj}`.
    pub fn edge_count(&self) -> u64 {
        let tree = |k: u32| -> u64 {
            (1..=k)
                .map(|j| 1u64.checked_shl(self.d as u32 * j).unwrap_or(u64::MAX))
                .fold(0u64, |a, b| a.saturating_add(b))
        };
        tree(self.m).saturating_add(tree(self.n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HitMethod {
    MonteCarlo,
    RaoBlackwell,
    ExactEnum,
}

impl HitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            HitMethod::MonteCarlo => "mc",
            HitMethod::RaoBlackwell => "rao_blackwell",
            HitMethod::ExactEnum => "exact_enum",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimateResult {
    pub estimate: f64,
    pub trials: u64,
    /// 95% interval (Wilson for Monte Carlo, normal for Rao–Blackwell).
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: HitMethod,
    pub seed: u64,
    pub elapsed: Duration,
    /// Per-trial sample variance (zero for exact results).
    pub variance: f64,
    /// Hit count for Monte Carlo runs.
    pub hits: Option<u64>,
}

impl EstimateResult {
    /// Interval at another confidence level.
    pub fn interval(&self, confidence: f64) -> (f64, f64) {
        match self.method {
            HitMethod::ExactEnum => (self.estimate, self.estimate),
            HitMethod::MonteCarlo => wilson(self.hits.unwrap_or(0), self.trials, confidence),
            HitMethod::RaoBlackwell => {
                let (lo, hi) = normal_interval(self.estimate, self.variance, self.trials, confidence);
                (lo.min(self.estimate), hi.max(self.estimate))
            }
        }
    }

    pub fn contains(&self, value: f64, confidence: f64) -> bool {
        let (lo, hi) = self.interval(confidence);
        lo <= value && value <= hi
    }
}

fn trial_keys(seed: u64, t: u64) -> (StreamKey, StreamKey) {
    let root = StreamKey::new(seed).split(t);
    (root.split(1), root.split(0))
}

/// `Q̂` restricted to the vertices whose blocks can still reach the target
/// through some point of `Δ_m`.
fn sample_hat(spec: &SumHitSpec, key: StreamKey) -> Result<PointSet> {
    let partner = CenteredCube::new(spec.d, spec.m)?.bbox();
    Ok(sample_pruned_from_key(&spec.q_params(), key, &spec.target, Some(partner))?.survivors)
}

fn sum_hits(target: &PointSet, q: &PointSet, hat: &PointSet) -> bool {
    if q.len() <= target.len() {
        q.iter().any(|x| {
            hat.iter()
                .any(|b| x.checked_add(b).map(|s| target.contains(&s)).unwrap_or(false))
        })
    } else {
        target.iter().any(|a| {
            hat.iter()
                .any(|b| a.checked_sub(b).map(|s| q.contains(&s)).unwrap_or(false))
        })
    }
}

/// One Monte Carlo trial: does `(Q + Q̂) ∩ A ≠ ∅`?
pub fn sum_hit_trial(spec: &SumHitSpec, seed: u64, t: u64) -> Result<bool> {
    let (k_hat, k_q) = trial_keys(seed, t);
    let hat = sample_hat(spec, k_hat)?;
    if hat.is_empty() {
        return Ok(false);
    }
    let partner = hat.bbox().expect("nonempty");
    let q = sample_pruned_from_key(&spec.p_params(), k_q, &spec.target, Some(partner))?.survivors;
    Ok(sum_hits(&spec.target, &q, &hat))
}

/// `(A − Q̂) ∩ Δ_m`.
pub fn shifted_target(spec: &SumHitSpec, hat: &PointSet) -> Result<PointSet> {
    let cube = CenteredCube::new(spec.d, spec.m)?;
    let mut pts = Vec::new();
    for a in spec.target.iter() {
        for b in hat.iter() {
            let x = a.checked_sub(b)?;
            if cube.contains(&x) {
                pts.push(x);
            }
        }
    }
    PointSet::new(spec.d, pts)
}

/// One Rao–Blackwell trial: `P(Q ∩ (A − Q̂) ≠ ∅ | Q̂)`.
pub fn sum_hit_rb_trial(spec: &SumHitSpec, seed: u64, t: u64) -> Result<f64> {
    let (k_hat, _) = trial_keys(seed, t);
    let hat = sample_hat(spec, k_hat)?;
    if hat.is_empty() {
        return Ok(0.0);
    }
    hit_probability_exact(&spec.p_params(), &shifted_target(spec, &hat)?)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

pub fn sum_hit_mc(spec: &SumHitSpec, trials: u64, seed: u64) -> Result<EstimateResult> {
    check_trials(trials)?;
    let start = Instant::now();
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| sum_hit_trial(spec, seed, t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let estimate = hits as f64 / trials as f64;
    let (ci_low, ci_high) = wilson(hits, trials, REPORT_CONFIDENCE);
    let variance = if trials > 1 {
        estimate * (1.0 - estimate) * trials as f64 / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(EstimateResult {
        estimate,
        trials,
        ci_low,
        ci_high,
        method: HitMethod::MonteCarlo,
        seed,
        elapsed: start.elapsed(),
        variance,
        hits: Some(hits),
    })
}

pub fn sum_hit_rao_blackwell(spec: &SumHitSpec, trials: u64, seed: u64) -> Result<EstimateResult> {
    check_trials(trials)?;
    let frontier = 1u64.checked_shl(spec.d as u32 * spec.m).unwrap_or(u64::MAX);
    if frontier > RB_FRONTIER_LIMIT {
        return Err(Error::BudgetExceeded(format!(
            "Rao–Blackwell oracle frontier 2^(dm) = {frontier} exceeds {RB_FRONTIER_LIMIT}"
        )));
    }
    let start = Instant::now();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| sum_hit_rb_trial(spec, seed, t))
        .collect::<Result<_>>()?;
    let (estimate, variance) = mean_variance(&values);
    let estimate = estimate.clamp(0.0, 1.0);
    let (lo, hi) = normal_interval(estimate, variance, trials, REPORT_CONFIDENCE);
    Ok(EstimateResult {
        estimate,
        trials,
        ci_low: lo.min(estimate),
        ci_high: hi.max(estimate),
        method: HitMethod::RaoBlackwell,
        seed,
        elapsed: start.elapsed(),
        variance,
        hits: None,
    })
}

/// Law of the surviving-leaf mask of `Q_d(p; k)`, as a dense table over
/// `2^{2^{dk}}` masks. Bit `i` is the leaf with index `i`.
fn leaf_mask_law(d: usize, k: u32, p: f64) -> Vec<f64> {
    let mut law = vec![0.0, 1.0];
    let mut leaves = 1usize;
    for _ in 0..k {
        // an edge above a subtree: closed with prob 1 − p
        let mut edge = law.iter().map(|v| p * v).collect::<Vec<_>>();
        edge[0] += 1.0 - p;
        let mut node = vec![1.0];
        for letter in 0..(1usize << d) {
            let mut next = vec![0.0; node.len() * edge.len()];
            for (s, &ps) in node.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                for (t, &pt) in edge.iter().enumerate() {
                    next[s | (t << (letter * leaves))] += ps * pt;
                }
            }
            node = next;
        }
        law = node;
        leaves <<= d;
    }
    law
}

fn leaf_points(d: usize, k: u32) -> Result<Vec<LatticePoint>> {
    (0..1u64 << (d as u32 * k))
        .map(|i| word_to_cube(&TreeWord::from_index(d, k, i)?, k).map(|(c, _)| c))
        .collect()
}

/// Exact hitting probability by summing over joint edge configurations,
/// grouped by the surviving-leaf sets of the two trees.
pub fn sum_hit_exact_enum(spec: &SumHitSpec) -> Result<EstimateResult> {
    let edges = spec.edge_count();
    if edges > MAX_ENUM_EDGES {
        return Err(Error::BudgetExceeded(format!("{edges} edges exceed {MAX_ENUM_EDGES}")));
    }
    let start = Instant::now();
    let (d, m, n) = (spec.d, spec.m, spec.n);
    let law_q = leaf_mask_law(d, m, spec.p);
    let law_hat = leaf_mask_law(d, n, spec.q);
    let xs = leaf_points(d, m)?;
    let bs = leaf_points(d, n)?;
    // need[j]: Q-leaves x with x + b_j ∈ A
    let need: Vec<usize> = bs
        .iter()
        .map(|b| {
            xs.iter().enumerate().fold(0usize, |acc, (i, x)| {
                let hit = x.checked_add(b).map(|s| spec.target.contains(&s)).unwrap_or(false);
                acc | ((hit as usize) << i)
            })
        })
        .collect();
    // zeta[T] = P(surviving Q-leaves ⊆ T)
    let lq = xs.len();
    let mut zeta = law_q;
    for bit in 0..lq {
        for t in 0..zeta.len() {
            if t >> bit & 1 == 1 {
                zeta[t] += zeta[t ^ (1 << bit)];
            }
        }
    }
    let full = (1usize << lq) - 1;
    let mut reach = vec![0usize; law_hat.len()];
    let mut terms = Vec::with_capacity(law_hat.len());
    for s in 1..law_hat.len() {
        let low = s.trailing_zeros() as usize;
        reach[s] = reach[s & (s - 1)] | need[low];
        if law_hat[s] > 0.0 && reach[s] != 0 {
            terms.push(law_hat[s] * (1.0 - zeta[full & !reach[s]]));
        }
    }
    let estimate = neumaier_sum(terms).clamp(0.0, 1.0);
    Ok(EstimateResult {
        estimate,
        trials: 0,
        ci_low: estimate,
        ci_high: estimate,
        method: HitMethod::ExactEnum,
        seed: 0,
        elapsed: start.elapsed(),
        variance: 0.0,
        hits: None,
    })
}

/// The two moments of `L_μ = Σ_a μ(a) Σ_x 1{x ∈ Q, a − x ∈ Q̂}` and the
/// Paley–Zygmund lower bound `(E L)² / E L²` on `P(L_μ > 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PzBound {
    pub first_moment: f64,
    pub second_moment: f64,
    pub bound: f64,
}

/// Letters below the last common ancestor of two leaves with the given indices.
fn split_depth(i: u64, j: u64, d: u32) -> u32 {
    let x = i ^ j;
    if x == 0 {
        0
    } else {
        (63 - x.leading_zeros()) / d + 1
    }
}

pub fn paley_zygmund_bound(spec: &SumHitSpec, mu: &Measure) -> Result<PzBound> {
    paley_zygmund_bound_with(spec, mu, PZ_PAIR_BUDGET)
}

pub fn paley_zygmund_bound_with(spec: &SumHitSpec, mu: &Measure, budget: u64) -> Result<PzBound> {
    if !mu.support().is_subset(&spec.target) {
        return Err(Error::InvalidParameter(
            "measure must be supported on the target".into(),
        ));
    }
    let (d, m, n) = (spec.d, spec.m, spec.n);
    let qcube = CenteredCube::new(d, n)?;
    let xs = CenteredCube::new(d, m)?.to_point_set();
    // (weight, leaf of x in Γ^(m), leaf of a − x in Γ^(n))
    let mut terms: Vec<(f64, u64, u64)> = Vec::new();
    for (a, w) in mu.atoms() {
        if w == 0.0 {
            continue;
        }
        for x in xs.iter() {
            let b = a.checked_sub(x)?;
            if qcube.contains(&b) {
                terms.push((w, leaf_index(x, m)?, leaf_index(&b, n)?));
            }
        }
    }
    let t = terms.len() as u64;
    if t.saturating_mul(t) > budget {
        return Err(Error::BudgetExceeded(format!("{t}² term pairs exceed {budget}")));
    }
    let base = spec.p.powi(m as i32) * spec.q.powi(n as i32);
    let first = base * neumaier_sum(terms.iter().map(|t| t.0));
    let pw: Vec<f64> = (0..=m).map(|h| spec.p.powi(h as i32)).collect();
    let qw: Vec<f64> = (0..=n).map(|h| spec.q.powi(h as i32)).collect();
    let rows: Vec<f64> = terms
        .par_iter()
        .map(|&(w, x, b)| {
            w * neumaier_sum(terms.iter().map(|&(w2, x2, b2)| {
                w2 * pw[split_depth(x, x2, d as u32) as usize] * qw[split_depth(b, b2, d as u32) as usize]
            }))
        })
        .collect();
    let second = base * neumaier_sum(rows);
    let bound = if second > 0.0 { first * first / second } else { 0.0 };
    Ok(PzBound {
        first_moment: first,
        second_moment: second,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, p: f64, q: f64, m: u32, n: u32, pts: &[&[i64]]) -> SumHitSpec {
        let target = PointSet::new(d, pts.iter().map(|c| LatticePoint::new(c).unwrap()).collect()).unwrap();
        SumHitSpec::new(d, p, q, m, n, target).unwrap()
    }

    /// Direct enumeration of all 2^E edge configurations.
    fn brute_force(s: &SumHitSpec) -> f64 {
        let edges_q: Vec<TreeWord> = (1..=s.m)
            .flat_map(|j| (0..1u64 << (s.d as u32 * j)).map(move |i| (j, i)))
            .map(|(j, i)| TreeWord::from_index(s.d, j, i).unwrap())
            .collect();
        let edges_hat: Vec<TreeWord> = (1..=s.n)
            .flat_map(|j| (0..1u64 << (s.d as u32 * j)).map(move |i| (j, i)))
            .map(|(j, i)| TreeWord::from_index(s.d, j, i).unwrap())
            .collect();
        let ne = edges_q.len() + edges_hat.len();
        let survivors = |edges: &[TreeWord], open: &[bool], k: u32| -> Vec<LatticePoint> {
            leaf_points(s.d, k)
                .unwrap()
                .into_iter()
                .filter(|x| {
                    let w = crate::fractal::point_to_word(x, k).unwrap();
                    (1..=k as usize).all(|j| {
                        let prefix = TreeWord::new(s.d, w.letters()[..j].to_vec()).unwrap();
                        open[edges.iter().position(|e| *e == prefix).unwrap()]
                    })
                })
                .collect()
        };
        let mut total = 0.0;
        for cfg in 0u64..(1 << ne) {
            let open: Vec<bool> = (0..ne).map(|i| cfg >> i & 1 == 1).collect();
            let ones_q = open[..edges_q.len()].iter().filter(|&&b| b).count() as i32;
            let ones_h = open[edges_q.len()..].iter().filter(|&&b| b).count() as i32;
            let w = s.p.powi(ones_q)
                * (1.0 - s.p).powi(edges_q.len() as i32 - ones_q)
                * s.q.powi(ones_h)
                * (1.0 - s.q).powi(edges_hat.len() as i32 - ones_h);
            let qs = survivors(&edges_q, &open[..edges_q.len()], s.m);
            let hs = survivors(&edges_hat, &open[edges_q.len()..], s.n);
            let hit = qs
                .iter()
                .any(|x| hs.iter().any(|b| s.target.contains(&x.checked_add(b).unwrap())));
            if hit {
                total += w;
            }
        }
        total
    }

    #[test]
    fn spec_validation() {
        let t = PointSet::from_coords(1, &[[0]]).unwrap();
        assert!(SumHitSpec::new(1, 0.6, 0.6, 2, 1, t.clone()).is_err());
        assert!(SumHitSpec::new(1, 0.6, 0.6, 1, 1, PointSet::empty(1).unwrap()).is_err());
        // extended box for m=n=1 is [-2, 2)
        assert!(SumHitSpec::new(1, 0.6, 0.6, 1, 1, PointSet::from_coords(1, &[[2]]).unwrap()).is_err());
        assert!(SumHitSpec::new(1, 0.6, 0.6, 1, 1, PointSet::from_coords(1, &[[-2]]).unwrap()).is_ok());
        let s = SumHitSpec::new(1, 0.6, 0.6, 1, 1, t.clone()).unwrap();
        assert!(s.condition_holds());
        assert!((s.beta() - 0.473_931_188_332_412_3).abs() < 1e-12);
        assert!(!SumHitSpec::new(1, 0.8, 0.8, 1, 1, t).unwrap().condition_holds());
    }

    #[test]
    fn edge_counts() {
        assert_eq!(spec(1, 0.5, 0.5, 1, 1, &[&[0]]).edge_count(), 4);
        assert_eq!(spec(1, 0.5, 0.5, 2, 2, &[&[0]]).edge_count(), 12);
        assert_eq!(spec(2, 0.5, 0.5, 1, 2, &[&[0, 0]]).edge_count(), 24);
    }

    #[test]
    fn exact_small_cases() {
        let s = spec(1, 0.6, 0.7, 1, 1, &[&[0]]);
        assert!((sum_hit_exact_enum(&s).unwrap().estimate - 0.42).abs() < 1e-15);
        let s = spec(1, 0.5, 0.5, 1, 1, &[&[-1]]);
        assert!((sum_hit_exact_enum(&s).unwrap().estimate - 0.4375).abs() < 1e-15);
        // 1 + 1 is not reachable
        let s = spec(1, 0.5, 0.5, 1, 1, &[&[1]]);
        assert_eq!(sum_hit_exact_enum(&s).unwrap().estimate, 0.0);
    }

    #[test]
    fn exact_matches_raw_enumeration() {
        let cases: Vec<SumHitSpec> = vec![
            spec(1, 0.6, 0.7, 1, 1, &[&[0], &[1]]),
            spec(1, 0.55, 0.65, 1, 2, &[&[0]]),
            spec(1, 0.6, 0.6, 2, 2, &[&[0]]),
            spec(1, 0.7, 0.4, 2, 2, &[&[-3], &[2]]),
            spec(2, 0.4, 0.5, 1, 1, &[&[0, 0], &[-1, 1]]),
        ];
        for s in &cases {
            let e = sum_hit_exact_enum(s).unwrap().estimate;
            let b = brute_force(s);
            assert!((e - b).abs() < 1e-13, "{e} vs {b}");
        }
    }

    #[test]
    fn exact_enum_budget() {
        let s = spec(2, 0.5, 0.5, 2, 2, &[&[0, 0]]);
        assert!(matches!(sum_hit_exact_enum(&s), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn exact_monotone_in_p_and_q() {
        let grid = [0.3, 0.5, 0.7];
        let mut prev_row: Option<Vec<f64>> = None;
        for &p in &grid {
            let row: Vec<f64> = grid
                .iter()
                .map(|&q| {
                    sum_hit_exact_enum(&spec(1, p, q, 2, 2, &[&[0], &[3]]))
                        .unwrap()
                        .estimate
                })
                .collect();
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
            if let Some(pr) = &prev_row {
                assert!(pr.iter().zip(&row).all(|(a, b)| a <= b));
            }
            prev_row = Some(row);
        }
    }

    #[test]
    fn unreachable_target_is_zero_for_mc() {
        let s = spec(1, 0.9, 0.9, 1, 1, &[&[1]]);
        let r = sum_hit_mc(&s, 2000, 5).unwrap();
        assert_eq!(r.estimate, 0.0);
        let r = sum_hit_rao_blackwell(&s, 2000, 5).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn mc_and_rb_cover_exact_small() {
        for (s, exact) in [
            (spec(1, 0.6, 0.7, 1, 1, &[&[0]]), 0.42),
            (spec(1, 0.5, 0.5, 1, 1, &[&[-1]]), 0.4375),
        ] {
            let mc = sum_hit_mc(&s, 100_000, 11).unwrap();
            let rb = sum_hit_rao_blackwell(&s, 100_000, 11).unwrap();
            assert!(mc.contains(exact, ASSERT_CONFIDENCE), "{mc:?}");
            assert!(rb.contains(exact, ASSERT_CONFIDENCE), "{rb:?}");
            assert!(rb.variance <= mc.variance);
            assert!(mc.ci_low <= mc.estimate && mc.estimate <= mc.ci_high);
        }
    }

    #[test]
    fn rb_single_point_is_p_times_indicator() {
        let s = spec(1, 0.6, 0.7, 1, 1, &[&[0]]);
        for t in 0..50 {
            let v = sum_hit_rb_trial(&s, 3, t).unwrap();
            assert!(v == 0.0 || (v - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn trial_is_independent_of_pruning() {
        // Compare the pruned trial with an unpruned evaluation on the same keys.
        let s = spec(2, 0.6, 0.6, 2, 3, &[&[0, 0], &[3, -2], &[-5, 1]]);
        for t in 0..300 {
            let (kh, kq) = trial_keys(9, t);
            let hat = crate::fractal::sample_from_key(&s.q_params(), kh).unwrap().survivors;
            let q = crate::fractal::sample_from_key(&s.p_params(), kq).unwrap().survivors;
            let direct = crate::lattice::minkowski_sum(&q, &hat).unwrap().meets(s.target());
            assert_eq!(sum_hit_trial(&s, 9, t).unwrap(), direct);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = spec(1, 0.6, 0.6, 2, 4, &[&[0], &[4]]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let mc = sum_hit_mc(&s, 5000, 21).unwrap();
                    let rb = sum_hit_rao_blackwell(&s, 5000, 21).unwrap();
                    (mc.estimate.to_bits(), rb.estimate.to_bits(), rb.variance.to_bits())
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn pz_singleton_is_tight() {
        let s = spec(1, 0.6, 0.7, 1, 1, &[&[0]]);
        let mu = Measure::dirac(LatticePoint::new(&[0]).unwrap());
        let pz = paley_zygmund_bound(&s, &mu).unwrap();
        assert!((pz.first_moment - 0.42).abs() < 1e-15);
        assert!((pz.second_moment - 0.42).abs() < 1e-15);
        assert!((pz.bound - 0.42).abs() < 1e-15);
    }

    #[test]
    fn pz_is_a_lower_bound() {
        for s in [
            spec(1, 0.6, 0.7, 1, 1, &[&[0], &[-1]]),
            spec(1, 0.6, 0.6, 2, 2, &[&[0], &[-3]]),
            spec(1, 0.7, 0.55, 1, 3, &[&[-4], &[0], &[3]]),
            spec(2, 0.5, 0.6, 1, 1, &[&[0, 0], &[-1, -1]]),
        ] {
            let exact = sum_hit_exact_enum(&s).unwrap().estimate;
            let mu = Measure::uniform(s.target().clone()).unwrap();
            let pz = paley_zygmund_bound(&s, &mu).unwrap();
            assert!(pz.bound <= exact + 1e-12, "{pz:?} > {exact}");
        }
    }

    #[test]
    fn pz_second_moment_by_hand() {
        // d=1, m=n=1, A={-1}, μ=δ: x ∈ {-1, 0}, b = -1 - x ∈ {0, -1}.
        let (p, q) = (0.6, 0.7);
        let s = spec(1, p, q, 1, 1, &[&[-1]]);
        let pz = paley_zygmund_bound(&s, &Measure::dirac(LatticePoint::new(&[-1]).unwrap())).unwrap();
        assert!((pz.first_moment - 2.0 * p * q).abs() < 1e-15);
        let second = 2.0 * p * q + 2.0 * p * p * q * q;
        assert!((pz.second_moment - second).abs() < 1e-15);
    }

    #[test]
    fn pz_budget() {
        let s = spec(1, 0.6, 0.6, 4, 4, &[&[0], &[3]]);
        let mu = Measure::uniform(s.target().clone()).unwrap();
        assert!(matches!(
            paley_zygmund_bound_with(&s, &mu, 100),
            Err(Error::BudgetExceeded(_))
        ));
    }
}
