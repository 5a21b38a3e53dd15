//! Parameter sweeps behind `experiment run`. Each experiment turns a config
//! into a table (rows in grid order) plus a list of checks.

use rayon::prelude::*;
use thiserror::Error;

use minkcap_core::capacity::{capacity, Measure};
use minkcap_core::fractal::{hit_probability_exact, sample_from_key, PercolationParams};
use minkcap_core::hitting::{
    paley_zygmund_bound, sum_hit_exact_enum, sum_hit_mc, sum_hit_rao_blackwell, EstimateResult, SumHitSpec,
    ASSERT_CONFIDENCE, MAX_ENUM_EDGES,
};
use minkcap_core::lattice::{minkowski_sum, LatticePoint, PointSet};
use minkcap_core::randomsets::{sum_of_ranges_hit, RandomSetSpec};
use minkcap_core::rng::StreamKey;
use minkcap_core::stats::{mean_variance, slope};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::fixtures::{self, level_family, tiny_fixtures, Family};
use crate::table::{cell_seed, fmt_f64, fmt_opt, target_hash, Check, Table};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] minkcap_core::Error),
    #[error("precondition violated: {0} (set explore = true to run anyway)")]
    Precondition(String),
}

type Result<T, E = ExperimentError> = std::result::Result<T, E>;

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub table: Table,
    pub checks: Vec<Check>,
    pub explore: bool,
}

impl ExperimentOutput {
    pub fn csv(&self) -> Vec<u8> {
        self.table.to_csv()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.soft)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Config with the experiment's defaults written out.
pub fn default_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::new();
    c.set("experiment", kind.name()).set("seed", 1);
    match kind {
        ExperimentKind::FpCapRatio => {
            c.set("d", "1, 2")
                .set("beta", "0.5, 1")
                .set("k", "4..8")
                .set("families", "singleton, pair, cube, segment")
                .set("band_limit", 50);
        }
        ExperimentKind::MainBand => {
            c.set("d", 1)
                .set("p", 0.6)
                .set("q", 0.6)
                .set("m", "1..4")
                .set("n_max", 8)
                .set("families", "singleton, pair, cube")
                .set("pair_distance", 4)
                .set("cube_level", 2)
                .set("trials", 100_000)
                .set("method", "rb")
                .set("band_limit", 50)
                .set("slope_tol", 0.2);
        }
        ExperimentKind::CapCompare => {
            c.set("d", 2)
                .set("a", 0.5)
                .set("b", 1.5)
                .set("m", "2..6")
                .set("samples", 200)
                .set("pair_distance", 4)
                .set("band_limit", 50)
                .set("slope_tol", 0.2);
        }
        ExperimentKind::PzDiag => {
            c.set("fixtures", "tiny");
        }
        ExperimentKind::SrwBand => {
            c.set("d", 5)
                .set("families", "singleton, pair")
                .set("pair_distance", 2)
                .set("x_norms", "8, 16")
                .set("radius_mult", 8)
                .set("trials", 100_000)
                .set("band_limit", 10)
                .set("assert_soft", false);
        }
    }
    c
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let kind = cfg.experiment()?;
    let explore = cfg.get_bool("explore", false)?;
    let mut out = match kind {
        ExperimentKind::FpCapRatio => fp_cap_ratio(cfg)?,
        ExperimentKind::MainBand => main_band(cfg, explore)?,
        ExperimentKind::CapCompare => cap_compare(cfg)?,
        ExperimentKind::PzDiag => pz_diag(cfg)?,
        ExperimentKind::SrwBand => srw_band(cfg)?,
    };
    if explore {
        out.explore = true;
        out.checks.iter_mut().for_each(|c| c.soft = true);
    }
    Ok(out)
}

fn output(kind: ExperimentKind, table: Table, checks: Vec<Check>) -> ExperimentOutput {
    ExperimentOutput {
        kind,
        table,
        checks,
        explore: false,
    }
}

/// `max / min` of positive values, with the positions of the extremes.
fn band(values: &[f64]) -> (f64, usize, usize) {
    let (mut lo, mut hi) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v < values[lo] {
            lo = i;
        }
        if *v > values[hi] {
            hi = i;
        }
    }
    (values[hi] / values[lo], lo, hi)
}

fn log2_diam(a: &PointSet) -> f64 {
    a.diameter().map(|d| d.max(1.0).log2()).unwrap_or(0.0)
}

// ---------------------------------------------------------------- fp_cap_ratio

struct FpCell {
    d: usize,
    beta: f64,
    family: Family,
    k: u32,
}

fn fp_cap_ratio(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ds: Vec<usize> = cfg.get_list("d", &[1, 2])?;
    let betas: Vec<f64> = cfg.get_list("beta", &[0.5, 1.0])?;
    let ks: Vec<u32> = cfg.get_list("k", &[4, 5, 6, 7, 8])?;
    let families: Vec<Family> = cfg.get_list(
        "families",
        &[Family::Singleton, Family::Pair, Family::Cube, Family::Segment],
    )?;
    let band_limit: f64 = cfg.get("band_limit", 50.0)?;
    let tol: f64 = cfg.get("cap_tol", 1e-9)?;
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0)) {
        return Err(ExperimentError::Precondition(format!("β must be positive, got {b}")));
    }
    let mut cells = Vec::new();
    for &d in &ds {
        for &beta in &betas {
            for &family in &families {
                for &k in &ks {
                    cells.push(FpCell { d, beta, family, k });
                }
            }
        }
    }
    let results: Vec<(PointSet, f64, f64, &'static str)> = cells
        .par_iter()
        .map(|c| -> Result<_> {
            let a = level_family(c.family, c.d, c.k)?;
            let pp = PercolationParams::new(c.d, 2f64.powf(-c.beta), c.k)?;
            let exact = hit_probability_exact(&pp, &a)?;
            let cap = capacity(&a, c.beta, tol)?;
            Ok((a, exact, cap.value, cap.method.as_str()))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "d",
        "beta",
        "p",
        "k",
        "family",
        "size",
        "target_hash",
        "exact_hit",
        "capacity",
        "cap_method",
        "scale",
        "ratio",
        "supercritical",
    ]);
    let mut ratios: Vec<f64> = Vec::new();
    for (c, (a, exact, cap, method)) in cells.iter().zip(&results) {
        let p = 2f64.powf(-c.beta);
        let scale = 2f64.powf(-c.beta * c.k as f64) * cap;
        let ratio = exact / scale;
        ratios.push(ratio);
        table.push(vec![
            c.d.to_string(),
            fmt_f64(c.beta),
            fmt_f64(p),
            c.k.to_string(),
            c.family.to_string(),
            a.len().to_string(),
            target_hash(a),
            fmt_f64(*exact),
            fmt_f64(*cap),
            method.to_string(),
            fmt_f64(scale),
            fmt_f64(ratio),
            (p > 2f64.powi(-(c.d as i32))).to_string(),
        ]);
    }

    let mut checks = Vec::new();
    for &d in &ds {
        for &beta in &betas {
            let idx: Vec<usize> = (0..cells.len())
                .filter(|&i| cells[i].d == d && cells[i].beta == beta)
                .collect();
            if idx.is_empty() {
                continue;
            }
            let vals: Vec<f64> = idx.iter().map(|&i| ratios[i]).collect();
            let (b, lo, hi) = band(&vals);
            let at = |j: usize| format!("{} k={}", cells[idx[j]].family, cells[idx[j]].k);
            checks.push(Check::new(
                "FP_cap: P(Q_d(2^-β;k)∩A≠∅) ≍ 2^-βk Cap_β(A), band max/min ≤ limit",
                format!("d={d} beta={beta}"),
                b.is_finite() && b <= band_limit,
                format!(
                    "band {b:.4} (min {:.4} at {}, max {:.4} at {}), limit {band_limit}",
                    vals[lo],
                    at(lo),
                    vals[hi],
                    at(hi)
                ),
            ));
        }
    }
    for (c, r) in cells.iter().zip(&ratios) {
        if c.family == Family::Singleton {
            checks.push(Check::new(
                "FP_cap singleton: ratio = 1",
                format!("d={} beta={} k={}", c.d, c.beta, c.k),
                (r - 1.0).abs() <= 1e-12,
                format!("ratio {r}"),
            ));
        }
    }
    Ok(output(ExperimentKind::FpCapRatio, table, checks))
}

// ------------------------------------------------------------------ main_band

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Estimator {
    Mc,
    Rb,
}

fn estimator(cfg: &ExperimentConfig) -> Result<Estimator> {
    match cfg.get_str("method").unwrap_or("rb") {
        "mc" => Ok(Estimator::Mc),
        "rb" | "rao_blackwell" => Ok(Estimator::Rb),
        other => Err(ConfigError::Value {
            key: "method".into(),
            value: other.into(),
            msg: "expected mc or rb".into(),
        }
        .into()),
    }
}

struct BandCell {
    family: Family,
    m: u32,
    n: u32,
    target: PointSet,
    seed: u64,
}

fn main_band(cfg: &ExperimentConfig, explore: bool) -> Result<ExperimentOutput> {
    let d: usize = cfg.get("d", 1)?;
    let p: f64 = cfg.get("p", 0.6)?;
    let q: f64 = cfg.get("q", 0.6)?;
    let ms: Vec<u32> = cfg.get_list("m", &[1, 2, 3, 4])?;
    let n_max: u32 = cfg.get("n_max", 8)?;
    let families: Vec<Family> = cfg.get_list("families", &[Family::Singleton, Family::Pair, Family::Cube])?;
    let pair_distance: i64 = cfg.get("pair_distance", 4)?;
    let cube_level: u32 = cfg.get("cube_level", 2)?;
    let trials: u64 = cfg.get("trials", 100_000)?;
    let seed: u64 = cfg.get("seed", 1)?;
    let band_limit: f64 = cfg.get("band_limit", 50.0)?;
    let slope_tol: f64 = cfg.get("slope_tol", 0.2)?;
    let method = estimator(cfg)?;

    let probe = PercolationParams::new(d, p, 1)?;
    PercolationParams::new(d, q, 1)?;
    if !probe.sum_condition_holds(q) && !explore {
        return Err(ExperimentError::Precondition(format!(
            "need p, q > 2^-d and β = -log2(2^d p q) > 0; got d={d}, p={p}, q={q}, β={}",
            probe.sum_exponent(q)
        )));
    }
    let beta = probe.sum_exponent(q);

    let target_of = |f: Family| -> Result<PointSet> {
        Ok(match f {
            Family::Singleton => fixtures::singleton(d)?,
            Family::Pair => fixtures::pair(d, pair_distance)?,
            Family::Cube => minkcap_core::lattice::CenteredCube::new(d, cube_level)?.to_point_set(),
            Family::Segment => level_family(Family::Segment, d, cube_level)?,
        })
    };
    let mut cells = Vec::new();
    for &family in &families {
        let target = target_of(family)?;
        for &m in &ms {
            for n in m..=n_max {
                // cells whose extended box misses part of the target are outside the domain
                if SumHitSpec::new(d, p, q, m, n, target.clone()).is_err() {
                    continue;
                }
                cells.push(BandCell {
                    family,
                    m,
                    n,
                    target: target.clone(),
                    seed: cell_seed(seed, &[&family, &m, &n]),
                });
            }
        }
    }
    let caps: Vec<(Family, f64)> = families
        .iter()
        .map(|&f| -> Result<_> {
            let cap = if beta > 0.0 {
                capacity(&target_of(f)?, beta, 1e-10)?.value
            } else {
                f64::NAN
            };
            Ok((f, cap))
        })
        .collect::<Result<_>>()?;
    let cap_of = |f: Family| caps.iter().find(|(g, _)| *g == f).expect("family present").1;

    let results: Vec<(EstimateResult, Option<f64>)> = cells
        .par_iter()
        .map(|c| -> Result<_> {
            let spec = SumHitSpec::new(d, p, q, c.m, c.n, c.target.clone())?;
            let est = match method {
                Estimator::Mc => sum_hit_mc(&spec, trials, c.seed)?,
                Estimator::Rb => sum_hit_rao_blackwell(&spec, trials, c.seed)?,
            };
            let exact = if spec.edge_count() <= MAX_ENUM_EDGES {
                Some(sum_hit_exact_enum(&spec)?.estimate)
            } else {
                None
            };
            Ok((est, exact))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "d",
        "p",
        "q",
        "m",
        "n",
        "family",
        "target_hash",
        "method",
        "estimate",
        "ci_low",
        "ci_high",
        "trials",
        "seed",
        "beta",
        "capacity",
        "ratio",
        "exact",
    ]);
    let growth = (1u64 << d) as f64 * p;
    let mut lower_norm = Vec::new();
    let mut upper_norm = Vec::new();
    let mut ratios = Vec::new();
    let mut checks = Vec::new();
    for (c, (est, exact)) in cells.iter().zip(&results) {
        let cap = cap_of(c.family);
        let ratio = est.estimate / (q.powi(c.n as i32) * cap);
        ratios.push(ratio);
        lower_norm.push(ratio / growth.powi(c.m as i32));
        upper_norm.push(ratio / growth.powf((c.m as f64).max(log2_diam(&c.target))));
        table.push(vec![
            d.to_string(),
            fmt_f64(p),
            fmt_f64(q),
            c.m.to_string(),
            c.n.to_string(),
            c.family.to_string(),
            target_hash(&c.target),
            est.method.as_str().to_string(),
            fmt_f64(est.estimate),
            fmt_f64(est.ci_low),
            fmt_f64(est.ci_high),
            est.trials.to_string(),
            c.seed.to_string(),
            fmt_f64(beta),
            fmt_f64(cap),
            fmt_f64(ratio),
            fmt_opt(*exact),
        ]);
        if let Some(x) = exact {
            let (lo, hi) = est.interval(ASSERT_CONFIDENCE);
            checks.push(Check::new(
                "exact enumeration inside the 99.9% interval",
                format!("{} m={} n={}", c.family, c.m, c.n),
                lo <= *x && *x <= hi,
                format!("exact {x} vs [{lo}, {hi}]"),
            ));
        }
    }
    if !cells.is_empty() {
        let (i1, _) = lower_norm
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let (i2, _) = upper_norm
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let (c1, c2) = (lower_norm[i1], upper_norm[i2]);
        let b = c2 / c1;
        let at = |i: usize| format!("{} m={} n={}", cells[i].family, cells[i].m, cells[i].n);
        checks.push(Check::new(
            "Theorem main: c1 (2^d p)^m ≤ R ≤ c2 (2^d p)^(m ∨ log2 diam A), fitted c2/c1 ≤ limit",
            format!("d={d} p={p} q={q}"),
            b.is_finite() && b <= band_limit,
            format!(
                "c1 {c1:.4} at {}, c2 {c2:.4} at {}, band {b:.4}, limit {band_limit}",
                at(i1),
                at(i2)
            ),
        ));
    }
    if families.contains(&Family::Singleton) {
        let expected = growth.log2();
        let mut ns: Vec<u32> = cells.iter().map(|c| c.n).collect();
        ns.dedup();
        ns.sort_unstable();
        ns.dedup();
        for n in ns {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .zip(&ratios)
                .filter(|(c, _)| c.family == Family::Singleton && c.n == n)
                .map(|(c, r)| (c.m as f64, r.log2()))
                .collect();
            // only columns that contain every configured m
            if pts.len() != ms.len() || pts.len() < 2 {
                continue;
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let s = slope(&xs, &ys);
            checks.push(Check::new(
                "Theorem main lower-bound scaling: slope of log2 R in m = log2(2^d p)",
                format!("singleton n={n}"),
                (s - expected).abs() <= slope_tol,
                format!("slope {s:.4}, expected {expected:.4} ± {slope_tol}"),
            ));
        }
    }
    Ok(output(ExperimentKind::MainBand, table, checks))
}

// ----------------------------------------------------------------- cap_compare

fn cap_compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d: usize = cfg.get("d", 2)?;
    let a: f64 = cfg.get("a", 0.5)?;
    let b: f64 = cfg.get("b", 1.5)?;
    let ms: Vec<u32> = cfg.get_list("m", &[2, 3, 4, 5, 6])?;
    let samples: u64 = cfg.get("samples", 200)?;
    let pair_distance: i64 = cfg.get("pair_distance", 4)?;
    let seed: u64 = cfg.get("seed", 1)?;
    let band_limit: f64 = cfg.get("band_limit", 50.0)?;
    let slope_tol: f64 = cfg.get("slope_tol", 0.2)?;
    let tol: f64 = cfg.get("cap_tol", 1e-8)?;
    if !(0.0 < a && a < b && b < d as f64) {
        return Err(ExperimentError::Precondition(format!(
            "need 0 < a < b < d, got a={a}, b={b}, d={d}"
        )));
    }
    let target = match cfg.get_str("target") {
        Some("singleton") => fixtures::singleton(d)?,
        _ => fixtures::pair(d, pair_distance)?,
    };
    let p = 2f64.powf(b - a - d as f64);
    let cap_a = capacity(&target, a, 1e-10)?.value;
    let ld = log2_diam(&target);

    let mut table = Table::new(&[
        "d",
        "a",
        "b",
        "m",
        "p",
        "samples",
        "seed",
        "target_hash",
        "cap_a",
        "mean_cap_b",
        "sd_cap_b",
        "empty_fraction",
        "ratio",
        "log2_ratio",
        "lower_bound",
        "upper_bound",
        "local_slope",
    ]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lower_norm = Vec::new();
    let mut upper_norm = Vec::new();
    for &m in &ms {
        let pp = PercolationParams::new(d, p, m)?;
        let cs = cell_seed(seed, &[&m]);
        let root = StreamKey::new(cs);
        let caps: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let q = sample_from_key(&pp, root.split(i))?.survivors;
                if q.is_empty() {
                    return Ok(0.0);
                }
                Ok(capacity(&minkowski_sum(&target, &q)?, b, tol)?.value)
            })
            .collect::<Result<_>>()?;
        let (mean, var) = mean_variance(&caps);
        let empty = caps.iter().filter(|c| **c == 0.0).count() as f64 / samples as f64;
        let ratio = cap_a / mean;
        let l2 = ratio.log2();
        let lower = 2f64.powf((a - b) * (m as f64).max(ld));
        let upper = 2f64.powf((a - b) * m as f64);
        let local = match (xs.last(), ys.last()) {
            (Some(&x0), Some(&y0)) => Some((l2 - y0) / (m as f64 - x0)),
            _ => None,
        };
        xs.push(m as f64);
        ys.push(l2);
        lower_norm.push(ratio / lower);
        upper_norm.push(ratio / upper);
        table.push(vec![
            d.to_string(),
            fmt_f64(a),
            fmt_f64(b),
            m.to_string(),
            fmt_f64(p),
            samples.to_string(),
            cs.to_string(),
            target_hash(&target),
            fmt_f64(cap_a),
            fmt_f64(mean),
            fmt_f64(var.sqrt()),
            fmt_f64(empty),
            fmt_f64(ratio),
            fmt_f64(l2),
            fmt_f64(lower),
            fmt_f64(upper),
            fmt_opt(local),
        ]);
    }
    let mut checks = Vec::new();
    if xs.len() >= 2 {
        let s = slope(&xs, &ys);
        checks.push(Check::new(
            "Corollary cap_a_b: slope of log2(Cap_a(A)/E Cap_b(A+Q)) in m = a − b",
            format!("d={d} a={a} b={b} m={:?}", ms),
            (s - (a - b)).abs() <= slope_tol,
            format!("slope {s:.4}, expected {:.4} ± {slope_tol}", a - b),
        ));
    }
    if !xs.is_empty() {
        let c1 = lower_norm.iter().copied().fold(f64::INFINITY, f64::min);
        let c2 = upper_norm.iter().copied().fold(0.0, f64::max);
        let bnd = c2 / c1;
        checks.push(Check::new(
            "Corollary cap_a_b: c1·2^((a−b)(m ∨ log2 diam A)) ≤ ratio ≤ c2·2^((a−b)m), fitted c2/c1 ≤ limit",
            format!("d={d} a={a} b={b}"),
            bnd.is_finite() && bnd <= band_limit,
            format!("c1 {c1:.4}, c2 {c2:.4}, band {bnd:.4}, limit {band_limit}"),
        ));
    }
    Ok(output(ExperimentKind::CapCompare, table, checks))
}

// --------------------------------------------------------------------- pz_diag

fn pz_diag(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.get_str("fixtures").unwrap_or("tiny") {
        "tiny" => {}
        other => {
            return Err(ConfigError::Value {
                key: "fixtures".into(),
                value: other.into(),
                msg: "only `tiny` is available".into(),
            }
            .into())
        }
    }
    let fx = tiny_fixtures();
    let rows: Vec<(f64, f64, f64)> = fx
        .par_iter()
        .map(|f| -> Result<_> {
            let spec = SumHitSpec::new(f.d, f.p, f.q, f.m, f.n, f.target.clone())?;
            let exact = sum_hit_exact_enum(&spec)?.estimate;
            let uni = paley_zygmund_bound(&spec, &Measure::uniform(f.target.clone())?)?.bound;
            let eq = capacity(&f.target, spec.beta(), 1e-12)?.equilibrium;
            let eqb = paley_zygmund_bound(&spec, &eq)?.bound;
            Ok((exact, uni, eqb))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "id",
        "d",
        "p",
        "q",
        "m",
        "n",
        "target",
        "target_hash",
        "exact",
        "pz_uniform",
        "pz_equilibrium",
        "slack_uniform",
        "slack_equilibrium",
    ]);
    let mut checks = Vec::new();
    for (f, &(exact, uni, eqb)) in fx.iter().zip(&rows) {
        table.push(vec![
            f.id.to_string(),
            f.d.to_string(),
            fmt_f64(f.p),
            fmt_f64(f.q),
            f.m.to_string(),
            f.n.to_string(),
            fixtures::target_label(&f.target),
            target_hash(&f.target),
            fmt_f64(exact),
            fmt_f64(uni),
            fmt_f64(eqb),
            fmt_f64(exact - uni),
            fmt_f64(exact - eqb),
        ]);
        let cell = format!(
            "fixture {} (p={}, q={}, m={}, n={}, A={})",
            f.id,
            f.p,
            f.q,
            f.m,
            f.n,
            fixtures::target_label(&f.target)
        );
        for (name, v) in [("uniform", uni), ("equilibrium", eqb)] {
            checks.push(Check::new(
                "Paley–Zygmund: (E L_μ)²/E L_μ² ≤ P(hit)",
                format!("{cell}, μ {name}"),
                v <= exact + 1e-12,
                format!("bound {v} vs exact {exact}"),
            ));
        }
        if f.m == 1 && f.n == 1 && f.target.len() == 1 && f.target.contains(&LatticePoint::origin(f.d)?) {
            checks.push(Check::new(
                "Paley–Zygmund tight on A={0}, m=n=1",
                cell.clone(),
                (uni - exact).abs() <= 1e-12 && (eqb - exact).abs() <= 1e-12 && (exact - f.p * f.q).abs() <= 1e-12,
                format!("bounds {uni}, {eqb}; exact {exact}; pq {}", f.p * f.q),
            ));
        }
        if f.target.len() == 2 {
            let sep = f.target.diameter()?;
            if sep.fract() == 0.0 && (sep as u64).is_power_of_two() {
                checks.push(Check::new(
                    "Paley–Zygmund: equilibrium μ no worse than uniform on dyadic pairs",
                    cell,
                    eqb >= uni - 1e-12,
                    format!("equilibrium {eqb}, uniform {uni}"),
                ));
            }
        }
    }
    Ok(output(ExperimentKind::PzDiag, table, checks))
}

// ------------------------------------------------------------------- srw_band

fn srw_band(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d: usize = cfg.get("d", 5)?;
    let families: Vec<Family> = cfg.get_list("families", &[Family::Singleton, Family::Pair])?;
    let pair_distance: i64 = cfg.get("pair_distance", 2)?;
    let norms: Vec<i64> = cfg.get_list("x_norms", &[8, 16])?;
    let mult: f64 = cfg.get("radius_mult", 8.0)?;
    let trials: u64 = cfg.get("trials", 100_000)?;
    let seed: u64 = cfg.get("seed", 1)?;
    let band_limit: f64 = cfg.get("band_limit", 10.0)?;
    let hard = cfg.get_bool("assert_soft", false)?;
    let origin = LatticePoint::origin(d)?;

    let mut table = Table::new(&[
        "kind",
        "d",
        "family",
        "x_norm",
        "radius",
        "trials",
        "seed",
        "hits",
        "estimate",
        "ci_low",
        "ci_high",
        "reference",
        "ratio",
    ]);
    let mut base_ratios = Vec::new();
    let mut base_cells = Vec::new();
    let mut checks = Vec::new();
    for &family in &families {
        let a = match family {
            Family::Singleton => fixtures::singleton(d)?,
            Family::Pair => fixtures::pair(d, pair_distance)?,
            other => {
                return Err(ConfigError::Value {
                    key: "families".into(),
                    value: other.to_string(),
                    msg: "srw_band supports singleton and pair".into(),
                }
                .into())
            }
        };
        for &xn in &norms {
            let x = LatticePoint::axis(d, 0, xn)?;
            let cs = cell_seed(seed, &[&family, &xn]);
            let mut runs = Vec::new();
            for r in [mult * xn as f64, 2.0 * mult * xn as f64] {
                let spec = RandomSetSpec::srw(d, r, origin)?;
                // the same seed at both radii couples the walks
                let row = sum_of_ranges_hit(&[spec.clone(), spec], &a, &[x], trials, cs)?.remove(0);
                table.push(vec![
                    "srw_range".into(),
                    d.to_string(),
                    family.to_string(),
                    xn.to_string(),
                    fmt_f64(r),
                    trials.to_string(),
                    cs.to_string(),
                    row.hits.to_string(),
                    fmt_f64(row.estimate),
                    fmt_f64(row.ci_low),
                    fmt_f64(row.ci_high),
                    fmt_opt(row.reference),
                    fmt_opt(row.ratio),
                ]);
                runs.push(row);
            }
            base_ratios.push(runs[0].ratio.unwrap_or(f64::NAN));
            base_cells.push(format!("{family} |x|={xn}"));
            let width = runs[0].ci_high - runs[0].ci_low;
            let diff = (runs[1].estimate - runs[0].estimate).abs();
            let c = Check::new(
                "truncation: doubling R moves the estimate by less than the CI width",
                format!("{family} |x|={xn} R={}", runs[0].radius.unwrap_or(0.0)),
                diff < width,
                format!("|Δ| {diff:.5} vs width {width:.5}"),
            );
            checks.push(if hard { c } else { c.soft() });
        }
    }
    if !base_ratios.is_empty() {
        let (b, lo, hi) = band(&base_ratios);
        let c = Check::new(
            "Theorem rw+rw: P((R1+R2)∩(x+A)≠∅) ≍ |x|^(d−β1−β2) Cap_γ(A), band max/min ≤ limit",
            format!("d={d} R={mult}|x|"),
            b.is_finite() && b <= band_limit,
            format!(
                "band {b:.4} (min at {}, max at {}), limit {band_limit}",
                base_cells[lo], base_cells[hi]
            ),
        );
        checks.push(if hard { c } else { c.soft() });
    }
    Ok(output(ExperimentKind::SrwBand, table, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind, kv: &[(&str, &str)]) -> ExperimentConfig {
        let mut c = default_config(kind);
        for (k, v) in kv {
            c.set(k, v);
        }
        c
    }

    #[test]
    fn fp_cap_singleton_ratio_is_one_and_k0() {
        let out = run(&cfg(
            ExperimentKind::FpCapRatio,
            &[("k", "0..3"), ("families", "singleton"), ("d", "1")],
        ))
        .unwrap();
        let col = out.table.column("ratio").unwrap();
        for r in &out.table.rows {
            assert!((r[col].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(out.passed());
    }

    #[test]
    fn fp_cap_rejects_nonpositive_beta() {
        assert!(matches!(
            run(&cfg(ExperimentKind::FpCapRatio, &[("beta", "0")])),
            Err(ExperimentError::Precondition(_))
        ));
    }

    #[test]
    fn main_band_condition_enforced_unless_exploring() {
        let c = cfg(
            ExperimentKind::MainBand,
            &[
                ("p", "0.8"),
                ("q", "0.8"),
                ("trials", "200"),
                ("m", "1"),
                ("n_max", "2"),
            ],
        );
        assert!(matches!(run(&c), Err(ExperimentError::Precondition(_))));
        let mut c = c;
        c.set("explore", true);
        let out = run(&c).unwrap();
        assert!(out.passed());
        assert!(out.checks.iter().all(|c| c.soft));
    }

    #[test]
    fn main_band_small_grid_is_deterministic() {
        let c = cfg(
            ExperimentKind::MainBand,
            &[("trials", "2000"), ("m", "1..2"), ("n_max", "3")],
        );
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.csv(), b.csv());
        // pair {0, 4} is outside the domain of (1,1), (1,2), (2,2)
        let fam = a.table.column("family").unwrap();
        assert_eq!(a.table.rows.iter().filter(|r| r[fam] == "pair").count(), 2);
    }

    #[test]
    fn cap_compare_rejects_bad_exponents() {
        assert!(run(&cfg(ExperimentKind::CapCompare, &[("a", "1.5"), ("b", "0.5")])).is_err());
    }

    #[test]
    fn cap_compare_singleton_m0_is_one() {
        let out = run(&cfg(
            ExperimentKind::CapCompare,
            &[("target", "singleton"), ("m", "0"), ("samples", "5")],
        ))
        .unwrap();
        let r: f64 = out.table.rows[0][out.table.column("ratio").unwrap()].parse().unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pz_diag_certifies_every_fixture() {
        let out = run(&default_config(ExperimentKind::PzDiag)).unwrap();
        assert!(out.passed(), "{:?}", out.failures().collect::<Vec<_>>());
        assert_eq!(out.table.rows.len(), tiny_fixtures().len());
    }

    #[test]
    fn srw_band_is_soft_by_default() {
        let out = run(&cfg(
            ExperimentKind::SrwBand,
            &[
                ("trials", "50"),
                ("x_norms", "8"),
                ("radius_mult", "2"),
                ("families", "singleton"),
            ],
        ))
        .unwrap();
        assert_eq!(out.table.rows.len(), 2);
        assert!(out.checks.iter().all(|c| c.soft));
    }

    #[test]
    fn band_helper() {
        let (b, lo, hi) = band(&[2.0, 1.0, 4.0]);
        assert_eq!((b, lo, hi), (4.0, 1, 2));
    }
}
