//! Golden-file regression. A golden directory holds experiment configs
//! (`<name>.conf`) next to their expected CSV output (`<name>.csv`), plus
//! `exact_enum.csv` with frozen exact probabilities for the tiny fixtures.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use minkcap_core::hitting::{sum_hit_exact_enum, SumHitSpec};

use crate::config::ExperimentConfig;
use crate::experiments::run;
use crate::fixtures::{parse_target_label, target_label, tiny_fixtures};
use crate::table::{fmt_f64, Table};

pub const EXACT_ENUM_FILE: &str = "exact_enum.csv";
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GoldenOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn configs(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "conf"))
        .collect();
    v.sort();
    Ok(v)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// `id,d,p,q,m,n,target,exact` for every tiny fixture.
pub fn exact_enum_table() -> anyhow::Result<Table> {
    let mut t = Table::new(&["id", "d", "p", "q", "m", "n", "target", "exact"]);
    for f in tiny_fixtures() {
        let spec = SumHitSpec::new(f.d, f.p, f.q, f.m, f.n, f.target.clone())?;
        let e = sum_hit_exact_enum(&spec)?.estimate;
        t.push(vec![
            f.id.to_string(),
            f.d.to_string(),
            fmt_f64(f.p),
            fmt_f64(f.q),
            f.m.to_string(),
            f.n.to_string(),
            target_label(&f.target),
            fmt_f64(e),
        ]);
    }
    Ok(t)
}

/// One frozen exact value.
#[derive(Clone, Debug)]
pub struct ExactGolden {
    pub id: usize,
    pub spec: SumHitSpec,
    pub exact: f64,
}

pub fn read_exact_enum(path: &Path) -> anyhow::Result<Vec<ExactGolden>> {
    let t = Table::from_csv(&fs::read(path).with_context(|| format!("reading {}", path.display()))?)?;
    let idx = |n: &str| {
        t.column(n)
            .with_context(|| format!("{}: no column `{n}`", path.display()))
    };
    let (ci, cd, cp, cq, cm, cn, ct, ce) = (
        idx("id")?,
        idx("d")?,
        idx("p")?,
        idx("q")?,
        idx("m")?,
        idx("n")?,
        idx("target")?,
        idx("exact")?,
    );
    t.rows
        .iter()
        .map(|r| {
            let d: usize = r[cd].parse()?;
            let spec = SumHitSpec::new(
                d,
                r[cp].parse()?,
                r[cq].parse()?,
                r[cm].parse()?,
                r[cn].parse()?,
                parse_target_label(d, &r[ct])?,
            )?;
            Ok(ExactGolden {
                id: r[ci].parse()?,
                spec,
                exact: r[ce].parse()?,
            })
        })
        .collect()
}

fn verify_exact(path: &Path) -> anyhow::Result<GoldenOutcome> {
    let rows = read_exact_enum(path)?;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for g in &rows {
        let e = sum_hit_exact_enum(&g.spec)?.estimate;
        let err = (e - g.exact).abs();
        worst = worst.max(err);
        if err > EXACT_TOL {
            bad.push(format!("id {}: computed {e}, golden {}", g.id, g.exact));
        }
    }
    Ok(GoldenOutcome {
        name: EXACT_ENUM_FILE.into(),
        passed: bad.is_empty() && !rows.is_empty(),
        detail: if bad.is_empty() {
            format!("{} rows, max |error| {worst:e}", rows.len())
        } else {
            bad.join("; ")
        },
    })
}

fn first_diff(a: &[u8], b: &[u8]) -> String {
    let la: Vec<&str> = std::str::from_utf8(a).unwrap_or("").lines().collect();
    let lb: Vec<&str> = std::str::from_utf8(b).unwrap_or("").lines().collect();
    for i in 0..la.len().max(lb.len()) {
        let (x, y) = (
            la.get(i).copied().unwrap_or("<eof>"),
            lb.get(i).copied().unwrap_or("<eof>"),
        );
        if x != y {
            return format!("line {}: expected `{x}`, got `{y}`", i + 1);
        }
    }
    "bytes differ".into()
}

/// Reruns every config in `dir` and compares output bytes with the stored CSV.
pub fn verify_dir(dir: &Path) -> anyhow::Result<Vec<GoldenOutcome>> {
    let mut out = Vec::new();
    let exact = dir.join(EXACT_ENUM_FILE);
    if exact.exists() {
        out.push(verify_exact(&exact)?);
    }
    for conf in configs(dir)? {
        let name = stem(&conf);
        let cfg = ExperimentConfig::parse(&fs::read_to_string(&conf)?).with_context(|| conf.display().to_string())?;
        let expected_path = conf.with_extension("csv");
        let expected = fs::read(&expected_path).with_context(|| format!("reading {}", expected_path.display()))?;
        let got = run(&cfg).with_context(|| name.clone())?.csv();
        out.push(GoldenOutcome {
            passed: got == expected,
            detail: if got == expected {
                format!("{} bytes identical", got.len())
            } else {
                first_diff(&expected, &got)
            },
            name,
        });
    }
    if out.is_empty() {
        bail!("{} holds no golden files", dir.display());
    }
    Ok(out)
}

/// Writes missing CSVs for the configs in `dir` (and a missing `exact_enum.csv`).
/// Existing files are left alone.
pub fn bless_dir(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let exact = dir.join(EXACT_ENUM_FILE);
    if !exact.exists() {
        fs::write(&exact, exact_enum_table()?.to_csv())?;
        written.push(exact);
    }
    for conf in configs(dir)? {
        let csv = conf.with_extension("csv");
        if csv.exists() {
            continue;
        }
        let cfg = ExperimentConfig::parse(&fs::read_to_string(&conf)?)?;
        fs::write(&csv, run(&cfg)?.csv())?;
        written.push(csv);
    }
    Ok(written)
}
