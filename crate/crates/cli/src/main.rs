use std::fmt::Display;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use minkcap_cli::config::ExperimentConfig;
use minkcap_cli::experiments::{default_config, run};
use minkcap_cli::fixtures::parse_target_label;
use minkcap_cli::golden::{bless_dir, verify_dir};
use minkcap_cli::plot::emit_plot_data;
use minkcap_cli::shape::parse_shape;
use minkcap_cli::table::{fmt_f64, fmt_opt, target_hash};
use minkcap_cli::ExperimentKind;
use minkcap_core::capacity;
use minkcap_core::capacity::{capacity_bruteforce, discretize_shape};
use minkcap_core::fractal::{
    chain_chi_square, hit_probability_exact, pair_probability, sample, sample_pruned, PercolationParams,
};
use minkcap_core::hitting::{sum_hit_exact_enum, sum_hit_mc, sum_hit_rao_blackwell, SumHitSpec};
use minkcap_core::lattice::{parse_point_set, write_weighted, LatticePoint, PointSet};
use minkcap_core::randomsets::{single_set_hit_check, sum_of_ranges_hit, HitRow, RandomSetSpec};

#[derive(Parser, Debug)]
#[command(
    name = "minkcap",
    version,
    about = "Capacities and hitting probabilities of fractal percolation sums"
)]
struct Cli {
    /// `minkcap-config 1` key=value file; keys match long flag names with `_` for `-`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Capacity of a point set (or of a discretized shape).
    Cap(CapArgs),
    /// Sample fractal percolation, exact hitting probabilities, leaf-chain test.
    #[command(subcommand)]
    Fractal(FractalCmd),
    /// Hitting probability of a sum of two fractal percolations.
    #[command(subcommand)]
    Hit(HitCmd),
    /// Hitting of sums of random sets (SRW ranges, fractal percolation).
    #[command(subcommand)]
    Randomset(RandomsetCmd),
    /// Run or verify the experiment suite.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Args, Debug)]
struct CapArgs {
    /// Point-set file (`d=<int>` header, one point per line).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Shape in [-1/2,1/2]^d, e.g. `segment:-0.25,0:0.25,0`; needs --level.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Also run the grid oracle at this step.
    #[arg(long)]
    bruteforce_step: Option<f64>,
}

#[derive(Args, Debug)]
struct PercArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum FractalCmd {
    /// Draw Q_d(p;k).
    Sample {
        #[command(flatten)]
        perc: PercArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Only resolve vertices whose blocks can reach this target.
        #[arg(long)]
        prune_target: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact P(Q ∩ A ≠ ∅), or the pair probability with --pair.
    ExactHit {
        #[command(flatten)]
        perc: PercArgs,
        #[arg(long)]
        target: Option<PathBuf>,
        /// Two points, e.g. `0 0;3 1`.
        #[arg(long)]
        pair: Option<String>,
    },
    /// Chi-square test of the leaf chain transition at index i.
    ChainTest {
        #[command(flatten)]
        perc: PercArgs,
        #[arg(long)]
        index: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        significance: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Mc,
    Rb,
    Exact,
}

impl FromStr for MethodArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <MethodArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Subcommand, Debug)]
enum HitCmd {
    /// P((Q + Q̂) ∩ A ≠ ∅) for Q = Q_d(p;m), Q̂ = Q_d(q;n).
    Sum {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        no_header: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum KindArg {
    Srw,
    Fractal,
}

impl FromStr for KindArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <KindArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Subcommand, Debug)]
enum RandomsetCmd {
    /// P(R ∩ (x + A) ≠ ∅), or P((R_1 + R_2) ∩ (x + A) ≠ ∅) with --sum.
    Hit {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        d: Option<usize>,
        /// Walk truncation radius (srw).
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        step_budget: Option<u64>,
        /// Retention probability and level (fractal); --q/--n give the second set with --sum.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        target: Option<PathBuf>,
        /// Shift vector, comma separated; repeatable.
        #[arg(long = "x")]
        x: Vec<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sum: bool,
        #[arg(long)]
        no_header: bool,
    },
}

#[derive(Subcommand, Debug)]
enum ExperimentCmd {
    /// Run fp_cap_ratio, main_band, cap_compare, pz_diag or srw_band.
    Run {
        name: String,
        /// key=value override; repeatable.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Skip preconditions and report checks without asserting.
        #[arg(long)]
        explore: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        /// Print the resolved config and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Rerun the configs in a golden directory and compare outputs.
    Verify {
        dir: PathBuf,
        /// Write missing golden CSVs instead of failing on them.
        #[arg(long)]
        bless: bool,
    },
}

enum Status {
    Pass,
    Fail,
}

/// Flag values fall back to the `--config` file.
struct Settings {
    cfg: ExperimentConfig,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            Some(p) => {
                ExperimentConfig::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
                    .with_context(|| p.display().to_string())?
            }
            None => ExperimentConfig::new(),
        };
        Ok(Settings { cfg })
    }

    fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e: T::Err| anyhow!("config key `{key}`: cannot parse `{v}`: {e}")),
        }
    }

    fn req<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.opt(flag, key)?
            .ok_or_else(|| anyhow!("missing --{} (or `{key}` in the config)", key.replace('_', "-")))
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>> {
        Ok(flag.or_else(|| self.cfg.get_str(key).map(PathBuf::from)))
    }
}

fn read_points(path: &Path) -> Result<PointSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_point_set(&text).with_context(|| path.display().to_string())
}

fn percolation(s: &Settings, a: PercArgs) -> Result<PercolationParams> {
    Ok(PercolationParams::new(
        s.req(a.d, "d")?,
        s.req(a.p, "p")?,
        s.req(a.k, "k")?,
    )?)
}

fn write_out(out: Option<&Path>, text: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text)?;
            Ok(())
        }
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

fn cmd_cap(s: &Settings, a: CapArgs) -> Result<Status> {
    let beta = s.req(a.beta, "beta")?;
    let tol = s.or(a.tol, "tol", 1e-10)?;
    let set = match (s.path(a.target, "target")?, s.opt(a.shape, "shape")?) {
        (Some(t), None) => read_points(&t)?,
        (None, Some(sh)) => discretize_shape(&parse_shape(&sh)?, s.req(a.level, "level")?)?,
        _ => bail!("give exactly one of --target and --shape"),
    };
    let r = capacity(&set, beta, tol)?;
    print!("points={}\n{}", set.len(), r.to_text());
    if let Some(step) = s.opt(a.bruteforce_step, "bruteforce_step")? {
        let b = capacity_bruteforce(&set, beta, step)?;
        println!("bruteforce_value={}", b.value);
        println!("bruteforce_diff={}", (b.value - r.value).abs());
        print!("{}", write_weighted(b.equilibrium.support(), b.equilibrium.weights()));
    }
    Ok(Status::Pass)
}

fn cmd_fractal(s: &Settings, c: FractalCmd) -> Result<Status> {
    match c {
        FractalCmd::Sample {
            perc,
            seed,
            prune_target,
            out,
        } => {
            let pp = percolation(s, perc)?;
            let seed = s.or(seed, "seed", 1)?;
            let smp = match s.path(prune_target, "prune_target")? {
                Some(t) => sample_pruned(&pp, seed, &read_points(&t)?, None)?,
                None => sample(&pp, seed)?,
            };
            write_out(s.path(out, "out")?.as_deref(), smp.to_text().as_bytes())?;
            Ok(Status::Pass)
        }
        FractalCmd::ExactHit { perc, target, pair } => {
            let pp = percolation(s, perc)?;
            match (s.path(target, "target")?, s.opt(pair, "pair")?) {
                (Some(t), None) => println!("{}", hit_probability_exact(&pp, &read_points(&t)?)?),
                (None, Some(pr)) => {
                    let pts = parse_target_label(pp.d(), &pr)?;
                    if pts.len() != 2 {
                        bail!("--pair needs two distinct points");
                    }
                    let r = pair_probability(&pp, &pts.points()[0], &pts.points()[1])?;
                    println!("exact={}\nbound={}\nedges={}", r.exact, r.bound, r.edges);
                }
                _ => bail!("give exactly one of --target and --pair"),
            }
            Ok(Status::Pass)
        }
        FractalCmd::ChainTest {
            perc,
            index,
            trials,
            seed,
            significance,
        } => {
            let pp = percolation(s, perc)?;
            let sig = s.or(significance, "significance", 1e-3)?;
            let r = chain_chi_square(
                &pp,
                s.req(index, "index")?,
                s.or(trials, "trials", 100_000)?,
                s.or(seed, "seed", 1)?,
            )?;
            println!(
                "index={} trials={} statistic={} df={} p_value={} impossible={}",
                r.index, r.trials, r.statistic, r.df, r.p_value, r.impossible
            );
            let ok = r.passes(sig);
            println!("{} at significance {sig}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok { Status::Pass } else { Status::Fail })
        }
    }
}

const HIT_HEADER: &str = "d,p,q,m,n,target_hash,method,estimate,ci_low,ci_high,trials,seed,elapsed_ms";

fn cmd_hit(s: &Settings, c: HitCmd) -> Result<Status> {
    let HitCmd::Sum {
        d,
        p,
        q,
        m,
        n,
        target,
        trials,
        seed,
        method,
        no_header,
    } = c;
    let target = read_points(&s.path(target, "target")?.ok_or_else(|| anyhow!("missing --target"))?)?;
    let spec = SumHitSpec::new(
        s.req(d, "d")?,
        s.req(p, "p")?,
        s.req(q, "q")?,
        s.req(m, "m")?,
        s.req(n, "n")?,
        target,
    )?;
    if !spec.condition_holds() {
        eprintln!(
            "warning: β = {} ≤ 0 or p, q ≤ 2^-d; the band bounds do not apply",
            spec.beta()
        );
    }
    let seed = s.or(seed, "seed", 1)?;
    let trials = s.or(trials, "trials", 100_000)?;
    let est = match s.or(method, "method", MethodArg::Mc)? {
        MethodArg::Mc => sum_hit_mc(&spec, trials, seed)?,
        MethodArg::Rb => sum_hit_rao_blackwell(&spec, trials, seed)?,
        MethodArg::Exact => sum_hit_exact_enum(&spec)?,
    };
    let mut out = String::new();
    if !no_header {
        out.push_str(HIT_HEADER);
        out.push('\n');
    }
    out.push_str(&csv_line(&[
        spec.d().to_string(),
        fmt_f64(spec.p()),
        fmt_f64(spec.q()),
        spec.m().to_string(),
        spec.n().to_string(),
        target_hash(spec.target()),
        est.method.as_str().into(),
        fmt_f64(est.estimate),
        fmt_f64(est.ci_low),
        fmt_f64(est.ci_high),
        est.trials.to_string(),
        est.seed.to_string(),
        format!("{:.3}", est.elapsed.as_secs_f64() * 1e3),
    ]));
    print!("{out}");
    Ok(Status::Pass)
}

fn parse_vector(d: usize, s: &str) -> Result<LatticePoint> {
    let c: Vec<i64> = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<i64>()
                .with_context(|| format!("bad coordinate in `{s}`"))
        })
        .collect::<Result<_>>()?;
    if c.len() != d {
        bail!("--x `{s}` has {} coordinates, expected {d}", c.len());
    }
    Ok(LatticePoint::new(&c)?)
}

fn cmd_randomset(s: &Settings, c: RandomsetCmd) -> Result<Status> {
    let RandomsetCmd::Hit {
        kind,
        d,
        radius,
        step_budget,
        p,
        k,
        q,
        n,
        target,
        x,
        trials,
        seed,
        sum,
        no_header,
    } = c;
    let kind = s.or(kind, "kind", KindArg::Srw)?;
    let d = s.req(d, "d")?;
    let a = read_points(&s.path(target, "target")?.ok_or_else(|| anyhow!("missing --target"))?)?;
    let xs_text: Vec<String> = if x.is_empty() {
        s.cfg
            .get_str("x")
            .map(|v| v.split(';').map(str::to_string).collect())
            .unwrap_or_default()
    } else {
        x
    };
    if xs_text.is_empty() {
        bail!("give at least one --x");
    }
    let xs = xs_text.iter().map(|t| parse_vector(d, t)).collect::<Result<Vec<_>>>()?;
    let trials = s.or(trials, "trials", 100_000)?;
    let seed = s.or(seed, "seed", 1)?;
    let (first, second) = match kind {
        KindArg::Srw => {
            let mut spec = RandomSetSpec::srw(d, s.req(radius, "radius")?, LatticePoint::origin(d)?)?;
            if let Some(b) = s.opt(step_budget, "step_budget")? {
                spec = spec.with_step_budget(b);
            }
            (spec.clone(), spec)
        }
        KindArg::Fractal => {
            let (p, k) = (s.req(p, "p")?, s.req(k, "k")?);
            let first = RandomSetSpec::fractal(PercolationParams::new(d, p, k)?);
            let second = RandomSetSpec::fractal(PercolationParams::new(d, s.or(q, "q", p)?, s.or(n, "n", k)?)?);
            (first, second)
        }
    };
    let started = std::time::Instant::now();
    let rows: Vec<HitRow> = if sum {
        sum_of_ranges_hit(&[first.clone(), second.clone()], &a, &xs, trials, seed)?
    } else {
        single_set_hit_check(&first, &a, &xs, trials, seed)?
    };
    let elapsed = format!("{:.3}", started.elapsed().as_secs_f64() * 1e3);
    let mut out = String::new();
    if !no_header {
        out.push_str(HIT_HEADER);
        out.push_str(",kind,sets,x,hits,reference,ratio,truncation\n");
    }
    let perc = |sp: &RandomSetSpec| match &sp.kind {
        minkcap_core::randomsets::RandomSetKind::FractalPercolation(pp) => (fmt_f64(pp.p()), pp.k().to_string()),
        _ => (String::new(), String::new()),
    };
    let (p1, m1) = perc(&first);
    let (p2, n2) = if sum {
        perc(&second)
    } else {
        (String::new(), String::new())
    };
    for r in rows {
        out.push_str(&csv_line(&[
            d.to_string(),
            p1.clone(),
            p2.clone(),
            m1.clone(),
            n2.clone(),
            target_hash(&a),
            "mc".into(),
            fmt_f64(r.estimate),
            fmt_f64(r.ci_low),
            fmt_f64(r.ci_high),
            r.trials.to_string(),
            seed.to_string(),
            elapsed.clone(),
            match kind {
                KindArg::Srw => "srw_range".into(),
                KindArg::Fractal => "fractal_percolation".into(),
            },
            if sum { "2" } else { "1" }.into(),
            r.x.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
            r.hits.to_string(),
            fmt_opt(r.reference),
            fmt_opt(r.ratio),
            fmt_opt(r.radius),
        ]));
    }
    print!("{out}");
    Ok(Status::Pass)
}

fn cmd_experiment(s: &Settings, c: ExperimentCmd) -> Result<Status> {
    match c {
        ExperimentCmd::Run {
            name,
            set,
            seed,
            trials,
            explore,
            out,
            plot_dir,
            print_config,
        } => {
            let kind: ExperimentKind = name.parse()?;
            if let Some(other) = s.cfg.get_str("experiment") {
                if other != kind.name() {
                    bail!("config is for experiment `{other}`, not `{}`", kind.name());
                }
            }
            let mut cfg = default_config(kind);
            cfg.merge(&s.cfg);
            for kv in &set {
                cfg.apply_override(kv)?;
            }
            if let Some(v) = seed {
                cfg.set("seed", v);
            }
            if let Some(v) = trials {
                cfg.set("trials", v);
            }
            if explore {
                cfg.set("explore", true);
            }
            if print_config {
                print!("{}", cfg.to_text());
                return Ok(Status::Pass);
            }
            let output = run(&cfg)?;
            let out = out.or_else(|| cfg.get_str("output").map(PathBuf::from));
            write_out(out.as_deref(), &output.csv())?;
            if let Some(dir) = plot_dir.or_else(|| cfg.get_str("plot_dir").map(PathBuf::from)) {
                fs::create_dir_all(&dir)?;
                for f in emit_plot_data(kind, &output.table)? {
                    fs::write(dir.join(&f.name), f.contents)?;
                }
            }
            for ch in &output.checks {
                eprintln!("{ch}");
            }
            let failed = output.failures().count();
            eprintln!(
                "{}: {} rows, {} checks, {failed} failed{}",
                kind.name(),
                output.table.rows.len(),
                output.checks.len(),
                if output.explore {
                    " (explore mode, nothing asserted)"
                } else {
                    ""
                }
            );
            Ok(if output.passed() { Status::Pass } else { Status::Fail })
        }
        ExperimentCmd::Verify { dir, bless } => {
            if bless {
                for p in bless_dir(&dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            let outcomes = verify_dir(&dir)?;
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            Ok(if outcomes.iter().all(|o| o.passed) {
                Status::Pass
            } else {
                Status::Fail
            })
        }
    }
}

fn dispatch(cli: Cli) -> Result<Status> {
    let s = Settings::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Cap(a) => cmd_cap(&s, a),
        Cmd::Fractal(c) => cmd_fractal(&s, c),
        Cmd::Hit(c) => cmd_hit(&s, c),
        Cmd::Randomset(c) => cmd_randomset(&s, c),
        Cmd::Experiment(c) => cmd_experiment(&s, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
