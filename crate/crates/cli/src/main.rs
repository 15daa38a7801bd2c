use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use braid_core::bench::{
    evaluate_policy, heatmap_sweep, rcompliant_baseline, EvalReport, DEFAULT_EVAL_RUNS,
    DEFAULT_HEATMAP_STEP,
};
use braid_core::domains::{filter_check, load_domain, Domain, DomainKind, SpaceshipRepairConfig};
use braid_core::oracle::{build_tree, oracle_optimum, OracleError, DEFAULT_NODE_BUDGET};
use braid_core::pomdp::model_to_json;
use braid_core::prs::{prs_solve, Selector, SolverConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

type Error = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(
    name = "braid",
    version,
    about = "Solve BSQ preferences over goal-oriented POMDPs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run partition refinement search and print the best partition as JSON.
    Solve(SolveArgs),
    /// Evaluate the policy at fixed parameters (eval CSV).
    Evaluate(EvalArgs),
    /// Enumerate the exact braid partition (partitions CSV).
    Oracle(OracleArgs),
    /// Sweep a 2-parameter grid (heatmap CSV).
    Heatmap(HeatmapArgs),
    /// Evaluate uniformly drawn parameters (eval CSV, last row pooled).
    Baseline(BaselineArgs),
    /// Compare the Spaceship Repair filter with its closed form.
    FilterCheck(FilterArgs),
    /// Write the built model or the canonical preference text.
    Export(ExportArgs),
}

#[derive(Args)]
struct DomainArgs {
    /// sr, lm, grs or sv.
    #[arg(long, short)]
    domain: DomainKind,
    /// Domain config JSON replacing the shipped default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preference file replacing the shipped default.
    #[arg(long)]
    pref: Option<PathBuf>,
    /// Overrides the config horizon.
    #[arg(long)]
    horizon: Option<usize>,
}

impl DomainArgs {
    fn load(&self) -> Result<Domain<f64>, Error> {
        let config = self.config.as_deref().map(read).transpose()?;
        let pref = self.pref.as_deref().map(read).transpose()?;
        Ok(load_domain(
            self.domain,
            config.as_deref(),
            pref.as_deref(),
            self.horizon,
        )?)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value = "epsilon_greedy")]
    selector: Selector,
    /// Episode budget. Without --seconds the run has no wall-clock limit.
    #[arg(long)]
    iters: Option<u64>,
    /// Wall-clock budget. Without --iters the run has no episode limit.
    #[arg(long)]
    seconds: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    snapshot_csv: Option<PathBuf>,
    /// Weight partitions by exp(+mean/e_r) in Boltzmann selection.
    #[arg(long)]
    boltzmann_positive_exponent: bool,
    /// Check tiling after every episode.
    #[arg(long)]
    verify: bool,
    /// Also evaluate the best partition with this many episodes.
    #[arg(long, default_value_t = 0)]
    runs: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    theta: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_EVAL_RUNS)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = DEFAULT_HEATMAP_STEP)]
    step: f64,
    /// Episodes per cell.
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_EVAL_RUNS)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    /// Spaceship Repair config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Longest observation sequence.
    #[arg(long, default_value_t = 10)]
    max_len: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportWhat {
    Model,
    Pref,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, value_enum, default_value = "model")]
    what: ExportWhat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(p: &Path) -> Result<String, Error> {
    fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()).into())
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn eval_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n).map(|i| format!("theta{i}")).collect();
    h.extend(["mean_cost", "stdev", "goal_rate", "runs", "seed"].map(String::from));
    h
}

fn eval_row(r: &EvalReport, n: usize) -> Vec<String> {
    let mut row: Vec<String> = (0..n)
        .map(|i| r.theta.get(i).map_or(String::new(), |t| t.to_string()))
        .collect();
    row.extend([
        r.mean_cost.to_string(),
        r.stdev.to_string(),
        r.goal_rate.to_string(),
        r.runs.to_string(),
        r.seed.to_string(),
    ]);
    row
}

fn solve(a: SolveArgs) -> Result<(), Error> {
    let d = a.domain.load()?;
    let h = d.model.horizon;
    let defaults = SolverConfig::default();
    let (iterations, seconds) = match (a.iters, a.seconds) {
        (None, None) => (defaults.iterations, defaults.seconds),
        other => other,
    };
    let cfg = SolverConfig {
        selector: a.selector,
        iterations,
        seconds,
        workers: a.workers,
        seed: a.seed,
        boltzmann_positive_exponent: a.boltzmann_positive_exponent,
        verify_tiling: a.verify,
        ..defaults
    };
    let r = prs_solve(&d.model, &d.pref, h, &cfg)?;
    if let Some(p) = &a.snapshot_csv {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record([
            "elapsed_s",
            "best_mean_cost",
            "best_goal_rate",
            "n_partitions",
            "total_samples",
            "best_interval",
        ])?;
        for s in &r.history {
            w.write_record([
                s.elapsed_s.to_string(),
                s.best_mean_cost.to_string(),
                s.best_goal_rate.to_string(),
                s.n_partitions.to_string(),
                s.total_samples.to_string(),
                s.best_interval.dump_inline(),
            ])?;
        }
        w.flush()?;
    }
    let mut summary = serde_json::json!({
        "domain": d.kind.short(),
        "horizon": h,
        "selector": cfg.selector.name(),
        "seed": cfg.seed,
        "total_samples": r.total_samples,
        "n_partitions": r.partitions.len(),
        "elapsed_s": r.elapsed_s,
        "best_interval": r.best.interval.dump_inline(),
        "best_mean_cost": r.best.mean_cost(),
        "best_goal_rate": r.best.goal_rate(),
        "best_samples": r.best.stats.count,
    });
    if a.runs > 0 {
        let theta = r.sample_best(cfg.seed)?;
        let e = evaluate_policy(&d.model, &d.pref, &theta, h, a.runs, cfg.seed)?;
        summary["evaluation"] = serde_json::to_value(&e)?;
    }
    let mut w = sink(&a.out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn evaluate(a: EvalArgs) -> Result<(), Error> {
    let d = a.domain.load()?;
    let r = evaluate_policy(&d.model, &d.pref, &a.theta, d.model.horizon, a.runs, a.seed)?;
    let n = d.pref.n_params();
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    w.write_record(eval_header(n))?;
    w.write_record(eval_row(&r, n))?;
    w.flush()?;
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<(), Error> {
    let d = a.domain.load()?;
    let tree = build_tree(&d.model, &d.pref, d.model.horizon, a.node_budget)?;
    let mut parts = tree.enumerate_braids();
    parts.sort_by(|x, y| x.interval.canonical_cmp(&y.interval));
    let best = match oracle_optimum(&parts) {
        Ok(p) => Some(p.interval.clone()),
        Err(OracleError::NoSolution) => {
            eprintln!("warning: no partition reaches the goal within the horizon");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    w.write_record([
        "interval",
        "expected_cost",
        "goal_probability",
        "leaf_count",
        "optimal",
    ])?;
    for p in &parts {
        w.write_record([
            p.interval.dump_inline(),
            p.expected_cost.to_string(),
            p.goal_probability.to_string(),
            p.leaves.len().to_string(),
            (Some(&p.interval) == best.as_ref()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn heatmap(a: HeatmapArgs) -> Result<(), Error> {
    let d = a.domain.load()?;
    let g = heatmap_sweep(&d.model, &d.pref, d.model.horizon, a.step, a.runs, a.seed)?;
    g.write_csv(sink(&a.out)?)?;
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<(), Error> {
    let d = a.domain.load()?;
    let r = rcompliant_baseline(&d.model, &d.pref, d.model.horizon, a.trials, a.runs, a.seed)?;
    let n = d.pref.n_params();
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    w.write_record(eval_header(n))?;
    for t in r.trials.iter().chain(std::iter::once(&r.aggregate)) {
        w.write_record(eval_row(t, n))?;
    }
    w.flush()?;
    Ok(())
}

fn filter(a: FilterArgs) -> Result<bool, Error> {
    let cfg: SpaceshipRepairConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => SpaceshipRepairConfig::default(),
    };
    let r = filter_check(&cfg, a.max_len)?;
    let ok = r.max_abs_error < a.tolerance;
    println!(
        "sequences={} max_abs_error={:e} tolerance={:e} {}",
        r.sequences,
        r.max_abs_error,
        a.tolerance,
        if ok { "ok" } else { "MISMATCH" }
    );
    Ok(ok)
}

fn export(a: ExportArgs) -> Result<(), Error> {
    let d = a.domain.load()?;
    let mut w = sink(&a.out)?;
    match a.what {
        ExportWhat::Model => writeln!(w, "{}", model_to_json(&d.model))?,
        ExportWhat::Pref => writeln!(w, "{}", d.pref.to_source())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Evaluate(a) => evaluate(a),
        Cmd::Oracle(a) => oracle(a),
        Cmd::Heatmap(a) => heatmap(a),
        Cmd::Baseline(a) => baseline(a),
        Cmd::FilterCheck(a) => match filter(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::FAILURE,
            Err(e) => Err(e),
        },
        Cmd::Export(a) => export(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
