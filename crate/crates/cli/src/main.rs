//! `polycond` command-line front end.
//!
//! Exit status: 0 on success, 2 for configuration or argument errors, 3 when
//! a result violates one of its invariants, 1 for anything else (I/O).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polycond::condition::{cond_at, l_min_with, LMinOptions};
use polycond::diophantine::{lcd_estimate, small_ball_estimate, tensorization_check, EtaMode, LcdQuery};
use polycond::ensembles::{make_kss, sample_system, DistributionSpec, SeedPolicy};
use polycond::geometry::CompressibilityParams;
use polycond::harness::{
    run_compressible_infimum, run_corollary_events, run_example1, run_tail, write_outputs, Artifact,
    CompressibleOptions, ConcentrationTable, ExperimentConfig, Model, OpnormTable, OptimizerKnobs, SupportMode,
};
use polycond::opnorm::{opnorm_scaling, opnorm_tensor, IndexRange, OpnormOptions};
use polycond::stats::Proportion;
use polycond::system::io::{read_system_auto, write_binary, write_system_json};
use polycond::{Error, PolynomialSystem, SystemShape};

#[derive(Parser)]
#[command(name = "polycond", version, about = "Random polynomial systems: condition functionals and Monte Carlo experiments")]
struct Cli {
    /// Worker threads. Changes speed only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a system and save it.
    Gen(GenArgs),
    /// Evaluate a saved system and its derivatives at a point.
    Eval(EvalArgs),
    /// Minimize L(x, y) over orthonormal pairs.
    Lmin(LminArgs),
    /// μ⁽¹⁾ and μ⁽²⁾ at a point.
    Cond(CondArgs),
    /// Lower tail P(L_min ≤ ε) over an ε grid.
    Tail(ExperimentArgs),
    /// Least common denominator of a vector.
    Lcd(LcdArgs),
    /// Operator norm of a saved tensor, or its median growth over n.
    Opnorm(OpnormArgs),
    /// Rademacher quadrics at x₀ = (1, 1, 0, …, 0).
    Example1(Example1Args),
    /// Witness frequencies for the double-root events.
    Corollary(ExperimentArgs),
    /// Infimum of ‖f(x)‖²/n over compressible vectors.
    Compressible(CompressibleArgs),
    /// Write every CSV/JSON table a report is built from.
    ReportData(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Gaussian,
    Rademacher,
    UniformPm,
}

impl Dist {
    fn spec(self) -> DistributionSpec {
        match self {
            Dist::Gaussian => DistributionSpec::gaussian(),
            Dist::Rademacher => DistributionSpec::rademacher(),
            Dist::UniformPm => DistributionSpec::uniform_pm(),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: Dist,
    /// Draw a Kostlan–Shub–Smale system (Gaussian only).
    #[arg(long)]
    kss: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial index selecting the coefficient stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// `.bin` writes the raw tensor, anything else the system as JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    system: PathBuf,
    /// Comma-separated point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    /// Direction for a derivative contraction; repeat for higher order.
    #[arg(long = "dir", allow_hyphen_values = true)]
    dirs: Vec<String>,
}

#[derive(Args)]
struct LminArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CondArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config as JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output base path; `.csv` and `.json` are appended.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LcdArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y: Vec<f64>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma0: f64,
    #[arg(long, default_value_t = 1e3)]
    d_max: f64,
}

#[derive(Args)]
struct OpnormArgs {
    /// Saved tensor or system; without it a scaling table over `--ns` is built.
    #[arg(long)]
    tensor: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_delimiter = ',', default_value = "6,12,24")]
    ns: Vec<usize>,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: Dist,
    /// Restrict every slot to the first k indices.
    #[arg(long)]
    leading: Option<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Example1Args {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompressibleArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long, default_value_t = 0.01)]
    c_sparse: f64,
    /// δ = ρ = κ₀/d².
    #[arg(long, default_value_t = 0.1)]
    kappa0: f64,
    /// Use one fixed support instead of all of them.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
}

#[derive(Args)]
struct ReportArgs {
    /// Optional tail/corollary/compressible config; a KSS n = 5, d = 2 run otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials for the optimizer-based experiments.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Invariant(_)) => 3,
        Some(
            Error::Config(_)
            | Error::GammaControl(_)
            | Error::Json(_)
            | Error::Format { .. }
            | Error::Argument(_)
            | Error::Shape(_)
            | Error::Precondition(_)
            | Error::Allocation { .. },
        ) => 2,
        _ => 1,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Eval(a) => eval(a),
        Command::Lmin(a) => lmin(a),
        Command::Cond(a) => {
            let sys = load_system(&a.system)?;
            print_json(&cond_at(&sys, &a.x)?)
        }
        Command::Tail(a) => tail(a),
        Command::Lcd(a) => {
            let q = LcdQuery::for_vector(&a.y, a.alpha, a.gamma0, a.d_max)?;
            print_json(&lcd_estimate(&a.y, &q)?)
        }
        Command::Opnorm(a) => opnorm_cmd(a),
        Command::Example1(a) => {
            let r = run_example1(a.n, a.trials, &SeedPolicy::new(a.seed))?;
            check_example1(&r)?;
            let cfg = serde_json::json!({ "n": a.n, "trials": a.trials, "master_seed": a.seed });
            emit(&r, cfg, a.out)
        }
        Command::Corollary(a) => corollary(a),
        Command::Compressible(a) => compressible(a),
        Command::ReportData(a) => report_data(a),
    }
}

fn load_system(path: &Path) -> Result<PolynomialSystem<f64>> {
    read_system_auto(path).with_context(|| format!("loading {}", path.display()))
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out).context("writing to stdout")
}

/// Writes `<out>.csv` and `<out>.json` when `out` is given, else prints the sidecar result.
fn emit<R: Artifact>(result: &R, config: serde_json::Value, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(base) => {
            let p = write_outputs(result, Some(config), &base)?;
            println!("wrote {} and {}", p.csv.display(), p.json.display());
            Ok(())
        }
        None => print_json(result),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let shape = SystemShape::new(a.n, a.d)?;
    let seeds = SeedPolicy::new(a.seed);
    let tensor = if a.kss {
        if !matches!(a.dist, Dist::Gaussian) {
            return Err(Error::Config("--kss draws Gaussian coefficients; drop --dist".into()).into());
        }
        make_kss(shape, &seeds, a.trial)?.system.rand().clone()
    } else {
        sample_system(shape, &a.dist.spec(), &seeds, a.trial)?
    };
    if a.out.extension().is_some_and(|e| e == "bin") {
        write_binary(&tensor, &a.out)?;
    } else {
        write_system_json(&PolynomialSystem::homogeneous(tensor), &a.out)?;
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    value: Vec<f64>,
    jacobian: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    derivative: Option<Vec<f64>>,
}

fn eval(a: EvalArgs) -> Result<()> {
    let sys = load_system(&a.system)?;
    let dirs = a
        .dirs
        .iter()
        .map(|s| s.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::Argument(format!("bad --dir value: {e}")))?;
    let j = sys.jacobian(&a.x)?;
    let derivative = if dirs.is_empty() {
        None
    } else {
        let refs: Vec<&[f64]> = dirs.iter().map(Vec::as_slice).collect();
        Some(sys.derivative_contract(&a.x, &refs)?)
    };
    print_json(&EvalOutput {
        value: sys.evaluate(&a.x)?,
        jacobian: (0..j.rows()).map(|r| j.row(r).to_vec()).collect(),
        derivative,
    })
}

fn lmin(a: LminArgs) -> Result<()> {
    let sys = load_system(&a.system)?;
    let opts = LMinOptions {
        restarts: a.restarts,
        max_iters: a.iters,
        tol: a.tol,
        seeds: SeedPolicy::new(a.seed),
        stream: 0,
    };
    if opts.restarts == 0 {
        return Err(Error::Argument("--restarts must be ≥ 1".into()).into());
    }
    let r = l_min_with(&sys, &opts);
    if !(r.value >= 0.0 && r.value.is_finite()) {
        return Err(Error::Invariant(format!("L_min = {} is not a finite nonnegative number", r.value)).into());
    }
    match a.out {
        Some(path) => {
            std::fs::write(&path, serde_json::to_string_pretty(&r)?).with_context(|| format!("writing {}", path.display()))
        }
        None => print_json(&r),
    }
}

fn load_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json_file(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seeds = SeedPolicy::new(s);
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(o) = &a.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_base(cfg: &ExperimentConfig, default: &str) -> Option<PathBuf> {
    cfg.output.clone().or_else(|| Some(PathBuf::from(default)))
}

fn require_grid(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.eps_grid.is_empty() {
        return Err(Error::Config("eps_grid must not be empty".into()).into());
    }
    Ok(())
}

fn check_monotone(name: &str, curve: &[Proportion]) -> Result<()> {
    if curve.windows(2).any(|w| w[1].hits < w[0].hits) {
        return Err(Error::Invariant(format!("{name} hits decrease along the ε grid")).into());
    }
    Ok(())
}

fn check_example1(r: &polycond::harness::Example1Result) -> Result<()> {
    if r.p_joint.hits > r.p_f_zero.hits {
        return Err(Error::Invariant("joint event counted more often than f(x₀) = 0".into()).into());
    }
    Ok(())
}

fn tail(a: ExperimentArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    require_grid(&cfg)?;
    let curve = run_tail(&cfg)?;
    if !curve.is_monotone() {
        return Err(Error::Invariant("tail hits decrease along the ε grid".into()).into());
    }
    emit(&curve, serde_json::to_value(&cfg)?, output_base(&cfg, "tail"))
}

fn corollary(a: ExperimentArgs) -> Result<()> {
    let cfg = load_config(&a)?;
    require_grid(&cfg)?;
    let ev = run_corollary_events(&cfg)?;
    check_monotone("regular-root", &ev.regular_root)?;
    check_monotone("critical-value", &ev.critical_value)?;
    check_monotone("simultaneous", &ev.simultaneous)?;
    emit(&ev, serde_json::to_value(&cfg)?, output_base(&cfg, "events"))
}

fn compressible(a: CompressibleArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let params = CompressibilityParams::from_rule(a.kappa0, cfg.shape.d())?;
    let mut opts = CompressibleOptions::new(params, a.c_sparse);
    if let Some(s) = a.support {
        opts.support = SupportMode::Fixed(s);
    }
    let r = run_compressible_infimum(&cfg, &opts)?;
    if r.infimum.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Invariant("negative or NaN infimum of a sum of squares".into()).into());
    }
    let echo = serde_json::json!({ "experiment": cfg, "options": opts });
    emit(&r, echo, output_base(&cfg, "compressible"))
}

fn opnorm_cmd(a: OpnormArgs) -> Result<()> {
    let opts = OpnormOptions { restarts: a.restarts, seeds: SeedPolicy::new(a.seed), ..Default::default() };
    if let Some(path) = &a.tensor {
        let sys = load_system(path)?;
        return print_json(&opnorm_tensor(sys.combined(), &opts));
    }
    let range = a.leading.map_or(IndexRange::Full, IndexRange::Leading);
    let rows = opnorm_scaling(a.d, &a.ns, &a.dist.spec(), a.trials, &SeedPolicy::new(a.seed), &opts, range)?;
    for r in &rows {
        eprintln!("n = {:>3}  median = {:.4}  median/n = {:.4}", r.n, r.median, r.median_over_n);
    }
    let echo = serde_json::json!({
        "d": a.d, "ns": a.ns, "trials": a.trials, "master_seed": a.seed, "options": opts, "range": range,
    });
    emit(&OpnormTable { rows }, echo, a.out)
}

fn report_data(a: ReportArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let seeds = SeedPolicy::new(a.seed);
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => {
            let grid = (0..=20).map(|k| 1e-3 * 10f64.powf(k as f64 / 8.0)).collect();
            let mut c = ExperimentConfig::new(SystemShape::new(5, 2)?, a.trials, grid, seeds);
            c.model = Model::Kss;
            c.optimizer = OptimizerKnobs { restarts: 4, max_iters: 100, tol: 1e-12 };
            c
        }
    };
    cfg.seeds = seeds;
    cfg.trials = a.trials;
    cfg.validate()?;
    require_grid(&cfg)?;
    let echo = serde_json::to_value(&cfg)?;
    let base = |name: &str| a.out.join(name);

    let curve = run_tail(&cfg)?;
    if !curve.is_monotone() {
        return Err(Error::Invariant("tail hits decrease along the ε grid".into()).into());
    }
    emit(&curve, echo.clone(), Some(base("tail")))?;

    let ev = run_corollary_events(&cfg)?;
    check_monotone("regular-root", &ev.regular_root)?;
    check_monotone("critical-value", &ev.critical_value)?;
    check_monotone("simultaneous", &ev.simultaneous)?;
    emit(&ev, echo.clone(), Some(base("events")))?;

    let copts = CompressibleOptions::new(CompressibilityParams::default_for_degree(cfg.shape.d()), 0.01);
    let comp = run_compressible_infimum(&cfg, &copts)?;
    emit(&comp, serde_json::json!({ "experiment": cfg, "options": copts }), Some(base("compressible")))?;

    let ex = run_example1(4, 100_000, &seeds)?;
    check_example1(&ex)?;
    emit(&ex, serde_json::json!({ "n": 4, "trials": 100_000, "master_seed": a.seed }), Some(base("example1")))?;

    let oopts = OpnormOptions { restarts: 20, seeds, ..Default::default() };
    let ns = [6, 12, 24];
    let rows = opnorm_scaling(2, &ns, &DistributionSpec::gaussian(), 20, &seeds, &oopts, IndexRange::Full)?;
    let oecho = serde_json::json!({ "d": 2, "ns": ns, "trials": 20, "master_seed": a.seed, "options": oopts });
    emit(&OpnormTable { rows }, oecho, Some(base("opnorm")))?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let y = [h, h];
    let eps = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0];
    let sb = small_ball_estimate(&y, &DistributionSpec::rademacher(), &eps, 100_000, &seeds)?;
    let sb_table = ConcentrationTable { quantity: "small_ball".into(), fitted_c1: None, rows: sb };
    let sb_echo = serde_json::json!({ "y": y, "dist": "rademacher", "eps": eps, "trials": 100_000, "master_seed": a.seed });
    emit(&sb_table, sb_echo, Some(base("small_ball")))?;

    let deltas = [0.1, 0.2, 0.3, 0.5];
    let tz = tensorization_check(&DistributionSpec::gaussian(), 6, &deltas, 1_000_000, &seeds, &EtaMode::Raw)?;
    let tz_table = ConcentrationTable { quantity: "tensorization".into(), fitted_c1: None, rows: tz };
    let tz_echo =
        serde_json::json!({ "n": 6, "dist": "gaussian", "deltas": deltas, "trials": 1_000_000, "master_seed": a.seed });
    emit(&tz_table, tz_echo, Some(base("tensorization")))
}
