mod config;
mod data;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tailci::adaptive::{
    adaptive_ci_detailed, build_grid, CprimeMode, GridSpec, IndexConvention, DEFAULT_B_HIGH, DEFAULT_B_LOW,
    DEFAULT_LEVELS,
};
use tailci::baselines::{kstar, score_ci, wald_ci};
use tailci::empirics::{hill_inverse_tail_index, sample_fraction};
use tailci::experiments::{emit_table, run_experiment_with_threads, run_power_study, PowerStudyConfig, TableFormat};
use tailci::soptest::{RhoMode, TestConfig};
use tailci::{ConfidenceInterval, DistributionSpec, Target, TailSample};

const SEED_ENV: &str = "TAILCI_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Config(String),
    Run(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Run(_) => 1,
            Failure::Data(_) => 2,
            Failure::Usage(_) => 64,
            Failure::Config(_) => 65,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Config(m) | Failure::Run(m) => m,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Confidence intervals for the Pareto tail index.
#[derive(Debug, Parser)]
#[command(name = "tailci", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hill estimate of tau and 1/tau.
    Estimate(EstimateArgs),
    /// Confidence interval for tau or 1/tau.
    Ci(CiArgs),
    /// Run a Monte Carlo coverage study from a config file.
    Simulate(SimulateArgs),
    /// Rejection rates of the known and plug-in tests under a Pareto null and
    /// perturbed alternatives.
    Power(PowerArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// One observation per line, optionally gzipped; `-` reads stdin.
    data: PathBuf,
    /// Take absolute values before fitting.
    #[arg(long)]
    abs: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Number of upper order statistics.
    #[arg(long, conflicts_with = "beta", value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Second-order index; uses k = floor(n^{2beta/(2beta+1)}). Default 1.
    #[arg(long, value_parser = positive)]
    beta: Option<f64>,
    #[arg(long, value_parser = parse_target, default_value = "inverse-tau")]
    target: Target,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CiMethodArg {
    Adaptive,
    Wald,
    Score,
}

#[derive(Debug, Args)]
struct CiArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_enum, default_value = "adaptive")]
    method: CiMethodArg,
    #[arg(long, value_parser = probability, default_value = "0.05")]
    alpha: f64,
    /// Lower end of the beta grid.
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_B_LOW)]
    b: f64,
    /// Upper end of the beta grid.
    #[arg(long = "B", value_parser = positive, default_value_t = DEFAULT_B_HIGH)]
    big_b: f64,
    /// Grid spacing constant; default log(n)/95.
    #[arg(long, value_parser = positive, conflicts_with = "grid_points")]
    xi: Option<f64>,
    /// Number of grid steps, i.e. xi = log(n)/grid-points.
    #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
    grid_points: Option<u64>,
    /// `heuristic` or a positive constant.
    #[arg(long, value_parser = parse_cprime, default_value = "heuristic")]
    cprime: CprimeMode,
    /// Fraction for wald/score; default k* at the adaptive beta estimate.
    #[arg(long, conflicts_with = "beta", value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Oracle beta for the wald/score fraction k*.
    #[arg(long, value_parser = positive)]
    beta: Option<f64>,
    #[arg(long, value_parser = parse_target, default_value = "inverse-tau")]
    target: Target,
    /// Use the smallest rejecting level instead of the largest (adaptive only).
    #[arg(long)]
    literal: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Directory for the CSV, JSON and text outputs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RhoArg {
    Theoretical,
    Practical,
}

#[derive(Debug, Args)]
struct PowerArgs {
    /// Tail index of the Pareto null.
    #[arg(long, value_parser = positive, default_value = "1")]
    tau: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(16..), default_value = "10000")]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value = "200")]
    reps: u64,
    #[arg(long, value_parser = probability, default_value = "0.05")]
    alpha: f64,
    /// Null second-order index; `inf` drops the penalty.
    #[arg(long, value_parser = positive, default_value = "2")]
    beta0: f64,
    #[arg(long, value_parser = positive, default_value = "0.5")]
    beta1: f64,
    #[arg(long, value_parser = positive, default_value = "1")]
    cprime: f64,
    /// Perturbation sizes of the alternatives.
    #[arg(long, value_delimiter = ',', value_parser = nonnegative, default_value = "0.25,0.5,1,2,4")]
    upsilon: Vec<f64>,
    /// Sample size the alternatives are built for; default n.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    anchor: Option<u64>,
    #[arg(long, value_enum, default_value = "theoretical")]
    rho: RhoArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[arg(long)]
    json: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && !v.is_nan() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a nonnegative number, got `{s}`")),
    }
}

fn probability(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got `{s}`")),
    }
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse().map_err(|e: tailci::Error| e.to_string())
}

fn parse_cprime(s: &str) -> Result<CprimeMode, String> {
    s.parse().map_err(|e: tailci::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let outcome = match cli.command {
        Command::Estimate(args) => estimate(&args),
        Command::Ci(args) => ci(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Power(args) => power(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tailci: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn data_err(e: tailci::Error) -> Failure {
    Failure::Data(e.to_string())
}

fn load(input: &DataArgs) -> CliResult<TailSample> {
    data::read_sample(&input.data, input.abs).map_err(Failure::Data)
}

fn checked_k(k: u64, n: usize) -> CliResult<usize> {
    let k = usize::try_from(k).unwrap_or(usize::MAX);
    if k >= n {
        return Err(Failure::Data(format!("k must be below the sample size, got k={k} with n={n}")));
    }
    Ok(k)
}

fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let sample = load(&args.input)?;
    let n = sample.n();
    let k = match args.k {
        Some(k) => checked_k(k, n)?,
        None => sample_fraction(n, args.beta.unwrap_or(1.0)),
    };
    let inv = hill_inverse_tail_index(&sample, k).map_err(data_err)?;
    if inv <= 0.0 {
        return Err(Failure::Data(format!("the top {k} order statistics are tied; tau cannot be estimated")));
    }
    let tau = 1.0 / inv;
    let headline = match args.target {
        Target::Tau => tau,
        Target::InverseTau => inv,
    };
    if args.input.json {
        let doc = json!({ "n": n, "k": k, "tau_hat": tau, "inverse_tau_hat": inv, "target": args.target.to_string(), "estimate": headline });
        println!("{doc}");
    } else {
        println!("n            {n}");
        println!("k            {k}");
        println!("tau_hat      {tau:.6}");
        println!("inv_tau_hat  {inv:.6}");
    }
    Ok(())
}

fn grid_for(args: &CiArgs, n: usize) -> CliResult<GridSpec> {
    if args.b < 0.5 {
        eprintln!("tailci: warning: b={} is below 0.5; the smallest grid levels use very few order statistics", args.b);
    }
    if args.big_b <= args.b {
        return Err(Failure::Usage(format!("--B must exceed --b, got b={}, B={}", args.b, args.big_b)));
    }
    let xi = match (args.xi, args.grid_points) {
        (Some(xi), _) => xi,
        (None, Some(m)) => (n as f64).ln() / m as f64,
        (None, None) => (n as f64).ln() / DEFAULT_LEVELS as f64,
    };
    build_grid(args.b, args.big_b, xi, n).map_err(data_err)
}

fn ci(args: &CiArgs) -> CliResult<()> {
    if args.literal && !matches!(args.method, CiMethodArg::Adaptive) {
        return Err(Failure::Usage("--literal only applies to --method adaptive".into()));
    }
    if !matches!(args.method, CiMethodArg::Adaptive) && args.target == Target::Tau {
        return Err(Failure::Usage("wald and score intervals are for 1/tau; drop --target tau".into()));
    }
    let sample = load(&args.input)?;
    let n = sample.n();
    let convention = if args.literal { IndexConvention::LastWrite } else { IndexConvention::LargestRejection };
    let adaptive = || -> CliResult<_> {
        let grid = grid_for(args, n)?;
        adaptive_ci_detailed(&sample, &grid, args.alpha, args.cprime, args.target, convention).map_err(data_err)
    };
    let (interval, beta_hat): (ConfidenceInterval, Option<f64>) = match args.method {
        CiMethodArg::Adaptive => {
            let r = adaptive()?;
            (r.interval, Some(r.beta.beta_hat))
        }
        CiMethodArg::Wald | CiMethodArg::Score => {
            let (k, beta_hat) = match (args.k, args.beta) {
                (Some(k), _) => (checked_k(k, n)?, None),
                (None, Some(b)) => (kstar(n, b), None),
                (None, None) => {
                    let b = adaptive()?.beta.beta_hat;
                    (kstar(n, b), Some(b))
                }
            };
            let ci = match args.method {
                CiMethodArg::Wald => wald_ci(&sample, k, args.alpha),
                _ => score_ci(&sample, k, args.alpha),
            }
            .map_err(data_err)?;
            (ci, beta_hat)
        }
    };
    if args.input.json {
        let doc = json!({ "n": n, "alpha": args.alpha, "beta_hat": beta_hat, "interval": interval });
        println!("{doc}");
    } else {
        println!("method      {}", interval.method);
        println!("target      {}", interval.target);
        println!("n           {n}");
        println!("center      {:.6}", interval.center);
        println!("lower       {:.6}", interval.lower);
        if interval.unbounded {
            println!("upper       inf");
        } else {
            println!("upper       {:.6}", interval.upper);
        }
        if let Some(b) = beta_hat {
            println!("beta_hat    {b:.4}");
        }
        if let Some(j) = interval.grid_index {
            println!("grid_index  {j}");
        }
        if interval.degenerate {
            println!("note        degenerate estimate, interval uses a fallback");
        }
    }
    Ok(())
}

fn env_seed() -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn threads(t: Option<u64>) -> Option<usize> {
    t.map(|t| usize::try_from(t).unwrap_or(usize::MAX))
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let parsed = config::parse(&text, env_seed()?)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let mut results = Vec::with_capacity(parsed.experiments.len());
    for exp in &parsed.experiments {
        let r = run_experiment_with_threads(exp, threads(args.threads))
            .map_err(|e| Failure::Run(format!("{}, n={}: {e}", exp.distribution, exp.n)))?;
        if r.failures > 0 {
            eprintln!("tailci: {}, n={}: {} replications failed and were excluded", exp.distribution, exp.n, r.failures);
        }
        results.push(r);
    }
    let stem = args.config.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    fs::create_dir_all(&args.out).map_err(|e| Failure::Run(format!("cannot create {}: {e}", args.out.display())))?;
    let table = emit_table(&results, TableFormat::Text).map_err(|e| Failure::Run(e.to_string()))?;
    for (format, ext) in [(TableFormat::Csv, "csv"), (TableFormat::Json, "json"), (TableFormat::Text, "txt")] {
        let body = emit_table(&results, format).map_err(|e| Failure::Run(e.to_string()))?;
        write_file(&args.out.join(format!("{stem}.{ext}")), &body)?;
    }
    // A closed pipe (e.g. `| head`) is not an error for the study itself.
    let _ = io::stdout().write_all(table.as_bytes());
    Ok(())
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))
}

fn power(args: &PowerArgs) -> CliResult<()> {
    let mut test = TestConfig::new(args.alpha, args.beta0, args.beta1, args.cprime)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    test = test.with_rho_mode(match args.rho {
        RhoArg::Theoretical => RhoMode::Theoretical,
        RhoArg::Practical => RhoMode::Practical,
    });
    let config = PowerStudyConfig {
        null: DistributionSpec::pareto(args.tau).map_err(|e| Failure::Usage(e.to_string()))?,
        n: usize::try_from(args.n).map_err(|_| Failure::Usage("n is too large".into()))?,
        replications: usize::try_from(args.reps).map_err(|_| Failure::Usage("reps is too large".into()))?,
        test,
        upsilons: args.upsilon.clone(),
        anchor_n: args.anchor,
        master_seed: match args.seed {
            Some(s) => s,
            None => env_seed()?,
        },
    };
    let cells = run_power_study(&config, threads(args.threads)).map_err(|e| Failure::Run(e.to_string()))?;
    if args.json {
        println!("{}", json!({ "config": config, "cells": cells }));
    } else {
        println!("{:<8}{:>10}{:>10}{:>12}", "test", "upsilon", "n", "rejection");
        for c in &cells {
            let u = c.upsilon.map_or("null".to_string(), |u| format!("{u}"));
            println!("{:<8}{:>10}{:>10}{:>12.3}", c.test, u, c.n, c.rejection_rate);
        }
    }
    Ok(())
}
