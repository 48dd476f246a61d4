//! Seeded Monte Carlo studies of coverage, size, mean and MSE, power
//! studies of the goodness-of-fit tests, and table output.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_ci_detailed, build_grid, CprimeMode, IndexConvention, DEFAULT_B_HIGH, DEFAULT_B_LOW, DEFAULT_LEVELS};
use crate::baselines::{ktilde, kstar, score_ci, wald_ci};
use crate::distributions::DistributionSpec;
use crate::empirics::TailSample;
use crate::error::{domain, Error, Result};
use crate::interval::{ConfidenceInterval, Target};
use crate::rng::derive_seed;
use crate::soptest::{test_known, test_plugin, TestConfig};

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adaptive,
    AdaptiveLiteral,
    WaldKstar,
    WaldKtilde,
    ScoreKstar,
    ScoreKtilde,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Adaptive,
        Method::AdaptiveLiteral,
        Method::WaldKstar,
        Method::WaldKtilde,
        Method::ScoreKstar,
        Method::ScoreKtilde,
    ];

    /// The methods of the standard comparison table.
    pub const TABLE: [Method; 5] =
        [Method::Adaptive, Method::WaldKstar, Method::WaldKtilde, Method::ScoreKstar, Method::ScoreKtilde];

    pub fn name(self) -> &'static str {
        match self {
            Method::Adaptive => "adaptive",
            Method::AdaptiveLiteral => "adaptive_literal",
            Method::WaldKstar => "wald_kstar",
            Method::WaldKtilde => "wald_ktilde",
            Method::ScoreKstar => "score_kstar",
            Method::ScoreKtilde => "score_ktilde",
        }
    }

    fn is_adaptive(self) -> bool {
        matches!(self, Method::Adaptive | Method::AdaptiveLiteral)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub b: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    /// Grid spacing constant; `None` means log(n)/95.
    pub xi: Option<f64>,
    pub cprime: CprimeMode,
    pub master_seed: u64,
    /// β used for k* and k̃; `None` uses the adaptive procedure's β̂.
    pub beta_oracle: Option<f64>,
}

impl ExperimentConfig {
    /// 100 replications at α = 0.05 on the default grid with heuristic C'.
    pub fn new(distribution: DistributionSpec, n: usize) -> Self {
        Self {
            distribution,
            n,
            replications: 100,
            alpha: 0.05,
            methods: Method::TABLE.to_vec(),
            b: DEFAULT_B_LOW,
            big_b: DEFAULT_B_HIGH,
            xi: None,
            cprime: CprimeMode::Heuristic,
            master_seed: 1,
            beta_oracle: None,
        }
    }

    pub fn xi_value(&self) -> f64 {
        self.xi.unwrap_or_else(|| (self.n as f64).ln() / DEFAULT_LEVELS as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return domain("replications must be at least 1");
        }
        if self.methods.is_empty() {
            return domain("at least one method is required");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let Some(b) = self.beta_oracle {
            if !(b > 0.0) {
                return domain(format!("beta oracle must be positive, got {b}"));
            }
        }
        if self.n < 16 {
            return domain(format!("n must be at least 16, got {}", self.n));
        }
        build_grid(self.b, self.big_b, self.xi_value(), self.n).map(|_| ())
    }

    pub fn true_inverse_tau(&self) -> f64 {
        1.0 / self.distribution.tail_index()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub coverage: f64,
    /// Infinite when some interval is unbounded.
    pub mean_size: f64,
    pub mean_estimate: f64,
    pub mse: f64,
    pub intervals: usize,
    pub unbounded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub true_value: f64,
    pub methods: Vec<MethodSummary>,
    pub seeds: Vec<u64>,
    pub failures: usize,
    pub failure_messages: Vec<String>,
    pub wall_time_secs: f64,
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Runs the study on all available cores.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_threads(config, None)
}

/// Replications run in parallel on a pool of `threads` workers; aggregation
/// follows replication order, so the result does not depend on `threads`.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let seeds: Vec<u64> = (0..config.replications as u64).map(|r| derive_seed(config.master_seed, r)).collect();
    let runs: Vec<Result<Vec<ConfidenceInterval>>> =
        in_pool(threads, || seeds.par_iter().map(|&s| replicate(config, s)).collect())?;

    let mut per_method: Vec<Vec<ConfidenceInterval>> = vec![Vec::new(); config.methods.len()];
    let mut failure_messages = Vec::new();
    for run in runs {
        match run {
            Ok(cis) => {
                for (slot, ci) in per_method.iter_mut().zip(cis) {
                    slot.push(ci);
                }
            }
            Err(e) => failure_messages.push(e.to_string()),
        }
    }
    let failures = failure_messages.len();
    if failures as f64 > MAX_FAILURE_RATE * config.replications as f64 {
        return Err(Error::Experiment(format!(
            "{failures} of {} replications failed; first failure: {}",
            config.replications, failure_messages[0]
        )));
    }
    let truth = config.true_inverse_tau();
    let methods = config
        .methods
        .iter()
        .zip(&per_method)
        .map(|(&m, cis)| summarize(m, cis, truth))
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        true_value: truth,
        methods,
        seeds,
        failures,
        failure_messages,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Experiment(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn replicate(config: &ExperimentConfig, seed: u64) -> Result<Vec<ConfidenceInterval>> {
    let sample = config.distribution.sample(config.n, seed)?;
    let grid = build_grid(config.b, config.big_b, config.xi_value(), config.n)?;
    let needs_beta_hat = config.beta_oracle.is_none() && config.methods.iter().any(|m| !m.is_adaptive());
    let mut adaptive = None;
    if needs_beta_hat || config.methods.contains(&Method::Adaptive) {
        adaptive = Some(adaptive_ci_detailed(
            &sample,
            &grid,
            config.alpha,
            config.cprime,
            Target::InverseTau,
            IndexConvention::LargestRejection,
        )?);
    }
    let beta_for_k = match (config.beta_oracle, &adaptive) {
        (Some(b), _) => b,
        (None, Some(r)) => r.beta.beta_hat,
        (None, None) => f64::NAN,
    };
    config
        .methods
        .iter()
        .map(|m| match m {
            Method::Adaptive => Ok(adaptive.as_ref().expect("adaptive run present").interval.clone()),
            Method::AdaptiveLiteral => adaptive_ci_detailed(
                &sample,
                &grid,
                config.alpha,
                config.cprime,
                Target::InverseTau,
                IndexConvention::LastWrite,
            )
            .map(|r| r.interval),
            Method::WaldKstar => wald_ci(&sample, kstar(config.n, beta_for_k), config.alpha),
            Method::WaldKtilde => wald_ci(&sample, ktilde(config.n, beta_for_k), config.alpha),
            Method::ScoreKstar => score_ci(&sample, kstar(config.n, beta_for_k), config.alpha),
            Method::ScoreKtilde => score_ci(&sample, ktilde(config.n, beta_for_k), config.alpha),
        })
        .collect()
}

fn summarize(method: Method, cis: &[ConfidenceInterval], truth: f64) -> MethodSummary {
    let m = cis.len() as f64;
    let covered = cis.iter().filter(|ci| ci.contains(truth)).count();
    let mean = |f: &dyn Fn(&ConfidenceInterval) -> f64| cis.iter().map(f).sum::<f64>() / m;
    MethodSummary {
        method,
        coverage: covered as f64 / m,
        mean_size: mean(&|ci| ci.size()),
        mean_estimate: mean(&|ci| ci.center),
        mse: mean(&|ci| (ci.center - truth).powi(2)),
        intervals: cis.len(),
        unbounded: cis.iter().filter(|ci| ci.unbounded).count(),
    }
}

/// Rejection frequencies of the known-parameter and plug-in tests under a
/// null and under perturbed alternatives with a sweep of υ values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudyConfig {
    pub null: DistributionSpec,
    pub n: usize,
    pub replications: usize,
    pub test: TestConfig,
    pub upsilons: Vec<f64>,
    /// Sample size the alternative is anchored at; `None` uses `n`.
    pub anchor_n: Option<u64>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub test: String,
    /// `None` for the null distribution.
    pub upsilon: Option<f64>,
    pub n: usize,
    pub rejection_rate: f64,
    pub replications: usize,
}

/// Every cell reuses the same replication seeds, so differences between
/// cells come from the distributions alone.
pub fn run_power_study(config: &PowerStudyConfig, threads: Option<usize>) -> Result<Vec<PowerCell>> {
    config.test.validate()?;
    if config.replications == 0 {
        return domain("replications must be at least 1");
    }
    let tau = config.null.tail_index();
    let anchor = config.anchor_n.unwrap_or(config.n as u64);
    let mut specs = vec![(None, config.null.clone())];
    for &u in &config.upsilons {
        let alt = DistributionSpec::perturbed_pareto(tau, config.test.beta1, config.test.cprime, anchor, u)?;
        specs.push((Some(u), alt));
    }
    let seeds: Vec<u64> = (0..config.replications as u64).map(|r| derive_seed(config.master_seed, r)).collect();
    let mut cells = Vec::new();
    for (upsilon, spec) in specs {
        let decisions: Vec<Result<(bool, bool)>> = in_pool(threads, || {
            seeds
                .par_iter()
                .map(|&s| {
                    let sample: TailSample = spec.sample(config.n, s)?;
                    let known = test_known(&sample, tau, 1.0, &config.test)?.reject;
                    let plugin = test_plugin(&sample, &config.test)?.reject;
                    Ok((known, plugin))
                })
                .collect()
        })?;
        let decisions = decisions.into_iter().collect::<Result<Vec<_>>>()?;
        let reps = decisions.len();
        let rate = |f: fn(&(bool, bool)) -> bool| decisions.iter().filter(|d| f(d)).count() as f64 / reps as f64;
        cells.push(PowerCell { test: "known".into(), upsilon, n: config.n, rejection_rate: rate(|d| d.0), replications: reps });
        cells.push(PowerCell { test: "plugin".into(), upsilon, n: config.n, rejection_rate: rate(|d| d.1), replications: reps });
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Json,
    Text,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "text" | "txt" => Ok(TableFormat::Text),
            other => Err(Error::Parse(format!("unknown table format `{other}`"))),
        }
    }
}

/// One CSV line: a method's aggregates for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub distribution: String,
    pub tau: f64,
    pub n: usize,
    pub method: Method,
    pub coverage: f64,
    pub mean_size: f64,
    pub mean: f64,
    pub mse: f64,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 9] = ["distribution", "tau", "n", "method", "coverage", "mean_size", "mean", "mse", "seed"];

pub fn csv_rows(results: &[ExperimentResult]) -> Vec<CsvRow> {
    results
        .iter()
        .flat_map(|r| {
            r.methods.iter().map(move |m| CsvRow {
                distribution: r.config.distribution.to_string(),
                tau: r.config.distribution.tail_index(),
                n: r.config.n,
                method: m.method,
                coverage: m.coverage,
                mean_size: m.mean_size,
                mean: m.mean_estimate,
                mse: m.mse,
                seed: r.config.master_seed,
            })
        })
        .collect()
}

/// Renders results as CSV, a JSON array, or an aligned table with a coverage
/// row and a size row per method and one column per experiment.
pub fn emit_table(results: &[ExperimentResult], format: TableFormat) -> Result<String> {
    if let Some(first) = results.first() {
        if results.iter().any(|r| r.config.methods != first.config.methods) {
            return domain("results have different method lists and cannot share a table");
        }
    }
    match format {
        TableFormat::Csv => {
            // Header written by hand so that an empty table still has one.
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for row in csv_rows(results) {
                w.serialize(row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
        }
        TableFormat::Json => serde_json::to_string_pretty(results).map_err(|e| Error::Parse(e.to_string())),
        TableFormat::Text => Ok(text_table(results)),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn text_table(results: &[ExperimentResult]) -> String {
    let Some(first) = results.first() else {
        return "method\n".to_string();
    };
    let mut by_dist: BTreeMap<String, Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        by_dist.entry(r.config.distribution.to_string()).or_default().push(r);
    }
    let mut out = String::new();
    for (dist, group) in by_dist {
        let _ = writeln!(out, "{dist}");
        let _ = write!(out, "{:<16}{:<10}", "method", "");
        for r in &group {
            let _ = write!(out, "{:>12}", format!("n={}", r.config.n));
        }
        out.push('\n');
        for &method in &first.config.methods {
            let cells = |f: fn(&MethodSummary) -> String| {
                group
                    .iter()
                    .map(|r| format!("{:>12}", r.summary(method).map_or("-".to_string(), f)))
                    .collect::<String>()
            };
            let _ = writeln!(out, "{:<16}{:<10}{}", method.name(), "coverage", cells(|m| format!("{:.0}", 100.0 * m.coverage)));
            let _ = writeln!(out, "{:<16}{:<10}{}", "", "size", cells(|m| format!("{:.3}", m.mean_size)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(DistributionSpec::pareto(1.0).unwrap(), 200);
        c.replications = reps;
        c.master_seed = 99;
        c
    }

    #[test]
    fn single_replication_coverage_is_binary() {
        let r = run_experiment(&small(1)).unwrap();
        for m in &r.methods {
            assert!(m.coverage == 0.0 || m.coverage == 1.0);
            assert_eq!(m.intervals, 1);
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = small(12);
        let a = run_experiment_with_threads(&c, Some(1)).unwrap();
        let b = run_experiment_with_threads(&c, Some(4)).unwrap();
        assert_eq!(a.methods, b.methods);
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(emit_table(&[a], TableFormat::Csv).unwrap(), emit_table(&[b], TableFormat::Csv).unwrap());
    }

    #[test]
    fn adding_replications_extends_seeds() {
        let a = run_experiment(&small(5)).unwrap();
        let b = run_experiment(&small(8)).unwrap();
        assert_eq!(a.seeds[..], b.seeds[..5]);
    }

    #[test]
    fn mse_is_variance_plus_squared_bias() {
        let c = small(30);
        let r = run_experiment(&c).unwrap();
        let centers: Vec<f64> = r
            .seeds
            .iter()
            .map(|&s| replicate(&c, s).unwrap()[0].center)
            .collect();
        let m = centers.len() as f64;
        let mean = centers.iter().sum::<f64>() / m;
        let var = centers.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
        let bias = mean - r.true_value;
        let s = &r.methods[0];
        assert!((s.mean_estimate - mean).abs() < 1e-12);
        assert!((s.mse - (var + bias * bias)).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let r = run_experiment(&small(4)).unwrap();
        let text = emit_table(std::slice::from_ref(&r), TableFormat::Csv).unwrap();
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows, csv_rows(&[r]));
    }

    #[test]
    fn empty_results_give_headers_only() {
        let text = emit_table(&[], TableFormat::Csv).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER.join(","));
        assert!(parse_csv(&text).unwrap().is_empty());
        assert_eq!(emit_table(&[], TableFormat::Json).unwrap(), "[]");
    }

    #[test]
    fn text_table_has_two_rows_per_method() {
        let r = run_experiment(&small(3)).unwrap();
        let text = emit_table(std::slice::from_ref(&r), TableFormat::Text).unwrap();
        for m in &r.config.methods {
            let line = text.lines().position(|l| l.starts_with(m.name())).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert!(lines[line].contains("coverage"));
            assert!(lines[line + 1].trim_start().starts_with("size"));
        }
    }

    #[test]
    fn mixed_method_lists_rejected() {
        let a = run_experiment(&small(2)).unwrap();
        let mut c = small(2);
        c.methods = vec![Method::WaldKstar];
        c.beta_oracle = Some(1.0);
        let b = run_experiment(&c).unwrap();
        assert!(emit_table(&[a, b], TableFormat::Csv).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = small(0);
        assert!(run_experiment(&c).is_err());
        c.replications = 2;
        c.methods.clear();
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn zero_upsilon_power_equals_level() {
        let cfg = PowerStudyConfig {
            null: DistributionSpec::pareto(1.0).unwrap(),
            n: 2000,
            replications: 20,
            test: TestConfig::new(0.05, 2.0, 0.5, 0.5).unwrap(),
            upsilons: vec![0.0],
            anchor_n: None,
            master_seed: 5,
        };
        let cells = run_power_study(&cfg, Some(2)).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].rejection_rate, cells[2].rejection_rate);
        assert_eq!(cells[1].rejection_rate, cells[3].rejection_rate);
    }
}
