//! Simulation config files.
//!
//! ```text
//! # comment
//! n = 1000, 10000
//! replications = 100
//! methods = adaptive, wald_kstar
//! seed = 2024
//!
//! [distribution]
//! dist = pareto
//! tau = 1
//! ```
//!
//! Top-level keys apply to every `[distribution]` block; each block runs once
//! per listed `n`. Keys are case sensitive (`b` and `B` are different).

use std::fmt;

use tailci::adaptive::CprimeMode;
use tailci::experiments::{ExperimentConfig, Method};
use tailci::DistributionSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

const TOP_KEYS: [&str; 10] = ["n", "replications", "alpha", "methods", "b", "B", "xi", "cprime", "seed", "beta_oracle"];

/// A parsed config: one experiment per (distribution, n) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub experiments: Vec<ExperimentConfig>,
    pub seed_given: bool,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

pub fn parse(text: &str, default_seed: u64) -> Result<SimulationConfig, ConfigError> {
    let mut top: Vec<Entry> = Vec::new();
    let mut blocks: Vec<(usize, Vec<Entry>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[distribution]" {
                return Err(ConfigError::at(line, format!("unknown section `{content}`")));
            }
            blocks.push((line, Vec::new()));
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{content}`")))?;
        let entry = Entry { line, key: key.trim().to_string(), value: value.trim().to_string() };
        if entry.value.is_empty() {
            return Err(ConfigError::at(line, format!("field `{}` has no value", entry.key)));
        }
        match blocks.last_mut() {
            Some((_, block)) => {
                if block.iter().any(|e| e.key == entry.key) {
                    return Err(ConfigError::at(line, format!("duplicate field `{}`", entry.key)));
                }
                block.push(entry);
            }
            None => {
                if !TOP_KEYS.contains(&entry.key.as_str()) {
                    return Err(ConfigError::at(line, format!("unknown field `{}`", entry.key)));
                }
                if top.iter().any(|e| e.key == entry.key) {
                    return Err(ConfigError::at(line, format!("duplicate field `{}`", entry.key)));
                }
                top.push(entry);
            }
        }
    }

    let get = |key: &str| top.iter().find(|e| e.key == key);
    let ns: Vec<usize> = {
        let e = get("n").ok_or_else(|| ConfigError::global("missing required field `n`"))?;
        e.value
            .split(',')
            .map(|t| parse_count(t.trim(), e, "n"))
            .collect::<Result<_, _>>()?
    };
    if blocks.is_empty() {
        return Err(ConfigError::global("missing `[distribution]` block"));
    }

    let mut template = ExperimentConfig::new(DistributionSpec::AbsCauchy, ns[0]);
    if let Some(e) = get("replications") {
        template.replications = parse_count(&e.value, e, "replications")?;
    }
    if let Some(e) = get("alpha") {
        template.alpha = parse_real(e, "alpha")?;
    }
    if let Some(e) = get("methods") {
        template.methods = e
            .value
            .split(',')
            .map(|m| m.trim().parse::<Method>().map_err(|err| ConfigError::at(e.line, err.to_string())))
            .collect::<Result<_, _>>()?;
    }
    if let Some(e) = get("b") {
        template.b = parse_real(e, "b")?;
    }
    if let Some(e) = get("B") {
        template.big_b = parse_real(e, "B")?;
    }
    if let Some(e) = get("xi") {
        template.xi = Some(parse_real(e, "xi")?);
    }
    if let Some(e) = get("cprime") {
        template.cprime = e
            .value
            .parse::<CprimeMode>()
            .map_err(|err| ConfigError::at(e.line, err.to_string()))?;
    }
    if let Some(e) = get("beta_oracle") {
        template.beta_oracle = Some(if e.value == "B" { template.big_b } else { parse_real(e, "beta_oracle")? });
    }
    let seed_given = get("seed").is_some();
    template.master_seed = match get("seed") {
        Some(e) => e
            .value
            .parse()
            .map_err(|_| ConfigError::at(e.line, format!("field `seed` must be an unsigned integer, got `{}`", e.value)))?,
        None => default_seed,
    };

    let mut experiments = Vec::new();
    for (line, block) in &blocks {
        let pairs: Vec<(String, String)> = block.iter().map(|e| (e.key.clone(), e.value.clone())).collect();
        let dist = DistributionSpec::from_pairs(&pairs)
            .map_err(|err| ConfigError::at(*line, format!("[distribution]: {err}")))?;
        for &n in &ns {
            let mut c = template.clone();
            c.distribution = dist.clone();
            c.n = n;
            c.validate().map_err(|err| ConfigError::global(format!("{dist}, n={n}: {err}")))?;
            experiments.push(c);
        }
    }
    Ok(SimulationConfig { experiments, seed_given })
}

fn parse_count(raw: &str, e: &Entry, field: &str) -> Result<usize, ConfigError> {
    raw.parse::<usize>()
        .map_err(|_| ConfigError::at(e.line, format!("field `{field}` must be a positive integer, got `{raw}`")))
}

fn parse_real(e: &Entry, field: &str) -> Result<f64, ConfigError> {
    e.value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::at(e.line, format!("field `{field}` must be a number, got `{}`", e.value)))
}
