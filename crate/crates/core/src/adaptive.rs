//! The grid procedure over second-order indices: successive plug-in tests,
//! the estimate of β, and the adaptive confidence interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::two_sided_critical_value;
use crate::empirics::{PlugInEstimates, TailSample};
use crate::error::{domain, Error, Result};
use crate::interval::{CiMethod, ConfidenceInterval, Target};
use crate::rates::{estimation_rate, log_log, pow_n};
use crate::soptest::{hill_tau, practical_rho, sup_defect, DefectModel, TailFunction, TestOutcome};

pub const DEFAULT_B_LOW: f64 = 0.5;
pub const DEFAULT_B_HIGH: f64 = 10.0;
/// Number of grid steps of the default grid, ξ = log(n)/95.
pub const DEFAULT_LEVELS: usize = 95;

/// Additive floor of the heuristic C'.
pub const CPRIME_FLOOR: f64 = 0.2;

/// Equally spaced β_i = B - i(B-b)/M_n, i = 0..M_n, with M_n = ⌊log(n)/ξ⌋.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub b: f64,
    #[serde(rename = "B")]
    pub big_b: f64,
    pub xi: f64,
    pub n: usize,
    pub m_n: usize,
    pub betas: Vec<f64>,
}

pub fn build_grid(b: f64, big_b: f64, xi: f64, n: usize) -> Result<GridSpec> {
    if !(b > 0.0 && big_b > b && big_b.is_finite()) {
        return domain(format!("need 0 < b < B, got b={b}, B={big_b}"));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return domain(format!("xi must be positive, got {xi}"));
    }
    if n < 2 {
        return domain(format!("grid needs n >= 2, got {n}"));
    }
    // The tolerance keeps ξ = log(n)/m from flooring to m - 1.
    let m_n = ((n as f64).ln() / xi + 1e-9).floor();
    if m_n < 3.0 {
        let n_min = (3.0 * xi).exp().ceil();
        return domain(format!(
            "grid has M_n = {m_n} < 3 levels; with xi={xi} the sample size must be at least {n_min}"
        ));
    }
    let m_n = m_n as usize;
    let step = (big_b - b) / m_n as f64;
    let mut betas: Vec<f64> = (0..=m_n).map(|i| big_b - i as f64 * step).collect();
    betas[m_n] = b;
    Ok(GridSpec { b, big_b, xi, n, m_n, betas })
}

impl GridSpec {
    /// Grid with exactly `levels` steps, i.e. ξ = log(n)/levels.
    pub fn with_levels(b: f64, big_b: f64, levels: usize, n: usize) -> Result<Self> {
        if levels == 0 || n < 2 {
            return domain("levels and n must be positive (n >= 2)");
        }
        build_grid(b, big_b, (n as f64).ln() / levels as f64, n)
    }

    /// [0.5, 10] with ξ = log(n)/95.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::with_levels(DEFAULT_B_LOW, DEFAULT_B_HIGH, DEFAULT_LEVELS, n)
    }

    pub fn beta(&self, i: usize) -> f64 {
        self.betas[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CprimeMode {
    Fixed(f64),
    /// Per-level data-driven C'.
    Heuristic,
}

impl fmt::Display for CprimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CprimeMode::Fixed(v) => write!(f, "{v}"),
            CprimeMode::Heuristic => f.write_str("heuristic"),
        }
    }
}

impl FromStr for CprimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "heuristic" {
            return Ok(CprimeMode::Heuristic);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("C' must be a positive number or `heuristic`, got `{s}`")))?;
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("C' must be positive, got {v}"));
        }
        Ok(CprimeMode::Fixed(v))
    }
}

/// Which grid level sets the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexConvention {
    /// Level min(î + 1, M_n), with î the largest rejecting level.
    LargestRejection,
    /// Descending loop where every rejecting level overwrites the interval,
    /// so the smallest rejecting level wins; level 0 if none rejects.
    LastWrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicCprime {
    pub value: f64,
    /// sup over [1, B̂] of |x^τ̂ p̂_x - Ĉ|.
    pub inner_sup: f64,
    pub degenerate: bool,
}

/// C' = sup_{1≤x≤B̂} |x^τ̂ p̂_x - Ĉ| (1 + c_n) + 0.2 with
/// c_n = √log(1/α) n^{-β/(2β+1)}.
pub fn cprime_heuristic(
    sample: &TailSample,
    estimates: &PlugInEstimates,
    alpha: f64,
    beta: f64,
) -> Result<HeuristicCprime> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if estimates.degenerate || !(estimates.b_hat > 1.0) || !(estimates.tau_hat > 0.0) {
        return Ok(HeuristicCprime { value: CPRIME_FLOOR, inner_sup: 0.0, degenerate: true });
    }
    let model = DefectModel { tau: estimates.tau_hat, c: estimates.c_hat, cprime: 0.0, beta0: f64::INFINITY };
    let inner = sup_defect(TailFunction::Empirical(sample), &model, 1.0, estimates.b_hat)?.value;
    Ok(HeuristicCprime { value: heuristic_from_sup(inner, sample.n(), alpha, beta), inner_sup: inner, degenerate: false })
}

fn heuristic_from_sup(inner: f64, n: usize, alpha: f64, beta: f64) -> f64 {
    let c_n = (1.0 / alpha).ln().sqrt() * estimation_rate(n, beta);
    inner * (1.0 + c_n) + CPRIME_FLOOR
}

/// Level estimates: τ̂ from Hill at the β fraction, B̂ = n^{1/ϑ} with
/// ϑ = (τ̂ + (log log n) n^{-β/(2β+1)} q τ̂)(2β+1), and
/// Ĉ = n^{1/(2β+1)} p̂ at n^{1/(τ̂(2β+1))}.
fn level_estimates(sample: &TailSample, beta: f64, q: f64) -> Result<Option<PlugInEstimates>> {
    let n = sample.n();
    let Some((tau_hat, k)) = hill_tau(sample, beta)? else {
        return Ok(None);
    };
    let two_b1 = 2.0 * beta + 1.0;
    let c1 = q * tau_hat;
    let vartheta = (tau_hat + log_log(n) * estimation_rate(n, beta) * c1) * two_b1;
    let p = sample.empirical_tail(pow_n(n, 1.0 / (tau_hat * two_b1)));
    Ok(Some(PlugInEstimates {
        tau_hat,
        c_hat: pow_n(n, 1.0 / two_b1) * p,
        b_hat: pow_n(n, 1.0 / vartheta),
        vartheta,
        k_used: k,
        beta_ref: beta,
        degenerate: p == 0.0,
    }))
}

/// Tests of levels 2..=M_n (returned in that order). Level i compares the
/// level-i fit against the class with index β_{i-2} and rejects when the
/// statistic reaches half of (log log n) n^{-β_i/(2β_i+1)}.
pub fn successive_tests(
    sample: &TailSample,
    grid: &GridSpec,
    alpha: f64,
    cprime: CprimeMode,
) -> Result<Vec<TestOutcome>> {
    let n = sample.n();
    if grid.n != n {
        return domain(format!("grid was built for n={} but the sample has n={n}", grid.n));
    }
    if let CprimeMode::Fixed(v) = cprime {
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("C' must be positive, got {v}"));
        }
    }
    let q = two_sided_critical_value(alpha)?;
    (2..=grid.m_n)
        .map(|i| {
            let beta = grid.betas[i];
            let threshold = practical_rho(n, beta)?;
            let Some(est) = level_estimates(sample, beta, q)? else {
                return Ok(TestOutcome::degenerate(threshold, None, f64::NAN));
            };
            let cp = match cprime {
                CprimeMode::Fixed(v) => v,
                CprimeMode::Heuristic => cprime_heuristic(sample, &est, alpha, beta)?.value,
            };
            if est.degenerate {
                return Ok(TestOutcome::degenerate(threshold, Some(est), cp));
            }
            let model = DefectModel { tau: est.tau_hat, c: est.c_hat, cprime: cp, beta0: grid.betas[i - 2] };
            let sup = sup_defect(TailFunction::Empirical(sample), &model, 1.0, est.b_hat)?;
            Ok(TestOutcome {
                statistic: sup.value,
                threshold,
                reject: sup.value >= threshold / 2.0,
                estimates: Some(est),
                argmax_x: sup.argmax,
                cprime: cp,
                degenerate: false,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub i_hat: usize,
    pub beta_hat: f64,
    pub per_index: Vec<TestOutcome>,
}

/// î = max{i : Ψ(i) = 1} + 2 over test indices i = 0..M_n-2, and 0 when
/// nothing rejects. `outcomes[i]` is test i, i.e. grid level i + 2.
pub fn estimate_beta(outcomes: &[TestOutcome], grid: &GridSpec) -> Result<BetaEstimate> {
    if outcomes.len() + 1 != grid.m_n {
        return domain(format!(
            "expected {} test outcomes for M_n={}, got {}",
            grid.m_n - 1,
            grid.m_n,
            outcomes.len()
        ));
    }
    let i_hat = outcomes
        .iter()
        .rposition(|o| o.reject)
        .map_or(0, |i| (i + 2).min(grid.m_n));
    Ok(BetaEstimate { i_hat, beta_hat: grid.betas[i_hat], per_index: outcomes.to_vec() })
}

/// (log log n) c̃₁ n^{-β/(2β+1)}.
pub fn adaptive_half_width(n: usize, beta: f64, c1: f64) -> f64 {
    c1 * log_log(n) * estimation_rate(n, beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub interval: ConfidenceInterval,
    pub beta: BetaEstimate,
    pub working_index: usize,
    pub convention: IndexConvention,
}

pub fn adaptive_ci(
    sample: &TailSample,
    grid: &GridSpec,
    alpha: f64,
    cprime: CprimeMode,
    target: Target,
) -> Result<ConfidenceInterval> {
    adaptive_ci_detailed(sample, grid, alpha, cprime, target, IndexConvention::LargestRejection).map(|r| r.interval)
}

pub fn adaptive_ci_detailed(
    sample: &TailSample,
    grid: &GridSpec,
    alpha: f64,
    cprime: CprimeMode,
    target: Target,
    convention: IndexConvention,
) -> Result<AdaptiveResult> {
    let outcomes = successive_tests(sample, grid, alpha, cprime)?;
    let beta = estimate_beta(&outcomes, grid)?;
    let all_degenerate = outcomes.iter().all(|o| o.degenerate);
    let j = if all_degenerate {
        grid.m_n
    } else {
        match convention {
            IndexConvention::LargestRejection => (beta.i_hat + 1).min(grid.m_n),
            IndexConvention::LastWrite => outcomes.iter().position(|o| o.reject).map_or(0, |p| p + 2),
        }
    };
    let interval = interval_at_level(sample, grid, alpha, target, j, convention, all_degenerate)?;
    Ok(AdaptiveResult { interval, beta, working_index: j, convention })
}

fn interval_at_level(
    sample: &TailSample,
    grid: &GridSpec,
    alpha: f64,
    target: Target,
    j: usize,
    convention: IndexConvention,
    mut degenerate: bool,
) -> Result<ConfidenceInterval> {
    let beta_j = grid.betas[j];
    let tau_hat = match hill_tau(sample, beta_j)? {
        Some((t, _)) => t,
        None => {
            degenerate = true;
            hill_tau(sample, grid.b)?
                .ok_or_else(|| Error::Domain("all upper order statistics are tied; tau cannot be estimated".into()))?
                .0
        }
    };
    let center = target.value(tau_hat);
    let q = two_sided_critical_value(alpha)?;
    let half = adaptive_half_width(sample.n(), beta_j, q * center);
    let method = match convention {
        IndexConvention::LargestRejection => CiMethod::Adaptive,
        IndexConvention::LastWrite => CiMethod::AdaptiveLiteral,
    };
    let mut ci = ConfidenceInterval::symmetric(target, center, half, method);
    ci.grid_index = Some(j);
    ci.beta = Some(beta_j);
    ci.degenerate = degenerate;
    Ok(ci)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;

    fn outcome(reject: bool) -> TestOutcome {
        TestOutcome {
            statistic: if reject { 1.0 } else { -1.0 },
            threshold: 0.5,
            reject,
            estimates: None,
            argmax_x: 1.0,
            cprime: 1.0,
            degenerate: false,
        }
    }

    fn pattern(grid: &GridSpec, rejects: &[usize]) -> Vec<TestOutcome> {
        (0..grid.m_n - 1).map(|i| outcome(rejects.contains(&i))).collect()
    }

    #[test]
    fn grid_example() {
        let n = 1000;
        let g = build_grid(0.5, 10.0, (n as f64).ln() / 4.0, n).unwrap();
        assert_eq!(g.m_n, 4);
        let expect = [10.0, 7.625, 5.25, 2.875, 0.5];
        for (a, b) in g.betas.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn default_grid_has_95_levels() {
        for n in [100, 200, 1000, 10_000] {
            let g = GridSpec::default_for(n).unwrap();
            assert_eq!(g.m_n, 95);
            assert_eq!(g.betas[0], 10.0);
            assert_eq!(g.betas[95], 0.5);
            assert!(g.betas.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn grid_too_coarse_names_minimal_n() {
        let err = build_grid(0.5, 10.0, 3.0, 100).unwrap_err().to_string();
        assert!(err.contains("8104"), "{err}");
        assert!(build_grid(1.0, 0.5, 0.1, 100).is_err());
    }

    #[test]
    fn estimate_beta_examples() {
        let g = GridSpec::with_levels(0.5, 10.0, 20, 1000).unwrap();
        let none = estimate_beta(&pattern(&g, &[]), &g).unwrap();
        assert_eq!((none.i_hat, none.beta_hat), (0, 10.0));
        assert_eq!(estimate_beta(&pattern(&g, &[5]), &g).unwrap().i_hat, 7);
        assert_eq!(estimate_beta(&pattern(&g, &[3, 9]), &g).unwrap().i_hat, 11);
        let last = estimate_beta(&pattern(&g, &[18]), &g).unwrap();
        assert_eq!((last.i_hat, last.beta_hat), (20, 0.5));
        assert!(estimate_beta(&pattern(&g, &[])[1..], &g).is_err());
    }

    #[test]
    fn heuristic_floor() {
        let s = DistributionSpec::pareto(1.0).unwrap().sample(500, 2).unwrap();
        assert_eq!(heuristic_from_sup(0.0, 500, 0.05, 1.0), CPRIME_FLOOR);
        let mut prev = CPRIME_FLOOR;
        for k in 1..50 {
            let v = heuristic_from_sup(0.01 * k as f64, 500, 0.05, 1.0);
            assert!(v >= prev);
            prev = v;
        }
        let est = level_estimates(&s, 1.0, 1.96).unwrap().unwrap();
        let h = cprime_heuristic(&s, &est, 0.05, 1.0).unwrap();
        assert!(h.value >= CPRIME_FLOOR && !h.degenerate);
        let degenerate = PlugInEstimates { degenerate: true, ..est };
        assert_eq!(cprime_heuristic(&s, &degenerate, 0.05, 1.0).unwrap().value, CPRIME_FLOOR);
    }

    #[test]
    fn exact_population_levels_never_reject() {
        // Substituting the Pareto tail and (τ̂, Ĉ) = (τ, 1) leaves only the
        // negative penalty at every level.
        let (tau, n) = (1.0, 10_000usize);
        let spec = DistributionSpec::pareto(tau).unwrap();
        let g = GridSpec::default_for(n).unwrap();
        let q = two_sided_critical_value(0.05).unwrap();
        for i in 2..=g.m_n {
            let beta = g.betas[i];
            let vartheta = (tau + log_log(n) * estimation_rate(n, beta) * q * tau) * (2.0 * beta + 1.0);
            let b_hat = pow_n(n, 1.0 / vartheta);
            let model = DefectModel { tau, c: 1.0, cprime: CPRIME_FLOOR, beta0: g.betas[i - 2] };
            let sup = sup_defect(TailFunction::Population(&spec), &model, 1.0, b_hat).unwrap();
            assert!(sup.value < 0.0);
            assert!(sup.value < practical_rho(n, beta).unwrap() / 2.0);
        }
    }

    #[test]
    fn successive_tests_length_and_determinism() {
        let s = DistributionSpec::pareto(1.0).unwrap().sample(1000, 4).unwrap();
        let g = GridSpec::default_for(1000).unwrap();
        let out = successive_tests(&s, &g, 0.05, CprimeMode::Heuristic).unwrap();
        assert_eq!(out.len(), g.m_n - 1);
        assert_eq!(out, successive_tests(&s, &g, 0.05, CprimeMode::Heuristic).unwrap());
        for (pos, o) in out.iter().enumerate() {
            assert_eq!(o.estimates.unwrap().beta_ref, g.betas[pos + 2]);
        }
        let wrong = GridSpec::default_for(999).unwrap();
        assert!(successive_tests(&s, &wrong, 0.05, CprimeMode::Heuristic).is_err());
    }

    #[test]
    fn half_width_monotone() {
        let g = GridSpec::default_for(10_000).unwrap();
        let widths: Vec<f64> = g.betas.iter().map(|b| adaptive_half_width(10_000, *b, 1.0)).collect();
        assert!(widths.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn interval_uses_working_level() {
        let s = DistributionSpec::pareto(1.0).unwrap().sample(1000, 12).unwrap();
        let g = GridSpec::default_for(1000).unwrap();
        let r = adaptive_ci_detailed(&s, &g, 0.05, CprimeMode::Heuristic, Target::InverseTau, IndexConvention::LargestRejection)
            .unwrap();
        assert_eq!(r.working_index, (r.beta.i_hat + 1).min(g.m_n));
        let ci = &r.interval;
        assert_eq!(ci.beta, Some(g.betas[r.working_index]));
        assert!(((ci.upper - ci.center) - (ci.center - ci.lower)).abs() < 1e-14);
        let tau_ci = adaptive_ci(&s, &g, 0.05, CprimeMode::Heuristic, Target::Tau).unwrap();
        assert!((tau_ci.center * ci.center - 1.0).abs() < 1e-12);
        let wider = adaptive_ci(&s, &g, 0.01, CprimeMode::Heuristic, Target::InverseTau).unwrap();
        if wider.grid_index == ci.grid_index {
            assert!(wider.half_width >= ci.half_width);
        }
    }

    #[test]
    fn literal_convention_takes_smallest_rejecting_level() {
        let s = DistributionSpec::discretized_pareto(2.0).unwrap().sample(10_000, 3).unwrap();
        let g = GridSpec::default_for(10_000).unwrap();
        let r = adaptive_ci_detailed(
            &s,
            &g,
            0.05,
            CprimeMode::Heuristic,
            Target::InverseTau,
            IndexConvention::LastWrite,
        )
        .unwrap();
        let first = r.beta.per_index.iter().position(|o| o.reject).map_or(0, |p| p + 2);
        assert_eq!(r.working_index, first);
        assert_eq!(r.interval.method, CiMethod::AdaptiveLiteral);
    }

    #[test]
    fn cprime_mode_parsing() {
        assert_eq!("heuristic".parse::<CprimeMode>().unwrap(), CprimeMode::Heuristic);
        assert_eq!("0.5".parse::<CprimeMode>().unwrap(), CprimeMode::Fixed(0.5));
        assert!("-1".parse::<CprimeMode>().is_err());
        assert!("abc".parse::<CprimeMode>().is_err());
    }
}
