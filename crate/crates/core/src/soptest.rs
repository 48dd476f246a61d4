//! Goodness-of-fit statistics for second-order Pareto classes: the weighted
//! sup defect, separation thresholds, the known-parameter, plug-in and
//! windowed tests, and the two-point interval built on the plug-in test.

use serde::{Deserialize, Serialize};

use crate::baselines::two_sided_critical_value;
use crate::distributions::{geometric_grid, DistributionSpec};
use crate::empirics::{estimate_c, hill_inverse_tail_index, sample_fraction, PlugInEstimates, TailSample};
use crate::error::{domain, Result};
use crate::interval::{CiMethod, ConfidenceInterval, Target};
use crate::rates::{estimation_rate, log_log, pow_n};

/// Grid size used for smooth population tails.
pub const POPULATION_GRID_POINTS: usize = 10_000;

/// Above this many integer jumps a discretized population tail is evaluated
/// on the geometric grid instead of exactly.
const MAX_EXACT_STEPS: f64 = 1e7;

/// The map x ↦ |x^τ p_x - C| - C' x^{-τβ₀}; the penalty vanishes for β₀ = ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectModel {
    pub tau: f64,
    pub c: f64,
    pub cprime: f64,
    pub beta0: f64,
}

impl DefectModel {
    pub fn penalty(&self, x: f64) -> f64 {
        if self.beta0.is_infinite() || self.cprime == 0.0 {
            0.0
        } else {
            self.cprime * x.powf(-self.tau * self.beta0)
        }
    }

    /// Defect at `x` given the tail value `p` there.
    pub fn at(&self, x: f64, p: f64) -> f64 {
        (x.powf(self.tau) * p - self.c).abs() - self.penalty(x)
    }

    /// Maximiser of C - c x^τ - C' x^{-τβ₀}, when it exists.
    fn stationary_point(&self, c: f64) -> Option<f64> {
        if c <= 0.0 || self.cprime == 0.0 || self.beta0.is_infinite() {
            return None;
        }
        let x = (self.cprime * self.beta0 / c).powf(1.0 / (self.tau * (1.0 + self.beta0)));
        x.is_finite().then_some(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupDefect {
    pub value: f64,
    /// Where the sup is attained; for a sup approached from the left of a
    /// jump this is the jump location.
    pub argmax: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum TailFunction<'a> {
    Empirical(&'a TailSample),
    Population(&'a DistributionSpec),
}

/// sup over [x_min, x_max] of the defect of `tail` under `model`.
///
/// Step tails (empirical, discretized Pareto) are handled exactly: on every
/// interval of constant tail value the only candidates are the left end, the
/// right end approached from the left, and the interior stationary point of
/// the lower branch. Smooth population tails use a geometric grid with the
/// distribution's kinks added.
pub fn sup_defect(tail: TailFunction<'_>, model: &DefectModel, x_min: f64, x_max: f64) -> Result<SupDefect> {
    check_window(model, x_min, x_max)?;
    match tail {
        TailFunction::Empirical(sample) => Ok(sup_empirical(sample, model, x_min, x_max)),
        TailFunction::Population(spec) => sup_population(spec, model, x_min, x_max, POPULATION_GRID_POINTS),
    }
}

/// Population sup restricted to the explicit points of `grid` inside the window.
pub fn sup_defect_on_grid(spec: &DistributionSpec, model: &DefectModel, grid: &[f64]) -> Result<SupDefect> {
    let mut best = SupDefect { value: f64::NEG_INFINITY, argmax: f64::NAN };
    for &x in grid {
        consider(&mut best, x, model.at(x, spec.survival(x)));
    }
    if best.argmax.is_nan() {
        return domain("evaluation grid is empty");
    }
    Ok(best)
}

fn check_window(model: &DefectModel, x_min: f64, x_max: f64) -> Result<()> {
    if !(model.tau > 0.0 && model.tau.is_finite()) {
        return domain(format!("tau must be positive and finite, got {}", model.tau));
    }
    if !(model.cprime >= 0.0) || !(model.beta0 > 0.0) {
        return domain("C' must be nonnegative and beta0 positive");
    }
    if !(x_max > 1.0) {
        return domain(format!("x_max must exceed 1, got {x_max}"));
    }
    if !(x_min >= 1.0 && x_min < x_max) {
        return domain(format!("window [{x_min}, {x_max}] is empty or starts below 1"));
    }
    Ok(())
}

fn consider(best: &mut SupDefect, x: f64, value: f64) {
    if value > best.value || best.argmax.is_nan() {
        *best = SupDefect { value, argmax: x };
    }
}

/// Exact sup of a right-continuous step tail. `breaks` are the jump points
/// strictly inside (x_min, x_max], ascending; `tail_at(a)` is the tail value
/// on the piece starting at `a`.
fn sup_steps(
    model: &DefectModel,
    x_min: f64,
    x_max: f64,
    breaks: impl Iterator<Item = f64>,
    tail_at: impl Fn(f64) -> f64,
) -> SupDefect {
    let mut best = SupDefect { value: f64::NEG_INFINITY, argmax: f64::NAN };
    let piece = |a: f64, b: f64, c: f64, best: &mut SupDefect| {
        consider(best, a, model.at(a, c));
        consider(best, b, model.at(b, c));
        if let Some(x) = model.stationary_point(c) {
            if x > a && x < b {
                consider(best, x, model.at(x, c));
            }
        }
    };
    let mut a = x_min;
    let mut c = tail_at(a);
    for b in breaks {
        piece(a, b, c, &mut best);
        a = b;
        c = tail_at(b);
    }
    piece(a, x_max, c, &mut best);
    best
}

fn sup_empirical(sample: &TailSample, model: &DefectModel, x_min: f64, x_max: f64) -> SupDefect {
    let v = sample.values();
    let start = v.partition_point(|y| *y <= x_min);
    let end = v.partition_point(|y| *y <= x_max);
    let n = v.len() as f64;
    let mut breaks: Vec<f64> = v[start..end].to_vec();
    breaks.dedup();
    // Tail counts follow from the break positions without a second search.
    let mut greater = Vec::with_capacity(breaks.len());
    let mut idx = start;
    for &b in &breaks {
        idx += v[idx..].partition_point(|y| *y <= b);
        greater.push(v.len() - idx);
    }
    let first = (v.len() - start) as f64 / n;
    let lookup = |x: f64| {
        if x == x_min {
            first
        } else {
            match breaks.binary_search_by(|b| b.total_cmp(&x)) {
                Ok(i) => greater[i] as f64 / n,
                Err(_) => sample.empirical_tail(x),
            }
        }
    };
    sup_steps(model, x_min, x_max, breaks.iter().copied(), lookup)
}

fn sup_population(
    spec: &DistributionSpec,
    model: &DefectModel,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<SupDefect> {
    if let DistributionSpec::DiscretizedPareto { .. } = spec {
        if x_max - x_min <= MAX_EXACT_STEPS {
            let first = x_min.floor() + 1.0;
            let last = x_max.floor();
            let breaks = (0..)
                .map(move |i| first + i as f64)
                .take_while(move |b| *b <= last);
            return Ok(sup_steps(model, x_min, x_max, breaks, |x| spec.survival(x)));
        }
    }
    let mut grid = geometric_grid(x_min, x_max, points);
    if let DistributionSpec::PerturbedPareto(p) = spec {
        grid.extend([p.b, p.b1].into_iter().filter(|x| *x > x_min && *x < x_max));
    }
    sup_defect_on_grid(spec, model, &grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    /// max(2(E log n + D log(1/η)), 2C') n^{-β/(2β+1)} with η = α/9.
    Theoretical,
    /// (log log n) n^{-β/(2β+1)}.
    Practical,
}

/// Source of the deviation budget c₁ used for B̂ and for interval widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C1Mode {
    /// q_{1-α/2} τ̂.
    NormalQuantile,
    Custom(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    /// Null second-order index; may be infinite.
    pub beta0: f64,
    /// Alternative second-order index, below `beta0`.
    pub beta1: f64,
    pub cprime: f64,
    pub rho_mode: RhoMode,
    pub d: f64,
    pub e_scale: f64,
    pub c1_mode: C1Mode,
}

impl TestConfig {
    /// Theoretical thresholds with D = E = 1 and c₁ = q_{1-α/2} τ̂.
    pub fn new(alpha: f64, beta0: f64, beta1: f64, cprime: f64) -> Result<Self> {
        let config = Self {
            alpha,
            beta0,
            beta1,
            cprime,
            rho_mode: RhoMode::Theoretical,
            d: 1.0,
            e_scale: 1.0,
            c1_mode: C1Mode::NormalQuantile,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_rho_mode(mut self, mode: RhoMode) -> Self {
        self.rho_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.beta1 > 0.0 && self.beta1.is_finite() && self.beta1 < self.beta0) {
            return domain(format!(
                "need 0 < beta1 < beta0, got beta1={} beta0={}",
                self.beta1, self.beta0
            ));
        }
        if !(self.cprime > 0.0 && self.cprime.is_finite()) {
            return domain(format!("C' must be positive, got {}", self.cprime));
        }
        if !(self.d > 0.0 && self.e_scale > 0.0) {
            return domain("threshold constants D and E must be positive");
        }
        if let C1Mode::Custom(c1) = self.c1_mode {
            if !(c1 >= 0.0 && c1.is_finite()) {
                return domain(format!("custom c1 must be nonnegative, got {c1}"));
            }
        }
        Ok(())
    }

    fn c1(&self, tau_hat: f64) -> Result<f64> {
        Ok(match self.c1_mode {
            C1Mode::NormalQuantile => two_sided_critical_value(self.alpha)? * tau_hat,
            C1Mode::Custom(c1) => c1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    /// statistic ≥ threshold / 2, and never for degenerate estimates.
    pub reject: bool,
    pub estimates: Option<PlugInEstimates>,
    pub argmax_x: f64,
    /// The C' the statistic was computed with.
    pub cprime: f64,
    pub degenerate: bool,
}

impl TestOutcome {
    fn decide(sup: SupDefect, threshold: f64, estimates: Option<PlugInEstimates>, cprime: f64) -> Self {
        Self {
            statistic: sup.value,
            threshold,
            reject: sup.value >= threshold / 2.0,
            estimates,
            argmax_x: sup.argmax,
            cprime,
            degenerate: false,
        }
    }

    pub(crate) fn degenerate(threshold: f64, estimates: Option<PlugInEstimates>, cprime: f64) -> Self {
        Self {
            statistic: f64::NAN,
            threshold,
            reject: false,
            estimates,
            argmax_x: f64::NAN,
            cprime,
            degenerate: true,
        }
    }
}

/// (log log n) n^{-β/(2β+1)}; needs n ≥ 16.
pub fn practical_rho(n: usize, beta: f64) -> Result<f64> {
    if n < 16 {
        return domain(format!("practical threshold needs n >= 16 so that log log n >= 1, got n={n}"));
    }
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    Ok(log_log(n) * estimation_rate(n, beta))
}

pub fn rho_threshold(n: usize, beta: f64, config: &TestConfig) -> Result<f64> {
    match config.rho_mode {
        RhoMode::Practical => practical_rho(n, beta),
        RhoMode::Theoretical => {
            if n < 2 || !(beta > 0.0) {
                return domain(format!("need n >= 2 and beta > 0, got n={n}, beta={beta}"));
            }
            let eta = config.alpha / 9.0;
            let a = 2.0 * (config.e_scale * (n as f64).ln() + config.d * (1.0 / eta).ln());
            Ok(a.max(2.0 * config.cprime) * estimation_rate(n, beta))
        }
    }
}

/// Known (τ, C): sup over [1, n^{1/(τ(2β₁+1))}].
pub fn test_known(sample: &TailSample, tau: f64, c: f64, config: &TestConfig) -> Result<TestOutcome> {
    config.validate()?;
    check_tau_c(tau, c)?;
    let n = sample.n();
    let x_max = pow_n(n, 1.0 / (tau * (2.0 * config.beta1 + 1.0)));
    let model = DefectModel { tau, c, cprime: config.cprime, beta0: config.beta0 };
    let sup = sup_defect(TailFunction::Empirical(sample), &model, 1.0, x_max)?;
    Ok(TestOutcome::decide(sup, rho_threshold(n, config.beta1, config)?, None, config.cprime))
}

/// As [`test_known`] with the sup restricted to
/// [n^{1/(τ(2β₀+1))}, n^{1/(τ(2β₁+1))}].
pub fn test_windowed(sample: &TailSample, tau: f64, c: f64, config: &TestConfig) -> Result<TestOutcome> {
    check_tau_c(tau, c)?;
    if !config.beta0.is_finite() {
        return domain("windowed statistic needs a finite beta0");
    }
    let n = sample.n();
    let lo = pow_n(n, 1.0 / (tau * (2.0 * config.beta0 + 1.0)));
    let hi = pow_n(n, 1.0 / (tau * (2.0 * config.beta1 + 1.0)));
    if !(lo < hi) {
        return domain(format!("window [{lo}, {hi}] is empty"));
    }
    config.validate()?;
    let model = DefectModel { tau, c, cprime: config.cprime, beta0: config.beta0 };
    let sup = sup_defect(TailFunction::Empirical(sample), &model, lo, hi)?;
    Ok(TestOutcome::decide(sup, rho_threshold(n, config.beta1, config)?, None, config.cprime))
}

/// Hill-based τ̂ at the fraction for `beta`; `None` if the top order
/// statistics are all tied.
pub(crate) fn hill_tau(sample: &TailSample, beta: f64) -> Result<Option<(f64, usize)>> {
    if sample.n() < 2 {
        return domain("Hill's estimator needs n >= 2");
    }
    let k = sample_fraction(sample.n(), beta);
    let h = hill_inverse_tail_index(sample, k)?;
    Ok((h > 0.0).then(|| (1.0 / h, k)))
}

/// τ̂ from Hill at the β₁ fraction, (Ĉ, B̂) from the plug-in scale estimate,
/// and the sup over [1, B̂].
pub fn test_plugin(sample: &TailSample, config: &TestConfig) -> Result<TestOutcome> {
    config.validate()?;
    let n = sample.n();
    let threshold = rho_threshold(n, config.beta1, config)?;
    let Some((tau_hat, _)) = hill_tau(sample, config.beta1)? else {
        return Ok(TestOutcome::degenerate(threshold, None, config.cprime));
    };
    let est = estimate_c(sample, tau_hat, config.beta1, config.c1(tau_hat)?)?;
    if est.degenerate {
        return Ok(TestOutcome::degenerate(threshold, Some(est), config.cprime));
    }
    let model = DefectModel { tau: tau_hat, c: est.c_hat, cprime: config.cprime, beta0: config.beta0 };
    let sup = sup_defect(TailFunction::Empirical(sample), &model, 1.0, est.b_hat)?;
    Ok(TestOutcome::decide(sup, threshold, Some(est), config.cprime))
}

/// Interval for τ centred on Hill's estimate at the fraction of β₁ if the
/// plug-in test rejects and of β₀ otherwise, with half-width c₁ n^{-β/(2β+1)}.
pub fn two_point_ci(sample: &TailSample, config: &TestConfig) -> Result<ConfidenceInterval> {
    let outcome = test_plugin(sample, config)?;
    let beta = if outcome.reject { config.beta1 } else { config.beta0 };
    let (tau_hat, degenerate) = match hill_tau(sample, beta)? {
        Some((t, _)) => (t, false),
        None => match hill_tau(sample, config.beta1)? {
            Some((t, _)) => (t, true),
            None => return domain("all upper order statistics are tied; tau cannot be estimated"),
        },
    };
    let half = config.c1(tau_hat)? * estimation_rate(sample.n(), beta);
    let mut ci = ConfidenceInterval::symmetric(Target::Tau, tau_hat, half, CiMethod::TwoPoint);
    ci.beta = Some(beta);
    ci.degenerate = degenerate || outcome.degenerate;
    Ok(ci)
}

fn check_tau_c(tau: f64, c: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() && c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        domain(format!("tau and C must be positive and finite, got tau={tau}, C={c}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SecondOrderParams;

    fn brute(sample: &TailSample, model: &DefectModel, x_min: f64, x_max: f64, points: usize) -> f64 {
        let mut xs = geometric_grid(x_min, x_max, points);
        for &v in sample.values() {
            if v > x_min && v <= x_max {
                xs.extend([v, v * (1.0 - 1e-14)]);
            }
        }
        xs.iter()
            .map(|&x| model.at(x, sample.empirical_tail(x)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn empirical_sup_matches_dense_grid() {
        let model = DefectModel { tau: 1.3, c: 1.0, cprime: 0.7, beta0: 2.0 };
        for seed in 0..20 {
            let s = DistributionSpec::pareto(1.3).unwrap().sample(30, seed).unwrap();
            let exact = sup_defect(TailFunction::Empirical(&s), &model, 1.0, 20.0).unwrap();
            let grid = brute(&s, &model, 1.0, 20.0, 200_000);
            assert!(exact.value >= grid - 1e-12);
            assert!(exact.value - grid < 1e-8, "seed {seed}: {} vs {grid}", exact.value);
        }
    }

    #[test]
    fn stationary_point_is_found() {
        // Constant tail c on the whole window: C - c x^τ - C' x^{-τβ₀} peaks
        // inside [1, 100] at x* = (C'β₀/c)^{1/(τ(1+β₀))}.
        let s = TailSample::new(vec![200.0; 4]).unwrap();
        let model = DefectModel { tau: 1.0, c: 1e4, cprime: 50.0, beta0: 1.0 };
        let got = sup_defect(TailFunction::Empirical(&s), &model, 1.0, 100.0).unwrap();
        let x_star = (50.0f64 / 1.0).sqrt();
        assert!((got.argmax - x_star).abs() < 1e-12);
        assert!((got.value - (1e4 - x_star - 50.0 / x_star)).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_window() {
        let s = TailSample::new(vec![1.0, 2.0]).unwrap();
        let model = DefectModel { tau: 1.0, c: 1.0, cprime: 1.0, beta0: 1.0 };
        assert!(sup_defect(TailFunction::Empirical(&s), &model, 1.0, 1.0).is_err());
        assert!(sup_defect(TailFunction::Empirical(&s), &model, 1.0, 0.5).is_err());
    }

    #[test]
    fn exact_pareto_population_sup_is_negative() {
        let spec = DistributionSpec::pareto(1.5).unwrap();
        let model = DefectModel { tau: 1.5, c: 1.0, cprime: 0.5, beta0: 2.0 };
        let got = sup_defect(TailFunction::Population(&spec), &model, 1.0, 50.0).unwrap();
        assert!(got.value < 0.0);
        assert!((got.value + model.penalty(got.argmax)).abs() < 1e-12);
        assert!((got.argmax - 50.0).abs() < 1e-9);
    }

    #[test]
    fn discretized_population_uses_exact_steps() {
        let spec = DistributionSpec::discretized_pareto(2.0).unwrap();
        let model = DefectModel { tau: 2.0, c: 1.0, cprime: 1.0, beta0: 0.5 };
        let got = sup_defect(TailFunction::Population(&spec), &model, 1.0, 30.0).unwrap();
        let mut xs = geometric_grid(1.0, 30.0, 200_000);
        xs.extend((2..=30).map(|m| m as f64 * (1.0 - 1e-15)));
        let brute = xs.iter().map(|&x| model.at(x, spec.survival(x))).fold(f64::NEG_INFINITY, f64::max);
        assert!(got.value >= brute - 1e-12 && got.value - brute < 1e-6);
        // Its second-order class bound holds with β = 1/τ, so the sup is ≤ 0.
        let params = SecondOrderParams::new(2.0, 0.5, 1.0, 6.5).unwrap();
        let model = DefectModel { tau: 2.0, c: 1.0, cprime: params.cprime, beta0: 0.5 };
        assert!(sup_defect(TailFunction::Population(&spec), &model, 1.0, 1e4).unwrap().value <= 1e-12);
    }

    #[test]
    fn rho_examples() {
        let cfg = TestConfig::new(0.05, 2.0, 1.0, 1.0).unwrap().with_rho_mode(RhoMode::Practical);
        let expect = (1e4f64).ln().ln() * 10f64.powf(-4.0 / 3.0);
        assert!((rho_threshold(10_000, 1.0, &cfg).unwrap() - expect).abs() < 1e-15);
        assert!((rho_threshold(10_000, 1.0, &cfg).unwrap() - 0.10306).abs() < 1e-5);
        assert!(rho_threshold(16, 1.0, &cfg).unwrap() > 0.0);
        assert!(rho_threshold(15, 1.0, &cfg).is_err());
        let theo = TestConfig::new(0.05, 2.0, 1.0, 30.0).unwrap();
        for n in [2usize, 100, 10_000, 1_000_000] {
            let bound = 2.0 * 30.0 * estimation_rate(n, 1.0);
            assert!(rho_threshold(n, 1.0, &theo).unwrap() >= bound);
        }
    }

    #[test]
    fn config_validation() {
        assert!(TestConfig::new(0.05, 1.0, 1.0, 1.0).is_err());
        assert!(TestConfig::new(1.5, 2.0, 1.0, 1.0).is_err());
        assert!(TestConfig::new(0.05, f64::INFINITY, 1.0, 1.0).is_ok());
        assert!(TestConfig::new(0.05, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn known_statistic_is_sup_defect() {
        let s = DistributionSpec::pareto(1.0).unwrap().sample(2000, 3).unwrap();
        let cfg = TestConfig::new(0.05, 2.0, 0.5, 1.0).unwrap();
        let out = test_known(&s, 1.0, 1.0, &cfg).unwrap();
        let model = DefectModel { tau: 1.0, c: 1.0, cprime: 1.0, beta0: 2.0 };
        let x_max = 2000f64.powf(0.5);
        let sup = sup_defect(TailFunction::Empirical(&s), &model, 1.0, x_max).unwrap();
        assert_eq!(out.statistic, sup.value);
        assert_eq!(out.reject, out.statistic >= out.threshold / 2.0);
        assert_eq!(out, test_known(&s, 1.0, 1.0, &cfg).unwrap());
    }

    #[test]
    fn windowed_is_below_known() {
        let s = DistributionSpec::frechet(1.0).unwrap().sample(5000, 8).unwrap();
        let cfg = TestConfig::new(0.05, 2.0, 0.5, 0.3).unwrap();
        let w = test_windowed(&s, 1.0, 1.0, &cfg).unwrap();
        let k = test_known(&s, 1.0, 1.0, &cfg).unwrap();
        assert!(w.statistic <= k.statistic);
        let collapsed = TestConfig { beta0: 0.5, ..cfg };
        assert!(test_windowed(&s, 1.0, 1.0, &collapsed).is_err());
    }

    #[test]
    fn windowed_population_pareto_is_negative() {
        let spec = DistributionSpec::pareto(1.0).unwrap();
        let model = DefectModel { tau: 1.0, c: 1.0, cprime: 1.0, beta0: 2.0 };
        let (lo, hi) = (1e4f64.powf(0.2), 1e4f64.powf(0.5));
        assert!(sup_defect(TailFunction::Population(&spec), &model, lo, hi).unwrap().value < 0.0);
    }

    #[test]
    fn plugin_records_fraction() {
        let s = DistributionSpec::pareto(2.0).unwrap().sample(10_000, 5).unwrap();
        let cfg = TestConfig::new(0.05, f64::INFINITY, 1.0, 1.0).unwrap();
        let out = test_plugin(&s, &cfg).unwrap();
        assert_eq!(out.estimates.unwrap().k_used, sample_fraction(10_000, 1.0));
        assert!(!out.degenerate);
    }

    #[test]
    fn plugin_degenerate_when_top_values_tied() {
        let mut v = vec![1.5; 80];
        v.extend(vec![3.0; 20]);
        let s = TailSample::new(v).unwrap();
        let cfg = TestConfig::new(0.05, 4.0, 0.5, 1.0).unwrap();
        let out = test_plugin(&s, &cfg).unwrap();
        assert!(out.degenerate && !out.reject);
    }

    #[test]
    fn two_point_width_follows_decision() {
        let s = DistributionSpec::pareto(1.0).unwrap().sample(10_000, 1).unwrap();
        let cfg = TestConfig::new(0.05, 2.0, 0.5, 1.0).unwrap();
        let ci = two_point_ci(&s, &cfg).unwrap();
        let q = two_sided_critical_value(0.05).unwrap();
        assert!(!test_plugin(&s, &cfg).unwrap().reject);
        assert_eq!(ci.beta, Some(2.0));
        assert!((ci.half_width - q * ci.center * estimation_rate(10_000, 2.0)).abs() < 1e-15);
        assert!(ci.half_width < q * ci.center * estimation_rate(10_000, 0.5));
        assert!(((ci.upper - ci.center) - (ci.center - ci.lower)).abs() < 1e-15);
    }
}
