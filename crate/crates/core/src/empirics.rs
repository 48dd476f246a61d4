//! Order statistics, the empirical tail function, Hill's estimator and the
//! plug-in scale estimate.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rates::{pow_n, rate_exponent, sample_fraction_exponent};

/// Positive observations kept sorted in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    values: Vec<f64>,
}

impl TailSample {
    /// Sorts `values`; rejects empty input and nonpositive or non-finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("sample must contain at least one observation");
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return domain(format!("observations must be positive and finite, got {bad}"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// The `j`-th order statistic X_(j), 1-based.
    pub fn order_statistic(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// Number of observations strictly greater than `x`.
    pub fn count_greater(&self, x: f64) -> usize {
        self.values.len() - self.values.partition_point(|v| *v <= x)
    }

    /// Fraction of observations strictly greater than `x`.
    pub fn empirical_tail(&self, x: f64) -> f64 {
        self.count_greater(x) as f64 / self.values.len() as f64
    }

    /// Same draws multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

pub fn empirical_tail(sample: &TailSample, x: f64) -> f64 {
    sample.empirical_tail(x)
}

/// Hill's statistic for 1/τ from the `k` largest observations:
/// mean of log X_(n-i+1) - log X_(n-k) over i = 1..k.
pub fn hill_inverse_tail_index(sample: &TailSample, k: usize) -> Result<f64> {
    let n = sample.n();
    if k == 0 || k >= n {
        return domain(format!("Hill sample fraction k={k} must lie in [1, n-1] with n={n}"));
    }
    let v = sample.values();
    let anchor = v[n - k - 1];
    if anchor <= 0.0 {
        return domain("Hill anchor order statistic must be positive");
    }
    let log_anchor = anchor.ln();
    let sum: f64 = v[n - k..].iter().map(|x| x.ln() - log_anchor).sum();
    Ok(sum / k as f64)
}

/// ⌊n^{2β/(2β+1)}⌋ clamped to [1, n-1]. `beta` may be infinite.
pub fn sample_fraction(n: usize, beta: f64) -> usize {
    let raw = pow_n(n, sample_fraction_exponent(beta)).floor();
    clamp_fraction(raw, n)
}

pub(crate) fn clamp_fraction(raw: f64, n: usize) -> usize {
    let hi = n.saturating_sub(1).max(1);
    if !(raw >= 1.0) {
        1
    } else if raw >= hi as f64 {
        hi
    } else {
        raw as usize
    }
}

/// Intermediates of the plug-in scale estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlugInEstimates {
    pub tau_hat: f64,
    pub c_hat: f64,
    pub b_hat: f64,
    pub vartheta: f64,
    pub k_used: usize,
    pub beta_ref: f64,
    /// No observation exceeds the point where the scale is read off, so
    /// `c_hat` is zero.
    pub degenerate: bool,
}

/// ϑ̂ = (τ̂ + n^{-β/(2β+1)} c₁)(2β+1), B̂ = n^{1/ϑ̂}, Ĉ = n^{1/(2β+1)} p̂_{B̂}.
///
/// `k_used` is filled with `sample_fraction(n, beta)`, the fraction the
/// caller is expected to have used for `tau_hat`.
pub fn estimate_c(sample: &TailSample, tau_hat: f64, beta: f64, c1: f64) -> Result<PlugInEstimates> {
    if !(tau_hat > 0.0 && tau_hat.is_finite()) {
        return domain(format!("tau_hat must be positive and finite, got {tau_hat}"));
    }
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if !(c1 >= 0.0 && c1.is_finite()) {
        return domain(format!("c1 must be nonnegative, got {c1}"));
    }
    let n = sample.n();
    if n < 2 {
        return domain("plug-in scale estimate needs n >= 2");
    }
    let rate = pow_n(n, -rate_exponent(beta));
    let vartheta = (tau_hat + rate * c1) * two_beta_plus_one(beta);
    let b_hat = pow_n(n, 1.0 / vartheta);
    let p = sample.empirical_tail(b_hat);
    let c_hat = pow_n(n, 1.0 / two_beta_plus_one(beta)) * p;
    Ok(PlugInEstimates {
        tau_hat,
        c_hat,
        b_hat,
        vartheta,
        k_used: sample_fraction(n, beta),
        beta_ref: beta,
        degenerate: p == 0.0,
    })
}

fn two_beta_plus_one(beta: f64) -> f64 {
    2.0 * beta + 1.0
}
