//! Rate exponents shared by the estimators and tests. All helpers accept an
//! infinite second-order index and return the pointwise limit.

/// β/(2β+1), equal to 1/2 for β = ∞.
pub fn rate_exponent(beta: f64) -> f64 {
    if beta.is_infinite() {
        0.5
    } else {
        beta / (2.0 * beta + 1.0)
    }
}

/// 2β/(2β+1), equal to 1 for β = ∞.
pub fn sample_fraction_exponent(beta: f64) -> f64 {
    2.0 * rate_exponent(beta)
}

/// n^{-β/(2β+1)}.
pub fn estimation_rate(n: usize, beta: f64) -> f64 {
    pow_n(n, -rate_exponent(beta))
}

pub(crate) fn pow_n(n: usize, e: f64) -> f64 {
    (n as f64).powf(e)
}

/// log(log(n)); at least 1 exactly when n ≥ 16.
pub fn log_log(n: usize) -> f64 {
    (n as f64).ln().ln()
}
