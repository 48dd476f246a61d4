use crate::error::{Error, Result};

/// Bracket `[lo, hi]` of the root of a nondecreasing function, shrunk by
/// bisection until the midpoint no longer moves or `max_iter` halvings.
/// Returns the final bracket with `f(lo) <= 0 <= f(hi)`.
pub(crate) fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::Solver(format!(
            "root not bracketed on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}
