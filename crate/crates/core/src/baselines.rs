//! Wald and score intervals around Hill's estimate of 1/τ, their sample
//! fractions, and the standard normal quantile.

use serde::{Deserialize, Serialize};

use crate::empirics::{clamp_fraction, hill_inverse_tail_index, sample_fraction, TailSample};
use crate::error::{domain, Result};
use crate::interval::{CiMethod, ConfidenceInterval, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Wald,
    Score,
}

/// How the number of upper order statistics is chosen from a β value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionRule {
    /// ⌊n^{2β/(2β+1)}⌋.
    OracleKstar(f64),
    /// ⌊k*/√log n⌋, deliberately undersmoothed.
    UndersmoothedKtilde(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineMethod {
    pub kind: BaselineKind,
    pub fraction: FractionRule,
}

impl BaselineMethod {
    pub fn fraction_for(&self, n: usize) -> Result<usize> {
        let beta = match self.fraction {
            FractionRule::OracleKstar(b) | FractionRule::UndersmoothedKtilde(b) => b,
        };
        if !(beta > 0.0) {
            return domain(format!("beta must be positive, got {beta}"));
        }
        Ok(match self.fraction {
            FractionRule::OracleKstar(b) => kstar(n, b),
            FractionRule::UndersmoothedKtilde(b) => ktilde(n, b),
        })
    }

    pub fn interval(&self, sample: &TailSample, alpha: f64) -> Result<ConfidenceInterval> {
        let k = self.fraction_for(sample.n())?;
        match self.kind {
            BaselineKind::Wald => wald_ci(sample, k, alpha),
            BaselineKind::Score => score_ci(sample, k, alpha),
        }
    }
}

/// Standard normal quantile by Wichura's AS 241 (PPND16) rational
/// approximation, relative accuracy about 1e-16.
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile level must lie in (0, 1), got {p}"));
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_545_925,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    let poly = |c: &[f64; 8], x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * poly(&A, r) / poly(&B, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if q < 0.0 { -z } else { z })
}

/// q with P(|N(0,1)| ≥ q) = α.
pub fn two_sided_critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    normal_quantile(1.0 - alpha / 2.0)
}

/// ⌊n^{2β/(2β+1)}⌋ clamped to [1, n-1].
pub fn kstar(n: usize, beta_hat: f64) -> usize {
    sample_fraction(n, beta_hat)
}

/// ⌊k*/√log n⌋ clamped to [1, n-1].
pub fn ktilde(n: usize, beta_hat: f64) -> usize {
    let raw = (kstar(n, beta_hat) as f64 / (n as f64).ln().sqrt()).floor();
    clamp_fraction(raw, n)
}

fn check_k(sample: &TailSample, k: usize) -> Result<()> {
    if k == 0 || k >= sample.n() {
        return domain(format!("k={k} must lie in [1, n-1] with n={}", sample.n()));
    }
    Ok(())
}

pub fn wald_ci(sample: &TailSample, k: usize, alpha: f64) -> Result<ConfidenceInterval> {
    check_k(sample, k)?;
    wald_from_estimate(hill_inverse_tail_index(sample, k)?, k, alpha)
}

pub fn score_ci(sample: &TailSample, k: usize, alpha: f64) -> Result<ConfidenceInterval> {
    check_k(sample, k)?;
    score_from_estimate(hill_inverse_tail_index(sample, k)?, k, alpha)
}

/// ((1 - q/√k)h, (1 + q/√k)h) around a Hill value `h`.
pub fn wald_from_estimate(inv_tau_hat: f64, k: usize, alpha: f64) -> Result<ConfidenceInterval> {
    let step = relative_step(k, alpha)?;
    let mut ci = ConfidenceInterval::symmetric(Target::InverseTau, inv_tau_hat, step * inv_tau_hat, CiMethod::Wald);
    ci.lower = (1.0 - step) * inv_tau_hat;
    ci.upper = (1.0 + step) * inv_tau_hat;
    Ok(ci)
}

/// (h/(1 + q/√k), h/(1 - q/√k)); unbounded above once q/√k ≥ 1.
pub fn score_from_estimate(inv_tau_hat: f64, k: usize, alpha: f64) -> Result<ConfidenceInterval> {
    let step = relative_step(k, alpha)?;
    let lower = inv_tau_hat / (1.0 + step);
    let unbounded = step >= 1.0;
    let upper = if unbounded { f64::INFINITY } else { inv_tau_hat / (1.0 - step) };
    Ok(ConfidenceInterval {
        target: Target::InverseTau,
        center: inv_tau_hat,
        lower,
        upper,
        half_width: 0.5 * (upper - lower),
        method: CiMethod::Score,
        grid_index: None,
        beta: None,
        unbounded,
        degenerate: false,
    })
}

fn relative_step(k: usize, alpha: f64) -> Result<f64> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    Ok(two_sided_critical_value(alpha)? / (k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ via the Maclaurin series of erf; accurate to ~1e-14 for |x| ≤ 3.
    fn phi_series(x: f64) -> f64 {
        let z = x / std::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -z * z / k;
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        0.5 * (1.0 + sum * 2.0 / std::f64::consts::PI.sqrt())
    }

    fn quantile_oracle(p: f64) -> f64 {
        let (mut lo, mut hi) = (-4.0, 4.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_series(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normal_quantile_examples() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(0.975).unwrap() - quantile_oracle(0.975)).abs() < 1e-9);
        assert!(normal_quantile(0.0).is_err() && normal_quantile(1.0).is_err());
    }

    #[test]
    fn normal_quantile_matches_series_oracle() {
        for i in 1..200 {
            let p = 0.0015 + 0.997 * i as f64 / 200.0;
            let got = normal_quantile(p).unwrap();
            assert!((got - quantile_oracle(p)).abs() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn normal_quantile_is_odd() {
        // Dyadic levels so that 1 - p is exact.
        for p in [2f64.powi(-40), 2f64.powi(-20), 2f64.powi(-10), 0.015625, 0.125, 0.375, 0.4375] {
            let (a, b) = (normal_quantile(p).unwrap(), normal_quantile(1.0 - p).unwrap());
            assert!((a + b).abs() < 1e-12 * a.abs().max(1.0), "p={p}");
        }
        // Far tail reference value.
        assert!((normal_quantile(1e-10).unwrap() + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn fractions() {
        assert_eq!(kstar(10_000, 1.0), 464);
        assert_eq!(kstar(2, 0.01), 1);
        for n in [3usize, 10, 100, 10_000] {
            for beta in [0.1, 0.5, 1.0, 10.0] {
                assert!(ktilde(n, beta) <= kstar(n, beta));
                assert!(ktilde(n, beta) >= 1);
            }
        }
    }

    #[test]
    fn wald_example() {
        let ci = wald_from_estimate(0.5, 100, 0.05).unwrap();
        assert!((ci.lower - 0.402).abs() < 1e-5 && (ci.upper - 0.598).abs() < 1e-5);
        assert!((ci.size() - 2.0 * 0.1 * normal_quantile(0.975).unwrap() * 0.5).abs() < 1e-14);
    }

    #[test]
    fn score_example_follows_formula() {
        let ci = score_from_estimate(0.5, 100, 0.05).unwrap();
        let q = 1.959_963_984_540_054;
        assert!((ci.lower - 0.5 / (1.0 + q / 10.0)).abs() < 1e-12);
        assert!((ci.upper - 0.5 / (1.0 - q / 10.0)).abs() < 1e-12);
        assert!((ci.lower - 0.41807).abs() < 1e-4);
        assert!(ci.contains(0.5) && !ci.unbounded);
    }

    #[test]
    fn score_unbounded_when_step_reaches_one() {
        let ci = score_from_estimate(0.5, 3, 0.05).unwrap();
        assert!(ci.unbounded && ci.size().is_infinite());
        assert!(!score_from_estimate(0.5, 4, 0.05).unwrap().unbounded);
    }

    #[test]
    fn score_at_least_as_wide_as_wald() {
        for k in 5..=10_000 {
            let (w, s) = (wald_from_estimate(0.7, k, 0.05).unwrap(), score_from_estimate(0.7, k, 0.05).unwrap());
            if !s.unbounded {
                assert!(s.size() >= w.size() - 1e-15, "k={k}");
            }
        }
    }

    #[test]
    fn sample_based_intervals_check_k() {
        let s = TailSample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(wald_ci(&s, 0, 0.05).is_err());
        assert!(score_ci(&s, 4, 0.05).is_err());
        let ci = wald_ci(&s, 2, 0.05).unwrap();
        assert_eq!(ci.center, hill_inverse_tail_index(&s, 2).unwrap());
        assert!(wald_ci(&s, 2, 1.5).is_err());
    }
}
