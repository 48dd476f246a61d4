//! Heavy-tailed families used by the simulation study: exact CDFs, quantile
//! functions, seeded inverse-transform samplers and second-order membership
//! checks.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::empirics::TailSample;
use crate::error::{domain, Error, Result};
use crate::rng::UniformStream;
use crate::roots::bisect_increasing;

/// Default size constant of the perturbation in [`PerturbedPareto`].
pub const DEFAULT_UPSILON: f64 = 1.0;

const BISECTION_STEPS: usize = 2000;

/// Parameters (τ, β, C, C') of the class of tails with
/// |1 - F(x) - C x^{-τ}| ≤ C' x^{-τ(β+1)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderParams {
    pub tau: f64,
    /// May be `f64::INFINITY` (exact Pareto).
    pub beta: f64,
    pub c: f64,
    pub cprime: f64,
}

impl SecondOrderParams {
    pub fn new(tau: f64, beta: f64, c: f64, cprime: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return domain(format!("tau must be positive, got {tau}"));
        }
        if !(beta > 0.0) {
            return domain(format!("beta must be positive or infinite, got {beta}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("C must be positive, got {c}"));
        }
        if !(cprime >= 0.0 && cprime.is_finite()) {
            return domain(format!("C' must be nonnegative, got {cprime}"));
        }
        Ok(Self { tau, beta, c, cprime })
    }

    /// Allowed deviation C' x^{-τ(β+1)}; zero when β is infinite.
    pub fn envelope(&self, x: f64) -> f64 {
        if self.beta.is_infinite() {
            0.0
        } else {
            self.cprime * x.powf(-self.tau * (self.beta + 1.0))
        }
    }
}

/// Pareto tail perturbed beyond `B = n^{1/(τ(2β₁+1))}`: exponent τ - t on
/// (B, B₁) and the extreme second-order tail x^{-τ} + C' x^{-τ(1+β₁)} from B₁
/// on, with B₁ chosen so the survival function is continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPareto {
    pub tau: f64,
    pub beta1: f64,
    pub cprime: f64,
    pub anchor_n: u64,
    pub upsilon: f64,
    pub b: f64,
    pub t: f64,
    /// `f64::INFINITY` when υ = 0 (no perturbation).
    pub b1: f64,
}

impl PerturbedPareto {
    pub fn new(tau: f64, beta1: f64, cprime: f64, anchor_n: u64, upsilon: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return domain(format!("tau must be positive, got {tau}"));
        }
        if !(beta1 > 0.0 && beta1.is_finite()) {
            return domain(format!("beta1 must be positive and finite, got {beta1}"));
        }
        if !(cprime > 0.0 && cprime.is_finite()) {
            return domain(format!("C' must be positive, got {cprime}"));
        }
        if anchor_n < 2 {
            return domain(format!("anchor n must be at least 2, got {anchor_n}"));
        }
        if !(upsilon >= 0.0 && upsilon.is_finite()) {
            return domain(format!("upsilon must be nonnegative, got {upsilon}"));
        }
        let b = (anchor_n as f64).powf(1.0 / (tau * (2.0 * beta1 + 1.0)));
        let t = upsilon * b.powf(-tau * beta1);
        let t_max = (3f64.sqrt() * upsilon * tau / (2.0 * (2.0 * beta1 + 1.0).sqrt())).min(tau / 4.0);
        if t > t_max {
            return domain(format!(
                "perturbation t={t} exceeds its admissible bound {t_max}; increase the anchor n or decrease upsilon"
            ));
        }
        let b1 = if upsilon == 0.0 {
            f64::INFINITY
        } else {
            solve_b1(tau, beta1, cprime, b, t)?
        };
        Ok(Self { tau, beta1, cprime, anchor_n, upsilon, b, t, b1 })
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x < 1.0 {
            1.0
        } else if x <= self.b {
            x.powf(-self.tau)
        } else if x < self.b1 {
            self.b.powf(-self.t) * x.powf(-self.tau + self.t)
        } else {
            x.powf(-self.tau) + self.cprime * x.powf(-self.tau * (1.0 + self.beta1))
        }
    }

    fn quantile_from_survival(&self, v: f64) -> f64 {
        if v >= self.b.powf(-self.tau) {
            return v.powf(-1.0 / self.tau);
        }
        if self.b1.is_infinite() || v >= self.survival(self.b1) {
            return (v * self.b.powf(self.t)).powf(-1.0 / (self.tau - self.t));
        }
        // s + C' s^{1+β₁} = v with s = x^{-τ}.
        let g = |s: f64| s + self.cprime * s.powf(1.0 + self.beta1) - v;
        let (lo, hi) = bisect_increasing(g, 0.0, v, BISECTION_STEPS)
            .expect("survival of the outer tail is increasing in s and brackets v");
        (0.5 * (lo + hi)).powf(-1.0 / self.tau)
    }

    /// The υ this perturbation was built with implies M = C' e^{-C'τβ₁/υ};
    /// the separation bound of the construction is M/4 · n^{-β₁/(2β₁+1)}.
    pub fn separation_lower_bound(&self) -> f64 {
        let m = self.cprime * (-self.cprime * self.tau * self.beta1 / self.upsilon).exp();
        0.25 * m * (self.anchor_n as f64).powf(-self.beta1 / (2.0 * self.beta1 + 1.0))
    }
}

/// Solves (1 + u/B)^t - 1 = C'(B+u)^{-τβ₁} for u > 0 and returns B₁ = B + u.
///
/// The root is searched in log space, s = log(1 + u/B) ∈ (0, C'/υ] with
/// υ = t·B^{τβ₁}. The returned point is the left end of the final bracket,
/// so the middle piece of the perturbed tail never exceeds the second-order
/// envelope.
pub fn solve_b1(tau: f64, beta1: f64, cprime: f64, b: f64, t: f64) -> Result<f64> {
    if !(b > 1.0 && b.is_finite()) {
        return domain(format!("B must exceed 1, got {b}"));
    }
    if !(t > 0.0 && t <= tau / 4.0) {
        return domain(format!("t must lie in (0, tau/4], got {t}"));
    }
    if !(cprime > 0.0) {
        return domain(format!("C' must be positive, got {cprime}"));
    }
    let b_pow = b.powf(-tau * beta1);
    let upsilon = t / b_pow;
    let s_max = cprime / upsilon;
    let h = |s: f64| (t * s).exp_m1() - cprime * b_pow * (-tau * beta1 * s).exp();
    let (lo, _) = bisect_increasing(h, 0.0, s_max, BISECTION_STEPS).map_err(|e| {
        Error::Solver(format!(
            "B1 continuity equation (tau={tau}, beta1={beta1}, C'={cprime}, B={b}, t={t}): {e}"
        ))
    })?;
    Ok(b * lo.exp())
}

/// Residual (1 + u/B)^t - 1 - C'(B+u)^{-τβ₁} at `b1 = B + u`.
pub fn b1_residual(tau: f64, beta1: f64, cprime: f64, b: f64, t: f64, b1: f64) -> f64 {
    (b1 / b).powf(t) - 1.0 - cprime * b1.powf(-tau * beta1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DistributionSpec {
    Pareto { tau: f64 },
    Frechet { tau: f64 },
    /// Absolute value of a Student t variable with ν ∈ {1, 2}.
    AbsStudent { nu: u8 },
    AbsCauchy,
    /// Survival ⌊x⌋^{-τ} on [1, ∞): Pareto mass moved onto the integers.
    DiscretizedPareto { tau: f64 },
    PerturbedPareto(PerturbedPareto),
}

impl DistributionSpec {
    pub fn pareto(tau: f64) -> Result<Self> {
        check_shape(tau)?;
        Ok(Self::Pareto { tau })
    }

    pub fn frechet(tau: f64) -> Result<Self> {
        check_shape(tau)?;
        Ok(Self::Frechet { tau })
    }

    pub fn abs_student(nu: u8) -> Result<Self> {
        if nu != 1 && nu != 2 {
            return domain(format!("Student degrees of freedom must be 1 or 2, got {nu}"));
        }
        Ok(Self::AbsStudent { nu })
    }

    pub fn discretized_pareto(tau: f64) -> Result<Self> {
        check_shape(tau)?;
        Ok(Self::DiscretizedPareto { tau })
    }

    pub fn perturbed_pareto(tau: f64, beta1: f64, cprime: f64, anchor_n: u64, upsilon: f64) -> Result<Self> {
        PerturbedPareto::new(tau, beta1, cprime, anchor_n, upsilon).map(Self::PerturbedPareto)
    }

    /// The first-order index τ of the tail.
    pub fn tail_index(&self) -> f64 {
        match self {
            Self::Pareto { tau } | Self::Frechet { tau } | Self::DiscretizedPareto { tau } => *tau,
            Self::AbsStudent { nu } => f64::from(*nu),
            Self::AbsCauchy => 1.0,
            Self::PerturbedPareto(p) => p.tau,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::DiscretizedPareto { .. })
    }

    /// 1 - F(x).
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::Pareto { tau } => {
                if x < 1.0 {
                    1.0
                } else {
                    x.powf(-tau)
                }
            }
            Self::Frechet { tau } => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-x.powf(-tau)).exp_m1()
                }
            }
            Self::AbsStudent { nu: 1 } | Self::AbsCauchy => {
                if x <= 0.0 {
                    1.0
                } else {
                    FRAC_2_PI * (1.0 / x).atan()
                }
            }
            Self::AbsStudent { .. } => {
                if x <= 0.0 {
                    1.0
                } else {
                    let r = (2.0 + x * x).sqrt();
                    2.0 / (r * (r + x))
                }
            }
            Self::DiscretizedPareto { tau } => {
                if x < 1.0 {
                    1.0
                } else {
                    x.floor().powf(-tau)
                }
            }
            Self::PerturbedPareto(p) => p.survival(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Frechet { tau } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-x.powf(-tau)).exp()
                }
            }
            Self::AbsStudent { nu: 1 } | Self::AbsCauchy => {
                if x <= 0.0 {
                    0.0
                } else {
                    FRAC_2_PI * x.atan()
                }
            }
            Self::AbsStudent { .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    x / (2.0 + x * x).sqrt()
                }
            }
            _ => 1.0 - self.survival(x),
        }
    }

    /// inf{x : F(x) ≥ u} for u ∈ (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("quantile level must lie in (0, 1), got {u}"));
        }
        let v = 1.0 - u;
        Ok(match self {
            Self::Pareto { tau } => v.powf(-1.0 / tau),
            Self::Frechet { tau } => (-u.ln()).powf(-1.0 / tau),
            Self::AbsStudent { nu: 1 } | Self::AbsCauchy => 1.0 / (0.5 * PI * v).tan(),
            Self::AbsStudent { .. } => u * (2.0 / (v * (1.0 + u))).sqrt(),
            Self::DiscretizedPareto { tau } => discretized_quantile(*tau, u),
            Self::PerturbedPareto(p) => p.quantile_from_survival(v),
        })
    }

    /// `n` independent draws by inverse transform on the stream keyed by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<TailSample> {
        if n == 0 {
            return domain("sample size must be at least 1");
        }
        let mut stream = UniformStream::new(seed);
        let draws = (0..n)
            .map(|_| self.quantile(stream.next_open01()))
            .collect::<Result<Vec<_>>>()?;
        TailSample::new(draws)
    }
}

fn check_shape(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        domain(format!("tail index must be positive and finite, got {tau}"))
    }
}

/// Smallest integer m ≥ 1 with 1 - m^{-τ} ≥ u.
fn discretized_quantile(tau: f64, u: f64) -> f64 {
    let meets = |m: f64| 1.0 - m.powf(-tau) >= u;
    let mut m = (1.0 - u).powf(-1.0 / tau).ceil().max(1.0);
    while m > 1.0 && meets(m - 1.0) {
        m -= 1.0;
    }
    while !meets(m) {
        m += 1.0;
    }
    m
}

pub fn cdf(spec: &DistributionSpec, x: f64) -> f64 {
    spec.cdf(x)
}

pub fn quantile(spec: &DistributionSpec, u: f64) -> Result<f64> {
    spec.quantile(u)
}

pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<TailSample> {
    spec.sample(n, seed)
}

/// max over `x_grid` of |1 - F(x) - C x^{-τ}| - C' x^{-τ(β+1)}.
///
/// Points where F(x) = 0 lie outside the condition and are skipped. A
/// nonpositive result certifies membership on the grid.
pub fn sop_membership_defect(spec: &DistributionSpec, params: &SecondOrderParams, x_grid: &[f64]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for &x in x_grid {
        if !(x > 0.0) || spec.cdf(x) <= 0.0 {
            continue;
        }
        let defect = (spec.survival(x) - params.c * x.powf(-params.tau)).abs() - params.envelope(x);
        worst = worst.max(defect);
    }
    if worst == f64::NEG_INFINITY {
        return domain("membership grid has no point inside the support");
    }
    Ok(worst)
}

/// `points` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && points >= 2, "invalid geometric grid");
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| lo * (ratio * i as f64).exp()).collect();
    grid[points - 1] = hi;
    grid
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pareto { tau } => write!(f, "dist=pareto tau={tau}"),
            Self::Frechet { tau } => write!(f, "dist=frechet tau={tau}"),
            Self::AbsStudent { nu } => write!(f, "dist=student nu={nu}"),
            Self::AbsCauchy => write!(f, "dist=cauchy"),
            Self::DiscretizedPareto { tau } => write!(f, "dist=discrete-pareto tau={tau}"),
            Self::PerturbedPareto(p) => write!(
                f,
                "dist=perturbed-pareto tau={} beta1={} cprime={} n={} upsilon={}",
                p.tau, p.beta1, p.cprime, p.anchor_n, p.upsilon
            ),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses whitespace-separated `key=value` pairs, e.g. `dist=pareto tau=1`.
    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for token in s.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{token}`")))?;
            pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        DistributionSpec::from_pairs(&pairs)
    }
}

impl DistributionSpec {
    /// Builds a spec from `(key, value)` pairs; `dist` selects the family.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let num = |key: &str| -> Result<f64> {
            let raw = get(key).ok_or_else(|| Error::Parse(format!("missing distribution field `{key}`")))?;
            raw.parse::<f64>()
                .map_err(|_| Error::Parse(format!("field `{key}` is not a number: `{raw}`")))
        };
        let family = get("dist").ok_or_else(|| Error::Parse("missing distribution field `dist`".into()))?;
        let known: &[&str] = match family {
            "pareto" | "frechet" | "discrete-pareto" => &["dist", "tau"],
            "student" => &["dist", "nu"],
            "cauchy" => &["dist"],
            "perturbed-pareto" => &["dist", "tau", "beta1", "cprime", "n", "upsilon"],
            other => return Err(Error::Parse(format!("unknown distribution `{other}`"))),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown field `{k}` for distribution `{family}`")));
        }
        match family {
            "pareto" => Self::pareto(num("tau")?),
            "frechet" => Self::frechet(num("tau")?),
            "discrete-pareto" => Self::discretized_pareto(num("tau")?),
            "student" => {
                let nu = num("nu")?;
                if nu.fract() != 0.0 || !(1.0..=2.0).contains(&nu) {
                    return domain(format!("Student degrees of freedom must be 1 or 2, got {nu}"));
                }
                Self::abs_student(nu as u8)
            }
            "cauchy" => Ok(Self::AbsCauchy),
            _ => {
                let n = num("n")?;
                if n.fract() != 0.0 || n < 2.0 {
                    return domain(format!("anchor n must be an integer >= 2, got {n}"));
                }
                let upsilon = if get("upsilon").is_some() { num("upsilon")? } else { DEFAULT_UPSILON };
                Self::perturbed_pareto(num("tau")?, num("beta1")?, num("cprime")?, n as u64, upsilon)
            }
        }
    }
}
