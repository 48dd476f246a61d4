use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter an interval is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Tau,
    InverseTau,
}

impl Target {
    /// Value of the target for a distribution with tail index `tau`.
    pub fn value(self, tau: f64) -> f64 {
        match self {
            Target::Tau => tau,
            Target::InverseTau => 1.0 / tau,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Tau => "tau",
            Target::InverseTau => "inverse_tau",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(Target::Tau),
            "inverse_tau" | "inverse-tau" | "inv_tau" => Ok(Target::InverseTau),
            other => Err(Error::Parse(format!("unknown target `{other}` (expected tau or inverse_tau)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Adaptive,
    AdaptiveLiteral,
    TwoPoint,
    Wald,
    Score,
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CiMethod::Adaptive => "adaptive",
            CiMethod::AdaptiveLiteral => "adaptive_literal",
            CiMethod::TwoPoint => "two_point",
            CiMethod::Wald => "wald",
            CiMethod::Score => "score",
        })
    }
}

/// A confidence interval with explicit endpoints. Symmetric constructions
/// satisfy `lower = center - half_width`, `upper = center + half_width`;
/// score intervals are asymmetric around their center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub target: Target,
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
    pub method: CiMethod,
    /// Grid level the width was taken from (adaptive methods).
    pub grid_index: Option<usize>,
    /// Second-order index behind the sample fraction and width.
    pub beta: Option<f64>,
    /// Upper endpoint is +∞.
    pub unbounded: bool,
    /// Built from a fallback after degenerate estimates.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn symmetric(target: Target, center: f64, half_width: f64, method: CiMethod) -> Self {
        Self {
            target,
            center,
            lower: center - half_width,
            upper: center + half_width,
            half_width,
            method,
            grid_index: None,
            beta: None,
            unbounded: false,
            degenerate: false,
        }
    }

    /// `upper - lower`; infinite for unbounded intervals.
    pub fn size(&self) -> f64 {
        if self.unbounded {
            f64::INFINITY
        } else {
            self.upper - self.lower
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && (self.unbounded || value <= self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_interval_endpoints() {
        let ci = ConfidenceInterval::symmetric(Target::Tau, 1.0, 0.25, CiMethod::Adaptive);
        assert_eq!((ci.lower, ci.upper), (0.75, 1.25));
        assert_eq!(ci.size(), 0.5);
        assert!(ci.contains(1.25) && !ci.contains(1.26));
    }

    #[test]
    fn target_round_trip() {
        for t in [Target::Tau, Target::InverseTau] {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        assert_eq!(Target::InverseTau.value(2.0), 0.5);
    }
}
