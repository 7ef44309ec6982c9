//! Verification harness: Monte Carlo moment checks, discrete Itô residuals,
//! refinement studies and diagnostic reports, all producing machine-readable
//! verdicts.

pub mod convergence;
pub mod diagnostics;
pub mod moments;
pub mod residual;
pub mod suite;

use std::fmt::{self, Write as _};

use crate::csvio::fmt17;

pub use convergence::{convergence_study, ConvergenceTable};
pub use residual::{ito_residual, residual_study, ResidualMeasure, ResidualStudy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// One verified quantity. `band` is the admissible `|expected − observed|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub quantity: String,
    pub expected: f64,
    pub observed: f64,
    pub band: f64,
    pub verdict: Verdict,
    /// Paths for statistical checks, refinement levels for studies.
    pub samples: usize,
}

impl CheckReport {
    /// Pass iff `|expected − observed| ≤ band`.
    pub fn banded(check: &str, quantity: &str, expected: f64, observed: f64, band: f64, samples: usize) -> Self {
        let verdict = if (expected - observed).abs() <= band {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            check: check.into(),
            quantity: quantity.into(),
            expected,
            observed,
            band,
            verdict,
            samples,
        }
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// CSV `check,quantity,expected,observed,band,verdict`.
pub fn verdict_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from("check,quantity,expected,observed,band,verdict\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.check,
            r.quantity,
            fmt17(r.expected),
            fmt17(r.observed),
            fmt17(r.band),
            r.verdict
        );
    }
    out
}

/// Least-squares slope of `ln y` against `ln x` over finite positive pairs.
pub fn fitted_order(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_verdicts() {
        assert!(CheckReport::banded("c", "q", 1.0, 1.05, 0.1, 10).passed());
        assert!(CheckReport::banded("c", "q", 1.0, 1.2, 0.1, 10).failed());
        let csv = verdict_csv(&[CheckReport::banded("c", "q", 0.0, 0.0, 1e-12, 1)]);
        assert!(csv.starts_with("check,quantity,expected,observed,band,verdict\n"));
        assert!(csv.trim_end().ends_with(",pass"));
    }

    #[test]
    fn fitted_order_of_power_law() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((fitted_order(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
        assert!(fitted_order(&[0.1], &[1.0]).is_none());
        assert!(fitted_order(&xs, &[0.0, 0.0, 0.0]).is_none());
    }
}
