//! Least-squares fits in log-log coordinates.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

pub const FLAT_SPREAD: f64 = 1e-3;

/// Fits `log y = slope · log x + intercept`.
///
/// R² is reported as 1 when the residual variance is zero, and also when
/// the data are flat: if log y moves by less than `FLAT_SPREAD` times the
/// spread of log x, every slope in the band is indistinguishable from zero
/// and the fraction of explained variance carries no information.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Contract(format!(
            "log-log fit needs two or more paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numeric("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Contract("log-log fit with a single abscissa".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let flat = spread(&ly) <= FLAT_SPREAD * spread(&lx);
    let r_squared = if flat || sse <= 1e-28 * n {
        1.0
    } else {
        1.0 - sse / syy
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
        points: x.len(),
    })
}

/// Pass when the slope is inside `[lo, hi]`, inconclusive when the fit is
/// poorer than `min_r2`.
pub fn judge_slope(fit: &LogLogFit, lo: f64, hi: f64, min_r2: f64) -> Verdict {
    if fit.r_squared < min_r2 {
        Verdict::Inconclusive
    } else if (lo..=hi).contains(&fit.slope) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
