//! Least-squares fits of a single constant to measured `(x, y)` points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = A·exp(−c·x)`; the constant is the rate `c`.
    ExpDecay,
    /// `y = a·x^p`; the constant is the coefficient `a`, `p` is the exponent.
    Power,
    /// `y = C·√x`; the constant is the mean of `y / √x`.
    SqrtRatio,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::ExpDecay => "exp_decay",
            FitModel::Power => "power",
            FitModel::SqrtRatio => "sqrt_ratio",
        })
    }
}

impl FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_decay" => Ok(FitModel::ExpDecay),
            "power" => Ok(FitModel::Power),
            "sqrt_ratio" => Ok(FitModel::SqrtRatio),
            other => Err(Error::usage(format!(
                "unknown fit model {other:?} (exp_decay, power, sqrt_ratio)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub constant: f64,
    /// Fitted exponent (power model only).
    pub exponent: Option<f64>,
    /// Amplitude `A` (exp_decay model only).
    pub amplitude: Option<f64>,
    /// RMS residual, in log space for exp_decay and power, of `y/√x` for
    /// sqrt_ratio.
    pub residual: f64,
}

pub fn fit_constant(points: &[(f64, f64)], model: FitModel) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "{model} fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit(format!("{model} fit: non-finite input")));
    }
    match model {
        FitModel::ExpDecay => {
            positive_y(points, model)?;
            let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, y.ln())).collect();
            let (slope, icept, res) = line_fit(&pts, model)?;
            Ok(FitResult {
                constant: -slope,
                exponent: None,
                amplitude: Some(icept.exp()),
                residual: res,
            })
        }
        FitModel::Power => {
            positive_y(points, model)?;
            positive_x(points, model)?;
            let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
            let (slope, icept, res) = line_fit(&pts, model)?;
            Ok(FitResult {
                constant: icept.exp(),
                exponent: Some(slope),
                amplitude: None,
                residual: res,
            })
        }
        FitModel::SqrtRatio => {
            positive_x(points, model)?;
            let r: Vec<f64> = points.iter().map(|&(x, y)| y / x.sqrt()).collect();
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r.len() as f64;
            Ok(FitResult {
                constant: mean,
                exponent: None,
                amplitude: None,
                residual: var.sqrt(),
            })
        }
    }
}

fn positive_y(points: &[(f64, f64)], model: FitModel) -> Result<()> {
    if points.iter().any(|&(_, y)| y <= 0.0) {
        return Err(Error::Fit(format!("{model} fit needs y > 0")));
    }
    Ok(())
}

fn positive_x(points: &[(f64, f64)], model: FitModel) -> Result<()> {
    if points.iter().any(|&(x, _)| x <= 0.0) {
        return Err(Error::Fit(format!("{model} fit needs x > 0")));
    }
    Ok(())
}

/// Ordinary least squares `y = slope·x + icept`, with RMS residual.
fn line_fit(points: &[(f64, f64)], model: FitModel) -> Result<(f64, f64, f64)> {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) * m {
        return Err(Error::Fit(format!("{model} fit: all x values coincide")));
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    Ok((slope, icept, (rss / m).sqrt()))
}
