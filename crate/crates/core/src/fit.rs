//! Least-squares line fits and observed convergence orders.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when the data have no spread.
    pub r_squared: f64,
    pub max_abs_residual: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "fit ordinates",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData { got: n, need: 2 });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("abscissae have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let max_abs_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        max_abs_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub r_squared: f64,
    /// Largest residual of the log-log fit.
    pub max_abs_residual: f64,
}

/// Slope of `log(error)` against `log(h)` over `(h, error)` pairs.
pub fn convergence_order(errors: &[(f64, f64)]) -> Result<OrderFit> {
    if errors.len() < 3 {
        return Err(Error::InsufficientData {
            got: errors.len(),
            need: 3,
        });
    }
    if let Some((h, e)) = errors.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "non-positive step {h} or error {e}"
        )));
    }
    let xs: Vec<f64> = errors.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|(_, e)| e.ln()).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(OrderFit {
        order: fit.slope,
        r_squared: fit.r_squared,
        max_abs_residual: fit.max_abs_residual,
    })
}
