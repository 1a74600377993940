//! Discrete norms, the energy functional, and audits of the a-priori
//! estimates on computed solution series.

use serde::Serialize;

use crate::potential::RegularizedPotential;
use crate::solver::SolutionSeries;
use crate::{Error, Result};

/// Relative per-step slack of the energy dissipation check.
pub const ENERGY_TOLERANCE: f64 = 1e-10;
/// Relative per-step slack of the L2 contraction check.
pub const CONTRACTION_TOLERANCE: f64 = 1e-12;
/// Slack of the Gronwall bound, `C = 1 + GRONWALL_TOLERANCE`.
pub const GRONWALL_TOLERANCE: f64 = 1e-6;
/// Ceiling for the H1 a-priori ratio, whose constant is not known.
pub const APRIORI_CEILING: f64 = 10.0;

/// `sqrt(dx sum u_i^2)`.
pub fn discrete_l2(u: &[f64], dx: f64) -> f64 {
    (dx * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `sqrt(dx sum ((u_{i+1} - u_i)/dx)^2)` with zero values at both walls.
pub fn discrete_h1_seminorm(u: &[f64], dx: f64) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    let mut acc = u[0] * u[0] + u[u.len() - 1] * u[u.len() - 1];
    acc += u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    (acc / dx).sqrt()
}

/// `|u|_{H1}^2 + dx sum q_i u_i^2` for nonnegative `q`.
pub fn energy_functional(u: &[f64], q: &[f64], dx: f64) -> Result<f64> {
    if q.len() != u.len() {
        return Err(Error::LengthMismatch {
            what: "potential samples",
            expected: u.len(),
            got: q.len(),
        });
    }
    if let Some(v) = q.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!(
            "energy needs a nonnegative potential, found sample {v}"
        )));
    }
    let h1 = discrete_h1_seminorm(u, dx);
    let pot: f64 = q.iter().zip(u).map(|(q, u)| q * u * u).sum();
    Ok(h1 * h1 + dx * pot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Outcome of one estimate audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub check_name: String,
    pub series_id: String,
    pub verdict: Verdict,
    pub max_violation: f64,
    pub bound_ratio_sup: f64,
    #[serde(rename = "tolerance")]
    pub tolerance_used: f64,
}

impl EnergyReport {
    fn new(check_name: &str, max_violation: f64, bound_ratio_sup: f64, tolerance: f64) -> Self {
        Self {
            check_name: check_name.to_string(),
            series_id: String::new(),
            verdict: Verdict::from_bool(max_violation <= tolerance),
            max_violation,
            bound_ratio_sup,
            tolerance_used: tolerance,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.series_id = id.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// Largest relative increase `(x_{n+1} - x_n) / scale` along a trace.
fn max_relative_increase(trace: &[f64], scale: impl Fn(f64) -> f64) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1] - w[0]) / scale(w[0]))
        .fold(0.0, f64::max)
}

/// `E(t_{n+1}) <= E(t_n) + 1e-10 E(0)` for every step.
pub fn check_energy_dissipation(s: &SolutionSeries, q: &RegularizedPotential, dx: f64) -> Result<EnergyReport> {
    let recomputed;
    let trace = match &s.energy_trace {
        Some(t) => t.as_slice(),
        None => {
            if s.snapshots.len() < 2 {
                return Err(Error::Domain("series has no energy trace".into()));
            }
            recomputed = s
                .snapshots
                .iter()
                .map(|snap| energy_functional(&snap.values, &q.samples, dx))
                .collect::<Result<Vec<_>>>()?;
            recomputed.as_slice()
        }
    };
    Ok(energy_trace_report(trace))
}

fn energy_trace_report(trace: &[f64]) -> EnergyReport {
    let e0 = trace.first().copied().unwrap_or(0.0);
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let worst = max_relative_increase(trace, |_| scale);
    let ratio = trace.iter().fold(0.0f64, |m, e| m.max(e / scale));
    EnergyReport::new("energy_dissipation", worst, ratio, ENERGY_TOLERANCE)
}

/// `|u(t_{n+1})| <= |u(t_n)|` within `1e-12` relative per step.
pub fn check_l2_contraction(s: &SolutionSeries) -> EnergyReport {
    let trace = &s.norm_trace;
    let worst = max_relative_increase(trace, |prev| if prev > 0.0 { prev } else { 1.0 });
    let n0 = trace.first().copied().unwrap_or(0.0);
    let ratio = if n0 > 0.0 {
        trace.iter().fold(0.0f64, |m, v| m.max(v / n0))
    } else {
        0.0
    };
    EnergyReport::new("l2_contraction", worst, ratio, CONTRACTION_TOLERANCE)
}

/// `|u(t_n)| <= (1 + 1e-6) exp(t_n sup|q|) |u0|` at every step.
pub fn check_gronwall_bound(s: &SolutionSeries, q: &RegularizedPotential) -> EnergyReport {
    let n0 = s.norm_trace.first().copied().unwrap_or(0.0);
    let ratio = if n0 > 0.0 {
        s.norm_trace
            .iter()
            .enumerate()
            .map(|(n, v)| v / ((n as f64 * s.dt * q.sup_norm).exp() * n0))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    EnergyReport::new("gronwall_bound", (ratio - 1.0).max(0.0), ratio, GRONWALL_TOLERANCE)
}

/// `sup_t (|u|_{H1} + |u|) / ((1 + sup|q|)(|u0| + |u0|_{H1})) <= 10`.
pub fn check_apriori_bound(s: &SolutionSeries, q: &RegularizedPotential, u0: &[f64]) -> EnergyReport {
    let base = (1.0 + q.sup_norm) * (discrete_l2(u0, s.dx) + discrete_h1_seminorm(u0, s.dx));
    let ratio = if base > 0.0 {
        s.norm_trace
            .iter()
            .zip(&s.h1_trace)
            .map(|(l2, h1)| (l2 + h1) / base)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    EnergyReport::new("apriori_h1_bound", (ratio - APRIORI_CEILING).max(0.0), ratio, 0.0)
}
