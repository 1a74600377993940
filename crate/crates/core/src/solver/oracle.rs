//! Independent reference solutions: free heat flow by Gaussian convolution
//! and the Duhamel/Picard representation for small `T sup|q|`.

use std::f64::consts::PI;

use super::{ProblemSpec, SpatialGrid};
use crate::diagnostics::discrete_l2;
use crate::{Error, Result};

/// Coarse time nodes of the Duhamel quadrature on `[0, T]`.
pub const DUHAMEL_TIME_NODES: usize = 24;

/// Gaussian tails below `exp(-GAUSS_CUTOFF)` are dropped.
const GAUSS_CUTOFF: f64 = 60.0;

/// Discrete heat-kernel weights `dx phi_t(k dx)` for `k >= 0`, normalized so
/// the full symmetric stencil sums to one.
fn heat_weights(t: f64, dx: f64, max_reach: usize) -> Vec<f64> {
    let reach = (((4.0 * t * GAUSS_CUTOFF).sqrt() / dx).ceil() as usize).min(max_reach);
    let norm = (4.0 * PI * t).sqrt();
    let mut w: Vec<f64> = (0..=reach)
        .map(|k| {
            let d = k as f64 * dx;
            dx * (-d * d / (4.0 * t)).exp() / norm
        })
        .collect();
    let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn convolve(f: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for (j, &fj) in f.iter().enumerate() {
        if fj == 0.0 {
            continue;
        }
        out[j] += weights[0] * fj;
        for (k, &w) in weights.iter().enumerate().skip(1) {
            if j >= k {
                out[j - k] += w * fj;
            }
            if j + k < n {
                out[j + k] += w * fj;
            }
        }
    }
    out
}

/// Free heat evolution `phi_t * u0` by trapezoid convolution with the
/// Gaussian `(4 pi t)^{-1/2} exp(-x^2 / 4t)`, `u0` extended by zero.
pub fn heat_kernel_exact(u0: &[f64], t: f64, g: &SpatialGrid) -> Result<Vec<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    if u0.len() != g.nx() {
        return Err(Error::LengthMismatch {
            what: "initial datum",
            expected: g.nx(),
            got: u0.len(),
        });
    }
    Ok(convolve(u0, &heat_weights(t, g.dx(), g.nx())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuhamelResult {
    /// Picard iterate at `T`.
    pub values: Vec<f64>,
    /// L2 norm of the last Picard increment at `T`.
    pub last_increment: f64,
    pub iterations: usize,
}

/// Picard iteration on
/// `u(t) = phi_t * u0 - sigma \int_0^t phi_{t-s} * (q u(s)) ds`
/// with trapezoid quadrature on [`DUHAMEL_TIME_NODES`] coarse time nodes.
///
/// Refuses to run unless `T sup|q| < 1`.
pub fn duhamel_picard_oracle(p: &ProblemSpec, iters: usize) -> Result<DuhamelResult> {
    if iters == 0 {
        return Err(Error::Domain("Picard iteration needs iters >= 1".into()));
    }
    let t_final = p.grid.t_final();
    let contraction = t_final * p.potential.sup_norm;
    if !(contraction < 1.0) {
        return Err(Error::OutOfRegime(contraction));
    }
    let g = p.space();
    let n = g.nx();
    let m_nodes = DUHAMEL_TIME_NODES;
    let ds = t_final / m_nodes as f64;
    let sigma = p.sigma.value();
    let q = &p.potential.samples;

    // lag_weights[l] propagates by l * ds; lag 0 is the identity
    let lag_weights: Vec<Option<Vec<f64>>> = (0..=m_nodes)
        .map(|l| (l > 0).then(|| heat_weights(l as f64 * ds, g.dx(), n)))
        .collect();
    let propagate = |f: &[f64], lag: usize| -> Vec<f64> {
        match &lag_weights[lag] {
            None => f.to_vec(),
            Some(w) => convolve(f, w),
        }
    };

    let free: Vec<Vec<f64>> = (0..=m_nodes).map(|m| propagate(&p.u0, m)).collect();
    let mut current = free.clone();
    let mut last_increment = f64::INFINITY;

    if q.iter().all(|&v| v == 0.0) {
        return Ok(DuhamelResult {
            values: free[m_nodes].clone(),
            last_increment: 0.0,
            iterations: iters,
        });
    }

    for _ in 0..iters {
        let sources: Vec<Vec<f64>> = current
            .iter()
            .map(|u| u.iter().zip(q).map(|(u, q)| q * u).collect())
            .collect();
        let mut next = Vec::with_capacity(m_nodes + 1);
        for m in 0..=m_nodes {
            let mut u = free[m].clone();
            for l in 0..=m {
                if m == 0 {
                    break;
                }
                let w = if l == 0 || l == m { 0.5 * ds } else { ds };
                let prop = propagate(&sources[l], m - l);
                for (ui, pi) in u.iter_mut().zip(&prop) {
                    *ui -= sigma * w * pi;
                }
            }
            next.push(u);
        }
        let diff: Vec<f64> = next[m_nodes]
            .iter()
            .zip(&current[m_nodes])
            .map(|(a, b)| a - b)
            .collect();
        last_increment = discrete_l2(&diff, g.dx());
        current = next;
    }

    Ok(DuhamelResult {
        values: current.swap_remove(m_nodes),
        last_increment,
        iterations: iters,
    })
}
