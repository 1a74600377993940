//! Theta-weighted implicit scheme for `u_t - u_xx + sigma q_eps u = 0`
//! with homogeneous Dirichlet walls, plus the free-heat and Duhamel oracles.

mod grid;
mod oracle;
mod thomas;

use serde::Serialize;

pub use grid::{SpaceTimeGrid, SpatialGrid};
pub use oracle::{duhamel_picard_oracle, heat_kernel_exact, DuhamelResult, DUHAMEL_TIME_NODES};
pub use thomas::{thomas_solve, TridiagonalLu};

use crate::diagnostics::{discrete_h1_seminorm, discrete_l2, energy_functional};
use crate::potential::{RegularizedPotential, Sign};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryCondition {
    HomogeneousDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    /// 1 = backward Euler, 0.5 = Crank-Nicolson.
    pub theta: f64,
    pub bc: BoundaryCondition,
}

impl SchemeConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} outside [0, 1]")));
        }
        Ok(Self {
            theta,
            bc: BoundaryCondition::HomogeneousDirichlet,
        })
    }

    pub fn backward_euler() -> Self {
        Self {
            theta: 1.0,
            bc: BoundaryCondition::HomogeneousDirichlet,
        }
    }

    pub fn crank_nicolson() -> Self {
        Self {
            theta: 0.5,
            bc: BoundaryCondition::HomogeneousDirichlet,
        }
    }
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self::backward_euler()
    }
}

/// A fully specified regularized Cauchy problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: SpaceTimeGrid,
    pub scheme: SchemeConfig,
    pub potential: RegularizedPotential,
    pub sigma: Sign,
    pub u0: Vec<f64>,
}

impl ProblemSpec {
    /// The sign is taken from the potential.
    pub fn new(grid: SpaceTimeGrid, scheme: SchemeConfig, potential: RegularizedPotential, u0: Vec<f64>) -> Result<Self> {
        let nx = grid.space().nx();
        if u0.len() != nx {
            return Err(Error::LengthMismatch {
                what: "initial datum",
                expected: nx,
                got: u0.len(),
            });
        }
        if potential.samples.len() != nx {
            return Err(Error::LengthMismatch {
                what: "potential samples",
                expected: nx,
                got: potential.samples.len(),
            });
        }
        SchemeConfig::new(scheme.theta)?;
        Ok(Self {
            sigma: potential.sign(),
            grid,
            scheme,
            potential,
            u0,
        })
    }

    pub fn space(&self) -> &SpatialGrid {
        self.grid.space()
    }
}

/// `exp(1/((x-c)^2 - 1/4))` on `|x - c| < 1/2`, unnormalized.
pub fn initial_bump_profile(center: f64, x: f64) -> f64 {
    let s = (x - center).powi(2) - 0.25;
    if s < 0.0 {
        (1.0 / s).exp()
    } else {
        0.0
    }
}

/// Samples the initial bump centered at `center`; its support `[c-1/2, c+1/2]`
/// must lie inside the domain.
pub fn sample_initial_bump(center: f64, g: &SpatialGrid) -> Result<Vec<f64>> {
    for edge in [center - 0.5, center + 0.5] {
        if !(edge > g.a() && edge < g.b()) {
            return Err(Error::Placement {
                what: "initial bump support".into(),
                position: center,
                a: g.a(),
                b: g.b(),
            });
        }
    }
    Ok(g.sample(|x| initial_bump_profile(center, x)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    /// Time as requested by the caller.
    pub requested_time: f64,
    /// Time of the step it was rounded to.
    pub time: f64,
    pub step: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunFlags {
    /// The implicit matrix lost diagonal dominance (`sigma = -1`, large `dt q`).
    pub diagonal_dominance_lost: bool,
    /// The regularized potential was not resolved by the grid.
    pub kernel_under_resolved: bool,
}

/// Snapshots plus per-step norm traces of one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSeries {
    /// Always starts with the `t = 0` snapshot.
    pub snapshots: Vec<Snapshot>,
    /// L2 norm at every step, `step_count + 1` entries.
    pub norm_trace: Vec<f64>,
    /// H1 seminorm at every step.
    pub h1_trace: Vec<f64>,
    /// Energy functional at every step (`sigma = +1` only).
    pub energy_trace: Option<Vec<f64>>,
    pub step_count: usize,
    pub dt: f64,
    pub dx: f64,
    pub flags: RunFlags,
}

impl SolutionSeries {
    /// Snapshot whose requested or actual time is `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        let tol = 1e-9 * self.dt.max(t.abs());
        self.snapshots
            .iter()
            .find(|s| (s.requested_time - t).abs() <= tol)
            .or_else(|| self.snapshots.iter().find(|s| (s.time - t).abs() <= 0.5 * self.dt))
    }

    pub fn initial(&self) -> &[f64] {
        &self.snapshots[0].values
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.step_count).map(|n| n as f64 * self.dt).collect()
    }
}

/// Precomputed implicit/explicit operators of one problem.
#[derive(Debug, Clone)]
pub struct Stepper {
    lu: TridiagonalLu,
    explicit_diag: Vec<f64>,
    explicit_off: f64,
    has_explicit: bool,
    diagonal_dominance_lost: bool,
}

impl Stepper {
    /// Builds `(I + dt theta A)` and `(I - dt (1-theta) A)` with
    /// `A = -D2 + sigma diag(q)`.
    pub fn new(p: &ProblemSpec) -> Result<Self> {
        let g = p.space();
        let n = g.nx();
        let dt = p.grid.dt();
        let theta = p.scheme.theta;
        let inv_dx2 = 1.0 / (g.dx() * g.dx());
        let sigma = p.sigma.value();
        let a_diag: Vec<f64> = p
            .potential
            .samples
            .iter()
            .map(|q| 2.0 * inv_dx2 + sigma * q)
            .collect();
        let a_off = -inv_dx2;

        let lhs_diag: Vec<f64> = a_diag.iter().map(|d| 1.0 + dt * theta * d).collect();
        let lhs_off = dt * theta * a_off;
        let off = vec![lhs_off; n - 1];
        let diagonal_dominance_lost = lhs_diag.iter().enumerate().any(|(i, d)| {
            let neighbours = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            d.abs() < neighbours * lhs_off.abs()
        });
        let lu = TridiagonalLu::factor(&off, &lhs_diag, &off)?;
        let explicit_diag = a_diag.iter().map(|d| 1.0 - dt * (1.0 - theta) * d).collect();
        Ok(Self {
            lu,
            explicit_diag,
            explicit_off: -dt * (1.0 - theta) * a_off,
            has_explicit: theta < 1.0,
            diagonal_dominance_lost,
        })
    }

    pub fn diagonal_dominance_lost(&self) -> bool {
        self.diagonal_dominance_lost
    }

    pub fn advance(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut next = u.to_vec();
        self.advance_into(u, &mut next)?;
        Ok(next)
    }

    fn advance_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = u.len();
        if n != self.lu.len() {
            return Err(Error::LengthMismatch {
                what: "grid function",
                expected: self.lu.len(),
                got: n,
            });
        }
        if self.has_explicit {
            for i in 0..n {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                out[i] = self.explicit_diag[i] * u[i] + self.explicit_off * (left + right);
            }
        } else {
            out.copy_from_slice(u);
        }
        self.lu.solve_in_place(out)
    }
}

/// One theta-scheme step.
pub fn step(u: &[f64], p: &ProblemSpec) -> Result<Vec<f64>> {
    Stepper::new(p)?.advance(u)
}

/// Marches from `t = 0` to `T`, recording snapshots and per-step traces.
pub fn solve(p: &ProblemSpec) -> Result<SolutionSeries> {
    solve_observed(p, |_, _| {})
}

/// [`solve`] with a callback receiving `(step, u)` after every step,
/// including step 0.
pub fn solve_observed(p: &ProblemSpec, mut observe: impl FnMut(usize, &[f64])) -> Result<SolutionSeries> {
    let stepper = Stepper::new(p).map_err(|e| Error::Step {
        step: 0,
        source: Box::new(e),
    })?;
    let dx = p.space().dx();
    let with_energy = p.sigma == Sign::Positive;
    let q = &p.potential.samples;

    let mut requested: Vec<(f64, usize)> = vec![(0.0, 0)];
    for &t in p.grid.snapshot_times() {
        if t != 0.0 {
            requested.push((t, p.grid.step_of(t)));
        }
    }

    let steps = p.grid.steps();
    let mut norm_trace = Vec::with_capacity(steps + 1);
    let mut h1_trace = Vec::with_capacity(steps + 1);
    let mut energy_trace = with_energy.then(|| Vec::with_capacity(steps + 1));
    let mut snapshots = Vec::with_capacity(requested.len());

    let mut u = p.u0.clone();
    let mut next = vec![0.0; u.len()];
    for n in 0..=steps {
        if n > 0 {
            stepper.advance_into(&u, &mut next).map_err(|e| Error::Step {
                step: n,
                source: Box::new(e),
            })?;
            std::mem::swap(&mut u, &mut next);
        }
        observe(n, &u);
        norm_trace.push(discrete_l2(&u, dx));
        h1_trace.push(discrete_h1_seminorm(&u, dx));
        if let Some(trace) = energy_trace.as_mut() {
            trace.push(energy_functional(&u, q, dx)?);
        }
        for &(t, s) in requested.iter().filter(|(_, s)| *s == n) {
            snapshots.push(Snapshot {
                requested_time: t,
                time: p.grid.time_of(s),
                step: s,
                values: u.clone(),
            });
        }
    }
    snapshots.sort_by(|a, b| a.step.cmp(&b.step).then(a.requested_time.total_cmp(&b.requested_time)));

    Ok(SolutionSeries {
        snapshots,
        norm_trace,
        h1_trace,
        energy_trace,
        step_count: steps,
        dt: p.grid.dt(),
        dx,
        flags: RunFlags {
            diagonal_dominance_lost: stepper.diagonal_dominance_lost(),
            kernel_under_resolved: p.potential.under_resolved,
        },
    })
}
