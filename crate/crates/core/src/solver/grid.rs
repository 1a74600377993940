use serde::Serialize;

use crate::{Error, Result};

/// Uniform interior grid on `(a, b)` with homogeneous Dirichlet walls at `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialGrid {
    a: f64,
    b: f64,
    nx: usize,
    dx: f64,
}

impl SpatialGrid {
    /// Grid with `nx` interior points and spacing `(b - a) / (nx + 1)`.
    pub fn new(a: f64, b: f64, nx: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("domain ({a}, {b}) is empty")));
        }
        if nx < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 interior points, got {nx}")));
        }
        Ok(Self {
            a,
            b,
            nx,
            dx: (b - a) / (nx + 1) as f64,
        })
    }

    /// Grid whose spacing is the closest to `dx` that divides `b - a` evenly.
    pub fn with_spacing(a: f64, b: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGrid(format!("dx = {dx} must be positive")));
        }
        let cells = ((b - a) / dx).round();
        if !(cells >= 4.0) {
            return Err(Error::InvalidGrid(format!(
                "dx = {dx} is too coarse for ({a}, {b})"
            )));
        }
        Self::new(a, b, cells as usize - 1)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of interior points.
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Interior node `i` (0-based), `x_i = a + (i + 1)(b - a)/(nx + 1)`.
    pub fn x(&self, i: usize) -> f64 {
        self.a + (self.b - self.a) * (i + 1) as f64 / (self.nx + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nx).map(|i| f(self.x(i))).collect()
    }

    /// Index of the node nearest to `x`, and whether `x` was off-grid.
    pub fn nearest(&self, x: f64) -> Option<(usize, bool)> {
        if !(x > self.a && x < self.b) {
            return None;
        }
        let pos = (x - self.a) / self.dx - 1.0;
        let i = pos.round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let off = (self.x(i) - x).abs() > 1e-9 * self.dx;
        Some((i, off))
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }
}

/// Space-time discretization: spatial grid, time step, horizon and output times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeGrid {
    space: SpatialGrid,
    dt: f64,
    t_final: f64,
    steps: usize,
    snapshot_times: Vec<f64>,
}

impl SpaceTimeGrid {
    /// `t_final` must be a multiple of `dt`; every snapshot time must lie in
    /// `[0, t_final]` and is rounded to the nearest step.
    pub fn new(space: SpatialGrid, dt: f64, t_final: f64, snapshot_times: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt = {dt} must be positive")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidGrid(format!("T = {t_final} must be positive")));
        }
        let steps = (t_final / dt).round();
        if steps < 1.0 || (steps * dt - t_final).abs() > 1e-9 * t_final {
            return Err(Error::InvalidGrid(format!(
                "T = {t_final} is not a multiple of dt = {dt}"
            )));
        }
        for &t in &snapshot_times {
            if !(t >= 0.0 && t <= t_final * (1.0 + 1e-12)) {
                return Err(Error::InvalidGrid(format!(
                    "snapshot time {t} outside [0, {t_final}]"
                )));
            }
        }
        Ok(Self {
            space,
            dt,
            t_final,
            steps: steps as usize,
            snapshot_times,
        })
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn snapshot_times(&self) -> &[f64] {
        &self.snapshot_times
    }

    /// Step index a requested time is rounded to.
    pub fn step_of(&self, t: f64) -> usize {
        ((t / self.dt).round() as usize).min(self.steps)
    }

    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn with_snapshots(&self, snapshot_times: Vec<f64>) -> Result<Self> {
        Self::new(self.space.clone(), self.dt, self.t_final, snapshot_times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grid_nodes() {
        let g = SpatialGrid::with_spacing(0.0, 100.0, 0.01).unwrap();
        assert_eq!(g.nx(), 9999);
        assert_eq!(g.x(4999), 50.0);
        assert_eq!(g.x(3999), 40.0);
        assert_eq!(g.nearest(30.0), Some((2999, false)));
        let (i, off) = g.nearest(30.004).unwrap();
        assert_eq!(i, 2999);
        assert!(off);
        assert_eq!(g.nearest(100.0), None);
    }

    #[test]
    fn symmetric_nodes() {
        let g = SpatialGrid::new(-1.0, 1.0, 9).unwrap();
        for i in 0..9 {
            assert!((g.x(i) + g.x(8 - i)).abs() < 1e-15);
        }
    }

    #[test]
    fn time_grid_validation() {
        let s = SpatialGrid::with_spacing(0.0, 1.0, 0.1).unwrap();
        assert!(SpaceTimeGrid::new(s.clone(), 0.2, 10.0, vec![2.0, 6.0, 10.0]).is_ok());
        assert!(SpaceTimeGrid::new(s.clone(), 0.3, 1.0, vec![]).is_err());
        assert!(SpaceTimeGrid::new(s.clone(), 0.1, 1.0, vec![1.5]).is_err());
        assert!(SpaceTimeGrid::new(s.clone(), -0.1, 1.0, vec![]).is_err());
        let g = SpaceTimeGrid::new(s, 0.2, 10.0, vec![0.01]).unwrap();
        assert_eq!(g.steps(), 50);
        assert_eq!(g.step_of(0.01), 0);
        assert_eq!(g.step_of(6.0), 30);
    }
}
