//! Friedrichs mollifiers sampled on a fine symmetric grid.
//!
//! A [`MollifierKernel`] stores its profile as dense samples on
//! `[-R, R]` and is evaluated by linear interpolation. Derivatives are
//! obtained by iterated central differences on the same grid, which keeps
//! the discrete moment identities `sum x^k D^j psi = (-1)^j k!/(k-j)! m_{k-j}`
//! exact up to round-off (summation by parts on a uniform grid).

use std::io::Write;

use crate::quadrature::{simpson, simpson_node_weight};
use crate::solver::SpatialGrid;
use crate::{Error, Result};

/// Default number of internal samples, `2^14 + 1`.
pub const DEFAULT_FINE_POINTS: usize = (1 << 14) + 1;
/// Highest cached moment order.
pub const MAX_MOMENT_ORDER: usize = 8;
/// Highest supported derivative order (and moment-surgery order).
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// Samples of a function on the symmetric internal grid of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfile {
    support_radius: f64,
    samples: Vec<f64>,
}

impl KernelProfile {
    fn new(support_radius: f64, samples: Vec<f64>) -> Self {
        Self {
            support_radius,
            samples,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.support_radius / (self.samples.len() - 1) as f64
    }

    /// Abscissa of internal node `i`. Exactly antisymmetric: `node(n-1-i) == -node(i)`.
    pub fn node(&self, i: usize) -> f64 {
        node(self.support_radius, self.samples.len(), i)
    }

    /// Linear interpolation, zero outside the open support.
    pub fn eval(&self, x: f64) -> f64 {
        let r = self.support_radius;
        if !(x.abs() < r) {
            return 0.0;
        }
        let n = self.samples.len();
        let pos = (x + r) / self.spacing();
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        if frac == 0.0 {
            return self.samples[i];
        }
        (1.0 - frac) * self.samples[i] + frac * self.samples[i + 1]
    }

    /// `\int f dx` by composite Simpson.
    pub fn integral(&self) -> f64 {
        simpson(&self.samples, self.spacing())
    }

    /// `\int x^k f dx` by composite Simpson, summed in mirrored pairs so that
    /// odd moments of exactly even samples vanish exactly.
    pub fn raw_moment(&self, k: usize) -> f64 {
        let n = self.samples.len();
        let h = self.spacing();
        let mut acc = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let w = simpson_node_weight(i, n);
            let (xi, xj) = (self.node(i), self.node(j));
            acc += w * (xi.powi(k as i32) * self.samples[i] + xj.powi(k as i32) * self.samples[j]);
        }
        if n % 2 == 1 {
            let m = n / 2;
            acc += simpson_node_weight(m, n) * self.node(m).powi(k as i32) * self.samples[m];
        }
        acc * h / 3.0
    }
}

fn node(radius: f64, n: usize, i: usize) -> f64 {
    let num = 2 * i as i64 - (n as i64 - 1);
    radius * num as f64 / (n - 1) as f64
}

/// A compactly supported kernel with unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierKernel {
    profile: KernelProfile,
    normalization_constant: f64,
    moments: Vec<f64>,
    nonneg: bool,
    coefficients: Vec<f64>,
    /// Set for the standard bump, whose derivatives are known in closed form.
    closed_form: bool,
}

impl MollifierKernel {
    /// Samples `raw` on `n_fine` points over `[-support_radius, support_radius]`
    /// and rescales it to unit mass.
    pub fn from_profile(
        raw: impl Fn(f64) -> f64,
        support_radius: f64,
        n_fine: usize,
    ) -> Result<Self> {
        if !(support_radius > 0.0) || !support_radius.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "support radius {support_radius} must be positive"
            )));
        }
        if n_fine < 5 || n_fine.is_multiple_of(2) {
            return Err(Error::InvalidKernel(format!(
                "internal grid needs an odd number of points >= 5, got {n_fine}"
            )));
        }
        let mut samples: Vec<f64> = (0..n_fine)
            .map(|i| {
                let x = node(support_radius, n_fine, i);
                if x.abs() >= support_radius {
                    0.0
                } else {
                    raw(x)
                }
            })
            .collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel("profile is not finite".into()));
        }
        let mass = simpson(&samples, 2.0 * support_radius / (n_fine - 1) as f64);
        if !(mass.abs() > 0.0) {
            return Err(Error::InvalidKernel("profile has zero mass".into()));
        }
        let c = 1.0 / mass;
        samples.iter_mut().for_each(|v| *v *= c);
        Ok(Self::from_samples(
            KernelProfile::new(support_radius, samples),
            c,
            vec![1.0],
        ))
    }

    fn from_samples(profile: KernelProfile, c: f64, coefficients: Vec<f64>) -> Self {
        let moments = (0..=MAX_MOMENT_ORDER).map(|k| profile.raw_moment(k)).collect();
        let nonneg = profile.samples.iter().all(|&v| v >= 0.0);
        Self {
            profile,
            normalization_constant: c,
            moments,
            nonneg,
            coefficients,
            closed_form: false,
        }
    }

    /// `c * exp(1/(x^2 - 1))` on `|x| < 1`, normalized to unit mass.
    pub fn standard_bump() -> Self {
        let mut k = Self::from_profile(standard_bump_raw, 1.0, DEFAULT_FINE_POINTS)
            .expect("standard bump is a valid profile");
        k.closed_form = true;
        k
    }

    pub fn profile(&self) -> &KernelProfile {
        &self.profile
    }

    pub fn samples(&self) -> &[f64] {
        &self.profile.samples
    }

    pub fn support_radius(&self) -> f64 {
        self.profile.support_radius
    }

    /// The constant multiplying the raw profile.
    pub fn normalization_constant(&self) -> f64 {
        self.normalization_constant
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonneg
    }

    /// Coefficients `a_j` of `sum_j a_j psi^(j)`; `[1.0]` for a base kernel.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    pub fn integral(&self) -> f64 {
        self.profile.integral()
    }

    /// Cached moment `m_k = \int x^k psi dx`.
    pub fn moment(&self, order: usize) -> Result<f64> {
        self.moments
            .get(order)
            .copied()
            .ok_or(Error::UnsupportedOrder {
                order,
                max: MAX_MOMENT_ORDER,
            })
    }

    /// `j`-th derivative on the internal grid.
    ///
    /// The standard bump is differentiated in closed form. Other profiles use
    /// `j` iterated central differences whose stride grows with `j` so that
    /// round-off amplification (`~ eps / step^j`) stays bounded; for `j <= 2`
    /// the stride is one internal cell.
    pub fn derivative(&self, j: usize) -> Result<KernelProfile> {
        if j == 0 || j > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder {
                order: j,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        if self.closed_form {
            let c = self.normalization_constant;
            let r = self.support_radius();
            let n = self.samples().len();
            let samples = (0..n)
                .map(|i| c * standard_bump_derivatives(node(r, n, i), j)[j])
                .collect();
            return Ok(KernelProfile::new(r, samples));
        }
        let stride = derivative_stride(j, self.profile.spacing());
        let step = 2.0 * stride as f64 * self.profile.spacing();
        let n = self.samples().len();
        let mut cur = self.samples().to_vec();
        let mut next = vec![0.0; n];
        for _ in 0..j {
            for i in 0..n {
                let right = if i + stride < n { cur[i + stride] } else { 0.0 };
                let left = if i >= stride { cur[i - stride] } else { 0.0 };
                next[i] = (right - left) / step;
            }
            next[0] = 0.0;
            next[n - 1] = 0.0;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(KernelProfile::new(self.support_radius(), cur))
    }

    /// Builds `Phi = sum_{j=0}^{n} a_j psi^(j)` with `\int Phi = 1` and
    /// `\int x^k Phi = 0` for `1 <= k <= n`.
    ///
    /// Uses `\int x^k psi^(j) = (-1)^j k!/(k-j)! m_{k-j}` (zero for `j > k`),
    /// so the coefficient matrix is lower triangular with diagonal
    /// `(-1)^k k! m_0`.
    pub fn vanish_moments(&self, n: usize) -> Result<MollifierKernel> {
        if n == 0 || n > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder {
                order: n,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        let m = &self.moments;
        let entry = |k: usize, j: usize| -> f64 {
            if j > k {
                return 0.0;
            }
            let falling: f64 = ((k - j + 1)..=k).map(|v| v as f64).product();
            let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * falling * m[k - j]
        };
        let diag: Vec<f64> = (0..=n).map(|k| entry(k, k)).collect();
        let dmax = diag.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let dmin = diag.iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
        if !(dmin > dmax * 1e-14) {
            return Err(Error::DegenerateKernel {
                condition: dmax / dmin,
            });
        }
        let mut a = vec![0.0; n + 1];
        for k in 0..=n {
            let rhs = if k == 0 { 1.0 } else { 0.0 };
            let partial: f64 = (0..k).map(|j| entry(k, j) * a[j]).sum();
            a[k] = (rhs - partial) / diag[k];
        }

        let mut samples: Vec<f64> = self.samples().iter().map(|v| a[0] * v).collect();
        for (j, &aj) in a.iter().enumerate().skip(1) {
            if aj == 0.0 {
                continue;
            }
            let dj = self.derivative(j)?;
            for (s, d) in samples.iter_mut().zip(dj.samples()) {
                *s += aj * d;
            }
        }
        Ok(Self::from_samples(
            KernelProfile::new(self.support_radius(), samples),
            self.normalization_constant,
            a,
        ))
    }

    /// View of `omega^-1 psi(x / omega)`.
    pub fn scaled(&self, omega: f64) -> Result<ScaledKernelView<'_>> {
        ScaledKernelView::new(self, omega)
    }

    /// Writes the profile as CSV with columns `x,psi`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,psi")?;
        for (i, v) in self.samples().iter().enumerate() {
            writeln!(
                w,
                "{},{}",
                crate::artifacts::format_sig(self.profile.node(i), 12),
                crate::artifacts::format_sig(*v, 12)
            )?;
        }
        Ok(())
    }
}

/// Unnormalized standard bump `exp(1/(x^2-1))` on `|x| < 1`.
pub fn standard_bump_raw(x: f64) -> f64 {
    let s = x * x - 1.0;
    if s < 0.0 {
        (1.0 / s).exp()
    } else {
        0.0
    }
}

/// `psi^(0..=j)(x)` of the unnormalized bump, from `psi' = psi g'` with
/// `g = 1/(x^2 - 1)` and Leibniz' rule
/// `psi^(n) = sum_k C(n-1, k) psi^(n-1-k) g^(k+1)`.
fn standard_bump_derivatives(x: f64, j: usize) -> Vec<f64> {
    let mut d = vec![0.0; j + 1];
    if x.abs() >= 1.0 {
        return d;
    }
    // g^(m) = (-1)^m m! / 2 [(x-1)^(-m-1) - (x+1)^(-m-1)]
    let mut g = vec![0.0; j + 1];
    let mut factorial = 1.0;
    for (m, gm) in g.iter_mut().enumerate().skip(1) {
        factorial *= m as f64;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let e = -(m as i32) - 1;
        *gm = 0.5 * sign * factorial * ((x - 1.0).powi(e) - (x + 1.0).powi(e));
    }
    d[0] = standard_bump_raw(x);
    for n in 1..=j {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for k in 0..n {
            acc += binom * d[n - 1 - k] * g[k + 1];
            binom = binom * (n - 1 - k) as f64 / (k + 1) as f64;
        }
        d[n] = acc;
    }
    d
}

/// The standard Friedrichs bump normalized to unit mass.
pub fn make_standard_bump() -> MollifierKernel {
    MollifierKernel::standard_bump()
}

fn derivative_stride(j: usize, spacing: f64) -> usize {
    let optimal = f64::EPSILON.powf(1.0 / (j as f64 + 2.0));
    ((optimal / spacing).round() as usize).max(1)
}

/// `omega^-1 psi(x / omega)` for a borrowed base kernel.
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernelView<'a> {
    base: &'a MollifierKernel,
    omega: f64,
}

impl<'a> ScaledKernelView<'a> {
    pub fn new(base: &'a MollifierKernel, omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidScale(omega));
        }
        Ok(Self { base, omega })
    }

    pub fn base(&self) -> &'a MollifierKernel {
        self.base
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Half-width of the scaled support.
    pub fn support(&self) -> f64 {
        self.omega * self.base.support_radius()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() >= self.support() {
            return 0.0;
        }
        self.base.eval(x / self.omega) / self.omega
    }
}

/// `eval_scaled` as a free function.
pub fn eval_scaled(v: &ScaledKernelView<'_>, x: f64) -> f64 {
    v.eval(x)
}

/// Result of a discrete convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollified {
    pub values: Vec<f64>,
    /// Set when the grid spacing exceeds the scaled support radius.
    pub under_resolved: bool,
}

/// Discrete convolution `(f * psi_omega)(x_i) = sum_j w_{i-j} f_j` with
/// `w_k = dx psi_omega(k dx)` rescaled to unit sum, so constants are
/// reproduced exactly away from the walls; `f` is extended by zero.
pub fn mollify(f: &[f64], v: &ScaledKernelView<'_>, g: &SpatialGrid) -> Result<Mollified> {
    if f.len() != g.nx() {
        return Err(Error::LengthMismatch {
            what: "mollified function",
            expected: g.nx(),
            got: f.len(),
        });
    }
    let dx = g.dx();
    let reach = (v.support() / dx).ceil() as usize;
    let mut weights: Vec<f64> = (0..=reach).map(|k| dx * v.eval(k as f64 * dx)).collect();
    let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    if total.abs() > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let n = f.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = weights[0] * f[i];
        for (k, &w) in weights.iter().enumerate().skip(1) {
            if w == 0.0 {
                continue;
            }
            if i >= k {
                acc += w * f[i - k];
            }
            if i + k < n {
                acc += w * f[i + k];
            }
        }
        *o = acc;
    }
    Ok(Mollified {
        values: out,
        under_resolved: dx > v.support(),
    })
}
