//! Singular potentials and their mollifier regularizations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fit::least_squares;
use crate::kernel::{mollify, MollifierKernel};
use crate::solver::SpatialGrid;
use crate::{Error, Result};

/// Sign with which the potential enters `u_t - u_xx + sigma q u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    /// `+q u`, the dissipative case.
    Positive,
    /// `-q u`, the source-like case.
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn from_int(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn as_int(self) -> i64 {
        self.value() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotentialKind {
    Zero,
    Dirac,
    DiracSquared,
    Bounded,
}

impl PotentialKind {
    pub fn name(self) -> &'static str {
        match self {
            PotentialKind::Zero => "Zero",
            PotentialKind::Dirac => "Dirac",
            PotentialKind::DiracSquared => "DiracSquared",
            PotentialKind::Bounded => "Bounded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Zero" => Some(PotentialKind::Zero),
            "Dirac" => Some(PotentialKind::Dirac),
            "DiracSquared" => Some(PotentialKind::DiracSquared),
            "Bounded" => Some(PotentialKind::Bounded),
            _ => None,
        }
    }
}

/// A (possibly distributional) potential `q >= 0` with its sign in the equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// Support point of the Dirac mass.
    pub x0: f64,
    /// Dirac mass.
    pub strength: f64,
    /// Grid samples of a bounded `q`.
    pub bounded_profile: Option<Vec<f64>>,
    pub sign: Sign,
}

impl PotentialSpec {
    pub fn zero(sign: Sign) -> Self {
        Self {
            kind: PotentialKind::Zero,
            x0: 0.0,
            strength: 0.0,
            bounded_profile: None,
            sign,
        }
    }

    pub fn dirac(x0: f64, strength: f64, sign: Sign) -> Result<Self> {
        Self::singular(PotentialKind::Dirac, x0, strength, sign)
    }

    pub fn dirac_squared(x0: f64, strength: f64, sign: Sign) -> Result<Self> {
        Self::singular(PotentialKind::DiracSquared, x0, strength, sign)
    }

    fn singular(kind: PotentialKind, x0: f64, strength: f64, sign: Sign) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::Domain(format!("strength {strength} must be finite and >= 0")));
        }
        if !x0.is_finite() {
            return Err(Error::Domain(format!("x0 = {x0} is not finite")));
        }
        Ok(Self {
            kind,
            x0,
            strength,
            bounded_profile: None,
            sign,
        })
    }

    /// Bounded nonnegative potential given by its grid samples.
    pub fn bounded(samples: Vec<f64>, sign: Sign) -> Result<Self> {
        if let Some(v) = samples.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "bounded potential must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Bounded,
            x0: 0.0,
            strength: 0.0,
            bounded_profile: Some(samples),
            sign,
        })
    }

    pub fn bounded_from_fn(grid: &SpatialGrid, q: impl Fn(f64) -> f64, sign: Sign) -> Result<Self> {
        Self::bounded(grid.sample(q), sign)
    }
}

/// `omega(eps)`: how the kernel width shrinks with the regularization parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaSchedule {
    /// `omega = eps`.
    Linear,
    /// `omega = (n0 log(1/eps))^(-1/n0)`.
    Logarithmic { n0: u32 },
}

impl OmegaSchedule {
    pub fn omega(&self, eps: f64) -> Result<f64> {
        omega_of_eps(*self, eps)
    }
}

pub fn omega_of_eps(s: OmegaSchedule, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    match s {
        OmegaSchedule::Linear => Ok(eps),
        OmegaSchedule::Logarithmic { n0 } => {
            if n0 == 0 {
                return Err(Error::Domain("logarithmic schedule needs N0 >= 1".into()));
            }
            if eps == 1.0 {
                return Err(Error::LogScheduleAtOne);
            }
            let n0 = n0 as f64;
            Ok((n0 * (1.0 / eps).ln()).powf(-1.0 / n0))
        }
    }
}

/// `q_eps` sampled on a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedPotential {
    pub samples: Vec<f64>,
    /// Regularization parameter; `0` for an unregularized bounded potential.
    pub epsilon: f64,
    /// Kernel scale; `0` for an unregularized bounded potential.
    pub omega: f64,
    pub sup_norm: f64,
    pub spec: PotentialSpec,
    /// Set when the kernel was not resolved by the grid.
    pub under_resolved: bool,
}

impl RegularizedPotential {
    fn from_samples(samples: Vec<f64>, epsilon: f64, omega: f64, spec: &PotentialSpec, under_resolved: bool) -> Self {
        let sup_norm = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            samples,
            epsilon,
            omega,
            sup_norm,
            spec: spec.clone(),
            under_resolved,
        }
    }

    /// The raw samples of a bounded (or zero) potential, without mollification.
    pub fn unregularized(spec: &PotentialSpec, grid: &SpatialGrid) -> Result<Self> {
        let samples = match spec.kind {
            PotentialKind::Zero => vec![0.0; grid.nx()],
            PotentialKind::Bounded => bounded_samples(spec, grid)?.to_vec(),
            k => {
                return Err(Error::Inapplicable(format!(
                    "{} potential has no pointwise values",
                    k.name()
                )))
            }
        };
        Ok(Self::from_samples(samples, 0.0, 0.0, spec, false))
    }

    pub fn sign(&self) -> Sign {
        self.spec.sign
    }

    /// Writes `x,q_eps` CSV rows.
    pub fn write_csv(&self, grid: &SpatialGrid, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,q_eps")?;
        for (i, q) in self.samples.iter().enumerate() {
            writeln!(
                w,
                "{},{}",
                crate::artifacts::format_sig(grid.x(i), 12),
                crate::artifacts::format_sig(*q, 12)
            )?;
        }
        Ok(())
    }

    /// Adds `amplitude * bump(x - x0)` with the unscaled base kernel.
    pub fn perturbed(&self, bump: &MollifierKernel, x0: f64, amplitude: f64, grid: &SpatialGrid) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, q)| q + amplitude * bump.eval(grid.x(i) - x0))
            .collect();
        Self::from_samples(samples, self.epsilon, self.omega, &self.spec, self.under_resolved)
    }
}

fn bounded_samples<'a>(spec: &'a PotentialSpec, grid: &SpatialGrid) -> Result<&'a [f64]> {
    let profile = spec
        .bounded_profile
        .as_deref()
        .ok_or_else(|| Error::Domain("bounded potential without profile".into()))?;
    if profile.len() != grid.nx() {
        return Err(Error::LengthMismatch {
            what: "bounded potential profile",
            expected: grid.nx(),
            got: profile.len(),
        });
    }
    Ok(profile)
}

/// Builds `q_eps = q * psi_omega(eps)` on `grid`.
///
/// Dirac masses are convolved analytically (a translated scaled kernel);
/// the "squared" Dirac mass is the pointwise square of that; bounded
/// profiles use the discrete convolution.
pub fn regularize(
    spec: &PotentialSpec,
    kernel: &MollifierKernel,
    schedule: OmegaSchedule,
    eps: f64,
    grid: &SpatialGrid,
) -> Result<RegularizedPotential> {
    let omega = omega_of_eps(schedule, eps)?;
    let view = kernel.scaled(omega)?;
    let under_resolved = grid.dx() > view.support();
    let samples = match spec.kind {
        PotentialKind::Zero => vec![0.0; grid.nx()],
        PotentialKind::Dirac | PotentialKind::DiracSquared => {
            if !grid.contains(spec.x0) {
                return Err(Error::Placement {
                    what: format!("{} support", spec.kind.name()),
                    position: spec.x0,
                    a: grid.a(),
                    b: grid.b(),
                });
            }
            let squared = spec.kind == PotentialKind::DiracSquared;
            grid.sample(|x| {
                let v = spec.strength * view.eval(x - spec.x0);
                if squared {
                    v * v
                } else {
                    v
                }
            })
        }
        PotentialKind::Bounded => mollify(bounded_samples(spec, grid)?, &view, grid)?.values,
    };
    Ok(RegularizedPotential::from_samples(samples, eps, omega, spec, under_resolved))
}

/// Least-squares fit of `log sup|q_eps|` against `log(1/omega)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeratenessFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub epsilons: Vec<f64>,
    pub omegas: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// The net is identically zero (bounded uniformly, exponent 0).
    pub bounded: bool,
}

pub fn fit_moderateness_exponent(net: &[RegularizedPotential]) -> Result<ModeratenessFit> {
    let mut eps: Vec<f64> = net.iter().map(|q| q.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 3 {
        return Err(Error::InsufficientData {
            got: eps.len(),
            need: 3,
        });
    }
    if let Some(first) = net.first() {
        if net
            .iter()
            .any(|q| q.spec.kind != first.spec.kind || q.spec.sign != first.spec.sign)
        {
            return Err(Error::DegenerateFit("net mixes potential kinds".into()));
        }
    }
    let omegas: Vec<f64> = net.iter().map(|q| q.omega).collect();
    let sup_norms: Vec<f64> = net.iter().map(|q| q.sup_norm).collect();
    let epsilons: Vec<f64> = net.iter().map(|q| q.epsilon).collect();
    if sup_norms.iter().all(|&s| s == 0.0) {
        return Ok(ModeratenessFit {
            exponent: 0.0,
            r_squared: 1.0,
            epsilons,
            omegas,
            sup_norms,
            bounded: true,
        });
    }
    let (exponent, r_squared) = log_log_exponent(&omegas, &sup_norms)?;
    Ok(ModeratenessFit {
        exponent,
        r_squared,
        epsilons,
        omegas,
        sup_norms,
        bounded: false,
    })
}

/// Slope of `log(value)` against `log(1/omega)`.
pub(crate) fn log_log_exponent(omegas: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateFit("log fit needs positive values".into()));
    }
    if omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::DegenerateFit("log fit needs positive omegas".into()));
    }
    let xs: Vec<f64> = omegas.iter().map(|w| (1.0 / w).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok((fit.slope, fit.r_squared))
}

/// `sup_{eps in (0,1]} e^{-1/eps} / eps^k = (k/e)^k`, attained at `eps = 1/k`.
pub fn negligibility_constant(k: u32) -> f64 {
    if k == 0 {
        return (-1.0f64).exp();
    }
    let k = k as f64;
    (k / std::f64::consts::E).powf(k)
}

/// Amplitude `e^{-1/eps}` of the negligible perturbations.
pub fn negligible_amplitude(eps: f64) -> f64 {
    (-1.0 / eps).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_grid() -> SpatialGrid {
        SpatialGrid::with_spacing(0.0, 100.0, 0.01).unwrap()
    }

    #[test]
    fn schedules() {
        assert_eq!(omega_of_eps(OmegaSchedule::Linear, 0.2).unwrap(), 0.2);
        let e1 = (-1.0f64).exp();
        let w = omega_of_eps(OmegaSchedule::Logarithmic { n0: 1 }, e1).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        let w = omega_of_eps(OmegaSchedule::Logarithmic { n0: 2 }, e1).unwrap();
        assert!((w - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn schedule_errors() {
        assert!(matches!(
            omega_of_eps(OmegaSchedule::Linear, 0.0),
            Err(Error::InvalidEpsilon(_))
        ));
        assert!(matches!(
            omega_of_eps(OmegaSchedule::Linear, 1.5),
            Err(Error::InvalidEpsilon(_))
        ));
        assert!(omega_of_eps(OmegaSchedule::Linear, 1.0).is_ok());
        assert!(matches!(
            omega_of_eps(OmegaSchedule::Logarithmic { n0: 1 }, 1.0),
            Err(Error::LogScheduleAtOne)
        ));
    }

    #[test]
    fn zero_potential() {
        let k = MollifierKernel::standard_bump();
        let q = regularize(&PotentialSpec::zero(Sign::Positive), &k, OmegaSchedule::Linear, 0.3, &paper_grid()).unwrap();
        assert!(q.samples.iter().all(|&v| v == 0.0));
        assert_eq!(q.sup_norm, 0.0);
    }

    #[test]
    fn dirac_peak_and_support() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap();
        let q = regularize(&spec, &k, OmegaSchedule::Linear, 0.2, &g).unwrap();
        let peak = 5.0 * k.normalization_constant() * (-1.0f64).exp();
        let (i40, _) = g.nearest(40.0).unwrap();
        assert!((q.samples[i40] - peak).abs() < 1e-12);
        assert!((q.sup_norm - peak).abs() < 1e-12);
        for (i, v) in q.samples.iter().enumerate() {
            if (g.x(i) - 40.0).abs() >= 0.2 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn dirac_squared_is_pointwise_square() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let d = regularize(&PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap(), &k, OmegaSchedule::Linear, 0.2, &g).unwrap();
        let d2 = regularize(&PotentialSpec::dirac_squared(40.0, 1.0, Sign::Positive).unwrap(), &k, OmegaSchedule::Linear, 0.2, &g).unwrap();
        for (a, b) in d.samples.iter().zip(&d2.samples) {
            assert_eq!(a * a, *b);
        }
    }

    #[test]
    fn placement_error() {
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::dirac(140.0, 1.0, Sign::Positive).unwrap();
        assert!(matches!(
            regularize(&spec, &k, OmegaSchedule::Linear, 0.2, &paper_grid()),
            Err(Error::Placement { .. })
        ));
    }

    #[test]
    fn dirac_mass_audit() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap();
        for eps in [0.8, 0.5, 0.2] {
            let q = regularize(&spec, &k, OmegaSchedule::Linear, eps, &g).unwrap();
            let mass = crate::quadrature::trapezoid(&q.samples, g.dx());
            assert!((mass - 1.0).abs() <= 1e-4, "eps {eps}: mass {mass}");
        }
    }

    #[test]
    fn moderateness_exponents() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let eps = [0.8, 0.4, 0.2, 0.1, 0.05];
        for (spec, expected) in [
            (PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap(), 1.0),
            (PotentialSpec::dirac_squared(40.0, 1.0, Sign::Positive).unwrap(), 2.0),
        ] {
            let net: Vec<_> = eps
                .iter()
                .map(|&e| regularize(&spec, &k, OmegaSchedule::Linear, e, &g).unwrap())
                .collect();
            let fit = fit_moderateness_exponent(&net).unwrap();
            assert!((fit.exponent - expected).abs() <= 0.05, "{:?}", fit);
            assert!(!fit.bounded);
        }
        let zero: Vec<_> = eps
            .iter()
            .map(|&e| regularize(&PotentialSpec::zero(Sign::Positive), &k, OmegaSchedule::Linear, e, &g).unwrap())
            .collect();
        let fit = fit_moderateness_exponent(&zero).unwrap();
        assert_eq!(fit.exponent, 0.0);
        assert!(fit.bounded);
    }

    #[test]
    fn moderateness_needs_three_points() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap();
        let net: Vec<_> = [0.5, 0.5, 0.2]
            .iter()
            .map(|&e| regularize(&spec, &k, OmegaSchedule::Linear, e, &g).unwrap())
            .collect();
        assert!(matches!(
            fit_moderateness_exponent(&net),
            Err(Error::InsufficientData { got: 2, need: 3 })
        ));
    }

    #[test]
    fn blow_up_is_monotone() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        for spec in [
            PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap(),
            PotentialSpec::dirac_squared(40.0, 1.0, Sign::Positive).unwrap(),
        ] {
            let sups: Vec<f64> = [0.9, 0.7, 0.5, 0.3, 0.2, 0.1]
                .iter()
                .map(|&e| regularize(&spec, &k, OmegaSchedule::Linear, e, &g).unwrap().sup_norm)
                .collect();
            assert!(sups.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn schedules_agree_at_equal_omega() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::dirac(40.0, 1.0, Sign::Negative).unwrap();
        let log = OmegaSchedule::Logarithmic { n0: 1 };
        let eps_log = (-1.0f64 / 0.4).exp();
        let a = regularize(&spec, &k, log, eps_log, &g).unwrap();
        let b = regularize(&spec, &k, OmegaSchedule::Linear, a.omega, &g).unwrap();
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn negligible_perturbation_bound() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::dirac(40.0, 1.0, Sign::Positive).unwrap();
        let psi_max = k.eval(0.0);
        for eps in [0.5, 0.2, 0.1] {
            let q = regularize(&spec, &k, OmegaSchedule::Linear, eps, &g).unwrap();
            let qt = q.perturbed(&k, 40.0, negligible_amplitude(eps), &g);
            let diff = q
                .samples
                .iter()
                .zip(&qt.samples)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff > 0.0);
            for kk in 0..=10u32 {
                let bound = psi_max * negligibility_constant(kk) * eps.powi(kk as i32);
                assert!(diff <= bound * (1.0 + 1e-9), "eps {eps}, k {kk}: {diff} > {bound}");
            }
        }
    }

    #[test]
    fn bounded_needs_matching_profile() {
        let g = paper_grid();
        let k = MollifierKernel::standard_bump();
        let spec = PotentialSpec::bounded(vec![1.0; 10], Sign::Positive).unwrap();
        assert!(regularize(&spec, &k, OmegaSchedule::Linear, 0.5, &g).is_err());
        assert!(PotentialSpec::bounded(vec![1.0, -1.0], Sign::Positive).is_err());
    }
}
