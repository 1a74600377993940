use serde::Serialize;

use super::{flag_run, solve_all, DecayEntry, ExperimentReport, RunSetup};
use crate::config::{EpsilonSetting, RunConfig, ScheduleName};
use crate::diagnostics::discrete_l2;
use crate::fit::convergence_order;
use crate::kernel::{mollify, MollifierKernel};
use crate::potential::{negligible_amplitude, omega_of_eps, OmegaSchedule, PotentialKind, RegularizedPotential};
use crate::solver::{solve, SpatialGrid, Stepper};
use crate::{Error, Result};

/// Settings of the negligible-perturbation study.
#[derive(Debug, Clone)]
pub struct UniquenessConfig {
    pub run: RunConfig,
    /// Multiplies the `e^{-1/eps}` amplitude; 0 disables the perturbation.
    pub amplitude_scale: f64,
    /// Allowed spread `max K / min K` of `K_eps = D(eps) e^{1/eps}`.
    pub k_margin: f64,
}

impl UniquenessConfig {
    pub fn new(run: RunConfig) -> Self {
        Self {
            run,
            amplitude_scale: 1.0,
            k_margin: 10.0,
        }
    }
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        Self::new(RunConfig {
            epsilon: EpsilonSetting::List(vec![0.5, 0.25, 0.125]),
            ..RunConfig::default()
        })
    }
}

/// Solves the base pair `(q_eps, u0)` and the pair perturbed by
/// `e^{-1/eps} bump` in both the potential (at `x0`) and the datum (at the
/// bump center), recording `D(eps) = sup_t |u_eps - u~_eps|_{L2}`.
pub fn uniqueness_experiment(cfg: &UniquenessConfig) -> Result<ExperimentReport> {
    let setup = RunSetup::from_config(&cfg.run)?;
    let bump = MollifierKernel::standard_bump();
    let x0 = cfg.run.potential.x0;
    let center = cfg.run.u0.center;
    let space = setup.space().clone();
    let epsilons = cfg.run.epsilon.values();

    let results = solve_all(
        &epsilons,
        |e| *e,
        |&eps| -> Result<(RegularizedPotential, f64, Vec<f64>)> {
            let amplitude = cfg.amplitude_scale * negligible_amplitude(eps);
            let q = setup.regularize(eps)?;
            let q_tilde = q.perturbed(&bump, x0, amplitude, &space);
            let u0_tilde: Vec<f64> = setup
                .u0
                .iter()
                .enumerate()
                .map(|(i, u)| u + amplitude * bump.eval(space.x(i) - center))
                .collect();
            let base = setup.problem(q, setup.u0.clone())?;
            let pert = setup.problem(q_tilde, u0_tilde)?;
            let (sa, sb) = (Stepper::new(&base)?, Stepper::new(&pert)?);
            let (mut u, mut v) = (base.u0.clone(), pert.u0.clone());
            let distance = |u: &[f64], v: &[f64]| {
                let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
                (discrete_l2(&d, space.dx()), d)
            };
            let (mut sup, mut field) = distance(&u, &v);
            for n in 1..=setup.grid.steps() {
                let step_err = |e| Error::Step {
                    step: n,
                    source: Box::new(e),
                };
                u = sa.advance(&u).map_err(step_err)?;
                v = sb.advance(&v).map_err(step_err)?;
                let (d, f) = distance(&u, &v);
                sup = sup.max(d);
                field = f;
            }
            Ok((base.potential, sup, field))
        },
    )?;

    let mut report = ExperimentReport::new("uniqueness", cfg.run.echo());
    report
        .metrics
        .insert("amplitude_scale".into(), cfg.amplitude_scale);
    let mut fields = Vec::new();
    let mut ks = Vec::new();
    for (&eps, (q, d, field)) in epsilons.iter().zip(&results) {
        report.decay_table.push(DecayEntry {
            epsilon: eps,
            omega: q.omega,
            value: *d,
        });
        report.metrics.insert(format!("D_eps{eps}"), *d);
        report
            .metrics
            .insert(format!("D_over_eps8_eps{eps}"), d / eps.powi(8));
        if cfg.amplitude_scale > 0.0 {
            let k = d / (cfg.amplitude_scale * negligible_amplitude(eps));
            report.metrics.insert(format!("K_eps{eps}"), k);
            ks.push(k);
        }
        fields.push((eps, field.clone()));
    }
    report.difference_fields = Some(fields);

    let ds: Vec<f64> = results.iter().map(|r| r.1).collect();
    let all_finite = ds.iter().all(|d| d.is_finite());
    let all_zero = ds.iter().all(|&d| d == 0.0);
    let (ok, detail) = if !all_finite {
        (false, "non-finite distance".to_string())
    } else if all_zero {
        (true, "identical runs: D = 0".to_string())
    } else if ks.iter().any(|&k| !(k > 0.0)) {
        (false, "zero distance at some epsilon with non-zero elsewhere".to_string())
    } else {
        let kmax = ks.iter().fold(0.0f64, |m, k| m.max(*k));
        let kmin = ks.iter().fold(f64::INFINITY, |m, k| m.min(*k));
        report.metrics.insert("K_spread".into(), kmax / kmin);
        (
            kmax <= cfg.k_margin * kmin,
            format!("max K / min K = {:.4} (margin {})", kmax / kmin, cfg.k_margin),
        )
    };
    report.add_verdict("negligible_decay", ok, detail);
    if cfg.run.potential.sign == crate::potential::Sign::Negative {
        report.flag("negative potential: growth controlled only by the Gronwall factor");
    }
    Ok(report)
}

/// Smooth bounded profiles for the order studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SmoothProfile {
    /// `sin(x/5) + 2`.
    Sine,
    /// `exp(-(x - center)^2)`.
    Gaussian { center: f64 },
    Constant(f64),
}

impl SmoothProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SmoothProfile::Sine => (x / 5.0).sin() + 2.0,
            SmoothProfile::Gaussian { center } => (-(x - center) * (x - center)).exp(),
            SmoothProfile::Constant(c) => c,
        }
    }
}

/// Settings of the PDE-level consistency study.
#[derive(Debug, Clone)]
pub struct ConsistencyConfig {
    pub run: RunConfig,
}

impl Default for ConsistencyConfig {
    /// `q = exp(-(x-50)^2)` on `(40, 60)`, `dx = 1e-3`, `dt = 0.01`, `T = 1`.
    fn default() -> Self {
        let mut run = RunConfig::default();
        run.domain.a = 40.0;
        run.domain.b = 60.0;
        run.grid.dx = 1e-3;
        run.time.dt = 0.01;
        run.time.t_final = 1.0;
        run.time.snapshots = vec![0.25, 0.5, 0.75, 1.0];
        run.potential.kind = PotentialKind::Bounded;
        run.potential.x0 = 50.0;
        run.potential.strength = 1.0;
        run.omega.schedule = Some(ScheduleName::Linear);
        run.epsilon = EpsilonSetting::List(vec![0.4, 0.2, 0.1, 0.05]);
        Self { run }
    }
}

fn interior_sup_diff(a: &[f64], b: &[f64], grid: &SpatialGrid, margin: f64) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(i, _)| {
            let x = grid.x(*i);
            x - grid.a() >= margin && grid.b() - x >= margin
        })
        .fold(0.0f64, |m, (_, (p, q))| m.max((p - q).abs()))
}

/// Compares each regularized run against the run with the raw bounded
/// potential on the same grid and scheme:
/// `C(eps) = max over snapshots t > 0 of |u_eps(t) - u(t)|_{L2}`.
pub fn consistency_experiment(cfg: &ConsistencyConfig) -> Result<ExperimentReport> {
    let kind = cfg.run.potential.kind;
    if !matches!(kind, PotentialKind::Bounded | PotentialKind::Zero) {
        return Err(Error::Inapplicable(format!(
            "consistency needs a bounded potential, got {}",
            kind.name()
        )));
    }
    let setup = RunSetup::from_config(&cfg.run)?;
    let space = setup.space().clone();
    let epsilons = cfg.run.epsilon.values();

    let raw = RegularizedPotential::unregularized(&setup.spec, &space)?;
    let reference = solve(&setup.problem(raw.clone(), setup.u0.clone())?)?;
    let runs = solve_all(&epsilons, |e| *e, |&e| setup.solve_at(e))?;

    let mut report = ExperimentReport::new("consistency", cfg.run.echo());
    let max_omega = runs.iter().fold(0.0f64, |m, r| m.max(r.potential.omega));
    let mut pde = Vec::new();
    let mut pot = Vec::new();
    for run in &runs {
        let c = run
            .series
            .snapshots
            .iter()
            .filter(|s| s.step > 0)
            .map(|s| {
                let r = &reference.snapshot_at(s.requested_time).expect("shared snapshot times").values;
                let d: Vec<f64> = s.values.iter().zip(r).map(|(a, b)| a - b).collect();
                discrete_l2(&d, space.dx())
            })
            .fold(0.0f64, f64::max);
        let q_err = interior_sup_diff(&run.potential.samples, &raw.samples, &space, 2.0 * max_omega);
        report.decay_table.push(DecayEntry {
            epsilon: run.epsilon,
            omega: run.potential.omega,
            value: c,
        });
        report.metrics.insert(format!("C_eps{}", run.epsilon), c);
        report
            .metrics
            .insert(format!("q_err_eps{}", run.epsilon), q_err);
        pde.push((run.potential.omega, c));
        pot.push((run.potential.omega, q_err));
        flag_run(&mut report, &run.series, &run.potential);
    }

    if pde.iter().all(|(_, c)| *c == 0.0) {
        report.flag("regularization reproduces the potential exactly: C = 0");
        report.add_verdict("strictly_decreasing", true, "C = 0 for every epsilon");
        return Ok(report);
    }
    let decreasing = pde.windows(2).all(|w| w[1].1 < w[0].1);
    report.add_verdict(
        "strictly_decreasing",
        decreasing,
        format!("C = {:?}", pde.iter().map(|p| p.1).collect::<Vec<_>>()),
    );
    if let Ok(fit) = convergence_order(&pot) {
        report
            .fitted_exponents
            .insert("potential_order".into(), fit.order);
    }
    match convergence_order(&pde) {
        Ok(fit) => {
            report
                .fitted_exponents
                .insert("consistency_order".into(), fit.order);
            report
                .metrics
                .insert("consistency_r_squared".into(), fit.r_squared);
        }
        Err(e) => report.flag(format!("order fit skipped: {e}")),
    }
    Ok(report)
}

/// Settings of the kernel approximation-order study.
#[derive(Debug, Clone, Serialize)]
pub struct MollifierOrderConfig {
    pub a: f64,
    pub b: f64,
    pub dx: f64,
    pub epsilons: Vec<f64>,
    pub profile: SmoothProfile,
    /// `n` of the moment class; 0 and 1 select the plain bump.
    pub moments: usize,
}

impl Default for MollifierOrderConfig {
    /// `sin(x/5) + 2` on `(0, 20)` with `dx = 2^-10`, so that the kernel
    /// samples of every dyadic `omega` fall on nodes of its internal grid.
    fn default() -> Self {
        Self {
            a: 0.0,
            b: 20.0,
            dx: 1.0 / 1024.0,
            epsilons: vec![1.0, 0.5, 0.25, 0.125],
            profile: SmoothProfile::Sine,
            moments: 1,
        }
    }
}

/// Measures `sup |q_eps - q|` on the interior window (distance to the walls
/// at least `2 max omega`) with the Linear schedule and fits its order.
pub fn mollifier_order_experiment(cfg: &MollifierOrderConfig) -> Result<ExperimentReport> {
    let grid = SpatialGrid::with_spacing(cfg.a, cfg.b, cfg.dx)?;
    let bump = MollifierKernel::standard_bump();
    let kernel = if cfg.moments <= 1 {
        bump
    } else {
        bump.vanish_moments(cfg.moments)?
    };
    let q = grid.sample(|x| cfg.profile.eval(x));
    let omegas = cfg
        .epsilons
        .iter()
        .map(|&e| omega_of_eps(OmegaSchedule::Linear, e))
        .collect::<Result<Vec<_>>>()?;
    let margin = 2.0 * omegas.iter().fold(0.0f64, |m, w| m.max(*w));
    if grid.a() + margin >= grid.b() - margin {
        return Err(Error::Domain("interior window is empty".into()));
    }

    let config = serde_json::to_value(cfg)?;
    let mut report = ExperimentReport::new(format!("mollifier_order_A{}", cfg.moments.max(1)), config);
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut errors = Vec::new();
    for (&eps, &omega) in cfg.epsilons.iter().zip(&omegas) {
        let view = kernel.scaled(omega)?;
        let m = mollify(&q, &view, &grid)?;
        if m.under_resolved {
            report.flag(format!("eps={eps}: kernel support narrower than dx"));
        }
        let err = interior_sup_diff(&m.values, &q, &grid, margin);
        report.decay_table.push(DecayEntry {
            epsilon: eps,
            omega,
            value: err,
        });
        report.metrics.insert(format!("sup_err_eps{eps}"), err);
        errors.push((omega, err));
    }
    if errors.iter().all(|(_, e)| *e <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        report.flag("exact reproduction: order fit skipped");
        return Ok(report);
    }
    let fit = convergence_order(&errors)?;
    report
        .fitted_exponents
        .insert("mollifier_order".into(), fit.order);
    report.metrics.insert("order_r_squared".into(), fit.r_squared);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Sign;

    fn small_uniqueness() -> UniquenessConfig {
        let mut cfg = UniquenessConfig::default();
        cfg.run.domain.a = 30.0;
        cfg.run.domain.b = 60.0;
        cfg.run.grid.dx = 0.02;
        cfg.run.time.t_final = 2.0;
        cfg.run.time.snapshots = vec![2.0];
        cfg
    }

    #[test]
    fn zero_perturbation_gives_zero_distance() {
        let mut cfg = small_uniqueness();
        cfg.amplitude_scale = 0.0;
        let r = uniqueness_experiment(&cfg).unwrap();
        assert!(r.decay_table.iter().all(|e| e.value == 0.0));
        assert!(r.passed());
    }

    #[test]
    fn distance_is_linear_in_amplitude() {
        let cfg = small_uniqueness();
        let mut half = cfg.clone();
        half.amplitude_scale = 0.5;
        let full = uniqueness_experiment(&cfg).unwrap();
        let halved = uniqueness_experiment(&half).unwrap();
        for (a, b) in full.decay_table.iter().zip(&halved.decay_table) {
            assert!((b.value - 0.5 * a.value).abs() <= 1e-6 * a.value);
        }
    }

    #[test]
    fn decays_like_the_perturbation() {
        let r = uniqueness_experiment(&small_uniqueness()).unwrap();
        let d = |e: f64| r.decay_value(e).unwrap();
        assert!(d(0.25) / d(0.5) <= (-2.0f64).exp() * 10.0);
        assert!(r.passed(), "{:?}", r.verdicts);
        assert_eq!(r.difference_fields.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn negative_sign_decay() {
        let mut cfg = small_uniqueness();
        cfg.run.potential.sign = Sign::Negative;
        let r = uniqueness_experiment(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert!(!r.flags.is_empty());
    }

    #[test]
    fn consistency_needs_bounded_potential() {
        let mut cfg = ConsistencyConfig::default();
        cfg.run.potential.kind = PotentialKind::Dirac;
        assert!(matches!(consistency_experiment(&cfg), Err(Error::Inapplicable(_))));
    }

    fn small_consistency() -> ConsistencyConfig {
        let mut cfg = ConsistencyConfig::default();
        cfg.run.grid.dx = 0.01;
        cfg.run.time.dt = 0.05;
        cfg.run.time.snapshots = vec![0.5, 1.0];
        cfg.run.epsilon = EpsilonSetting::List(vec![0.8, 0.4, 0.2]);
        cfg
    }

    #[test]
    fn consistency_zero_potential() {
        let mut cfg = small_consistency();
        cfg.run.potential.kind = PotentialKind::Zero;
        let r = consistency_experiment(&cfg).unwrap();
        assert!(r.decay_table.iter().all(|e| e.value == 0.0));
        assert!(r.passed());
    }

    #[test]
    fn consistency_decreases() {
        let r = consistency_experiment(&small_consistency()).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        let w: Vec<f64> = r.decay_table.iter().map(|e| e.value).collect();
        assert!(w.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn constant_profile_is_reproduced() {
        let cfg = MollifierOrderConfig {
            profile: SmoothProfile::Constant(3.0),
            dx: 1.0 / 256.0,
            ..Default::default()
        };
        let r = mollifier_order_experiment(&cfg).unwrap();
        assert!(r.fitted_exponents.is_empty());
        assert!(r.flags.iter().any(|f| f.contains("exact reproduction")));
    }
}
