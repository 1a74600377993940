use std::fmt::Write as _;

use serde::Serialize;

use super::{
    consistency_experiment, figure_experiments, mollifier_order_experiment, uniqueness_experiment,
    ConsistencyConfig, Figure, MollifierOrderConfig, UniquenessConfig,
};
use crate::artifacts::snapshot_csv;
use crate::config::RunConfig;
use crate::diagnostics::discrete_l2;
use crate::fit::convergence_order;
use crate::kernel::MollifierKernel;
use crate::potential::{fit_moderateness_exponent, regularize, OmegaSchedule, PotentialSpec, RegularizedPotential, Sign};
use crate::solver::{
    heat_kernel_exact, sample_initial_bump, solve, ProblemSpec, SchemeConfig, SpaceTimeGrid, SpatialGrid,
};
use crate::Result;

/// Errors of a refinement study and the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudy {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
    pub r_squared: f64,
}

fn free_problem(grid: SpaceTimeGrid, scheme: SchemeConfig, u0: Vec<f64>) -> Result<ProblemSpec> {
    let zero = RegularizedPotential::unregularized(&PotentialSpec::zero(Sign::Positive), grid.space())?;
    ProblemSpec::new(grid, scheme, zero, u0)
}

/// `(|u(T) - exact|_{L2}, max |u(T) - exact| / max |exact|)` of a
/// potential-free run against the heat-kernel oracle.
fn free_error(space: &SpatialGrid, scheme: SchemeConfig, u0: &[f64], dt: f64, t: f64) -> Result<(f64, f64)> {
    let grid = SpaceTimeGrid::new(space.clone(), dt, t, vec![t])?;
    let s = solve(&free_problem(grid, scheme, u0.to_vec())?)?;
    let u = &s.snapshot_at(t).expect("final snapshot").values;
    let exact = heat_kernel_exact(u0, t, space)?;
    let diff: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let linf = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((discrete_l2(&diff, space.dx()), linf / scale))
}

fn order_study(pairs: Vec<(f64, f64)>) -> Result<OrderStudy> {
    let fit = convergence_order(&pairs)?;
    Ok(OrderStudy {
        steps: pairs.iter().map(|p| p.0).collect(),
        errors: pairs.iter().map(|p| p.1).collect(),
        order: fit.order,
        r_squared: fit.r_squared,
    })
}

/// Relative L-infinity distance between the potential-free solver at
/// `t = 2` (`dt = 0.01`, `dx = 0.01` on `(0, 100)`) and the heat-kernel oracle.
pub fn free_heat_agreement() -> Result<f64> {
    let space = SpatialGrid::with_spacing(0.0, 100.0, 0.01)?;
    let u0 = sample_initial_bump(50.0, &space)?;
    Ok(free_error(&space, SchemeConfig::backward_euler(), &u0, 0.01, 2.0)?.1)
}

/// Temporal refinement (`dt` in `{0.04, 0.02, 0.01, 0.005}`) against the
/// oracle at `T = 1` for a unit-variance Gaussian on `(-15, 15)` with `dx = 0.00125`.
pub fn temporal_order_study(theta: f64) -> Result<OrderStudy> {
    let space = SpatialGrid::with_spacing(-15.0, 15.0, 0.00125)?;
    let u0 = space.sample(|x| (-x * x / 2.0).exp());
    let scheme = SchemeConfig::new(theta)?;
    let pairs = [0.04, 0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| Ok((dt, free_error(&space, scheme, &u0, dt, 1.0)?.0)))
        .collect::<Result<Vec<_>>>()?;
    order_study(pairs)
}

/// Spatial refinement (Crank-Nicolson, `dt = 2.5e-4`, `T = 0.25`) for a
/// Gaussian of variance 1/4 on `(-8, 8)`, `dx` in `{0.04, 0.02, 0.01}`.
pub fn spatial_order_study() -> Result<OrderStudy> {
    let pairs = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dx| {
            let space = SpatialGrid::with_spacing(-8.0, 8.0, dx)?;
            let u0 = space.sample(|x| (-2.0 * x * x).exp());
            Ok((dx, free_error(&space, SchemeConfig::crank_nicolson(), &u0, 2.5e-4, 0.25)?.0))
        })
        .collect::<Result<Vec<_>>>()?;
    order_study(pairs)
}

/// Moderateness exponents of the Dirac and squared-Dirac nets at `x0 = 40`
/// over `eps in {0.8, 0.4, 0.2, 0.1, 0.05}` (Linear schedule, `dx = 0.01`).
pub fn moderateness_exponents() -> Result<(f64, f64)> {
    let space = SpatialGrid::with_spacing(0.0, 100.0, 0.01)?;
    let kernel = MollifierKernel::standard_bump();
    let net = |spec: PotentialSpec| -> Result<f64> {
        let qs = [0.8, 0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&e| regularize(&spec, &kernel, OmegaSchedule::Linear, e, &space))
            .collect::<Result<Vec<_>>>()?;
        Ok(fit_moderateness_exponent(&qs)?.exponent)
    };
    Ok((
        net(PotentialSpec::dirac(40.0, 1.0, Sign::Positive)?)?,
        net(PotentialSpec::dirac_squared(40.0, 1.0, Sign::Positive)?)?,
    ))
}

/// One line of the `check` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SuiteItem {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

/// Runs the invariant suite. Figure-based items use the grid, time step,
/// scheme and initial datum of `cfg`; the oracle and order studies use
/// their own fixed setups.
pub fn check_suite(cfg: &RunConfig) -> Result<Vec<SuiteItem>> {
    let mut items = Vec::new();

    let c = MollifierKernel::standard_bump().normalization_constant();
    items.push(SuiteItem::new(
        "normalization_constant",
        (c - 2.2523).abs() <= 1e-3,
        format!("c = {c:.6}"),
    ));

    let agreement = free_heat_agreement()?;
    items.push(SuiteItem::new(
        "free_heat_oracle",
        agreement <= 0.02,
        format!("relative Linf = {agreement:.3e}"),
    ));
    let be = temporal_order_study(1.0)?;
    items.push(SuiteItem::new(
        "temporal_order_backward_euler",
        within(be.order, 0.8, 1.2),
        format!("order = {:.3}", be.order),
    ));
    let cn = temporal_order_study(0.5)?;
    items.push(SuiteItem::new(
        "temporal_order_crank_nicolson",
        within(cn.order, 1.7, 2.3),
        format!("order = {:.3}", cn.order),
    ));
    let sp = spatial_order_study()?;
    items.push(SuiteItem::new(
        "spatial_order",
        within(sp.order, 1.7, 2.3),
        format!("order = {:.3}", sp.order),
    ));

    let figures = [Figure::Fig1, Figure::Fig2, Figure::Fig3]
        .iter()
        .map(|&f| figure_experiments(f, cfg, None))
        .collect::<Result<Vec<_>>>()?;
    for (name, fig_ids, check_names) in [
        ("dissipation", &[0usize, 1][..], &["l2_contraction", "energy_dissipation"][..]),
        ("gronwall", &[2usize][..], &["gronwall_bound"][..]),
    ] {
        let checks: Vec<_> = fig_ids
            .iter()
            .flat_map(|&i| figures[i].checks.iter())
            .filter(|c| check_names.contains(&c.check_name.as_str()))
            .collect();
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| format!("{} [{}]", c.check_name, c.series_id))
            .collect();
        let worst = checks.iter().fold(0.0f64, |m, c| m.max(c.max_violation));
        items.push(SuiteItem::new(
            name,
            !checks.is_empty() && failed.is_empty(),
            if failed.is_empty() {
                format!("{} audits, worst violation {worst:.2e}", checks.len())
            } else {
                format!("failed: {}", failed.join(", "))
            },
        ));
    }
    let probes: Vec<_> = [&figures[0], &figures[2]]
        .iter()
        .flat_map(|r| r.verdicts.iter())
        .collect();
    let probe_failures: Vec<&str> = probes
        .iter()
        .filter(|v| !v.verdict.passed())
        .map(|v| v.name.as_str())
        .collect();
    items.push(SuiteItem::new(
        "cooling_heating",
        probe_failures.is_empty(),
        if probe_failures.is_empty() {
            format!("{} probe comparisons hold", probes.len())
        } else {
            format!("failed: {}", probe_failures.join(", "))
        },
    ));

    let (dirac, squared) = moderateness_exponents()?;
    items.push(SuiteItem::new(
        "moderateness",
        (dirac - 1.0).abs() <= 0.05 && (squared - 2.0).abs() <= 0.05,
        format!("Dirac {dirac:.4}, squared Dirac {squared:.4}"),
    ));

    for (moments, target, tol) in [(1usize, 2.0, 0.3), (3, 4.0, 0.4)] {
        let r = mollifier_order_experiment(&MollifierOrderConfig {
            moments,
            ..Default::default()
        })?;
        let order = r.fitted_exponents.get("mollifier_order").copied().unwrap_or(f64::NAN);
        items.push(SuiteItem::new(
            &format!("mollifier_order_A{moments}"),
            (order - target).abs() <= tol,
            format!("order = {order:.3}"),
        ));
    }

    let mut uniq = UniquenessConfig::default();
    uniq.run.domain = cfg.domain.clone();
    uniq.run.grid = cfg.grid.clone();
    uniq.run.u0 = cfg.u0.clone();
    let u = uniqueness_experiment(&uniq)?;
    let mut detail = String::new();
    for e in &u.decay_table {
        let _ = write!(detail, "D({}) = {:.3e}; ", e.epsilon, e.value);
    }
    items.push(SuiteItem::new(
        "uniqueness",
        u.passed(),
        format!("{detail}{}", u.verdicts[0].detail),
    ));

    let cons = consistency_experiment(&ConsistencyConfig::default())?;
    let order = cons
        .fitted_exponents
        .get("consistency_order")
        .copied()
        .unwrap_or(f64::NAN);
    items.push(SuiteItem::new(
        "consistency",
        cons.passed() && (order - 2.0).abs() <= 0.3,
        format!("order = {order:.3}"),
    ));

    let hash_run = || -> Result<Vec<String>> {
        let fr = super::figure_runs(Figure::Fig1, cfg)?;
        Ok(fr
            .runs
            .iter()
            .flat_map(|r| r.series.snapshots.iter())
            .map(|s| snapshot_csv(fr.grid.space(), &s.values))
            .collect())
    };
    items.push(SuiteItem::new(
        "determinism",
        hash_run()? == hash_run()?,
        "fig1 snapshots rerun bitwise".to_string(),
    ));

    Ok(items)
}
