//! Experiment orchestration: epsilon nets, decay studies, kernel-order
//! measurements and the figure runs with their probe metrics.

mod experiments;
mod figures;
mod suite;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

pub use experiments::{
    consistency_experiment, mollifier_order_experiment, uniqueness_experiment, ConsistencyConfig,
    MollifierOrderConfig, SmoothProfile, UniquenessConfig,
};
pub use figures::{
    cooling_metric, figure_experiments, figure_runs, Figure, FigureRun, FigureRuns, ProbeComparison,
    ProbeMode, ProbeOutcome,
};
pub use suite::{
    check_suite, free_heat_agreement, moderateness_exponents, spatial_order_study, temporal_order_study,
    OrderStudy, SuiteItem,
};

use crate::config::RunConfig;
use crate::diagnostics::{
    check_apriori_bound, check_energy_dissipation, check_gronwall_bound, check_l2_contraction, EnergyReport,
    Verdict,
};
use crate::kernel::MollifierKernel;
use crate::potential::{
    fit_moderateness_exponent, log_log_exponent, regularize, OmegaSchedule, PotentialSpec, RegularizedPotential,
    Sign,
};
use crate::solver::{solve, ProblemSpec, SchemeConfig, SolutionSeries, SpaceTimeGrid, SpatialGrid};
use crate::{Error, Result};

/// One row of a decay table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEntry {
    pub epsilon: f64,
    pub omega: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedVerdict {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    pub fitted_exponents: BTreeMap<String, f64>,
    pub decay_table: Vec<DecayEntry>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<EnergyReport>,
    pub verdicts: Vec<NamedVerdict>,
    pub flags: Vec<String>,
    pub artifacts: Vec<String>,
    /// `(epsilon, grid function)` pairs, e.g. `U_eps(T)` of the uniqueness study.
    #[serde(skip)]
    pub difference_fields: Option<Vec<(f64, Vec<f64>)>>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            config,
            fitted_exponents: BTreeMap::new(),
            decay_table: Vec::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            verdicts: Vec::new(),
            flags: Vec::new(),
            artifacts: Vec::new(),
            difference_fields: None,
        }
    }

    pub fn add_verdict(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.verdicts.push(NamedVerdict {
            name: name.into(),
            verdict: Verdict::from_bool(ok),
            detail: detail.into(),
        });
    }

    pub fn flag(&mut self, message: impl Into<String>) {
        let message = message.into();
        if !self.flags.contains(&message) {
            self.flags.push(message);
        }
    }

    /// Names of failed checks and verdicts.
    pub fn failures(&self) -> Vec<String> {
        let checks = self
            .checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| format!("{} [{}]", c.check_name, c.series_id));
        let verdicts = self
            .verdicts
            .iter()
            .filter(|v| !v.verdict.passed())
            .map(|v| v.name.clone());
        checks.chain(verdicts).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn decay_value(&self, epsilon: f64) -> Option<f64> {
        self.decay_table
            .iter()
            .find(|e| e.epsilon == epsilon)
            .map(|e| e.value)
    }
}

/// Everything shared by the runs of one configuration.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub grid: SpaceTimeGrid,
    pub scheme: SchemeConfig,
    pub kernel: MollifierKernel,
    pub spec: PotentialSpec,
    pub schedule: OmegaSchedule,
    pub u0: Vec<f64>,
}

impl RunSetup {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.time_grid()?;
        let spec = cfg.potential_spec(grid.space())?;
        let u0 = cfg.initial_datum(grid.space())?;
        Ok(Self {
            scheme: cfg.scheme()?,
            kernel: cfg.kernel()?,
            schedule: cfg.schedule(),
            spec,
            u0,
            grid,
        })
    }

    pub fn space(&self) -> &SpatialGrid {
        self.grid.space()
    }

    pub fn regularize(&self, eps: f64) -> Result<RegularizedPotential> {
        regularize(&self.spec, &self.kernel, self.schedule, eps, self.space())
    }

    pub fn problem(&self, potential: RegularizedPotential, u0: Vec<f64>) -> Result<ProblemSpec> {
        ProblemSpec::new(self.grid.clone(), self.scheme, potential, u0)
    }

    pub fn solve_at(&self, eps: f64) -> Result<NetRun> {
        let potential = self.regularize(eps)?;
        let p = self.problem(potential, self.u0.clone())?;
        let series = solve(&p)?;
        Ok(NetRun {
            epsilon: eps,
            potential: p.potential,
            series,
        })
    }
}

#[derive(Debug, Clone)]
pub struct NetRun {
    pub epsilon: f64,
    pub potential: RegularizedPotential,
    pub series: SolutionSeries,
}

impl NetRun {
    /// `sup_t |u(t)|_{L2}` over every step.
    pub fn sup_norm(&self) -> f64 {
        self.series.norm_trace.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Solutions of the regularized problems over a decreasing epsilon net.
#[derive(Debug, Clone)]
pub struct EpsilonNet {
    pub epsilons: Vec<f64>,
    pub schedule: OmegaSchedule,
    pub grid: SpaceTimeGrid,
    pub scheme: SchemeConfig,
    pub kernel: MollifierKernel,
    pub spec: PotentialSpec,
    pub runs: Vec<NetRun>,
}

impl EpsilonNet {
    pub fn run(&self, eps: f64) -> Option<&NetRun> {
        self.runs.iter().find(|r| r.epsilon == eps)
    }
}

/// Estimate audits appropriate to the sign of the potential.
pub fn run_checks(
    series: &SolutionSeries,
    potential: &RegularizedPotential,
    u0: &[f64],
    id: &str,
) -> Result<Vec<EnergyReport>> {
    Ok(match potential.sign() {
        Sign::Positive => vec![
            check_l2_contraction(series).with_id(id),
            check_energy_dissipation(series, potential, series.dx)?.with_id(id),
            check_apriori_bound(series, potential, u0).with_id(id),
        ],
        Sign::Negative => vec![check_gronwall_bound(series, potential).with_id(id)],
    })
}

pub(crate) fn flag_run(report: &mut ExperimentReport, series: &SolutionSeries, potential: &RegularizedPotential) {
    if series.flags.diagonal_dominance_lost {
        report.flag(format!(
            "eps={}: implicit matrix lost diagonal dominance",
            potential.epsilon
        ));
    }
    if series.flags.kernel_under_resolved || potential.under_resolved {
        report.flag(format!(
            "eps={}: kernel support narrower than dx",
            potential.epsilon
        ));
    }
}

/// Solves every member of `runs` in parallel, returning results in input
/// order; the first failure (in that order) is reported with its epsilon.
pub(crate) fn solve_all<T: Sync, R: Send>(
    items: &[T],
    epsilon_of: impl Fn(&T) -> f64 + Sync,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let results: Vec<Result<R>> = items.par_iter().map(&f).collect();
    results
        .into_iter()
        .zip(items)
        .map(|(r, item)| {
            r.map_err(|e| Error::Net {
                epsilon: epsilon_of(item),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Solves the configuration at every epsilon of its net and fits the
/// moderateness exponent of `sup_t |u_eps(t)|` against `log(1/omega)`.
pub fn run_epsilon_net(cfg: &RunConfig) -> Result<(EpsilonNet, ExperimentReport)> {
    let epsilons = cfg.epsilon.values();
    if epsilons.len() < 3 {
        return Err(Error::InsufficientData {
            got: epsilons.len(),
            need: 3,
        });
    }
    let setup = RunSetup::from_config(cfg)?;
    let runs = solve_all(&epsilons, |e| *e, |&e| setup.solve_at(e))?;

    let mut report = ExperimentReport::new("epsilon_net", cfg.echo());
    let omegas: Vec<f64> = runs.iter().map(|r| r.potential.omega).collect();
    let sups: Vec<f64> = runs.iter().map(NetRun::sup_norm).collect();
    let spread = sups.iter().fold(0.0f64, |m, s| m.max((s - sups[0]).abs()));
    let solution_exponent = if spread == 0.0 {
        0.0
    } else {
        log_log_exponent(&omegas, &sups)?.0
    };
    report
        .fitted_exponents
        .insert("solution".into(), solution_exponent);

    let potentials: Vec<RegularizedPotential> = runs.iter().map(|r| r.potential.clone()).collect();
    let fit = fit_moderateness_exponent(&potentials)?;
    report.fitted_exponents.insert("potential".into(), fit.exponent);
    report
        .metrics
        .insert("potential_r_squared".into(), fit.r_squared);

    for (run, (&omega, &sup)) in runs.iter().zip(omegas.iter().zip(&sups)) {
        report.decay_table.push(DecayEntry {
            epsilon: run.epsilon,
            omega,
            value: sup,
        });
        let id = format!("eps={}", run.epsilon);
        report
            .checks
            .extend(run_checks(&run.series, &run.potential, &setup.u0, &id)?);
        flag_run(&mut report, &run.series, &run.potential);
    }
    if setup.spec.sign == Sign::Negative {
        report.flag("negative potential: growth controlled only by the Gronwall factor");
    }

    let net = EpsilonNet {
        epsilons,
        schedule: setup.schedule,
        grid: setup.grid,
        scheme: setup.scheme,
        kernel: setup.kernel,
        spec: setup.spec,
        runs,
    };
    Ok((net, report))
}
