use serde::Serialize;

use super::{flag_run, run_checks, solve_all, ExperimentReport};
use crate::artifacts::{snapshot_csv, snapshot_file_name, ArtifactSink};
use crate::config::RunConfig;
use crate::kernel::MollifierKernel;
use crate::potential::{regularize, OmegaSchedule, PotentialSpec, RegularizedPotential, Sign};
use crate::solver::{sample_initial_bump, solve, ProblemSpec, SolutionSeries, SpaceTimeGrid, SpatialGrid};
use crate::{Error, Result};

/// Final time of every figure run.
const FIGURE_T: f64 = 10.0;
/// Probe of the cooling comparison (the Dirac mass of Cases 2 and 3).
const COOLING_PROBE: f64 = 40.0;
/// Position of the negative Dirac mass and probe of the heating comparison.
const HEATING_PROBE: f64 = 30.0;
/// Reference values at or below this are too small for a heating ratio.
const HEATING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig1" => Some(Figure::Fig1),
            "fig2" => Some(Figure::Fig2),
            "fig3" => Some(Figure::Fig3),
            _ => None,
        }
    }

    pub fn snapshot_times(self) -> Vec<f64> {
        match self {
            Figure::Fig1 => vec![2.0, 6.0, 10.0],
            Figure::Fig2 => vec![0.01, 1.0, 10.0],
            Figure::Fig3 => vec![1.0, 2.0, 4.0, 6.0, 10.0],
        }
    }

    pub fn epsilons(self) -> Vec<f64> {
        match self {
            Figure::Fig1 | Figure::Fig2 => vec![0.2],
            Figure::Fig3 => vec![0.8, 0.5, 0.2],
        }
    }
}

/// One solved case of a figure.
#[derive(Debug, Clone)]
pub struct FigureRun {
    /// `case1`..`case3`, or `reference` for the potential-free run of fig3.
    pub label: String,
    pub epsilon: f64,
    pub potential: RegularizedPotential,
    pub series: SolutionSeries,
    /// Whether snapshots of this run are emitted as CSV.
    pub emitted: bool,
}

#[derive(Debug, Clone)]
pub struct FigureRuns {
    pub figure: Figure,
    pub grid: SpaceTimeGrid,
    pub u0: Vec<f64>,
    pub runs: Vec<FigureRun>,
}

impl FigureRuns {
    pub fn run(&self, label: &str, epsilon: f64) -> Option<&FigureRun> {
        self.runs
            .iter()
            .find(|r| r.label == label && r.epsilon == epsilon)
    }
}

struct CaseSpec {
    label: &'static str,
    spec: PotentialSpec,
    epsilon: f64,
    emitted: bool,
}

fn cases(figure: Figure, strength: f64) -> Result<Vec<CaseSpec>> {
    let plus = Sign::Positive;
    let case = |label, spec, epsilon| CaseSpec {
        label,
        spec,
        epsilon,
        emitted: true,
    };
    Ok(match figure {
        Figure::Fig1 => vec![
            case("case1", PotentialSpec::zero(plus), 0.2),
            case("case2", PotentialSpec::dirac(COOLING_PROBE, strength, plus)?, 0.2),
            case("case3", PotentialSpec::dirac_squared(COOLING_PROBE, strength, plus)?, 0.2),
        ],
        Figure::Fig2 => vec![
            case("case2", PotentialSpec::dirac(COOLING_PROBE, strength, plus)?, 0.2),
            case("case3", PotentialSpec::dirac_squared(COOLING_PROBE, strength, plus)?, 0.2),
        ],
        Figure::Fig3 => {
            let mut v = vec![CaseSpec {
                label: "reference",
                spec: PotentialSpec::zero(Sign::Negative),
                epsilon: 0.8,
                emitted: false,
            }];
            for eps in figure.epsilons() {
                v.push(case(
                    "negative_dirac",
                    PotentialSpec::dirac(HEATING_PROBE, strength, Sign::Negative)?,
                    eps,
                ));
            }
            v
        }
    })
}

/// Solves the cases of a figure on the grid, time step, scheme, kernel,
/// strength and initial bump of `cfg`; times, positions and epsilons are
/// those of the figure. The omega schedule is always Linear.
pub fn figure_runs(figure: Figure, cfg: &RunConfig) -> Result<FigureRuns> {
    cfg.validate()?;
    let space = cfg.spatial_grid()?;
    let grid = SpaceTimeGrid::new(space.clone(), cfg.time.dt, FIGURE_T, figure.snapshot_times())?;
    let scheme = cfg.scheme()?;
    let kernel: MollifierKernel = cfg.kernel()?;
    let u0 = sample_initial_bump(cfg.u0.center, &space)?;
    let specs = cases(figure, cfg.potential.strength)?;
    let runs = solve_all(
        &specs,
        |c| c.epsilon,
        |c| {
            let potential = regularize(&c.spec, &kernel, OmegaSchedule::Linear, c.epsilon, &space)?;
            let p = ProblemSpec::new(grid.clone(), scheme, potential, u0.clone())?;
            let series = solve(&p)?;
            Ok(FigureRun {
                label: c.label.to_string(),
                epsilon: c.epsilon,
                potential: p.potential,
                series,
                emitted: c.emitted,
            })
        },
    )?;
    Ok(FigureRuns {
        figure,
        grid,
        u0,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    /// Runs ordered from the weakest to the strongest positive potential;
    /// the values must not increase along the list.
    Cooling,
    /// `[reference, heated]`; the ratio heated/reference must exceed one.
    Heating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeOutcome {
    Holds,
    Violated,
    /// All values equal.
    Neutral,
    /// The heating reference is at or below the floor.
    Skipped,
}

impl ProbeOutcome {
    pub fn passed(self) -> bool {
        self != ProbeOutcome::Violated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeComparison {
    pub requested_x: f64,
    pub x: f64,
    /// The probe was not a grid node and was moved to the nearest one.
    pub snapped: bool,
    pub time: f64,
    pub values: Vec<(String, f64)>,
    pub ratio: Option<f64>,
    pub outcome: ProbeOutcome,
}

/// Compares `u(x_probe, t)` across runs sharing `grid` and snapshot times.
pub fn cooling_metric(
    runs: &[(&str, &SolutionSeries)],
    grid: &SpatialGrid,
    x_probe: f64,
    t: f64,
    mode: ProbeMode,
) -> Result<ProbeComparison> {
    let (i, snapped) = grid.nearest(x_probe).ok_or_else(|| Error::Placement {
        what: "probe".into(),
        position: x_probe,
        a: grid.a(),
        b: grid.b(),
    })?;
    let mut values = Vec::with_capacity(runs.len());
    for (label, series) in runs {
        let snap = series
            .snapshot_at(t)
            .ok_or_else(|| Error::Domain(format!("run {label} has no snapshot at t = {t}")))?;
        if snap.values.len() != grid.nx() {
            return Err(Error::LengthMismatch {
                what: "probe run",
                expected: grid.nx(),
                got: snap.values.len(),
            });
        }
        values.push((label.to_string(), snap.values[i]));
    }
    let all_equal = values.windows(2).all(|w| w[0].1 == w[1].1);
    let (ratio, outcome) = match mode {
        ProbeMode::Cooling => {
            let outcome = if all_equal {
                ProbeOutcome::Neutral
            } else if values.windows(2).all(|w| w[1].1 <= w[0].1) {
                ProbeOutcome::Holds
            } else {
                ProbeOutcome::Violated
            };
            (None, outcome)
        }
        ProbeMode::Heating => {
            if values.len() != 2 {
                return Err(Error::Domain(format!(
                    "heating comparison needs 2 runs, got {}",
                    values.len()
                )));
            }
            let (reference, heated) = (values[0].1, values[1].1);
            if reference <= HEATING_FLOOR {
                (None, ProbeOutcome::Skipped)
            } else {
                let r = heated / reference;
                let outcome = if all_equal {
                    ProbeOutcome::Neutral
                } else if r > 1.0 {
                    ProbeOutcome::Holds
                } else {
                    ProbeOutcome::Violated
                };
                (Some(r), outcome)
            }
        }
    };
    Ok(ProbeComparison {
        requested_x: x_probe,
        x: grid.x(i),
        snapped,
        time: t,
        values,
        ratio,
        outcome,
    })
}

/// Runs a figure, audits every run, computes the probe metrics and, with a
/// sink, writes the snapshot CSVs and `{fig}/report.json`.
pub fn figure_experiments(figure: Figure, cfg: &RunConfig, sink: Option<&mut ArtifactSink>) -> Result<ExperimentReport> {
    let fr = figure_runs(figure, cfg)?;
    let space = fr.grid.space();
    let name = figure.name();
    let mut report = ExperimentReport::new(name, cfg.echo());

    for run in &fr.runs {
        let id = format!("{}/eps={}", run.label, run.epsilon);
        report
            .checks
            .extend(run_checks(&run.series, &run.potential, &fr.u0, &id)?);
        flag_run(&mut report, &run.series, &run.potential);
    }

    let series = |label: &str, eps: f64| &fr.run(label, eps).expect("figure case").series;
    match figure {
        Figure::Fig1 | Figure::Fig2 => {
            let labels: Vec<&str> = fr.runs.iter().map(|r| r.label.as_str()).collect();
            let runs: Vec<(&str, &SolutionSeries)> = labels.iter().map(|l| (*l, series(l, 0.2))).collect();
            for t in figure.snapshot_times() {
                let cmp = cooling_metric(&runs, space, COOLING_PROBE, t, ProbeMode::Cooling)?;
                for (label, v) in &cmp.values {
                    report.metrics.insert(format!("u_{label}_x40_t{t}"), *v);
                }
                if figure == Figure::Fig1 {
                    report.add_verdict(
                        format!("cooling_t{t}"),
                        cmp.outcome.passed(),
                        format!("{:?} at x = {}", cmp.outcome, cmp.x),
                    );
                }
            }
        }
        Figure::Fig3 => {
            let reference = series("reference", 0.8);
            for eps in figure.epsilons() {
                let heated = series("negative_dirac", eps);
                for t in figure.snapshot_times() {
                    let cmp = cooling_metric(
                        &[("reference", reference), ("negative_dirac", heated)],
                        space,
                        HEATING_PROBE,
                        t,
                        ProbeMode::Heating,
                    )?;
                    report
                        .metrics
                        .insert(format!("u_reference_x30_t{t}"), cmp.values[0].1);
                    report
                        .metrics
                        .insert(format!("u_eps{eps}_x30_t{t}"), cmp.values[1].1);
                    if let Some(r) = cmp.ratio {
                        report.metrics.insert(format!("ratio_eps{eps}_x30_t{t}"), r);
                    }
                    report.add_verdict(
                        format!("heating_eps{eps}_t{t}"),
                        cmp.outcome.passed(),
                        format!("{:?}", cmp.outcome),
                    );
                }
            }
        }
    }

    if let Some(sink) = sink {
        let first_eps = figure.epsilons()[0];
        let path = format!("{name}/{}", snapshot_file_name(0.0, first_eps));
        report
            .artifacts
            .push(sink.write(&path, snapshot_csv(space, &fr.u0).as_bytes())?);
        for run in fr.runs.iter().filter(|r| r.emitted) {
            let dir = match figure {
                Figure::Fig3 => name.to_string(),
                _ => format!("{name}/{}", run.label),
            };
            for t in figure.snapshot_times() {
                let snap = run.series.snapshot_at(t).expect("requested snapshot");
                let path = format!("{dir}/{}", snapshot_file_name(t, run.epsilon));
                report
                    .artifacts
                    .push(sink.write(&path, snapshot_csv(space, &snap.values).as_bytes())?);
            }
        }
        let report_path = format!("{name}/report.json");
        report.artifacts.push(report_path.clone());
        sink.write_json(&report_path, &report)?;
    }
    Ok(report)
}
