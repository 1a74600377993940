//! Command-line front end: `run`, `sweep`, `check` and `figures`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::artifacts::{snapshot_csv, snapshot_file_name, ArtifactSink};
use crate::config::{parse_config, EpsilonSetting, RunConfig};
use crate::harness::{
    check_suite, figure_experiments, run_checks, run_epsilon_net, ExperimentReport, Figure, RunSetup,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "vwh", version, about = "Heat equation with singular potentials")]
pub struct Cli {
    /// Configuration document (dotted `key = value` lines); defaults if omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir` and `VWH_OUTPUT_DIR`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single solve at one epsilon with diagnostics and CSV snapshots.
    Run,
    /// Solve over the epsilon list and fit the moderateness exponents.
    Sweep,
    /// Run the invariant suite and print a verdict table.
    Check,
    /// Reproduce one of the figure experiments.
    Figures {
        #[arg(value_enum)]
        which: FigureArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig1 => Figure::Fig1,
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
        }
    }
}

/// Result of a dispatched command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub failures: Vec<String>,
    pub output_dir: Option<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_config(&text)
        }
    }
}

fn print_report(out: &mut impl Write, report: &ExperimentReport) -> Result<()> {
    let io = |e| Error::io("<stdout>", e);
    for c in &report.checks {
        writeln!(
            out,
            "{} {} [{}] violation {:.3e}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.check_name,
            c.series_id,
            c.max_violation
        )
        .map_err(io)?;
    }
    for v in &report.verdicts {
        writeln!(
            out,
            "{} {} {}",
            if v.verdict.passed() { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        )
        .map_err(io)?;
    }
    for (name, value) in &report.fitted_exponents {
        writeln!(out, "exponent {name} = {value:.6}").map_err(io)?;
    }
    for flag in &report.flags {
        writeln!(out, "note: {flag}").map_err(io)?;
    }
    Ok(())
}

/// Executes a parsed command line, writing artifacts under the output
/// directory and a human-readable summary to `out`.
pub fn dispatch(cli: &Cli, out: &mut impl Write) -> Result<Outcome> {
    let cfg = load_config(cli.config.as_deref())?;
    let root = cli
        .output
        .clone()
        .unwrap_or_else(|| cfg.resolved_output_dir());
    let io = |e| Error::io("<stdout>", e);

    let failures = match &cli.command {
        Command::Run => {
            let eps = match &cfg.epsilon {
                EpsilonSetting::Single(e) => *e,
                EpsilonSetting::List(_) => {
                    return Err(Error::ConfigValue {
                        key: "epsilon".into(),
                        message: "`run` needs a single epsilon; use `sweep` for a list".into(),
                    })
                }
            };
            let setup = RunSetup::from_config(&cfg)?;
            let run = setup.solve_at(eps)?;
            let mut report = ExperimentReport::new("run", cfg.echo());
            report
                .checks
                .extend(run_checks(&run.series, &run.potential, &setup.u0, &format!("eps={eps}"))?);
            report.metrics.insert("sup_q".into(), run.potential.sup_norm);
            report.metrics.insert("omega".into(), run.potential.omega);
            let mut sink = ArtifactSink::new(&root)?;
            let space = setup.space();
            for snap in &run.series.snapshots {
                let path = format!("run/{}", snapshot_file_name(snap.requested_time, eps));
                report
                    .artifacts
                    .push(sink.write(&path, snapshot_csv(space, &snap.values).as_bytes())?);
            }
            let mut q_csv = Vec::new();
            run.potential
                .write_csv(space, &mut q_csv)
                .map_err(|e| Error::io(root.join("run"), e))?;
            report
                .artifacts
                .push(sink.write(&format!("run/q_eps{eps}.csv"), &q_csv)?);
            report.artifacts.push("run/report.json".into());
            sink.write_json("run/report.json", &report)?;
            sink.finish()?;
            print_report(out, &report)?;
            report.failures()
        }
        Command::Sweep => {
            let (net, mut report) = run_epsilon_net(&cfg)?;
            let mut sink = ArtifactSink::new(&root)?;
            let space = net.grid.space();
            for run in &net.runs {
                for snap in &run.series.snapshots {
                    let path = format!("sweep/{}", snapshot_file_name(snap.requested_time, run.epsilon));
                    report
                        .artifacts
                        .push(sink.write(&path, snapshot_csv(space, &snap.values).as_bytes())?);
                }
            }
            report.artifacts.push("sweep/report.json".into());
            sink.write_json("sweep/report.json", &report)?;
            sink.finish()?;
            print_report(out, &report)?;
            for e in &report.decay_table {
                writeln!(
                    out,
                    "eps {} omega {} sup_t |u| = {:.6e}",
                    e.epsilon, e.omega, e.value
                )
                .map_err(io)?;
            }
            report.failures()
        }
        Command::Check => {
            let items = check_suite(&cfg)?;
            let width = items.iter().map(|i| i.name.len()).max().unwrap_or(0);
            for item in &items {
                writeln!(
                    out,
                    "{} {:width$}  {}",
                    if item.passed { "PASS" } else { "FAIL" },
                    item.name,
                    item.detail
                )
                .map_err(io)?;
            }
            let mut sink = ArtifactSink::new(&root)?;
            sink.write_json("check/report.json", &items)?;
            sink.finish()?;
            items
                .iter()
                .filter(|i| !i.passed)
                .map(|i| i.name.clone())
                .collect()
        }
        Command::Figures { which } => {
            let mut sink = ArtifactSink::new(&root)?;
            let report = figure_experiments((*which).into(), &cfg, Some(&mut sink))?;
            sink.finish()?;
            print_report(out, &report)?;
            writeln!(
                out,
                "{} artifacts written under {}",
                report.artifacts.len(),
                root.display()
            )
            .map_err(io)?;
            report.failures()
        }
    };
    Ok(Outcome {
        failures,
        output_dir: Some(root),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["vwh", "figures", "fig2", "--output", "x"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Figures {
                which: FigureArg::Fig2
            }
        ));
        assert_eq!(cli.output, Some(PathBuf::from("x")));
        assert!(Cli::try_parse_from(["vwh", "plot"]).is_err());
        assert!(Cli::try_parse_from(["vwh", "figures", "fig4"]).is_err());
    }

    #[test]
    fn run_rejects_epsilon_list() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.toml");
        std::fs::write(&cfg_path, "epsilon = [0.5, 0.2, 0.1]\n").unwrap();
        let cli = Cli {
            config: Some(cfg_path),
            output: Some(dir.path().join("out")),
            command: Command::Run,
        };
        assert!(dispatch(&cli, &mut Vec::new()).is_err());
    }
}
