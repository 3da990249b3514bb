//! Command-line interface.
//!
//! Outputs go to `--out`, then `$QCLOSE_OUT`, then the current directory.
//! Exit codes: 0 on success, 1 on runtime failures (bad config, I/O), 2 on
//! usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use crate::config::load_model;
use crate::experiments::builtin_experiment;
use crate::figures::emit_figures;
use crate::model::ModelSpec;
use crate::report::{experiment_tables, run_comparison_with, write_atomic, HarnessError, Quantity};
use crate::simulator::simulate_ensemble;
use crate::solvers::{
    adjusted_moments, classic_diffusion, classic_fluid, solver_grid, SolverConfig,
};

#[derive(Parser)]
#[command(
    name = "qclose",
    version,
    about = "Mean and covariance trajectories of time-varying multi-server queues \
             with abandonments and retrials: exact simulation, the measure-zero \
             fluid/diffusion, and the Gaussian-closure moment system"
)]
struct Cli {
    /// Output directory (default: $QCLOSE_OUT, then `.`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Classic,
    Adjusted,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble simulation and write its statistics CSV
    Simulate {
        /// Model configuration file
        config: PathBuf,
        /// Number of replications
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        /// Ensemble seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sampling grid spacing (time units)
        #[arg(long, default_value_t = 0.05)]
        grid: f64,
    },
    /// Integrate the fluid mean path
    Fluid {
        config: PathBuf,
        /// RK4 substep bound
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Output grid spacing
        #[arg(long, default_value_t = 0.05)]
        grid: f64,
    },
    /// Integrate mean and covariance by either method
    Diffusion {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Classic)]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 0.05)]
        grid: f64,
    },
    /// Compare both methods against simulation on a shared grid
    #[command(group(ArgGroup::new("model").required(true).args(["config", "exp"])))]
    Compare {
        /// Model configuration file
        config: Option<PathBuf>,
        /// Built-in experiment id (1..=10)
        #[arg(long)]
        exp: Option<usize>,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Regenerate the per-quantity difference tables for the built-in experiments
    Tables {
        /// Experiment ids: a range `1-10` or a list `1,3,7`
        #[arg(long, default_value = "1-10")]
        exps: String,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Emit per-quantity comparison CSVs and SVG charts for one experiment
    Figures {
        /// Built-in experiment id (1..=10)
        #[arg(long)]
        exp: usize,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Runs the CLI against an argument vector and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("QCLOSE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match execute(cli.command, &out_dir) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out).map_err(|source| HarnessError::Io {
        path: out.display().to_string(),
        source,
    })
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

fn load(config: &Path) -> Result<ModelSpec, HarnessError> {
    Ok(load_model(config)?)
}

fn emit(out: &Path, name: &str, contents: &[u8]) -> Result<(), HarnessError> {
    let path = out.join(name);
    write_atomic(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(command: Command, out: &Path) -> Result<(), HarnessError> {
    ensure_out_dir(out)?;
    match command {
        Command::Simulate {
            config,
            reps,
            seed,
            grid,
        } => {
            let spec = load(&config)?;
            let sample_grid = solver_grid(&spec, grid);
            let stats = simulate_ensemble(&spec, reps, seed, &sample_grid)?;
            let mut buf = Vec::new();
            stats.write_csv(&mut buf).expect("in-memory write");
            emit(out, &format!("{}_sim.csv", stem_of(&config)), &buf)
        }
        Command::Fluid { config, step, grid } => {
            let spec = load(&config)?;
            let cfg = SolverConfig {
                step,
                output_dt: grid,
            };
            let fluid = classic_fluid(&spec, &cfg)?;
            let mut buf = Vec::new();
            fluid.write_csv(&mut buf).expect("in-memory write");
            emit(out, &format!("{}_fluid.csv", stem_of(&config)), &buf)
        }
        Command::Diffusion {
            config,
            method,
            step,
            grid,
        } => {
            let spec = load(&config)?;
            let cfg = SolverConfig {
                step,
                output_dt: grid,
            };
            let (name, trajectory) = match method {
                MethodArg::Classic => {
                    let fluid = classic_fluid(&spec, &cfg)?;
                    (
                        format!("{}_diffusion_classic.csv", stem_of(&config)),
                        classic_diffusion(&spec, &cfg, &fluid)?,
                    )
                }
                MethodArg::Adjusted => (
                    format!("{}_diffusion_adjusted.csv", stem_of(&config)),
                    adjusted_moments(&spec, &cfg)?,
                ),
            };
            let mut buf = Vec::new();
            trajectory.write_csv(&mut buf).expect("in-memory write");
            emit(out, &name, &buf)
        }
        Command::Compare {
            config,
            exp,
            reps,
            seed,
        } => {
            let (spec, stem) = match (config, exp) {
                (Some(path), None) => (load(&path)?, stem_of(&path)),
                (None, Some(id)) => (builtin_experiment(id)?, format!("exp{id}")),
                _ => unreachable!("clap enforces exactly one model source"),
            };
            let comparison =
                run_comparison_with(&spec, reps, seed, &SolverConfig::default(), None)?;
            let mut buf = Vec::new();
            comparison.sim.write_csv(&mut buf).expect("in-memory write");
            emit(out, &format!("{stem}_sim.csv"), &buf)?;
            buf = Vec::new();
            comparison
                .adjusted
                .write_csv(&mut buf)
                .expect("in-memory write");
            emit(out, &format!("{stem}_adjusted.csv"), &buf)?;
            buf = Vec::new();
            comparison
                .measure_zero
                .write_csv(&mut buf)
                .expect("in-memory write");
            emit(out, &format!("{stem}_measure_zero.csv"), &buf)?;
            buf = Vec::new();
            comparison
                .report
                .write_csv(&mut buf)
                .expect("in-memory write");
            emit(out, &format!("{stem}_report.csv"), &buf)
        }
        Command::Tables { exps, reps, seed } => {
            let ids = parse_experiment_ids(&exps)?;
            let tables = experiment_tables(&ids, reps, seed)?;
            for q in Quantity::ALL {
                let mut buf = Vec::new();
                tables.write_csv(q, &mut buf).expect("in-memory write");
                emit(out, &format!("table_{}.csv", q.label()), &buf)?;
            }
            Ok(())
        }
        Command::Figures { exp, reps, seed } => {
            let spec = builtin_experiment(exp)?;
            let comparison =
                run_comparison_with(&spec, reps, seed, &SolverConfig::default(), None)?;
            let files = emit_figures(out, &format!("exp{exp}"), &comparison)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn parse_experiment_ids(text: &str) -> Result<Vec<usize>, HarnessError> {
    let bad = |msg: String| HarnessError::Invalid(msg);
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once('-') {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad experiment range `{text}`")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad experiment range `{text}`")))?;
        if lo == 0 || hi < lo {
            return Err(bad(format!("bad experiment range `{text}`")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("bad experiment id `{part}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn missing_config_file_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        assert_eq!(cli(&["qclose", "fluid", "missing.cfg", "--out", &out]), 1);
    }

    #[test]
    fn unknown_subcommand_exits_two() {
        assert_eq!(cli(&["qclose", "frobnicate"]), 2);
        assert_eq!(cli(&["qclose", "fluid", "x.cfg", "--bogus-flag"]), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(cli(&["qclose", "--help"]), 0);
    }

    #[test]
    fn compare_requires_exactly_one_model_source() {
        assert_eq!(cli(&["qclose", "compare"]), 2);
        assert_eq!(cli(&["qclose", "compare", "a.cfg", "--exp", "7"]), 2);
    }

    #[test]
    fn bad_config_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        std::fs::write(&cfg, "lambda = one\n").unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        assert_eq!(
            cli(&["qclose", "fluid", cfg.to_str().unwrap(), "--out", &out]),
            1
        );
    }

    #[test]
    fn compare_on_a_tiny_model_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("tiny.cfg");
        std::fs::write(
            &cfg,
            "lambda = 2\nmu1 = 1\nmu2 = 0.2\nbeta = 2\np = 0.5\nn = 3\nx1_0 = 0\nx2_0 = 0\nhorizon = 8\n",
        )
        .unwrap();
        let out = dir.path().join("out");
        let code = cli(&[
            "qclose",
            "compare",
            cfg.to_str().unwrap(),
            "--reps",
            "20",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        for name in [
            "tiny_sim.csv",
            "tiny_adjusted.csv",
            "tiny_measure_zero.csv",
            "tiny_report.csv",
        ] {
            assert!(out.join(name).exists(), "{name} missing");
        }
    }

    #[test]
    fn experiment_id_parsing() {
        assert_eq!(
            parse_experiment_ids("1-10").unwrap(),
            (1..=10).collect::<Vec<_>>()
        );
        assert_eq!(parse_experiment_ids("7").unwrap(), vec![7]);
        assert_eq!(parse_experiment_ids("1,3,5").unwrap(), vec![1, 3, 5]);
        assert!(parse_experiment_ids("0-3").is_err());
        assert!(parse_experiment_ids("x").is_err());
    }
}
