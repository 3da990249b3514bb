//! Comparison of both analytic methods against simulation, and the
//! per-quantity difference tables.
//!
//! Everything runs on one shared grid: the ensemble, the fluid, the
//! measure-zero covariance, and the adjusted moments. Differences are
//! reported per quantity at the reporting times (integers 6..=15 by
//! default), both absolute and as percentages relative to simulation with a
//! guard against near-zero denominators.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::experiments::{builtin_experiment, ExperimentError};
use crate::model::ModelSpec;
use crate::rk4::SolverError;
use crate::simulator::{simulate_ensemble, standard_errors, EnsembleStats, SimError};
use crate::solvers::{
    adjusted_moments, classic_diffusion, classic_fluid, solver_grid, Method, MomentTrajectory,
    SolverConfig,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Relative differences divide by `max(|sim|, REL_EPSILON)` so identically
/// zero quantities report zero difference instead of blowing up.
pub const REL_EPSILON: f64 = 1.0;

/// The five reported quantities, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    MeanX1,
    MeanX2,
    VarX1,
    CovX1X2,
    VarX2,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::MeanX1,
        Quantity::MeanX2,
        Quantity::VarX1,
        Quantity::CovX1X2,
        Quantity::VarX2,
    ];

    pub fn index(self) -> usize {
        match self {
            Quantity::MeanX1 => 0,
            Quantity::MeanX2 => 1,
            Quantity::VarX1 => 2,
            Quantity::CovX1X2 => 3,
            Quantity::VarX2 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quantity::MeanX1 => "mean_x1",
            Quantity::MeanX2 => "mean_x2",
            Quantity::VarX1 => "var_x1",
            Quantity::CovX1X2 => "cov_x1x2",
            Quantity::VarX2 => "var_x2",
        }
    }

    fn pick(self, mean: &[f64; 2], cov: &[[f64; 2]; 2]) -> f64 {
        match self {
            Quantity::MeanX1 => mean[0],
            Quantity::MeanX2 => mean[1],
            Quantity::VarX1 => cov[0][0],
            Quantity::CovX1X2 => cov[0][1],
            Quantity::VarX2 => cov[1][1],
        }
    }

    pub fn from_trajectory(self, tr: &MomentTrajectory, i: usize) -> f64 {
        self.pick(&tr.mean[i], &tr.cov[i])
    }

    pub fn from_stats(self, st: &EnsembleStats, i: usize) -> f64 {
        self.pick(&st.mean[i], &st.cov[i])
    }
}

/// Per-method differences from simulation: `[quantity][report time]`.
#[derive(Debug, Clone)]
pub struct MethodDiffs {
    pub method: Method,
    pub abs: [Vec<f64>; 5],
    pub rel: [Vec<f64>; 5],
}

/// Differences of both methods from simulation at the reporting times.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// Simulation values per quantity at the reporting times.
    pub sim: [Vec<f64>; 5],
    /// Simulation standard errors per quantity; the covariance entries are
    /// absent when the replication count is too small.
    pub sim_se: [Option<Vec<f64>>; 5],
    pub adjusted: MethodDiffs,
    pub measure_zero: MethodDiffs,
}

/// Full comparison bundle: the report plus the curves it came from.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub sim: EnsembleStats,
    /// Fluid mean with the measure-zero covariance.
    pub measure_zero: MomentTrajectory,
    pub adjusted: MomentTrajectory,
}

/// Default reporting times: the integers 6..=15 clipped to the horizon;
/// falls back to every integer in the horizon when that window is empty.
pub fn default_report_times(horizon: f64) -> Vec<f64> {
    let clipped: Vec<f64> = (6..=15).map(f64::from).filter(|&t| t <= horizon).collect();
    if !clipped.is_empty() {
        return clipped;
    }
    (0..=horizon.floor() as i64).map(|k| k as f64).collect()
}

pub fn relative_diff(approx: f64, sim: f64) -> f64 {
    100.0 * (approx - sim) / sim.abs().max(REL_EPSILON)
}

/// Runs simulation and both analytic methods on a shared grid with default
/// solver settings and reporting times.
pub fn run_comparison(
    spec: &ModelSpec,
    reps: usize,
    seed: u64,
) -> Result<Comparison, HarnessError> {
    run_comparison_with(spec, reps, seed, &SolverConfig::default(), None)
}

/// As [`run_comparison`] with explicit solver settings and reporting times.
pub fn run_comparison_with(
    spec: &ModelSpec,
    reps: usize,
    seed: u64,
    cfg: &SolverConfig,
    report_times: Option<&[f64]>,
) -> Result<Comparison, HarnessError> {
    let grid = solver_grid(spec, cfg.output_dt);
    let sim = simulate_ensemble(spec, reps, seed, &grid)?;
    let fluid = classic_fluid(spec, cfg)?;
    let measure_zero = classic_diffusion(spec, cfg, &fluid)?;
    let adjusted = adjusted_moments(spec, cfg)?;
    debug_assert_eq!(measure_zero.grid, grid);
    debug_assert_eq!(adjusted.grid, grid);

    let times = match report_times {
        Some(ts) => ts.to_vec(),
        None => default_report_times(spec.horizon),
    };
    let mut indices = Vec::with_capacity(times.len());
    for &t in &times {
        let idx = grid
            .iter()
            .position(|&g| (g - t).abs() <= 1e-9)
            .ok_or_else(|| {
                HarnessError::Invalid(format!("reporting time {t} is not a grid point"))
            })?;
        indices.push(idx);
    }

    let se = standard_errors(&sim);
    let mut sim_vals: [Vec<f64>; 5] = Default::default();
    let mut sim_se: [Option<Vec<f64>>; 5] = Default::default();
    for q in Quantity::ALL {
        let qi = q.index();
        sim_vals[qi] = indices.iter().map(|&i| q.from_stats(&sim, i)).collect();
        sim_se[qi] = match q {
            Quantity::MeanX1 => Some(indices.iter().map(|&i| se.mean[i][0]).collect()),
            Quantity::MeanX2 => Some(indices.iter().map(|&i| se.mean[i][1]).collect()),
            Quantity::VarX1 => se
                .cov
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i][0]).collect()),
            Quantity::CovX1X2 => se
                .cov
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i][1]).collect()),
            Quantity::VarX2 => se
                .cov
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i][2]).collect()),
        };
    }

    let diffs = |tr: &MomentTrajectory, method: Method| {
        let mut abs: [Vec<f64>; 5] = Default::default();
        let mut rel: [Vec<f64>; 5] = Default::default();
        for q in Quantity::ALL {
            let qi = q.index();
            for (k, &i) in indices.iter().enumerate() {
                let approx = q.from_trajectory(tr, i);
                let sim_v = sim_vals[qi][k];
                abs[qi].push(approx - sim_v);
                rel[qi].push(relative_diff(approx, sim_v));
            }
        }
        MethodDiffs { method, abs, rel }
    };

    let report = ComparisonReport {
        times,
        sim: sim_vals.clone(),
        sim_se,
        adjusted: diffs(&adjusted, Method::Adjusted),
        measure_zero: diffs(&measure_zero, Method::Classic),
    };

    Ok(Comparison {
        report,
        sim,
        measure_zero,
        adjusted,
    })
}

impl ComparisonReport {
    /// Long-format CSV: one row per (time, quantity) with simulation value,
    /// its standard error, and both methods' absolute and relative
    /// differences.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "t,quantity,sim,sim_se,adjusted_abs,adjusted_rel,measure_zero_abs,measure_zero_rel"
        )?;
        for (k, t) in self.times.iter().enumerate() {
            for q in Quantity::ALL {
                let qi = q.index();
                let se = self.sim_se[qi]
                    .as_ref()
                    .map_or(String::from("nan"), |v| format!("{:.16e}", v[k]));
                writeln!(
                    w,
                    "{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    t,
                    q.label(),
                    self.sim[qi][k],
                    se,
                    self.adjusted.abs[qi][k],
                    self.adjusted.rel[qi][k],
                    self.measure_zero.abs[qi][k],
                    self.measure_zero.rel[qi][k],
                )?;
            }
        }
        Ok(())
    }
}

/// Relative-difference tables for a set of experiments:
/// `values[quantity]` is row-major over `(experiment, method)` pairs with
/// one column per reporting time.
#[derive(Debug, Clone)]
pub struct DiffTables {
    pub times: Vec<f64>,
    pub experiments: Vec<usize>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub experiment: usize,
    pub method: Method,
    /// `[quantity][time]` relative differences (%).
    pub rel: [Vec<f64>; 5],
}

/// Runs the comparison pipeline for each experiment id (concurrently) and
/// assembles the per-quantity difference tables.
pub fn experiment_tables(
    ids: &[usize],
    reps: usize,
    seed: u64,
) -> Result<DiffTables, HarnessError> {
    let comparisons: Vec<(usize, Comparison)> = ids
        .par_iter()
        .map(|&id| -> Result<(usize, Comparison), HarnessError> {
            let spec = builtin_experiment(id)?;
            Ok((id, run_comparison(&spec, reps, seed)?))
        })
        .collect::<Result<_, _>>()?;

    let times = comparisons
        .first()
        .map(|(_, c)| c.report.times.clone())
        .ok_or_else(|| HarnessError::Invalid("no experiments requested".into()))?;

    let mut rows = Vec::with_capacity(2 * comparisons.len());
    for (id, c) in &comparisons {
        for diffs in [&c.report.adjusted, &c.report.measure_zero] {
            rows.push(TableRow {
                experiment: *id,
                method: diffs.method,
                rel: diffs.rel.clone(),
            });
        }
    }
    Ok(DiffTables {
        times,
        experiments: ids.to_vec(),
        rows,
    })
}

impl DiffTables {
    /// One quantity's table in the row layout `experiment x method`, one
    /// column per reporting time, cells as relative differences (%).
    pub fn write_csv<W: Write>(&self, quantity: Quantity, mut w: W) -> io::Result<()> {
        write!(w, "exp,method")?;
        for t in &self.times {
            write!(w, ",{t}")?;
        }
        writeln!(w)?;
        for row in &self.rows {
            write!(w, "{},{}", row.experiment, row.method.label())?;
            for v in &row.rel[quantity.index()] {
                write!(w, ",{v:.4}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Writes a file atomically: contents land under a temporary name in the
/// same directory and are renamed into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let to_err = |source: io::Error| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = PathBuf::from(path);
    let mut name = tmp
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    tmp.set_file_name(name);
    std::fs::write(&tmp, contents).map_err(to_err)?;
    std::fs::rename(&tmp, path).map_err(to_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{State, TimeProfile};

    fn idle_spec() -> ModelSpec {
        ModelSpec::new(
            TimeProfile::constant(0.0),
            TimeProfile::constant(1.0),
            TimeProfile::constant(0.2),
            TimeProfile::constant(2.0),
            TimeProfile::constant(0.5),
            TimeProfile::constant(50.0),
            State::new(0.0, 0.0),
            20.0,
        )
        .unwrap()
    }

    #[test]
    fn idle_system_reports_zero_differences() {
        let c = run_comparison(&idle_spec(), 10, 1).unwrap();
        for q in Quantity::ALL {
            let qi = q.index();
            for k in 0..c.report.times.len() {
                assert_eq!(c.report.adjusted.abs[qi][k], 0.0);
                assert_eq!(c.report.adjusted.rel[qi][k], 0.0);
                assert_eq!(c.report.measure_zero.abs[qi][k], 0.0);
                assert_eq!(c.report.measure_zero.rel[qi][k], 0.0);
            }
        }
    }

    #[test]
    fn default_report_times_are_six_through_fifteen() {
        assert_eq!(
            default_report_times(20.0),
            (6..=15).map(f64::from).collect::<Vec<_>>()
        );
        assert_eq!(default_report_times(8.0), vec![6.0, 7.0, 8.0]);
        assert_eq!(default_report_times(3.0), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn relative_diff_guards_small_denominators() {
        // |sim| below the guard divides by the guard instead
        assert_eq!(relative_diff(0.5, 0.0), 50.0);
        assert!((relative_diff(0.2, 0.1) - 10.0).abs() < 1e-12);
        assert!((relative_diff(110.0, 100.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_csv_rows_cover_times_and_quantities() {
        let c = run_comparison(&idle_spec(), 10, 1).unwrap();
        let mut buf = Vec::new();
        c.report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 5 * c.report.times.len());
        assert!(text.lines().nth(1).unwrap().contains("mean_x1"));
    }

    #[test]
    fn table_layout_matches_rows_by_experiment_and_method() {
        // cheap layout test on the idle system via a single synthetic table
        let c = run_comparison(&idle_spec(), 10, 1).unwrap();
        let tables = DiffTables {
            times: c.report.times.clone(),
            experiments: vec![7],
            rows: vec![
                TableRow {
                    experiment: 7,
                    method: Method::Adjusted,
                    rel: c.report.adjusted.rel.clone(),
                },
                TableRow {
                    experiment: 7,
                    method: Method::Classic,
                    rel: c.report.measure_zero.rel.clone(),
                },
            ],
        };
        let mut buf = Vec::new();
        tables.write_csv(Quantity::MeanX2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("exp,method,6,7,8"));
        assert!(lines[1].starts_with("7,adjusted,"));
        assert!(lines[2].starts_with("7,measure_zero,"));
        assert_eq!(lines[1].split(',').count(), 2 + tables.times.len());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert!(!dir.path().join("x.csv.tmp").exists());
    }
}
