//! Deterministic moment solvers.
//!
//! Three routes share one RK4 engine and one output grid:
//!
//! - [`classic_fluid`]: the mean ODE driven by the raw rates.
//! - [`classic_diffusion`]: the covariance ODE linearized along the fluid
//!   path with one-sided indicator gradients (the measure-zero convention);
//!   the reported mean stays the fluid itself.
//! - [`adjusted_moments`]: the coupled mean-covariance system under the
//!   Gaussian closure, integrated simultaneously because the closed rates
//!   feed on the running covariance.
//!
//! Covariances are carried as the upper triangle `(s11, s12, s22)`, so
//! symmetry is structural rather than numerical.

use std::io::{self, Write};

use crate::closure;
use crate::model::{ModelSpec, Params, State};
use crate::rk4::{integrate_rk4, merge_grid, uniform_grid, OdeSystem, SolverError};

/// Which analytic route produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Classic,
    Adjusted,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Classic => "measure_zero",
            Method::Adjusted => "adjusted",
        }
    }
}

/// Integration controls: RK4 substep bound and output grid spacing.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub step: f64,
    pub output_dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            output_dt: 0.05,
        }
    }
}

impl SolverConfig {
    fn validate(&self, spec: &ModelSpec) -> Result<(), SolverError> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(SolverError::BadStep(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        let shortest = spec.shortest_segment();
        if self.step > shortest {
            return Err(SolverError::BadStep(format!(
                "step {} exceeds the shortest parameter segment {}",
                self.step, shortest
            )));
        }
        if !self.output_dt.is_finite() || self.output_dt <= 0.0 {
            return Err(SolverError::BadStep(format!(
                "output spacing must be positive, got {}",
                self.output_dt
            )));
        }
        Ok(())
    }
}

/// Mean and covariance sampled on a time grid.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub grid: Vec<f64>,
    pub mean: Vec<[f64; 2]>,
    pub cov: Vec<[[f64; 2]; 2]>,
    pub method: Method,
}

impl MomentTrajectory {
    /// Mean/covariance at an exact grid time, if present.
    pub fn at_time(&self, t: f64) -> Option<([f64; 2], [[f64; 2]; 2])> {
        let idx = self.grid.iter().position(|&g| (g - t).abs() <= 1e-9)?;
        Some((self.mean[idx], self.cov[idx]))
    }

    /// Writes the standard moment CSV schema.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,mean_x1,mean_x2,var_x1,cov_x1x2,var_x2")?;
        for i in 0..self.grid.len() {
            let m = self.mean[i];
            let c = self.cov[i];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid[i], m[0], m[1], c[0][0], c[0][1], c[1][1]
            )?;
        }
        Ok(())
    }
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub fn min_eigenvalue(m: &[[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let gap = ((m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0]).sqrt();
    0.5 * (tr - gap)
}

/// Output grid: uniform spacing merged with every parameter breakpoint.
pub fn solver_grid(spec: &ModelSpec, output_dt: f64) -> Vec<f64> {
    merge_grid(
        &uniform_grid(spec.horizon, output_dt),
        &spec.breakpoints(),
        1e-9,
    )
}

/// Parameters resolved once per integration leg, consumed in leg order.
struct LegParams {
    per_leg: Vec<Params>,
    cursor: usize,
    current: Params,
}

impl LegParams {
    fn for_grid(spec: &ModelSpec, grid: &[f64]) -> Result<Self, SolverError> {
        let per_leg = grid
            .windows(2)
            .map(|w| spec.params_at(w[0]))
            .collect::<Result<Vec<_>, _>>()?;
        let current = *per_leg
            .first()
            .ok_or_else(|| SolverError::BadGrid("grid needs at least two points".into()))?;
        Ok(Self {
            per_leg,
            cursor: 0,
            current,
        })
    }

    fn advance(&mut self) {
        self.current = self.per_leg[self.cursor];
        self.cursor += 1;
    }
}

struct FluidSystem {
    legs: LegParams,
}

impl OdeSystem for FluidSystem {
    fn dim(&self) -> usize {
        2
    }

    fn enter_leg(&mut self, _t0: f64) {
        self.legs.advance();
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.legs.current.drift(State::new(y[0], y[1]));
        dy[0] = d[0];
        dy[1] = d[1];
    }
}

/// Fluid path: `dX/dt = F(t, X)` from the raw rates.
pub fn classic_fluid(
    spec: &ModelSpec,
    cfg: &SolverConfig,
) -> Result<MomentTrajectory, SolverError> {
    cfg.validate(spec)?;
    let grid = solver_grid(spec, cfg.output_dt);
    let mut sys = FluidSystem {
        legs: LegParams::for_grid(spec, &grid)?,
    };
    let y = integrate_rk4(&mut sys, &spec.x0.as_array(), &grid, cfg.step)?;
    let mean = y.iter().map(|v| [v[0], v[1]]).collect();
    let cov = vec![[[0.0; 2]; 2]; grid.len()];
    Ok(MomentTrajectory {
        grid,
        mean,
        cov,
        method: Method::Classic,
    })
}

/// Shared shape of both moment systems: state layout `[z1, z2, s11, s12, s22]`.
fn covariance_rhs(a: &[[f64; 2]; 2], s: &[f64], bbt: &[[f64; 2]; 2]) -> [f64; 3] {
    let (s11, s12, s22) = (s[0], s[1], s[2]);
    [
        2.0 * (a[0][0] * s11 + a[0][1] * s12) + bbt[0][0],
        a[1][0] * s11 + a[1][1] * s12 + a[0][0] * s12 + a[0][1] * s22 + bbt[0][1],
        2.0 * (a[1][0] * s12 + a[1][1] * s22) + bbt[1][1],
    ]
}

struct ClassicMomentSystem {
    legs: LegParams,
}

impl OdeSystem for ClassicMomentSystem {
    fn dim(&self) -> usize {
        5
    }

    fn enter_leg(&mut self, _t0: f64) {
        self.legs.advance();
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let params = &self.legs.current;
        let x = State::new(y[0], y[1]);
        let drift = params.drift(x);
        // One-sided gradient: service regime on the tie, abandonment above.
        let weight = if x.x1 <= params.n { 1.0 } else { 0.0 };
        let a = closure::gradient_with_service_weight(params, weight);
        let bbt = closure::diffusion_bbt(&params.rates(x));
        let ds = covariance_rhs(&a, &y[2..5], &bbt);
        dy[0] = drift[0];
        dy[1] = drift[1];
        dy[2] = ds[0];
        dy[3] = ds[1];
        dy[4] = ds[2];
    }
}

/// Covariance along the fluid path under the measure-zero convention.
///
/// The mean block of the joint system reproduces the fluid ODE exactly (it
/// never reads the covariance), so the returned mean is the fluid path and
/// the centering term of the limit is identically zero.
pub fn classic_diffusion(
    spec: &ModelSpec,
    cfg: &SolverConfig,
    fluid: &MomentTrajectory,
) -> Result<MomentTrajectory, SolverError> {
    cfg.validate(spec)?;
    let grid = fluid.grid.clone();
    if grid.first() != Some(&0.0)
        || (grid.last().copied().unwrap_or(0.0) - spec.horizon).abs() > 1e-9
    {
        return Err(SolverError::BadGrid(
            "fluid trajectory does not cover [0, horizon]".into(),
        ));
    }
    for b in spec.breakpoints() {
        if !grid.iter().any(|&g| (g - b).abs() <= 1e-9) {
            return Err(SolverError::BadGrid(format!(
                "fluid grid misses the parameter breakpoint at t = {b}"
            )));
        }
    }
    let mut sys = ClassicMomentSystem {
        legs: LegParams::for_grid(spec, &grid)?,
    };
    let y0 = [spec.x0.x1, spec.x0.x2, 0.0, 0.0, 0.0];
    let y = integrate_rk4(&mut sys, &y0, &grid, cfg.step)?;
    debug_assert!(
        y.iter()
            .zip(&fluid.mean)
            .all(|(v, m)| (v[0] - m[0]).abs() <= 1e-9 && (v[1] - m[1]).abs() <= 1e-9),
        "joint mean block diverged from the fluid input"
    );
    Ok(assemble(grid, y, Method::Classic))
}

struct AdjustedMomentSystem {
    legs: LegParams,
}

impl OdeSystem for AdjustedMomentSystem {
    fn dim(&self) -> usize {
        5
    }

    fn enter_leg(&mut self, _t0: f64) {
        self.legs.advance();
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let params = &self.legs.current;
        let z = State::new(y[0], y[1]);
        // Tiny negative variances from round-off clamp to a point mass.
        let sigma1 = y[2].max(0.0).sqrt();
        let g = closure::g_all(params, z, sigma1).expect("sigma1 is non-negative");
        let drift = closure::drift_from_rates(&g);
        let a = closure::gradient(params, z, sigma1);
        let bbt = closure::diffusion_bbt(&g);
        let ds = covariance_rhs(&a, &y[2..5], &bbt);
        dy[0] = drift[0];
        dy[1] = drift[1];
        dy[2] = ds[0];
        dy[3] = ds[1];
        dy[4] = ds[2];
    }
}

/// Coupled mean-covariance system under the Gaussian closure, from
/// `Z(0) = x0` and `Sigma(0) = 0`.
pub fn adjusted_moments(
    spec: &ModelSpec,
    cfg: &SolverConfig,
) -> Result<MomentTrajectory, SolverError> {
    cfg.validate(spec)?;
    let grid = solver_grid(spec, cfg.output_dt);
    let mut sys = AdjustedMomentSystem {
        legs: LegParams::for_grid(spec, &grid)?,
    };
    let y0 = [spec.x0.x1, spec.x0.x2, 0.0, 0.0, 0.0];
    let y = integrate_rk4(&mut sys, &y0, &grid, cfg.step)?;
    Ok(assemble(grid, y, Method::Adjusted))
}

fn assemble(grid: Vec<f64>, y: Vec<Vec<f64>>, method: Method) -> MomentTrajectory {
    let mean = y.iter().map(|v| [v[0], v[1]]).collect();
    let cov = y
        .iter()
        .map(|v| {
            let clamp = |d: f64| if (-1e-9..0.0).contains(&d) { 0.0 } else { d };
            let (s11, s12, s22) = (clamp(v[2]), v[3], clamp(v[4]));
            [[s11, s12], [s12, s22]]
        })
        .collect();
    MomentTrajectory {
        grid,
        mean,
        cov,
        method,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeProfile;
    use approx::assert_relative_eq;

    fn constant_spec(
        lambda: f64,
        mu1: f64,
        mu2: f64,
        beta: f64,
        n: f64,
        x0: State,
        t: f64,
    ) -> ModelSpec {
        ModelSpec::new(
            TimeProfile::constant(lambda),
            TimeProfile::constant(mu1),
            TimeProfile::constant(mu2),
            TimeProfile::constant(beta),
            TimeProfile::constant(0.5),
            TimeProfile::constant(n),
            x0,
            t,
        )
        .unwrap()
    }

    fn infinite_server_spec() -> ModelSpec {
        constant_spec(40.0, 1.0, 0.2, 0.0, 1e6, State::new(0.0, 0.0), 10.0)
    }

    fn exp7_spec() -> ModelSpec {
        ModelSpec::new(
            TimeProfile::alternating(45.0, 55.0, 2.0, 20.0).unwrap(),
            TimeProfile::constant(1.0),
            TimeProfile::constant(0.2),
            TimeProfile::constant(2.0),
            TimeProfile::constant(0.5),
            TimeProfile::constant(50.0),
            State::new(40.0, 0.0),
            20.0,
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_initial_state_stays_put() {
        let spec = constant_spec(40.0, 1.0, 0.2, 2.0, 50.0, State::new(40.0, 0.0), 10.0);
        let fluid = classic_fluid(&spec, &SolverConfig::default()).unwrap();
        for m in &fluid.mean {
            assert_relative_eq!(m[0], 40.0, epsilon = 1e-12);
            assert!(m[1].abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_decays_exponentially_without_arrivals() {
        let spec = constant_spec(0.0, 1.0, 0.2, 0.0, 50.0, State::new(0.0, 20.0), 10.0);
        let fluid = classic_fluid(&spec, &SolverConfig::default()).unwrap();
        for (t, m) in fluid.grid.iter().zip(&fluid.mean) {
            assert_relative_eq!(m[1], 20.0 * (-0.2 * t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn infinite_server_moments_match_the_transient_law() {
        let spec = infinite_server_spec();
        let cfg = SolverConfig::default();
        let fluid = classic_fluid(&spec, &cfg).unwrap();
        let classic = classic_diffusion(&spec, &cfg, &fluid).unwrap();
        let adjusted = adjusted_moments(&spec, &cfg).unwrap();
        for i in 0..fluid.grid.len() {
            let t = fluid.grid[i];
            let want = 40.0 * (1.0 - (-t).exp());
            assert_relative_eq!(fluid.mean[i][0], want, epsilon = 1e-6);
            assert_relative_eq!(adjusted.mean[i][0], want, epsilon = 1e-6);
            // variance equals the mean for a pure birth-death with linear rates
            assert_relative_eq!(classic.cov[i][0][0], want, epsilon = 1e-4);
            assert_relative_eq!(adjusted.cov[i][0][0], want, epsilon = 1e-4);
        }
    }

    #[test]
    fn linear_rates_collapse_adjusted_onto_classic() {
        let spec = infinite_server_spec();
        let cfg = SolverConfig::default();
        let fluid = classic_fluid(&spec, &cfg).unwrap();
        let classic = classic_diffusion(&spec, &cfg, &fluid).unwrap();
        let adjusted = adjusted_moments(&spec, &cfg).unwrap();
        for i in 0..fluid.grid.len() {
            for k in 0..2 {
                assert_relative_eq!(adjusted.mean[i][k], classic.mean[i][k], epsilon = 1e-6);
                for l in 0..2 {
                    assert_relative_eq!(
                        adjusted.cov[i][k][l],
                        classic.cov[i][k][l],
                        epsilon = 1e-6
                    );
                }
            }
        }
    }

    #[test]
    fn idle_system_stays_identically_zero() {
        let spec = constant_spec(0.0, 1.0, 0.2, 2.0, 50.0, State::new(0.0, 0.0), 5.0);
        let cfg = SolverConfig::default();
        let adjusted = adjusted_moments(&spec, &cfg).unwrap();
        for i in 0..adjusted.grid.len() {
            assert_eq!(adjusted.mean[i], [0.0, 0.0]);
            assert_eq!(adjusted.cov[i], [[0.0, 0.0], [0.0, 0.0]]);
        }
    }

    #[test]
    fn grid_contains_every_breakpoint() {
        let spec = exp7_spec();
        let grid = solver_grid(&spec, 0.05);
        for b in spec.breakpoints() {
            assert!(grid.contains(&b), "breakpoint {b} missing from grid");
        }
        assert_eq!(*grid.last().unwrap(), 20.0);
    }

    #[test]
    fn step_halving_is_converged() {
        let spec = exp7_spec();
        let coarse = SolverConfig {
            step: 1e-3,
            output_dt: 0.5,
        };
        let fine = SolverConfig {
            step: 5e-4,
            output_dt: 0.5,
        };

        // smooth systems carry the full fourth-order consistency
        let a = adjusted_moments(&spec, &coarse).unwrap();
        let b = adjusted_moments(&spec, &fine).unwrap();
        for i in 0..a.grid.len() {
            for k in 0..2 {
                assert!((a.mean[i][k] - b.mean[i][k]).abs() < 1e-6);
                for l in 0..2 {
                    assert!((a.cov[i][k][l] - b.cov[i][k][l]).abs() < 1e-6);
                }
            }
        }

        // The classic covariance field is discontinuous at the fluid's
        // crossing times, which are interior to steps (crossings are not
        // event-located), so its order drops there; the mean stays clean.
        let fc = classic_fluid(&spec, &coarse).unwrap();
        let ff = classic_fluid(&spec, &fine).unwrap();
        let a = classic_diffusion(&spec, &coarse, &fc).unwrap();
        let b = classic_diffusion(&spec, &fine, &ff).unwrap();
        for i in 0..a.grid.len() {
            for k in 0..2 {
                assert!((a.mean[i][k] - b.mean[i][k]).abs() < 1e-6);
                for l in 0..2 {
                    assert!((a.cov[i][k][l] - b.cov[i][k][l]).abs() < 0.1);
                }
            }
        }
    }

    #[test]
    fn covariances_stay_symmetric_and_psd_on_the_lingering_case() {
        let spec = exp7_spec();
        let cfg = SolverConfig::default();
        let fluid = classic_fluid(&spec, &cfg).unwrap();
        let classic = classic_diffusion(&spec, &cfg, &fluid).unwrap();
        let adjusted = adjusted_moments(&spec, &cfg).unwrap();
        for tr in [&classic, &adjusted] {
            for c in &tr.cov {
                assert!((c[0][1] - c[1][0]).abs() <= 1e-10);
                assert!(min_eigenvalue(c) >= -1e-8, "Sigma lost PSD: {c:?}");
            }
        }
    }

    #[test]
    fn step_larger_than_shortest_segment_is_rejected() {
        let spec = exp7_spec();
        let cfg = SolverConfig {
            step: 3.0,
            output_dt: 0.05,
        };
        assert!(classic_fluid(&spec, &cfg).is_err());
    }

    #[test]
    fn csv_schema_has_header_and_full_precision() {
        let spec = infinite_server_spec();
        let adjusted = adjusted_moments(&spec, &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        adjusted.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,mean_x1,mean_x2,var_x1,cov_x1x2,var_x2"
        );
        assert_eq!(text.lines().count(), adjusted.grid.len() + 1);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 6);
        assert!(first.contains('e'), "expected scientific notation: {first}");
    }
}
