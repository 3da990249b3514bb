//! Fixed-step classical Runge-Kutta integration over a prescribed grid.
//!
//! Steps never straddle a grid point, and the grid is built to contain every
//! parameter breakpoint, so each integration leg lies inside one parameter
//! segment. Systems are told when a leg begins and resolve their
//! piecewise-constant parameters there once; the final stage of a step then
//! uses the left limit at a breakpoint rather than the value of the next
//! segment, which keeps the fourth-order convergence across switches.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("field evaluated to a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("invalid step: {0}")]
    BadStep(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Right-hand side of an ODE system `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Entered once per integration leg `[t0, t1]`; legs never contain a
    /// parameter breakpoint in their interior, so profile lookups belong
    /// here rather than in `rhs`.
    fn enter_leg(&mut self, _t0: f64) {}

    /// Evaluate `f(t, y)` into `dy`.
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Convenience wrapper so plain closures can act as systems.
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(f64, &[f64], &mut [f64])> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.f)(t, y, dy)
    }
}

/// Integrates `system` from `grid[0]`, returning the state at every grid
/// time (the first entry is `y0` itself). Each leg between consecutive grid
/// times is covered by equal substeps no longer than `h`.
pub fn integrate_rk4<S: OdeSystem>(
    system: &mut S,
    y0: &[f64],
    grid: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>, SolverError> {
    if !h.is_finite() || h <= 0.0 {
        return Err(SolverError::BadStep(format!(
            "step must be positive, got {h}"
        )));
    }
    if grid.is_empty() {
        return Err(SolverError::BadGrid("empty grid".into()));
    }
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(SolverError::BadGrid(
            "grid times must be strictly increasing".into(),
        ));
    }
    let dim = system.dim();
    assert_eq!(y0.len(), dim, "initial state dimension mismatch");

    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y.clone());

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];

    for leg in grid.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        system.enter_leg(a);
        let substeps = ((b - a) / h).ceil().max(1.0) as usize;
        let dt = (b - a) / substeps as f64;
        for k in 0..substeps {
            let t = a + k as f64 * dt;

            system.rhs(t, &y, &mut k1);
            check_finite(&k1, t)?;
            for i in 0..dim {
                scratch[i] = y[i] + 0.5 * dt * k1[i];
            }
            system.rhs(t + 0.5 * dt, &scratch, &mut k2);
            check_finite(&k2, t)?;
            for i in 0..dim {
                scratch[i] = y[i] + 0.5 * dt * k2[i];
            }
            system.rhs(t + 0.5 * dt, &scratch, &mut k3);
            check_finite(&k3, t)?;
            for i in 0..dim {
                scratch[i] = y[i] + dt * k3[i];
            }
            system.rhs(t + dt, &scratch, &mut k4);
            check_finite(&k4, t)?;

            for i in 0..dim {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn check_finite(v: &[f64], t: f64) -> Result<(), SolverError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SolverError::NonFinite { t })
    }
}

/// Merges a uniform output grid with a set of mandatory times (parameter
/// breakpoints), treating times closer than `tol` as identical and keeping
/// the mandatory value so parameter switches land exactly on grid points.
pub fn merge_grid(uniform: &[f64], mandatory: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(uniform.len() + mandatory.len());
    let (mut i, mut j) = (0, 0);
    while i < uniform.len() || j < mandatory.len() {
        let next = match (uniform.get(i), mandatory.get(j)) {
            (Some(&u), Some(&m)) => {
                if (u - m).abs() <= tol {
                    i += 1;
                    j += 1;
                    m
                } else if u < m {
                    i += 1;
                    u
                } else {
                    j += 1;
                    m
                }
            }
            (Some(&u), None) => {
                i += 1;
                u
            }
            (None, Some(&m)) => {
                j += 1;
                m
            }
            (None, None) => break,
        };
        if out.last().is_none_or(|&last| next - last > tol) {
            out.push(next);
        }
    }
    out
}

/// Uniform grid `0, dt, 2dt, ..., horizon` (the horizon is always included).
pub fn uniform_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        if t >= horizon - 1e-12 {
            out.push(horizon);
            return out;
        }
        out.push(t);
        k += 1;
    }
}
