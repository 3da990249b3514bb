//! Moment trajectories of time-varying multi-server queues with
//! abandonments and retrials.
//!
//! Three routes to the mean and covariance of the two-dimensional queue
//! state, all over one shared time grid:
//!
//! - [`simulator`]: exact event-driven simulation of the CTMC with
//!   reproducible ensemble statistics — the ground truth.
//! - [`solvers::classic_fluid`] / [`solvers::classic_diffusion`]: the fluid
//!   ODE and the covariance ODE linearized with one-sided indicator
//!   gradients (the measure-zero convention). Cheap, but the indicator flip
//!   makes the covariance spike whenever the fluid lingers near the server
//!   count.
//! - [`solvers::adjusted_moments`]: the coupled mean-covariance system under
//!   the Gaussian closure of [`closure`], which smooths the drift gradient
//!   and tracks the simulated moments through critically loaded stretches.
//!
//! The [`harness`-level modules](experiments) regenerate the built-in
//! experiment suite, difference tables, and plot-ready figures; `cli`
//! exposes all of it as subcommands.

pub mod cli;
pub mod closure;
pub mod config;
pub mod experiments;
pub mod figures;
pub mod model;
pub mod normal;
pub mod report;
pub mod rk4;
pub mod simulator;
pub mod solvers;

pub use config::{load_model, parse_model, ConfigError};
pub use experiments::{builtin_experiment, ExperimentConfig, EXPERIMENTS};
pub use model::{ModelError, ModelSpec, Params, State, TimeProfile, Transition};
pub use report::{run_comparison, Comparison, ComparisonReport, HarnessError, Quantity};
pub use rk4::{integrate_rk4, OdeSystem, SolverError};
pub use simulator::{simulate_ensemble, simulate_one, standard_errors, EnsembleStats, Trajectory};
pub use solvers::{
    adjusted_moments, classic_diffusion, classic_fluid, Method, MomentTrajectory, SolverConfig,
};
