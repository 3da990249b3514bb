//! Built-in experiment suite.
//!
//! Ten parameter sets covering under-, over-, and critically loaded regimes;
//! the arrival rate alternates between two levels while every other
//! parameter stays constant. The initial state defaults to 80% server
//! occupancy with an empty orbit so the system settles into its oscillatory
//! regime well before the reported window; pass a config file instead to
//! override it.

use thiserror::Error;

use crate::model::{ModelError, ModelSpec, State, TimeProfile};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("experiment id {0} out of range 1..=10")]
    UnknownId(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One row of the built-in experiment table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub id: usize,
    pub servers: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub p: f64,
    /// Dwell time on each arrival-rate level.
    pub alternation: f64,
    pub horizon: f64,
}

pub const EXPERIMENTS: [ExperimentConfig; 10] = [
    ExperimentConfig {
        id: 1,
        servers: 50.0,
        lambda1: 40.0,
        lambda2: 80.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.5,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 2,
        servers: 50.0,
        lambda1: 40.0,
        lambda2: 60.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.5,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 3,
        servers: 100.0,
        lambda1: 80.0,
        lambda2: 120.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.7,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 4,
        servers: 100.0,
        lambda1: 90.0,
        lambda2: 110.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.7,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 5,
        servers: 50.0,
        lambda1: 40.0,
        lambda2: 80.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 1.5,
        p: 0.7,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 6,
        servers: 50.0,
        lambda1: 40.0,
        lambda2: 60.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 1.5,
        p: 0.7,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 7,
        servers: 50.0,
        lambda1: 45.0,
        lambda2: 55.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.5,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 8,
        servers: 100.0,
        lambda1: 95.0,
        lambda2: 105.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.5,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 9,
        servers: 150.0,
        lambda1: 140.0,
        lambda2: 160.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.5,
        alternation: 2.0,
        horizon: 20.0,
    },
    ExperimentConfig {
        id: 10,
        servers: 150.0,
        lambda1: 100.0,
        lambda2: 190.0,
        mu1: 1.0,
        mu2: 0.2,
        beta: 2.0,
        p: 0.5,
        alternation: 2.0,
        horizon: 20.0,
    },
];

impl ExperimentConfig {
    /// Default initial state: 80% of the servers busy, empty orbit.
    pub fn default_x0(&self) -> State {
        State::new((0.8 * self.servers).round(), 0.0)
    }

    pub fn to_spec(&self) -> Result<ModelSpec, ExperimentError> {
        self.to_spec_with_x0(self.default_x0())
    }

    pub fn to_spec_with_x0(&self, x0: State) -> Result<ModelSpec, ExperimentError> {
        Ok(ModelSpec::new(
            TimeProfile::alternating(self.lambda1, self.lambda2, self.alternation, self.horizon)?,
            TimeProfile::constant(self.mu1),
            TimeProfile::constant(self.mu2),
            TimeProfile::constant(self.beta),
            TimeProfile::constant(self.p),
            TimeProfile::constant(self.servers),
            x0,
            self.horizon,
        )?)
    }
}

/// Model for built-in experiment `id` (1-based).
pub fn builtin_experiment(id: usize) -> Result<ModelSpec, ExperimentError> {
    let cfg = EXPERIMENTS
        .iter()
        .find(|e| e.id == id)
        .ok_or(ExperimentError::UnknownId(id))?;
    cfg.to_spec()
}
