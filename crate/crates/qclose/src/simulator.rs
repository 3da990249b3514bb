//! Exact event simulation of the queueing CTMC and ensemble statistics.
//!
//! Rates are piecewise-constant between parameter breakpoints and jumps, so
//! the classic direct method applies exactly: draw an exponential holding
//! time from the total rate, and if it would cross a breakpoint, advance to
//! the breakpoint and redraw (valid by memorylessness). No thinning bound is
//! needed.
//!
//! Replications use one ChaCha8 key per ensemble seed with the stream
//! counter set to the replication index, so streams are independent and
//! insensitive to execution order. Ensemble snapshots are integer counts;
//! their sums stay exact in `f64`, which keeps the parallel reduction
//! bit-identical to the sequential one.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, ModelSpec, Params, State, Transition};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("initial state must be integer-valued for simulation, got ({0}, {1})")]
    NonIntegerInitialState(f64, f64),
    #[error("need at least 2 replications, got {0}")]
    TooFewReps(usize),
    #[error("invalid sampling grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One sample path: event times and post-event states, piecewise-constant in
/// between. Index 0 is the initial state at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[i64; 2]>,
}

impl Trajectory {
    /// State immediately after the last event at or before `t`.
    pub fn sample_at(&self, t: f64) -> [i64; 2] {
        let idx = self.times.partition_point(|&e| e <= t);
        self.states[idx.max(1) - 1]
    }

    pub fn n_events(&self) -> usize {
        self.times.len() - 1
    }
}

/// Walks one path event by event without storing history.
struct PathWalker<'a> {
    spec: &'a ModelSpec,
    rng: ChaCha8Rng,
    t: f64,
    state: [i64; 2],
    params: Params,
    /// Upcoming segment boundaries; the last one is the horizon.
    boundaries: Vec<f64>,
    cursor: usize,
}

impl<'a> PathWalker<'a> {
    fn new(spec: &'a ModelSpec, rng: ChaCha8Rng) -> Result<Self, SimError> {
        let x0 = spec.x0;
        if x0.x1.fract() != 0.0 || x0.x2.fract() != 0.0 {
            return Err(SimError::NonIntegerInitialState(x0.x1, x0.x2));
        }
        let mut boundaries = spec.breakpoints();
        boundaries.push(spec.horizon);
        Ok(Self {
            spec,
            rng,
            t: 0.0,
            state: [x0.x1 as i64, x0.x2 as i64],
            params: spec.params_at(0.0)?,
            boundaries,
            cursor: 0,
        })
    }

    fn segment_end(&self) -> f64 {
        self.boundaries[self.cursor]
    }

    /// Moves to the next parameter segment; false once the horizon is hit.
    fn advance_segment(&mut self) -> bool {
        let end = self.segment_end();
        self.t = end;
        if self.cursor + 1 >= self.boundaries.len() {
            return false;
        }
        self.cursor += 1;
        self.params = self
            .spec
            .params_at(self.t)
            .expect("segment boundary inside horizon");
        true
    }

    /// Next jump, or `None` once the horizon is reached.
    fn next_event(&mut self) -> Option<(f64, [i64; 2])> {
        loop {
            let x = State::new(self.state[0] as f64, self.state[1] as f64);
            let rates = self.params.rates(x);
            let total: f64 = rates.iter().sum();
            if total <= 0.0 {
                if !self.advance_segment() {
                    return None;
                }
                continue;
            }
            let u: f64 = self.rng.gen();
            let holding = -(1.0 - u).ln() / total;
            if self.t + holding >= self.segment_end() {
                // crossed a breakpoint: move there and redraw
                if !self.advance_segment() {
                    return None;
                }
                continue;
            }
            self.t += holding;
            let mut v = self.rng.gen::<f64>() * total;
            let mut chosen = None;
            for (i, r) in rates.iter().enumerate() {
                if *r <= 0.0 {
                    continue;
                }
                if v < *r {
                    chosen = Some(i);
                    break;
                }
                v -= r;
            }
            let chosen = chosen.unwrap_or_else(|| rates.iter().rposition(|r| *r > 0.0).unwrap());
            let l = Transition::ALL[chosen].jump();
            self.state[0] += l[0];
            self.state[1] += l[1];
            debug_assert!(self.state[0] >= 0 && self.state[1] >= 0);
            return Some((self.t, self.state));
        }
    }
}

fn stream_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// One statistically exact sample path over `[0, horizon]`.
pub fn simulate_one(spec: &ModelSpec, seed: u64) -> Result<Trajectory, SimError> {
    let mut walker = PathWalker::new(spec, stream_rng(seed, 0))?;
    let mut times = vec![0.0];
    let mut states = vec![walker.state];
    while let Some((t, s)) = walker.next_event() {
        times.push(t);
        states.push(s);
    }
    Ok(Trajectory { times, states })
}

/// Ensemble estimates on a sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub grid: Vec<f64>,
    pub mean: Vec<[f64; 2]>,
    /// Sample covariance (divisor `reps - 1`).
    pub cov: Vec<[[f64; 2]; 2]>,
    pub reps: usize,
    pub seed: u64,
}

/// Raw per-grid-point sums; exact because states are integers.
#[derive(Clone)]
struct Accumulator {
    sum: Vec<[f64; 2]>,
    sum_sq: Vec<[f64; 3]>,
}

impl Accumulator {
    fn zero(len: usize) -> Self {
        Self {
            sum: vec![[0.0; 2]; len],
            sum_sq: vec![[0.0; 3]; len],
        }
    }

    fn add_path(
        &mut self,
        spec: &ModelSpec,
        grid: &[f64],
        rng: ChaCha8Rng,
    ) -> Result<(), SimError> {
        let mut walker = PathWalker::new(spec, rng)?;
        let mut current = walker.state;
        let mut gi = 0;
        while let Some((t, s)) = walker.next_event() {
            while gi < grid.len() && grid[gi] < t {
                self.record(gi, current);
                gi += 1;
            }
            if gi == grid.len() {
                break;
            }
            current = s;
        }
        while gi < grid.len() {
            self.record(gi, current);
            gi += 1;
        }
        Ok(())
    }

    fn record(&mut self, gi: usize, s: [i64; 2]) {
        let (x1, x2) = (s[0] as f64, s[1] as f64);
        self.sum[gi][0] += x1;
        self.sum[gi][1] += x2;
        self.sum_sq[gi][0] += x1 * x1;
        self.sum_sq[gi][1] += x1 * x2;
        self.sum_sq[gi][2] += x2 * x2;
    }

    fn merge(&mut self, other: &Accumulator) {
        for i in 0..self.sum.len() {
            self.sum[i][0] += other.sum[i][0];
            self.sum[i][1] += other.sum[i][1];
            for k in 0..3 {
                self.sum_sq[i][k] += other.sum_sq[i][k];
            }
        }
    }
}

const REPS_PER_CHUNK: usize = 64;

/// Runs `reps` independent replications and reduces them into per-grid-time
/// sample means and covariances. Replications run in parallel chunks; the
/// chunk results merge in index order.
pub fn simulate_ensemble(
    spec: &ModelSpec,
    reps: usize,
    seed: u64,
    grid: &[f64],
) -> Result<EnsembleStats, SimError> {
    if reps < 2 {
        return Err(SimError::TooFewReps(reps));
    }
    if grid.is_empty()
        || grid
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(SimError::BadGrid(
            "grid must be non-empty and ascending".into(),
        ));
    }
    if grid[0] < 0.0 || *grid.last().unwrap() > spec.horizon {
        return Err(SimError::BadGrid(format!(
            "grid must lie within [0, {}]",
            spec.horizon
        )));
    }

    let n_chunks = reps.div_ceil(REPS_PER_CHUNK);
    let chunks: Vec<Result<Accumulator, SimError>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * REPS_PER_CHUNK;
            let hi = ((ci + 1) * REPS_PER_CHUNK).min(reps);
            let mut acc = Accumulator::zero(grid.len());
            for rep in lo..hi {
                acc.add_path(spec, grid, stream_rng(seed, rep as u64))?;
            }
            Ok(acc)
        })
        .collect();

    let mut total = Accumulator::zero(grid.len());
    for chunk in chunks {
        total.merge(&chunk?);
    }

    let r = reps as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut cov = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s = total.sum[i];
        let q = total.sum_sq[i];
        mean.push([s[0] / r, s[1] / r]);
        let c11 = (q[0] - s[0] * s[0] / r) / (r - 1.0);
        let c12 = (q[1] - s[0] * s[1] / r) / (r - 1.0);
        let c22 = (q[2] - s[1] * s[1] / r) / (r - 1.0);
        cov.push([[c11, c12], [c12, c22]]);
    }

    Ok(EnsembleStats {
        grid: grid.to_vec(),
        mean,
        cov,
        reps,
        seed,
    })
}

/// Large-sample standard errors of the ensemble estimates.
#[derive(Debug, Clone)]
pub struct StandardErrors {
    /// Per grid time, SE of the two mean estimates.
    pub mean: Vec<[f64; 2]>,
    /// Per grid time, SE of `(var_x1, cov_x1x2, var_x2)`; absent when the
    /// replication count is too small for the large-sample formula.
    pub cov: Option<Vec<[f64; 3]>>,
}

/// Minimum replications before covariance standard errors are reported.
pub const COV_SE_MIN_REPS: usize = 30;

/// Mean SEs are `sd / sqrt(R)`; covariance-entry SEs use the Gaussian
/// large-sample moment formula `Var(s_ab) = (s_aa s_bb + s_ab^2)/(R - 1)`,
/// appropriate here because the ensembles are near-Gaussian by construction.
pub fn standard_errors(stats: &EnsembleStats) -> StandardErrors {
    let r = stats.reps as f64;
    let mean = stats
        .cov
        .iter()
        .map(|c| [(c[0][0].max(0.0) / r).sqrt(), (c[1][1].max(0.0) / r).sqrt()])
        .collect();
    let cov = if stats.reps >= COV_SE_MIN_REPS {
        Some(
            stats
                .cov
                .iter()
                .map(|c| {
                    let (s11, s12, s22) = (c[0][0], c[0][1], c[1][1]);
                    [
                        (2.0 * s11 * s11 / (r - 1.0)).sqrt(),
                        ((s11 * s22 + s12 * s12).max(0.0) / (r - 1.0)).sqrt(),
                        (2.0 * s22 * s22 / (r - 1.0)).sqrt(),
                    ]
                })
                .collect(),
        )
    } else {
        None
    };
    StandardErrors { mean, cov }
}

impl EnsembleStats {
    /// Same schema as the solver CSV plus mean standard errors; replication
    /// count and seed go into a comment header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let se = standard_errors(self);
        writeln!(w, "# reps = {}, seed = {}", self.reps, self.seed)?;
        writeln!(
            w,
            "t,mean_x1,mean_x2,var_x1,cov_x1x2,var_x2,se_mean_x1,se_mean_x2"
        )?;
        for i in 0..self.grid.len() {
            let m = self.mean[i];
            let c = self.cov[i];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid[i], m[0], m[1], c[0][0], c[0][1], c[1][1], se.mean[i][0], se.mean[i][1]
            )?;
        }
        Ok(())
    }

    /// Mean/covariance at an exact grid time, if present.
    pub fn at_time(&self, t: f64) -> Option<([f64; 2], [[f64; 2]; 2])> {
        let idx = self.grid.iter().position(|&g| (g - t).abs() <= 1e-9)?;
        Some((self.mean[idx], self.cov[idx]))
    }
}
