//! Queue model definition: time-varying parameters, state, and the five
//! transition channels of the multi-server station with abandonment and a
//! retrial orbit.
//!
//! The station has `n_t` servers; customers arrive at rate `lambda_t`, are
//! served at per-server rate `mu1_t`, abandon the queue at per-customer rate
//! `beta_t`, and an abandoning customer is lost with probability `p_t` or
//! joins the retrial orbit otherwise. Orbit customers re-attempt service at
//! rate `mu2_t` each. State is `(x1, x2)` = (customers at the station,
//! customers in orbit).
//!
//! All parameters are piecewise-constant step functions of time
//! ([`TimeProfile`]), which is what makes both exact event simulation and
//! segment-aligned ODE integration possible.

use thiserror::Error;

/// Errors from model construction and rate evaluation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("time {t} outside the profile domain [0, {horizon}]")]
    TimeOutOfDomain { t: f64, horizon: f64 },
    #[error("transition index {0} out of range 1..=5")]
    InvalidTransitionIndex(usize),
    #[error("invalid model: {0}")]
    InvalidSpec(String),
}

/// Piecewise-constant function of time.
///
/// Segment `i` covers `[breakpoints[i], breakpoints[i+1])` with value
/// `values[i]`; the last segment extends to infinity. Evaluation is
/// right-continuous at breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TimeProfile {
    /// Builds a profile from matching breakpoint/value lists.
    ///
    /// Breakpoints must be strictly increasing and start at 0; values must
    /// be finite.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ModelError> {
        if breakpoints.is_empty() {
            return Err(ModelError::InvalidProfile("no segments".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(ModelError::InvalidProfile(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(ModelError::InvalidProfile(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(ModelError::InvalidProfile(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidProfile("non-finite value".into()));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// Constant profile with a single segment starting at 0.
    pub fn constant(value: f64) -> Self {
        Self::new(vec![0.0], vec![value]).expect("constant profile is always valid")
    }

    /// Profile alternating between `first` and `second` every `period` time
    /// units, with enough segments to cover `[0, horizon]`.
    pub fn alternating(
        first: f64,
        second: f64,
        period: f64,
        horizon: f64,
    ) -> Result<Self, ModelError> {
        if !period.is_finite() || period <= 0.0 || !horizon.is_finite() || horizon <= 0.0 {
            return Err(ModelError::InvalidProfile(
                "alternation period and horizon must be positive".into(),
            ));
        }
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        let mut k = 0u32;
        loop {
            let t = f64::from(k) * period;
            breakpoints.push(t);
            values.push(if k.is_multiple_of(2) { first } else { second });
            if t + period >= horizon {
                break;
            }
            k += 1;
        }
        Self::new(breakpoints, values)
    }

    /// Value of the covering segment at time `t`; right-continuous at
    /// breakpoints. Times past the last breakpoint use the final segment.
    pub fn value_at(&self, t: f64) -> Result<f64, ModelError> {
        if !t.is_finite() || t < 0.0 {
            return Err(ModelError::TimeOutOfDomain {
                t,
                horizon: f64::INFINITY,
            });
        }
        Ok(self.values[self.segment_index(t)])
    }

    /// Index of the segment covering `t` (assumes `t >= 0`).
    fn segment_index(&self, t: f64) -> usize {
        // partition_point returns the count of breakpoints <= t; the covering
        // segment is the last one that started at or before t.
        self.breakpoints.partition_point(|&b| b <= t).max(1) - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Real-valued system state: `x1` customers at the service node (in service
/// or waiting), `x2` customers in the retrial orbit.
///
/// Analytic code treats the components as reals; the simulator keeps integer
/// counts and converts for rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
}

impl State {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

impl From<[f64; 2]> for State {
    fn from(v: [f64; 2]) -> Self {
        Self { x1: v[0], x2: v[1] }
    }
}

/// The five transition channels, in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// External arrival to the service node.
    Arrival,
    /// Orbit customer returns to the service node.
    RetrialReturn,
    /// Service completion.
    Service,
    /// Abandonment into the retrial orbit.
    AbandonToOrbit,
    /// Abandonment out of the system.
    AbandonLost,
}

impl Transition {
    pub const ALL: [Transition; 5] = [
        Transition::Arrival,
        Transition::RetrialReturn,
        Transition::Service,
        Transition::AbandonToOrbit,
        Transition::AbandonLost,
    ];

    /// Catalog position, 0-based.
    pub fn index(self) -> usize {
        match self {
            Transition::Arrival => 0,
            Transition::RetrialReturn => 1,
            Transition::Service => 2,
            Transition::AbandonToOrbit => 3,
            Transition::AbandonLost => 4,
        }
    }

    /// Catalog lookup by 1-based index.
    pub fn from_index(i: usize) -> Result<Self, ModelError> {
        match i {
            1 => Ok(Transition::Arrival),
            2 => Ok(Transition::RetrialReturn),
            3 => Ok(Transition::Service),
            4 => Ok(Transition::AbandonToOrbit),
            5 => Ok(Transition::AbandonLost),
            _ => Err(ModelError::InvalidTransitionIndex(i)),
        }
    }

    /// State change applied when this transition fires.
    pub fn jump(self) -> [i64; 2] {
        match self {
            Transition::Arrival => [1, 0],
            Transition::RetrialReturn => [1, -1],
            Transition::Service => [-1, 0],
            Transition::AbandonToOrbit => [-1, 1],
            Transition::AbandonLost => [-1, 0],
        }
    }

    /// Jump vector as reals, for drift and diffusion assembly.
    pub fn jump_f64(self) -> [f64; 2] {
        let j = self.jump();
        [j[0] as f64, j[1] as f64]
    }
}

/// All six parameters resolved at one instant. Profiles are step functions,
/// so a `Params` is constant over a whole parameter segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub p: f64,
    pub n: f64,
}

impl Params {
    /// Raw transition rate `f_i(t, x)` for the resolved instant.
    ///
    /// `Arrival` is state-free, `RetrialReturn` is linear in `x2`, the other
    /// three hinge on `x1` relative to the server count.
    pub fn rate(&self, tr: Transition, x: State) -> f64 {
        let overflow = (x.x1 - self.n).max(0.0);
        match tr {
            Transition::Arrival => self.lambda,
            Transition::RetrialReturn => self.mu2 * x.x2,
            Transition::Service => self.mu1 * x.x1.min(self.n),
            Transition::AbandonToOrbit => self.beta * (1.0 - self.p) * overflow,
            Transition::AbandonLost => self.beta * self.p * overflow,
        }
    }

    /// All five raw rates in catalog order.
    pub fn rates(&self, x: State) -> [f64; 5] {
        let mut out = [0.0; 5];
        for tr in Transition::ALL {
            out[tr.index()] = self.rate(tr, x);
        }
        out
    }

    /// Aggregate drift `F(t, x) = sum_i l_i f_i(t, x)`.
    pub fn drift(&self, x: State) -> [f64; 2] {
        let mut out = [0.0, 0.0];
        for tr in Transition::ALL {
            let f = self.rate(tr, x);
            let l = tr.jump_f64();
            out[0] += l[0] * f;
            out[1] += l[1] * f;
        }
        out
    }
}

/// Complete description of one queueing system over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub lambda: TimeProfile,
    pub mu1: TimeProfile,
    pub mu2: TimeProfile,
    pub beta: TimeProfile,
    pub p: TimeProfile,
    pub n: TimeProfile,
    pub x0: State,
    pub horizon: f64,
}

impl ModelSpec {
    /// Validates and assembles a spec. Rate profiles must be non-negative,
    /// `p` must stay in `[0, 1]`, `n` must hold integers `>= 1`, the initial
    /// state must be non-negative, and the horizon positive.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lambda: TimeProfile,
        mu1: TimeProfile,
        mu2: TimeProfile,
        beta: TimeProfile,
        p: TimeProfile,
        n: TimeProfile,
        x0: State,
        horizon: f64,
    ) -> Result<Self, ModelError> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(ModelError::InvalidSpec(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        for (name, profile) in [
            ("lambda", &lambda),
            ("mu1", &mu1),
            ("mu2", &mu2),
            ("beta", &beta),
        ] {
            if profile.min_value() < 0.0 {
                return Err(ModelError::InvalidSpec(format!(
                    "rate profile {name} has a negative value"
                )));
            }
        }
        if p.min_value() < 0.0 || p.max_value() > 1.0 {
            return Err(ModelError::InvalidSpec(
                "loss probability profile p must stay within [0, 1]".into(),
            ));
        }
        if n.values().iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
            return Err(ModelError::InvalidSpec(
                "server count profile n must hold integers >= 1".into(),
            ));
        }
        if x0.x1.is_nan() || x0.x2.is_nan() || x0.x1 < 0.0 || x0.x2 < 0.0 {
            return Err(ModelError::InvalidSpec(format!(
                "initial state must be non-negative, got ({}, {})",
                x0.x1, x0.x2
            )));
        }
        Ok(Self {
            lambda,
            mu1,
            mu2,
            beta,
            p,
            n,
            x0,
            horizon,
        })
    }

    /// Resolves all six profiles at time `t` in `[0, horizon]`.
    pub fn params_at(&self, t: f64) -> Result<Params, ModelError> {
        if !t.is_finite() || t < 0.0 || t > self.horizon {
            return Err(ModelError::TimeOutOfDomain {
                t,
                horizon: self.horizon,
            });
        }
        Ok(Params {
            lambda: self.lambda.value_at(t)?,
            mu1: self.mu1.value_at(t)?,
            mu2: self.mu2.value_at(t)?,
            beta: self.beta.value_at(t)?,
            p: self.p.value_at(t)?,
            n: self.n.value_at(t)?,
        })
    }

    /// Raw rate `f_i(t, x)` with a 1-based catalog index.
    pub fn rate_by_index(&self, i: usize, t: f64, x: State) -> Result<f64, ModelError> {
        let tr = Transition::from_index(i)?;
        Ok(self.params_at(t)?.rate(tr, x))
    }

    /// Aggregate drift `F(t, x)`.
    pub fn drift(&self, t: f64, x: State) -> Result<[f64; 2], ModelError> {
        Ok(self.params_at(t)?.drift(x))
    }

    /// Sorted union of every profile breakpoint inside `(0, horizon)`.
    ///
    /// Both the ODE grid and the simulator's segment walk align on these.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = [
            &self.lambda,
            &self.mu1,
            &self.mu2,
            &self.beta,
            &self.p,
            &self.n,
        ]
        .iter()
        .flat_map(|pr| pr.breakpoints().iter().copied())
        .filter(|&t| t > 0.0 && t < self.horizon)
        .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Shortest distance between consecutive parameter switches (horizon
    /// bounds included).
    pub fn shortest_segment(&self) -> f64 {
        let mut pts = self.breakpoints();
        pts.insert(0, 0.0);
        pts.push(self.horizon);
        pts.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Linear-growth constant: every raw rate satisfies
    /// `f_i(t, x) <= C (1 + |x|)` for non-negative `x`.
    pub fn linear_growth_constant(&self) -> f64 {
        let lam = self.lambda.max_value();
        let mu1n = self.mu1.max_value() * self.n.max_value();
        let mu2 = self.mu2.max_value();
        let beta = self.beta.max_value();
        lam.max(mu1n).max(mu2).max(beta)
    }

    /// Lipschitz constant of the aggregate drift in the state argument.
    pub fn lipschitz_constant(&self) -> f64 {
        self.mu1.max_value() + self.beta.max_value() + self.mu2.max_value()
    }
}
