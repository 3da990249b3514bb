//! Gaussian closure of the transition rates.
//!
//! Each raw rate `f_i` is replaced by its expectation `g_i = E[f_i(X)]`
//! under a Gaussian whose mean is the current mean trajectory and whose
//! `x1`-standard deviation comes from the covariance trajectory. For this
//! catalog the expectations have closed forms: `f_1` and `f_2` are constant
//! and linear, so `g_1 = f_1` and `g_2 = f_2`; the service and abandonment
//! rates turn into smooth blends of the two drift regimes weighted by the
//! probability mass on either side of the server count.
//!
//! The closed rates feed three objects used by the moment ODEs: the
//! aggregate drift `G`, its analytic gradient `A` with respect to the mean,
//! and the diffusion factor `B` whose `i`-th column is `l_i sqrt(g_i)`.

use thiserror::Error;

use crate::model::{Params, State, Transition};
use crate::normal::{std_normal_cdf, std_normal_pdf};

/// Below this standard deviation the Gaussian is treated as a point mass and
/// every `g_i` degenerates to `f_i` at the mean. The covariance ODE starts
/// at zero, so the very first evaluations always take this branch.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error("standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
}

/// Gaussian CDF value at point `a` for mean `b` and standard deviation `c`.
fn gauss_cdf(a: f64, b: f64, c: f64) -> f64 {
    std_normal_cdf((a - b) / c)
}

/// Gaussian PDF value at point `a` for mean `b` and standard deviation `c`.
fn gauss_pdf(a: f64, b: f64, c: f64) -> f64 {
    std_normal_pdf((a - b) / c) / c
}

/// `E[min(X, n)]` and `E[(X - n)^+]` for `X ~ N(z1, sigma1^2)`.
///
/// The two add up to `z1` exactly, which the decomposition tests lean on.
fn truncated_moments(n: f64, z1: f64, sigma1: f64) -> (f64, f64) {
    let cdf = gauss_cdf(n, z1, sigma1);
    let pdf = gauss_pdf(n, z1, sigma1);
    let var = sigma1 * sigma1;
    let e_min = n + (z1 - n) * cdf - var * pdf;
    let e_plus = (z1 - n) * (1.0 - cdf) + var * pdf;
    (e_min, e_plus)
}

fn g_unchecked(params: &Params, tr: Transition, z: State, sigma1: f64) -> f64 {
    debug_assert!(sigma1 >= 0.0);
    if sigma1 < SIGMA_FLOOR {
        return params.rate(tr, z);
    }
    match tr {
        Transition::Arrival => params.lambda,
        Transition::RetrialReturn => params.mu2 * z.x2,
        Transition::Service => {
            let (e_min, _) = truncated_moments(params.n, z.x1, sigma1);
            params.mu1 * e_min
        }
        Transition::AbandonToOrbit => {
            let (_, e_plus) = truncated_moments(params.n, z.x1, sigma1);
            params.beta * (1.0 - params.p) * e_plus
        }
        Transition::AbandonLost => {
            let (_, e_plus) = truncated_moments(params.n, z.x1, sigma1);
            params.beta * params.p * e_plus
        }
    }
}

/// Closed rate `g_i(t, z, sigma1) = E[f_i(t, X)]` with `X1 ~ N(z1, sigma1^2)`.
///
/// Values can dip below zero only when the Gaussian puts visible mass below
/// the origin (mean near 0 with large sigma); the diffusion factor clamps
/// there, the drift uses the raw expectation.
pub fn g(params: &Params, tr: Transition, z: State, sigma1: f64) -> Result<f64, ClosureError> {
    if sigma1.is_nan() || sigma1 < 0.0 {
        return Err(ClosureError::NegativeSigma(sigma1));
    }
    Ok(g_unchecked(params, tr, z, sigma1))
}

/// All five closed rates in catalog order.
pub fn g_all(params: &Params, z: State, sigma1: f64) -> Result<[f64; 5], ClosureError> {
    if sigma1.is_nan() || sigma1 < 0.0 {
        return Err(ClosureError::NegativeSigma(sigma1));
    }
    let mut out = [0.0; 5];
    for tr in Transition::ALL {
        out[tr.index()] = g_unchecked(params, tr, z, sigma1);
    }
    Ok(out)
}

/// Closed aggregate drift `G(t, z, sigma1) = sum_i l_i g_i`.
///
/// Collapses to the raw drift `F(t, z)` when `sigma1` is below the floor.
pub fn drift(params: &Params, z: State, sigma1: f64) -> Result<[f64; 2], ClosureError> {
    let g = g_all(params, z, sigma1)?;
    Ok(drift_from_rates(&g))
}

/// `sum_i l_i r_i` for any rate vector in catalog order.
pub fn drift_from_rates(rates: &[f64; 5]) -> [f64; 2] {
    let mut out = [0.0, 0.0];
    for tr in Transition::ALL {
        let l = tr.jump_f64();
        let r = rates[tr.index()];
        out[0] += l[0] * r;
        out[1] += l[1] * r;
    }
    out
}

/// Analytic gradient `A` of the closed drift with respect to the mean,
/// holding `sigma1` fixed.
///
/// With `cdf = P[X1 <= n]`, differentiating the truncated moments gives
/// `d E[min(X1,n)]/dz1 = cdf` and `d E[(X1-n)^+]/dz1 = 1 - cdf`, so
///
/// ```text
/// A = [ -mu1*cdf - beta*(1-cdf)    mu2 ]
///     [ beta*(1-p)*(1-cdf)        -mu2 ]
/// ```
///
/// Below the sigma floor the CDF weight becomes the one-sided indicator
/// `z1 <= n`, recovering the piecewise drift gradient of the raw model.
pub fn gradient(params: &Params, z: State, sigma1: f64) -> [[f64; 2]; 2] {
    let cdf = if sigma1 < SIGMA_FLOOR {
        if z.x1 <= params.n {
            1.0
        } else {
            0.0
        }
    } else {
        gauss_cdf(params.n, z.x1, sigma1)
    };
    gradient_with_service_weight(params, cdf)
}

/// Gradient assembled from an explicit service-side probability weight.
/// The classic solver reuses this with the indicator weight.
pub fn gradient_with_service_weight(params: &Params, cdf: f64) -> [[f64; 2]; 2] {
    [
        [-params.mu1 * cdf - params.beta * (1.0 - cdf), params.mu2],
        [params.beta * (1.0 - params.p) * (1.0 - cdf), -params.mu2],
    ]
}

/// Diffusion factor: row-major 2x5 matrix whose `i`-th column is
/// `l_i * sqrt(max(r_i, 0))`. Negative rates (round-off or origin leakage)
/// clamp to zero.
pub fn diffusion_b(rates: &[f64; 5]) -> [[f64; 5]; 2] {
    let mut b = [[0.0; 5]; 2];
    for tr in Transition::ALL {
        let i = tr.index();
        let s = rates[i].max(0.0).sqrt();
        let l = tr.jump_f64();
        b[0][i] = l[0] * s;
        b[1][i] = l[1] * s;
    }
    b
}

/// `B B'` as a symmetric 2x2 matrix: `sum_i max(r_i, 0) l_i l_i'`.
pub fn diffusion_bbt(rates: &[f64; 5]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for tr in Transition::ALL {
        let r = rates[tr.index()].max(0.0);
        let l = tr.jump_f64();
        m[0][0] += r * l[0] * l[0];
        m[0][1] += r * l[0] * l[1];
        m[1][1] += r * l[1] * l[1];
    }
    m[1][0] = m[0][1];
    m
}

/// One full closure evaluation: closed rates, drift gradient, and diffusion
/// factor at a given mean and `x1` standard deviation.
#[derive(Debug, Clone, Copy)]
pub struct ClosureEval {
    pub g: [f64; 5],
    pub a: [[f64; 2]; 2],
    pub b: [[f64; 5]; 2],
}

impl ClosureEval {
    pub fn at(params: &Params, z: State, sigma1: f64) -> Result<Self, ClosureError> {
        let g = g_all(params, z, sigma1)?;
        Ok(Self {
            g,
            a: gradient(params, z, sigma1),
            b: diffusion_b(&g),
        })
    }

    pub fn bbt(&self) -> [[f64; 2]; 2] {
        diffusion_bbt(&self.g)
    }
}
