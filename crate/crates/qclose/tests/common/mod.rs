//! Independent numerical oracles shared by the integration tests.
//!
//! Everything here deliberately avoids the crate's own normal-CDF and
//! closure code paths: expectations come from adaptive Simpson quadrature
//! against a plain `exp` Gaussian density, and reference CDF values come
//! from a Maclaurin series for erf.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gaussian density with mean `mu` and standard deviation `sigma`.
pub fn gauss_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let u = (x - mu) / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * PI).sqrt())
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `eps`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_rule(a, b, fa, fm, fb);
    adaptive_step(&f, a, b, fa, fm, fb, whole, eps, 60)
}

/// `E[h(X)]` for `X ~ N(mu, sigma^2)` by quadrature, splitting the domain at
/// `kink` so the integrand is smooth on each piece. The window `mu +- 12
/// sigma` leaves truncation far below the comparison tolerances.
pub fn gaussian_expectation(h: impl Fn(f64) -> f64, mu: f64, sigma: f64, kink: Option<f64>) -> f64 {
    let lo = mu - 12.0 * sigma;
    let hi = mu + 12.0 * sigma;
    let integrand = |x: f64| h(x) * gauss_density(x, mu, sigma);
    let mut cuts = vec![lo];
    if let Some(k) = kink {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        // crude magnitude estimate scales the absolute tolerance
        let rough = adaptive_simpson(integrand, w[0], w[1], 1e-6);
        let eps = 1e-12 * rough.abs().max(1e-4);
        total += adaptive_simpson(integrand, w[0], w[1], eps);
    }
    total
}

/// erf by Maclaurin series; converges to full precision for |z| <= 4.
pub fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut k = 0u32;
    loop {
        k += 1;
        let kf = f64::from(k);
        term *= -z * z / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-18) || k > 200 {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

/// Standard normal CDF from the series erf, for |u| <= ~5.
pub fn normal_cdf_series(u: f64) -> f64 {
    0.5 * (1.0 + erf_series(u / std::f64::consts::SQRT_2))
}

/// Central finite difference of a scalar function of a 2-vector.
pub fn central_diff(f: impl Fn([f64; 2]) -> f64, z: [f64; 2], j: usize, step: f64) -> f64 {
    let mut up = z;
    let mut dn = z;
    up[j] += step;
    dn[j] -= step;
    (f(up) - f(dn)) / (2.0 * step)
}
