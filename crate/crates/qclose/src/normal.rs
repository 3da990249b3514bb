//! Standard normal CDF and PDF.
//!
//! The CDF is built on Cody's three-region rational approximation of
//! erf/erfc (the CALERF scheme), which keeps the relative error near machine
//! precision over the whole real line. The closure formulas lean on CDF
//! accuracy well past what the common Abramowitz–Stegun fits provide, so the
//! primitive is implemented in full rather than with a short polynomial.

// coefficients below carry their published digits
#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1/sqrt(pi)
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_28;

const ERF_THRESHOLD: f64 = 0.46875;

// Rational coefficients for erf on [0, 0.46875].
const A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const B: [f64; 4] = [
    2.360_129_095_234_412_1e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];

// Rational coefficients for erfc on (0.46875, 4].
const C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_376e0,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_691e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
const D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_098_5e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_7e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];

// Rational coefficients for the asymptotic erfc correction beyond 4.
const P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_4e0,
    1.872_952_849_923_460_5e0,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];

/// exp(-y^2) split so the large-argument relative error stays small.
fn exp_neg_y_squared(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= ERF_THRESHOLD {
        let z = y * y;
        let mut num = A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + A[i]) * z;
            den = (den + B[i]) * z;
        }
        x * (num + A[3]) / (den + B[3])
    } else if x > 0.0 {
        1.0 - erfc_positive(y)
    } else {
        erfc_positive(y) - 1.0
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = x.abs();
    if y <= ERF_THRESHOLD {
        1.0 - erf(x)
    } else if x > 0.0 {
        erfc_positive(y)
    } else {
        2.0 - erfc_positive(y)
    }
}

/// erfc for y > 0.46875.
fn erfc_positive(y: f64) -> f64 {
    if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        exp_neg_y_squared(y) * (num + C[7]) / (den + D[7])
    } else if y < 26.6 {
        let z = 1.0 / (y * y);
        let mut num = P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + P[i]) * z;
            den = (den + Q[i]) * z;
        }
        let r = z * (num + P[4]) / (den + Q[4]);
        exp_neg_y_squared(y) * (FRAC_1_SQRT_PI - r) / y
    } else {
        // exp(-y^2) underflows; the true value is below f64::MIN_POSITIVE.
        0.0
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u * FRAC_1_SQRT_2)
}

/// Standard normal PDF.
pub fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_is_half_at_zero() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
    }

    #[test]
    fn pdf_peak_is_inverse_root_two_pi() {
        assert_relative_eq!(
            std_normal_pdf(0.0),
            1.0 / (2.0 * PI).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn cdf_symmetry() {
        for u in [0.1, 0.5, 1.0, 2.0, 3.5, 7.0] {
            let s = std_normal_cdf(u) + std_normal_cdf(-u);
            assert_relative_eq!(s, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn cdf_monotone_and_bounded() {
        let mut prev = 0.0;
        let mut u = -12.0;
        while u <= 12.0 {
            let c = std_normal_cdf(u);
            assert!((0.0..=1.0).contains(&c));
            assert!(c >= prev);
            prev = c;
            u += 0.01;
        }
    }

    #[test]
    fn erf_erfc_complement() {
        for x in [-8.0, -2.0, -0.3, 0.0, 0.2, 1.0, 3.0, 9.0] {
            assert_relative_eq!(erf(x) + erfc(x), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn extreme_tails_saturate() {
        assert_eq!(std_normal_cdf(-40.0), 0.0);
        assert_eq!(std_normal_cdf(40.0), 1.0);
        assert!(std_normal_cdf(-8.0) > 0.0);
    }
}
