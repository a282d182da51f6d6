//! Scalar special functions: standard normal and Student-t distribution
//! functions, and the first-order Debye function used by the Frank family.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::quadrature;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile. Returns `-inf` / `+inf` at 0 / 1.
///
/// `erfc_inv` alone is good to about 1e-10; one Halley step on `norm_cdf`
/// brings it to working precision.
#[inline]
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // Φ(x) - p, evaluated on the side of the smaller tail
    let e = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
    let u = e / norm_pdf(x);
    if !u.is_finite() {
        return x;
    }
    x - u / (1.0 + 0.5 * x * u)
}

/// Log of the Student-t density normalizing constant.
#[inline]
pub fn t_log_norm_const(nu: f64) -> f64 {
    libm::lgamma(0.5 * (nu + 1.0)) - libm::lgamma(0.5 * nu) - 0.5 * (nu * PI).ln()
}

/// Student-t density with `nu` degrees of freedom.
pub fn t_pdf(x: f64, nu: f64) -> f64 {
    (t_log_norm_const(nu) - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

/// Upper tail probability `P(T > x)` for `x >= 0`.
fn t_upper(x: f64, nu: f64) -> f64 {
    let x2 = x * x;
    if x2 < nu {
        // Small |x|: the complementary form keeps relative precision near 1/2.
        0.5 - 0.5 * beta_reg(0.5, 0.5 * nu, x2 / (nu + x2))
    } else {
        0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x2))
    }
}

/// Student-t distribution function.
pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    if x >= 0.0 {
        1.0 - t_upper(x, nu)
    } else {
        t_upper(-x, nu)
    }
}

/// Student-t quantile.
///
/// Hill's (1970) approximation followed by Taylor-series corrections on the
/// tail probability, as done in R's `qt`.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let lower = p < 0.5;
    // two-sided tail probability
    let tail = if lower { 2.0 * p } else { 2.0 * (1.0 - p) };
    let mut q = hill_start(tail, nu);
    for _ in 0..10 {
        let dens = t_pdf(q, nu);
        if dens <= 0.0 || !q.is_finite() {
            break;
        }
        let x = (t_upper(q, nu) - 0.5 * tail) / dens;
        q += x * (1.0 + x * q * (nu + 1.0) / (2.0 * (q * q + nu)));
        if x.abs() <= 1e-14 * q.abs().max(1e-300) {
            break;
        }
    }
    if lower {
        -q
    } else {
        q
    }
}

fn hill_start(tail: f64, nu: f64) -> f64 {
    if (nu - 2.0).abs() < 1e-12 {
        // exact for two degrees of freedom
        let a = 1.0 - tail;
        return (2.0 * a * a / (tail * (2.0 - tail))).sqrt();
    }
    if (nu - 1.0).abs() < 1e-12 {
        return (0.5 * PI * (1.0 - tail)).tan().abs();
    }
    let a = 1.0 / (nu - 0.5);
    let b = 48.0 / (a * a);
    let mut c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
    let d = ((94.5 / (b + c) - 3.0) / b + 1.0) * (a * PI / 2.0).sqrt() * nu;
    let mut y = (d * tail).powf(2.0 / nu);
    if y > 0.05 + a {
        let x = norm_quantile(0.5 * tail);
        y = x * x;
        if nu < 5.0 {
            c += 0.3 * (nu - 4.5) * (x + 0.6);
        }
        c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
        y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
        y = (a * y * y).exp_m1();
    } else {
        y = ((1.0 / (((nu + 6.0) / (nu * y) - 0.089 * d - 0.822) * (nu + 2.0) * 3.0)
            + 0.5 / (nu + 4.0))
            * y
            - 1.0)
            * (nu + 1.0)
            / (nu + 2.0)
            + 1.0 / y;
    }
    (nu * y).sqrt()
}

/// First-order Debye function `D1(x) = (1/x) ∫_0^x t / (e^t - 1) dt`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() < 1e-4 {
        return 1.0 - x / 4.0 + x * x / 36.0;
    }
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let (a, b) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
    let sign = if x > 0.0 { 1.0 } else { -1.0 };
    let r = quadrature::adaptive(integrand, a, b, 1e-14, 30);
    sign * r.value / x
}
