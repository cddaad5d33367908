//! The integral surrogate `h(z) = int_1^inf dx / (x^alpha (z + x^beta))`
//! and the Euler integral `int_0^inf t^-r / (1 + t) dt = pi / sin(pi r)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::params::{check_finite, check_sector, KernelEval, KernelParams, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::quadrature::integrate;

const MAX_SEGMENTS: usize = 4000;

/// `h(z)` on the default sector `|arg z| <= 5 pi / 6`.
pub fn eval_h(params: &KernelParams, z: Complex64, tol: f64) -> Result<KernelEval> {
    eval_h_in_sector(params, z, tol, DEFAULT_DELTA)
}

/// `h(z)` for `|arg z| <= pi - delta`.
///
/// Substituting `t = x^beta` gives `h = (1/beta) int_1^inf t^-r / (z + t) dt`.
/// With `u = ln t` the finite part `[1, T]`, `T = 10 max(2, |z|)`, is handled by
/// adaptive Gauss–Kronrod (split at `max(2, |z|)`); beyond `T` the integrand
/// expands in `-z / t` and integrates term by term.
pub fn eval_h_in_sector(
    params: &KernelParams,
    z: Complex64,
    tol: f64,
    delta: f64,
) -> Result<KernelEval> {
    check_finite(z, "integral argument")?;
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    check_sector(z, delta)?;

    let r = params.r();
    let beta = params.beta();
    let split = z.norm().max(2.0);
    let cutoff = 10.0 * split;

    let integrand = |u: f64| {
        let t = u.exp();
        let w = Complex64::new(z.re + t, z.im);
        let d = w.re * w.re + w.im * w.im;
        let g = ((1.0 - r) * u).exp();
        Complex64::new(g * w.re / d, -(g * w.im) / d)
    };
    // half of the budget to the quadrature, the rest to the tail and rounding
    let quad = integrate(integrand, 0.0, cutoff.ln(), &[split.ln()], 0.25 * tol * beta, 0.0, MAX_SEGMENTS)?;

    let (tail, tail_rem) = power_tail(z, r, cutoff);
    let value = (quad.value + tail) / beta;
    let error_bound = (quad.error + tail_rem) / beta + 8.0 * f64::EPSILON * value.norm();
    if error_bound > tol {
        return Err(Error::QuadratureFailure { tol, estimate: error_bound });
    }
    check_finite(value, "integral value")?;
    Ok(KernelEval { value, error_bound, terms_used: quad.intervals as u64 })
}

/// `int_T^inf t^-r / (z + t) dt = sum_m (-z)^m T^(-r-m) / (r + m)` for `|z| < T`.
fn power_tail(z: Complex64, r: f64, cutoff: f64) -> (Complex64, f64) {
    let q = z.norm() / cutoff;
    let base = cutoff.powf(-r);
    let step = -z / cutoff;
    let mut power = Complex64::new(base, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut m = 0u32;
    loop {
        let mf = m as f64;
        sum += power / (r + mf);
        m += 1;
        let rest = base * q.powi(m as i32) / ((r + m as f64) * (1.0 - q));
        if rest < 1e-19 * base || m > 200 {
            return (sum, rest);
        }
        power = Complex64::new(
            power.re * step.re - power.im * step.im,
            power.re * step.im + power.im * step.re,
        );
    }
}

/// Closed form `pi / sin(pi r)` for `0 < r < 1`.
pub fn euler_integral(r: f64) -> Result<f64> {
    check_euler_domain(r)?;
    Ok(PI / (PI * r).sin())
}

/// Numerical value of `int_0^inf t^-r / (1 + t) dt` and its error estimate.
///
/// Uses `t = e^u`; the integrand decays like `e^((1-r) u)` on the left and
/// `e^(-r u)` on the right, so the range is cut where both tails are below
/// `e^-40`.
pub fn euler_integral_quadrature(r: f64) -> Result<(f64, f64)> {
    check_euler_domain(r)?;
    let left = 40.0 / (1.0 - r);
    let right = 40.0 / r;
    let integrand = |u: f64| {
        let v = if u < 0.0 {
            ((1.0 - r) * u).exp() / (1.0 + u.exp())
        } else {
            (-r * u).exp() / (1.0 + (-u).exp())
        };
        Complex64::new(v, 0.0)
    };
    let quad = integrate(integrand, -left, right, &[0.0], 0.0, 1e-13, MAX_SEGMENTS)?;
    let tails = (-40f64).exp() * (1.0 / r + 1.0 / (1.0 - r));
    Ok((quad.value.re, quad.error + tails))
}

fn check_euler_domain(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("Euler integral requires 0 < r < 1, got r = {r}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn logarithmic_closed_form() {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let h = eval_h(&p, c(1.0, 0.0), 1e-12).unwrap();
        assert!((h.value.re - LN_2).abs() < 1e-12, "{:?}", h);

        let p = KernelParams::new(1.0, 2.0).unwrap();
        let h = eval_h(&p, c(1.0, 0.0), 1e-12).unwrap();
        assert!((h.value.re - LN_2 / 2.0).abs() < 1e-12);

        let z = c(-3.0, 7.0);
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let h = eval_h(&p, z, 1e-12).unwrap();
        let exact = (z + 1.0).ln() / z;
        assert!((h.value - exact).norm() < 1e-12);
    }

    #[test]
    fn mpmath_reference_value() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let h = eval_h(&p, c(0.0, 100.0), 1e-12).unwrap();
        assert!((h.value - c(0.222077483098212687, -0.202144546885697628)).norm() < 1e-12);
    }

    #[test]
    fn zero_argument() {
        // h(0) = 1 / (beta r)
        let p = KernelParams::new(0.5, 2.0).unwrap();
        let h = eval_h(&p, c(0.0, 0.0), 1e-12).unwrap();
        assert!((h.value.re - 1.0 / (2.0 * p.r())).abs() < 1e-12);
    }

    #[test]
    fn sector_guard() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let z = Complex64::from_polar(50.0, PI - 0.1);
        assert!(matches!(eval_h(&p, z, 1e-10), Err(Error::SectorViolation { .. })));
        assert!(eval_h_in_sector(&p, z, 1e-10, 0.05).is_ok());
    }

    #[test]
    fn euler_values() {
        assert!((euler_integral(0.5).unwrap() - PI).abs() < 1e-15);
        assert!((euler_integral(0.25).unwrap() - PI * 2f64.sqrt()).abs() < 1e-14);
        for r in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let (q, err) = euler_integral_quadrature(r).unwrap();
            let exact = euler_integral(r).unwrap();
            assert!(((q - exact) / exact).abs() < 1e-10, "r={r} q={q} exact={exact}");
            assert!(err < 1e-9);
        }
        assert!(euler_integral(1.0).is_err());
        assert!(euler_integral_quadrature(0.0).is_err());
    }
}
