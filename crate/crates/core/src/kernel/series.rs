//! Certified evaluation of `K(z) = sum_k a_k / (z + b_k)` and `K'(z)`.
//!
//! The first `N - 1` terms are summed explicitly with `N^beta >= 10 |z|`. On
//! the remaining tail `|z| / k^beta <= 1/10`, so each summand expands into a
//! geometric series in `-z / k^beta` and
//!
//! ```text
//! sum_{k>=N} k^-alpha (z + k^beta)^-(p+1)
//!     = sum_m C(m+p, p) (-z)^m zeta(alpha + beta (m + p + 1), N),
//! ```
//!
//! where the Hurwitz zeta values come from an Euler–Maclaurin expansion with a
//! remainder bounded by the first omitted term.

use num_complex::Complex64;

use super::params::{check_finite, KernelEval, KernelParams};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Hard cap on the explicit partial-sum length.
pub const DEFAULT_TERM_BUDGET: u64 = 100_000_000;

const MIN_TERMS: u64 = 32;

/// `B_{2j} / (2j)!` for `j = 1..=10`.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3_617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
    -174_611.0 / 802_857_662_698_291_200_000.0,
];

const EM_ORDER: usize = 9;

/// Options controlling the adaptive truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub max_terms: u64,
}

impl SeriesOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_terms: DEFAULT_TERM_BUDGET }
    }
}

/// `K(z)` to absolute tolerance `tol`.
pub fn eval_k(params: &KernelParams, z: Complex64, tol: f64) -> Result<KernelEval> {
    eval_series(params, z, 0, SeriesOptions::new(tol))
}

/// `K'(z) = -sum a_k / (z + b_k)^2` to absolute tolerance `tol`.
pub fn eval_kprime(params: &KernelParams, z: Complex64, tol: f64) -> Result<KernelEval> {
    eval_series(params, z, 1, SeriesOptions::new(tol))
}

pub fn eval_k_with(params: &KernelParams, z: Complex64, opts: SeriesOptions) -> Result<KernelEval> {
    eval_series(params, z, 0, opts)
}

pub fn eval_kprime_with(
    params: &KernelParams,
    z: Complex64,
    opts: SeriesOptions,
) -> Result<KernelEval> {
    eval_series(params, z, 1, opts)
}

/// Exclusion radius around each pole `-b_k`.
pub fn pole_exclusion_radius(z: Complex64) -> f64 {
    10.0 * f64::EPSILON * z.norm().max(1.0)
}

/// Fails with `PoleProximity` when `z` is too close to some `-b_k`.
pub fn check_poles(params: &KernelParams, z: Complex64) -> Result<()> {
    let radius = pole_exclusion_radius(z);
    if z.im.abs() > radius || z.re > -1.0 + radius {
        return Ok(());
    }
    let k_mid = (-z.re).powf(1.0 / params.beta());
    let lo = k_mid.floor().max(1.0);
    for k in [lo, lo + 1.0] {
        let distance = (z + params.rate(k)).norm();
        if distance <= radius {
            return Err(Error::PoleProximity { re: z.re, im: z.im, k: k as u64, distance });
        }
    }
    Ok(())
}

fn eval_series(
    params: &KernelParams,
    z: Complex64,
    order: u32,
    opts: SeriesOptions,
) -> Result<KernelEval> {
    check_finite(z, "kernel argument")?;
    if !(opts.tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {}", opts.tol)));
    }
    check_poles(params, z)?;

    let start = initial_terms(params, z);
    if start > opts.max_terms {
        return Err(Error::ToleranceUnreachable {
            tol: opts.tol,
            bound: f64::INFINITY,
            budget: opts.max_terms,
        });
    }
    let mut n_terms = start;
    loop {
        let eval = truncated(params, z, order, n_terms);
        if eval.error_bound <= opts.tol {
            check_finite(eval.value, "kernel value")?;
            return Ok(eval);
        }
        let rounding_floor = rounding_bound(eval.value);
        if rounding_floor > opts.tol || n_terms.saturating_mul(2) > opts.max_terms {
            return Err(Error::ToleranceUnreachable {
                tol: opts.tol,
                bound: eval.error_bound,
                budget: opts.max_terms,
            });
        }
        n_terms *= 2;
    }
}

/// Smallest `N >= 32` with `N^beta >= 10 |z|`.
fn initial_terms(params: &KernelParams, z: Complex64) -> u64 {
    let target = (10.0 * z.norm()).powf(1.0 / params.beta()).ceil();
    if !target.is_finite() || target > 1e18 {
        return u64::MAX;
    }
    let mut n = (target as u64).max(MIN_TERMS);
    // powf rounding can leave n one short of the threshold
    while params.rate(n as f64) < 10.0 * z.norm() {
        n += 1;
    }
    n
}

fn rounding_bound(value: Complex64) -> f64 {
    8.0 * f64::EPSILON * value.norm()
}

/// Evaluates with the explicit partial sum fixed at `n_terms` and reports the
/// resulting error bound, with no tolerance check.
pub fn eval_k_truncated(params: &KernelParams, z: Complex64, n_terms: u64) -> Result<KernelEval> {
    check_finite(z, "kernel argument")?;
    check_poles(params, z)?;
    if n_terms < initial_terms(params, z) {
        return Err(Error::DomainError(format!(
            "n_terms = {n_terms} below the minimum {} for |z| = {}",
            initial_terms(params, z),
            z.norm()
        )));
    }
    Ok(truncated(params, z, 0, n_terms))
}

/// `k^-alpha / (z + k^beta)^(order+1)`, computed so that conjugating `z`
/// conjugates the result bit for bit.
#[inline]
fn term(a: f64, b: f64, z: Complex64, order: u32) -> Complex64 {
    let w = Complex64::new(z.re + b, z.im);
    let w = if order == 0 {
        w
    } else {
        Complex64::new(w.re * w.re - w.im * w.im, 2.0 * w.re * w.im)
    };
    let d = w.re * w.re + w.im * w.im;
    Complex64::new(a * w.re / d, -(a * w.im) / d)
}

fn truncated(params: &KernelParams, z: Complex64, order: u32, n_terms: u64) -> KernelEval {
    let alpha = params.alpha();
    let beta = params.beta();
    let mut acc = CompensatedSum::new();
    for k in 1..n_terms {
        let kf = k as f64;
        let a = if alpha == 1.0 { 1.0 / kf } else { kf.powf(-alpha) };
        let b = if beta == 1.0 { kf } else { kf.powf(beta) };
        acc.add(term(a, b, z, order));
    }

    let (tail, tail_bound) = hurwitz_tail(params, z, order, n_terms);
    let mut value = acc.value() + tail;
    let mut bound = tail_bound + 4.0 * f64::EPSILON * (acc.abs_total() + tail.norm());
    if order == 1 {
        value = -value;
    }
    bound += rounding_bound(value) / 2.0;
    KernelEval { value, error_bound: bound, terms_used: n_terms }
}

/// `sum_{k>=N} k^-alpha (z + k^beta)^-(p+1)` and a bound on its error.
fn hurwitz_tail(params: &KernelParams, z: Complex64, order: u32, n: u64) -> (Complex64, f64) {
    let alpha = params.alpha();
    let beta = params.beta();
    let nf = n as f64;
    let q = z.norm() / nf.powf(beta);
    debug_assert!(q <= 0.1 + 1e-12);

    let p = order as f64;
    let s0 = alpha + beta * (p + 1.0);
    let scale = nf.powf(-s0) * (1.0 + nf / (s0 - 1.0));

    let minus_z = -z;
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = CompensatedSum::new();
    let mut em_error = 0.0;
    let mut m = 0u32;
    let remainder = loop {
        let mf = m as f64;
        let binom = if order == 0 { 1.0 } else { mf + 1.0 };
        let s = alpha + beta * (mf + p + 1.0);
        let (zeta, zeta_err) = hurwitz_zeta(s, nf);
        let weight = binom * power.norm();
        sum.add(power * (binom * zeta));
        em_error += weight * zeta_err;

        m += 1;
        let mf = m as f64;
        // sum_{j>=m} (j+1) q^j <= (m+1) q^m / (1-q)^2
        let rest = scale * (mf + 1.0) * q.powi(m as i32) / ((1.0 - q) * (1.0 - q));
        if rest < 1e-18 * sum.value().norm().max(1e-300) || m >= 400 {
            break rest;
        }
        power *= minus_z;
    };
    let value = sum.value();
    (value, remainder + em_error + 4.0 * f64::EPSILON * sum.abs_total())
}

/// Hurwitz zeta `sum_{k>=n} k^-s` for real `s > 1`, `n >= 32`, with an error bound.
pub(crate) fn hurwitz_zeta(s: f64, n: f64) -> (f64, f64) {
    let n_pow = n.powf(-s);
    let mut value = n * n_pow / (s - 1.0) + 0.5 * n_pow;
    // rising factorial s (s+1) ... (s+2j-2) times n^(-s-2j+1)
    let mut factor = s * n_pow / n;
    let inv_n2 = 1.0 / (n * n);
    let mut last = 0.0;
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = coef * factor;
        if j == EM_ORDER {
            last = term.abs();
            break;
        }
        value += term;
        let jf = (j + 1) as f64;
        factor *= (s + 2.0 * jf - 1.0) * (s + 2.0 * jf) * inv_n2;
    }
    (value, last)
}
