//! Ground truth independent of the adaptive kernel evaluator and of the
//! fixed-point solver: a plain partial sum of `K` with an integral tail, and
//! argument-principle zero counting for `D_n` on rectangles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::charfunc::ModeProblem;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || !(re_min < re_max) || !(im_min < im_max) {
            return Err(Error::DomainError(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    /// Square of half-width `pad` centred at `z`.
    pub fn around(z: Complex64, pad: f64) -> Result<Self> {
        Self::new(z.re - pad, z.re + pad, z.im - pad, z.im + pad)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    /// Mirror image in the real axis.
    pub fn conj(&self) -> Self {
        Self { re_min: self.re_min, re_max: self.re_max, im_min: -self.im_max, im_max: -self.im_min }
    }

    /// Splits along the real (`axis == 0`) or imaginary axis at `fraction`.
    pub fn split(&self, axis: usize, fraction: f64) -> (Self, Self) {
        if axis == 0 {
            let cut = self.re_min + fraction * (self.re_max - self.re_min);
            (Self { re_max: cut, ..*self }, Self { re_min: cut, ..*self })
        } else {
            let cut = self.im_min + fraction * (self.im_max - self.im_min);
            (Self { im_max: cut, ..*self }, Self { im_min: cut, ..*self })
        }
    }

    /// Counterclockwise corners starting at the lower left.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// Box used to certify a solver root `z` in the upper half-plane: half-width
/// `max(5, 3 |Re z|)` around `z`, with the lower edge held at or above
/// `Im z / 2` so the real axis (poles `-b_k`, real zeros, `conj z`) stays outside.
pub fn isolating_rectangle(z: Complex64) -> Rectangle {
    let pad = (3.0 * z.re.abs()).max(5.0);
    Rectangle {
        re_min: z.re - pad,
        re_max: z.re + pad,
        im_min: (z.im - pad).max(0.5 * z.im),
        im_max: z.im + pad,
    }
}

/// Plain left-to-right partial sum of the first `terms` terms of `K(z)` plus
/// the integral of the summand over `[terms + 1/2, inf)`.
pub fn brute_k(params: &KernelParams, z: Complex64, terms: u64) -> Complex64 {
    let terms = terms.max(1);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..=terms {
        let kf = k as f64;
        sum += kf.powf(-params.alpha()) / (z + kf.powf(params.beta()));
    }
    sum + integral_tail(params, z, terms as f64 + 0.5)
}

/// Rough bound on `|brute_k - K|`: midpoint-rule error of the tail plus
/// accumulated rounding. Infinite when the tail expansion does not apply.
pub fn brute_k_error_estimate(params: &KernelParams, z: Complex64, terms: u64) -> f64 {
    let m = terms.max(1) as f64 + 0.5;
    let q = z.norm() / m.powf(params.beta());
    if q >= 0.5 {
        return f64::INFINITY;
    }
    let s = params.alpha() + params.beta();
    // sum_{k>M} |f''(k)| / 24 with |f''(x)| <= 8 s (s+1) x^(-s-2) for q < 1/2
    let midpoint = s * m.powf(-s - 1.0) / 3.0;
    let head = 1.0 + s / (s - 1.0);
    midpoint + terms as f64 * f64::EPSILON * head
}

/// `int_M^inf x^-alpha / (z + x^beta) dx = sum_j (-z)^j M^(1-alpha-beta(j+1)) / (alpha + beta(j+1) - 1)`.
fn integral_tail(params: &KernelParams, z: Complex64, m: f64) -> Complex64 {
    let alpha = params.alpha();
    let beta = params.beta();
    let mb = m.powf(beta);
    if z.norm() >= 0.5 * mb {
        return Complex64::new(0.0, 0.0);
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut factor = Complex64::new(m.powf(1.0 - alpha - beta), 0.0);
    for j in 0..200 {
        let e = alpha + beta * (j as f64 + 1.0) - 1.0;
        let term = factor / e;
        total += term;
        if term.norm() < 1e-20 * total.norm() {
            break;
        }
        factor = factor * (-z) / mb;
    }
    total
}

/// Coefficient tables for repeated brute-force evaluation of `D_n`.
struct OracleKernel {
    params: KernelParams,
    n2: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

const ORACLE_MIN_TERMS: usize = 20_000;
const ORACLE_MAX_TERMS: usize = 50_000_000;

impl OracleKernel {
    fn new(problem: &ModeProblem, rect: &Rectangle) -> Self {
        let params = problem.params;
        let reach = rect.corners().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let needed = (4.0 * reach).powf(1.0 / params.beta()).ceil();
        let terms = if needed.is_finite() {
            (needed as usize).clamp(ORACLE_MIN_TERMS, ORACLE_MAX_TERMS)
        } else {
            ORACLE_MAX_TERMS
        };
        let a = (1..=terms).map(|k| (k as f64).powf(-params.alpha())).collect();
        let b = (1..=terms).map(|k| (k as f64).powf(params.beta())).collect();
        let n = problem.n as f64;
        Self { params, n2: n * n, a, b }
    }

    fn char_fn(&self, z: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (a, b) in self.a.iter().zip(&self.b) {
            sum += *a / (z + *b);
        }
        let k = sum + integral_tail(&self.params, z, self.a.len() as f64 + 0.5);
        z * z / self.n2 + 1.0 - k
    }
}

/// `D_n(z)` evaluated through the brute-force partial sum.
pub fn oracle_char_fn(problem: &ModeProblem, z: Complex64) -> Complex64 {
    let rect = Rectangle::around(z, 1.0).expect("finite point");
    OracleKernel::new(problem, &rect).char_fn(z)
}

/// Boundary sampling controls for the winding computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingOptions {
    pub segments_per_edge: usize,
    /// Largest accepted phase change between neighbouring samples.
    pub max_phase_step: f64,
    /// Samples with `|D_n|` below this are treated as touching a zero.
    pub threshold: f64,
    /// Accepted distance of the winding number from an integer.
    pub integer_tolerance: f64,
    pub max_depth: u32,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self {
            segments_per_edge: 8,
            max_phase_step: PI / 2.0,
            threshold: 1e-10,
            integer_tolerance: 0.2,
            max_depth: 40,
        }
    }
}

/// Number of zeros of `D_n` inside `rect` (minus poles, which the caller keeps
/// outside by placement).
pub fn count_zeros(problem: &ModeProblem, rect: &Rectangle) -> Result<i64> {
    count_zeros_with(problem, rect, &WindingOptions::default())
}

pub fn count_zeros_with(problem: &ModeProblem, rect: &Rectangle, opts: &WindingOptions) -> Result<i64> {
    let kernel = OracleKernel::new(problem, rect);
    winding(&kernel, rect, opts)
}

fn winding(kernel: &OracleKernel, rect: &Rectangle, opts: &WindingOptions) -> Result<i64> {
    check_pole_clearance(&kernel.params, rect)?;
    let corners = rect.corners();
    let segs = opts.segments_per_edge.max(1);
    let nodes: Vec<Complex64> = (0..4)
        .flat_map(|e| {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            (0..segs).map(move |j| a + (b - a) * (j as f64 / segs as f64))
        })
        .collect();
    let values: Vec<Complex64> = nodes.par_iter().map(|&z| kernel.char_fn(z)).collect();
    for (z, v) in nodes.iter().zip(&values) {
        check_sample(*z, *v, opts)?;
    }
    let m = nodes.len();
    let pieces: Vec<Result<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let j = (i + 1) % m;
            phase_change(kernel, nodes[i], values[i], nodes[j], values[j], opts, 0)
        })
        .collect();
    let mut total = 0.0;
    for p in pieces {
        total += p?;
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > opts.integer_tolerance {
        return Err(Error::NonIntegerWinding(w));
    }
    Ok(rounded as i64)
}

fn check_sample(z: Complex64, v: Complex64, opts: &WindingOptions) -> Result<()> {
    if !(v.re.is_finite() && v.im.is_finite()) || v.norm() < opts.threshold {
        return Err(Error::BoundaryTooClose { re: z.re, im: z.im, value: v.norm() });
    }
    Ok(())
}

fn phase_change(
    kernel: &OracleKernel,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    opts: &WindingOptions,
    depth: u32,
) -> Result<f64> {
    let delta = (fb / fa).arg();
    if delta.abs() < opts.max_phase_step {
        return Ok(delta);
    }
    if depth >= opts.max_depth {
        return Err(Error::NonIntegerWinding(f64::NAN));
    }
    let zm = 0.5 * (za + zb);
    let fm = kernel.char_fn(zm);
    check_sample(zm, fm, opts)?;
    Ok(phase_change(kernel, za, fa, zm, fm, opts, depth + 1)?
        + phase_change(kernel, zm, fm, zb, fb, opts, depth + 1)?)
}

/// Rejects rectangles whose boundary crosses the real axis at a pole `-b_k`.
fn check_pole_clearance(params: &KernelParams, rect: &Rectangle) -> Result<()> {
    if rect.im_min > 0.0 || rect.im_max < 0.0 || rect.re_min >= -1.0 + 1e-9 {
        return Ok(());
    }
    let clearance = 1e-6;
    for x in [rect.re_min, rect.re_max] {
        if x < 0.0 {
            let k = (-x).powf(1.0 / params.beta()).round().max(1.0);
            let pole = -params.rate(k);
            if (x - pole).abs() < clearance * pole.abs().max(1.0) {
                return Err(Error::BoundaryTooClose { re: x, im: 0.0, value: f64::INFINITY });
            }
        }
    }
    Ok(())
}

const SPLIT_FRACTIONS: [f64; 6] = [0.5, 0.4375, 0.5625, 0.375, 0.625, 0.3125];

/// Bisects `rect` (alternating axes) keeping the half that holds the zero,
/// until the diameter is below `tol`; returns the final centre.
pub fn locate_zero(problem: &ModeProblem, rect: &Rectangle, tol: f64) -> Result<Complex64> {
    let opts = WindingOptions::default();
    let kernel = OracleKernel::new(problem, rect);
    let count = winding(&kernel, rect, &opts)?;
    if count != 1 {
        return Err(Error::DomainError(format!(
            "locate_zero needs exactly one zero in the rectangle, found {count}"
        )));
    }
    let mut current = *rect;
    let mut axis = 0;
    while current.diameter() >= tol {
        let mut next = None;
        let mut last_err = Error::LostZero;
        for fraction in SPLIT_FRACTIONS {
            let (first, second) = current.split(axis, fraction);
            match pick_half(&kernel, &first, &second, &opts) {
                Ok(r) => {
                    next = Some(r);
                    break;
                }
                Err(e) => last_err = e,
            }
        }
        current = next.ok_or(last_err)?;
        axis ^= 1;
    }
    Ok(current.center())
}

fn pick_half(kernel: &OracleKernel, first: &Rectangle, second: &Rectangle, opts: &WindingOptions) -> Result<Rectangle> {
    match winding(kernel, first, opts)? {
        1 => return Ok(*first),
        0 => {}
        _ => return Err(Error::LostZero),
    }
    match winding(kernel, second, opts)? {
        1 => Ok(*second),
        _ => Err(Error::LostZero),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfunc::{solve_mode, Tolerances};

    fn problem(alpha: f64, beta: f64, n: u64) -> ModeProblem {
        ModeProblem::new(n, KernelParams::new(alpha, beta).unwrap(), Tolerances::default()).unwrap()
    }

    #[test]
    fn brute_anchors() {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let k1 = brute_k(&p, Complex64::new(1.0, 0.0), 1_000_000);
        assert!((k1 - 1.0).norm() < 1e-6);
        let k0 = brute_k(&p, Complex64::new(0.0, 0.0), 1_000_000);
        assert!((k0.re - PI * PI / 6.0).abs() < 1e-5);
    }

    #[test]
    fn brute_reference_value() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let z = Complex64::new(0.0, 10.0);
        let k = brute_k(&p, z, 200_000);
        assert!((k - Complex64::new(0.700401756041831205, -0.556471552105600841)).norm() < 1e-11);
        assert!(brute_k_error_estimate(&p, z, 200_000) < 1e-9);
    }

    #[test]
    fn zero_free_rectangle() {
        let p = problem(0.5, 1.0, 100);
        let rect = Rectangle::new(10.0, 11.0, 0.5, 1.0).unwrap();
        assert_eq!(count_zeros(&p, &rect).unwrap(), 0);
    }

    #[test]
    fn isolates_solver_root() {
        let p = problem(0.5, 1.0, 100);
        let s = solve_mode(&p).unwrap();
        let rect = Rectangle::around(s.z, 5.0).unwrap();
        assert_eq!(count_zeros(&p, &rect).unwrap(), 1);
        assert_eq!(count_zeros(&p, &rect.conj()).unwrap(), 1);

        let z = locate_zero(&p, &rect, 1e-7).unwrap();
        assert!((z - s.z).norm() < 1e-6, "{z} vs {}", s.z);
        let zc = locate_zero(&p, &rect.conj(), 1e-7).unwrap();
        assert!((zc - s.z.conj()).norm() < 1e-6);
    }

    #[test]
    fn rejects_empty_rectangle() {
        let p = problem(0.5, 1.0, 100);
        let rect = Rectangle::new(10.0, 11.0, 0.5, 1.0).unwrap();
        assert!(matches!(locate_zero(&p, &rect, 1e-6), Err(Error::DomainError(_))));
        assert!(Rectangle::new(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sampling_refinement_is_stable() {
        let p = problem(0.75, 1.0, 50);
        let s = solve_mode(&p).unwrap();
        let rect = Rectangle::around(s.z, 6.0).unwrap();
        let coarse = WindingOptions { segments_per_edge: 4, ..Default::default() };
        let fine = WindingOptions { segments_per_edge: 8, ..Default::default() };
        assert_eq!(count_zeros_with(&p, &rect, &coarse).unwrap(), count_zeros_with(&p, &rect, &fine).unwrap());
    }

    #[test]
    fn counts_are_additive() {
        let p = problem(1.0, 1.0, 60);
        let s = solve_mode(&p).unwrap();
        let rect = Rectangle::new(s.z.re - 4.1, s.z.re + 3.3, s.z.im - 2.7, s.z.im + 5.2).unwrap();
        let whole = count_zeros(&p, &rect).unwrap();
        let (l, r) = rect.split(0, 0.37);
        let (ll, lu) = l.split(1, 0.61);
        let (rl, ru) = r.split(1, 0.61);
        let parts: i64 = [ll, lu, rl, ru].iter().map(|q| count_zeros(&p, q).unwrap()).sum();
        assert_eq!(whole, 1);
        assert_eq!(parts, whole);
    }
}
