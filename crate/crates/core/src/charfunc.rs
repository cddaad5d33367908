//! Per-mode characteristic function `D_n(z) = z^2/n^2 + 1 - K(z)` and the
//! location of its zero `z_n^+` near `+in`.
//!
//! With `z = in + n tau` the equation `D_n(z) = 0` becomes
//! `tau (tau + 2i) = K(z)`, i.e. `tau` is a fixed point of
//! `g_n(tau) = K(in + n tau) / (tau + 2i)`. For large `n` the map contracts on
//! `|tau| < 1/2` and iterating from `tau = 0` converges; the result is then
//! polished by Newton's method on `D_n`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{predict, ConstantVariant};
use crate::error::{Error, Result};
use crate::kernel::{check_poles, eval_k, eval_kprime, KernelParams};
use crate::oracle::{self, Rectangle};

/// Radius of the disc on which the fixed-point map is iterated.
pub const CONTRACTION_RADIUS: f64 = 0.5;

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Stop the fixed-point iteration once `|tau_{k+1} - tau_k|` drops below this.
    pub tol_fp: f64,
    /// Certified bound on `|D_n(z)|` for every reported root.
    pub tol_residual: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_fp: 1e-12, tol_residual: 1e-10, max_iter: 500 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_fp > 0.0 && self.tol_residual > 0.0) {
            return Err(Error::DomainError("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::DomainError("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One mode `n` of the spectral problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProblem {
    pub n: u64,
    pub params: KernelParams,
    pub tol: Tolerances,
}

impl ModeProblem {
    pub fn new(n: u64, params: KernelParams, tol: Tolerances) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("mode index n must be at least 1".into()));
        }
        tol.validate()?;
        Ok(Self { n, params, tol })
    }

    pub fn with_defaults(n: u64, params: KernelParams) -> Result<Self> {
        Self::new(n, params, Tolerances::default())
    }

    /// Tolerance used for `K` inside `D_n`.
    pub fn kernel_tol(&self) -> f64 {
        self.tol.tol_residual / 10.0
    }

    /// `in + n tau`.
    pub fn z_from_tau(&self, tau: Complex64) -> Complex64 {
        let n = self.n as f64;
        Complex64::new(n * tau.re, n + n * tau.im)
    }

    /// `(z - in) / n`.
    pub fn tau_from_z(&self, z: Complex64) -> Complex64 {
        let n = self.n as f64;
        Complex64::new(z.re / n, (z.im - n) / n)
    }
}

/// How a root was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Contraction iteration on `|tau| < 1/2`, then Newton polish.
    FixedPoint,
    /// Newton seeded by the asymptotic prediction.
    PredictionNewton,
    /// Iteration of `z = i n sqrt(1 - K(z))`, then Newton polish.
    RootForm,
    /// Argument-principle bisection, then Newton polish.
    OracleSeeded,
}

/// Per-root diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: SolveMethod,
    /// Step sizes `|tau_{k+1} - tau_k|` of the fixed-point iteration.
    pub fp_steps: Vec<f64>,
    /// Iteration at which the fixed-point iterate left `|tau| < 1/2`.
    pub escaped_at: Option<usize>,
    /// `|D_n|` at the fixed-point result before refinement.
    pub fp_residual: Option<f64>,
    /// `|D_n|` after Newton refinement.
    pub newton_residual: Option<f64>,
    pub newton_steps: usize,
}

/// A located zero `z_n^+`; its partner `z_n^-` is `conj(z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub n: u64,
    pub z: Complex64,
    pub tau: Complex64,
    /// `|D_n(z)|` plus the truncation bound of `K`.
    pub residual: f64,
    pub iterations: usize,
    pub refined: bool,
    /// Leading-order prediction with the constant `c_r`.
    pub prediction: Complex64,
    pub deviation: f64,
    /// Leading-order prediction with the constant `c_r / 2`.
    pub prediction_half: Complex64,
    pub deviation_half: f64,
    pub diagnostics: Diagnostics,
}

impl SpectrumPoint {
    pub fn conjugate_root(&self) -> Complex64 {
        self.z.conj()
    }

    pub fn prediction_for(&self, variant: ConstantVariant) -> (Complex64, f64) {
        match variant {
            ConstantVariant::AsStated => (self.prediction, self.deviation),
            ConstantVariant::Half => (self.prediction_half, self.deviation_half),
        }
    }
}

/// `D_n(z)` together with the truncation bound carried over from `K`.
pub fn char_fn_eval(problem: &ModeProblem, z: Complex64) -> Result<(Complex64, f64)> {
    let k = eval_k(&problem.params, z, problem.kernel_tol())?;
    let n2 = (problem.n as f64) * (problem.n as f64);
    let z2 = Complex64::new(z.re * z.re - z.im * z.im, 2.0 * z.re * z.im);
    let value = Complex64::new(z2.re / n2 + 1.0 - k.value.re, z2.im / n2 - k.value.im);
    Ok((value, k.error_bound))
}

/// `D_n(z) = z^2 / n^2 + 1 - K(z)`.
pub fn char_fn(problem: &ModeProblem, z: Complex64) -> Result<Complex64> {
    char_fn_eval(problem, z).map(|(v, _)| v)
}

/// `D_n'(z) = 2z / n^2 - K'(z)`.
pub fn char_fn_derivative(problem: &ModeProblem, z: Complex64) -> Result<Complex64> {
    let kp = eval_kprime(&problem.params, z, problem.kernel_tol())?;
    let n2 = (problem.n as f64) * (problem.n as f64);
    Ok(2.0 * z / n2 - kp.value)
}

/// `g_n(tau) = K(in + n tau) / (tau + 2i)` on `|tau| < 1/2`.
pub fn g_map(problem: &ModeProblem, tau: Complex64) -> Result<Complex64> {
    let modulus = tau.norm();
    if !(modulus < CONTRACTION_RADIUS) {
        return Err(Error::RegionViolation(modulus));
    }
    let k = eval_k(&problem.params, problem.z_from_tau(tau), problem.kernel_tol())?;
    Ok(k.value / Complex64::new(tau.re, tau.im + 2.0))
}

struct FixedPointRun {
    tau: Complex64,
    steps: Vec<f64>,
    converged: bool,
}

fn iterate_g(problem: &ModeProblem) -> std::result::Result<FixedPointRun, (Error, Vec<f64>)> {
    let mut tau = Complex64::new(0.0, 0.0);
    let mut steps = Vec::new();
    for k in 0..problem.tol.max_iter {
        let next = g_map(problem, tau).map_err(|e| (e, steps.clone()))?;
        let modulus = next.norm();
        if !(modulus < CONTRACTION_RADIUS) {
            return Err((Error::EscapedRegion { step: k + 1, modulus }, steps));
        }
        let step = (next - tau).norm();
        steps.push(step);
        tau = next;
        if step < problem.tol.tol_fp {
            return Ok(FixedPointRun { tau, steps, converged: true });
        }
    }
    Ok(FixedPointRun { tau, steps, converged: false })
}

struct NewtonRun {
    z: Complex64,
    residual: f64,
    steps: usize,
}

/// Damped Newton on `D_n` from `z0`; succeeds once the certified residual is
/// below `tol_residual` and further steps stop reducing `|D_n|`.
fn newton(problem: &ModeProblem, z0: Complex64, max_steps: usize) -> Result<NewtonRun> {
    let mut z = z0;
    let (mut d, mut err) = char_fn_eval(problem, z)?;
    let mut steps = 0;
    for _ in 0..max_steps {
        let dp = char_fn_derivative(problem, z)?;
        let dz = d / dp;
        if !(dz.re.is_finite() && dz.im.is_finite()) {
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-6 {
            let candidate = z - dz * lambda;
            if check_poles(&problem.params, candidate).is_ok() {
                if let Ok((dc, ec)) = char_fn_eval(problem, candidate) {
                    if dc.norm() < d.norm() {
                        accepted = Some((candidate, dc, ec));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((zn, dn, en)) = accepted else { break };
        steps += 1;
        let moved = (zn - z).norm();
        z = zn;
        d = dn;
        err = en;
        if d.norm() + err < problem.tol.tol_residual && moved <= 1e-14 * z.norm().max(1.0) {
            break;
        }
    }
    let residual = d.norm() + err;
    if residual < problem.tol.tol_residual {
        Ok(NewtonRun { z, residual, steps })
    } else {
        Err(Error::NoConvergence {
            n: problem.n,
            reason: format!("Newton stalled at residual {residual:e}"),
        })
    }
}

const NEWTON_MAX_STEPS: usize = 60;

/// Complex zero in the upper half-plane; Newton can also land on the real
/// zeros interlacing the poles, which carry `Im z` at rounding level.
fn is_upper_root(z: Complex64) -> bool {
    z.im > 1e-6 * z.norm().max(1.0)
}

/// Locates `z_n^+`.
///
/// The contraction iteration from `tau = 0` is tried first. If an iterate
/// leaves `|tau| < 1/2` (the mode is below the contraction threshold) the
/// solver falls back, in order, to Newton seeded by the two asymptotic
/// predictions, the root-form iteration `z = i n sqrt(1 - K(z))`, and finally
/// argument-principle bisection.
pub fn solve_mode(problem: &ModeProblem) -> Result<SpectrumPoint> {
    let mut diagnostics = Diagnostics {
        method: SolveMethod::FixedPoint,
        fp_steps: Vec::new(),
        escaped_at: None,
        fp_residual: None,
        newton_residual: None,
        newton_steps: 0,
    };

    match iterate_g(problem) {
        Ok(run) => {
            diagnostics.fp_steps = run.steps;
            let iterations = diagnostics.fp_steps.len();
            let z_fp = problem.z_from_tau(run.tau);
            let fp_residual = char_fn_eval(problem, z_fp).map(|(d, e)| d.norm() + e)?;
            diagnostics.fp_residual = Some(fp_residual);
            log::debug!(
                "n={} fixed point: {} steps, residual {:e}",
                problem.n,
                iterations,
                fp_residual
            );
            match newton(problem, z_fp, NEWTON_MAX_STEPS) {
                Ok(nr) if nr.residual < fp_residual || !run.converged => {
                    diagnostics.newton_residual = Some(nr.residual);
                    diagnostics.newton_steps = nr.steps;
                    return finish(problem, nr.z, nr.residual, iterations, true, diagnostics);
                }
                Ok(nr) => {
                    diagnostics.newton_residual = Some(nr.residual);
                    diagnostics.newton_steps = nr.steps;
                    if fp_residual < problem.tol.tol_residual {
                        return finish(problem, z_fp, fp_residual, iterations, false, diagnostics);
                    }
                }
                Err(_) if run.converged && fp_residual < problem.tol.tol_residual => {
                    return finish(problem, z_fp, fp_residual, iterations, false, diagnostics);
                }
                Err(_) => {}
            }
        }
        Err((Error::EscapedRegion { step, modulus }, steps)) => {
            log::debug!("n={} escaped contraction disc at step {step} (|tau| = {modulus})", problem.n);
            diagnostics.fp_steps = steps;
            diagnostics.escaped_at = Some(step);
        }
        Err((e, _)) => return Err(e),
    }

    // prediction-seeded Newton
    diagnostics.method = SolveMethod::PredictionNewton;
    for variant in [ConstantVariant::Half, ConstantVariant::AsStated] {
        let seed = predict(&problem.params, problem.n, variant)?.predicted_z;
        if let Ok(nr) = newton(problem, seed, NEWTON_MAX_STEPS) {
            if is_upper_root(nr.z) {
                diagnostics.newton_residual = Some(nr.residual);
                diagnostics.newton_steps = nr.steps;
                return finish(problem, nr.z, nr.residual, 0, true, diagnostics);
            }
        }
    }

    diagnostics.method = SolveMethod::RootForm;
    if let Some((z_seed, iterations)) = iterate_root_form(problem) {
        if let Ok(nr) = newton(problem, z_seed, NEWTON_MAX_STEPS) {
            if is_upper_root(nr.z) {
                diagnostics.newton_residual = Some(nr.residual);
                diagnostics.newton_steps = nr.steps;
                return finish(problem, nr.z, nr.residual, iterations, true, diagnostics);
            }
        }
    }

    diagnostics.method = SolveMethod::OracleSeeded;
    let n = problem.n as f64;
    let search = Rectangle::new(-4.0 * n - 10.0, 2.0, 0.01 * n, 2.0 * n + 10.0)?;
    let seed = oracle::locate_zero(problem, &search, 1e-6 * n)?;
    let nr = newton(problem, seed, NEWTON_MAX_STEPS)?;
    if !is_upper_root(nr.z) {
        return Err(Error::NoConvergence { n: problem.n, reason: "no zero in the upper half-plane".into() });
    }
    diagnostics.newton_residual = Some(nr.residual);
    diagnostics.newton_steps = nr.steps;
    finish(problem, nr.z, nr.residual, 0, true, diagnostics)
}

/// Iterates `z <- i n sqrt(1 - K(z))` (principal root) from `z = in`.
fn iterate_root_form(problem: &ModeProblem) -> Option<(Complex64, usize)> {
    let n = problem.n as f64;
    let mut z = Complex64::new(0.0, n);
    for k in 0..problem.tol.max_iter {
        let kv = eval_k(&problem.params, z, problem.kernel_tol()).ok()?.value;
        let next = Complex64::new(0.0, n) * (Complex64::new(1.0, 0.0) - kv).sqrt();
        let step = (next - z).norm();
        z = next;
        if step < problem.tol.tol_fp * n {
            return Some((z, k + 1));
        }
    }
    None
}

fn finish(
    problem: &ModeProblem,
    z: Complex64,
    residual: f64,
    iterations: usize,
    refined: bool,
    diagnostics: Diagnostics,
) -> Result<SpectrumPoint> {
    if !is_upper_root(z) {
        return Err(Error::NoConvergence { n: problem.n, reason: format!("root {z} not in upper half-plane") });
    }
    let prediction = predict(&problem.params, problem.n, ConstantVariant::AsStated)?.predicted_z;
    let prediction_half = predict(&problem.params, problem.n, ConstantVariant::Half)?.predicted_z;
    Ok(SpectrumPoint {
        n: problem.n,
        z,
        tau: problem.tau_from_z(z),
        residual,
        iterations,
        refined,
        prediction,
        deviation: (z - prediction).norm(),
        prediction_half,
        deviation_half: (z - prediction_half).norm(),
        diagnostics,
    })
}

/// Result of one mode in a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOutcome {
    pub n: u64,
    pub result: Result<SpectrumPoint>,
}

/// Solves modes `n_min..=n_max` independently (in parallel), sorted by `n`.
pub fn solve_range(
    params: &KernelParams,
    n_min: u64,
    n_max: u64,
    tol: Tolerances,
) -> Result<Vec<ModeOutcome>> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::DomainError(format!(
            "mode range requires 1 <= n_min <= n_max, got [{n_min}, {n_max}]"
        )));
    }
    tol.validate()?;
    let mut out: Vec<ModeOutcome> = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let result = ModeProblem::new(n, *params, tol).and_then(|p| solve_mode(&p));
            ModeOutcome { n, result }
        })
        .collect();
    out.sort_by_key(|o| o.n);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn problem(alpha: f64, beta: f64, n: u64) -> ModeProblem {
        ModeProblem::with_defaults(n, KernelParams::new(alpha, beta).unwrap()).unwrap()
    }

    #[test]
    fn imaginary_axis_cancellation() {
        let p = problem(0.5, 1.0, 37);
        let d = char_fn(&p, c(0.0, 37.0)).unwrap();
        let k = eval_k(&p.params, c(0.0, 37.0), p.kernel_tol()).unwrap().value;
        assert_eq!(d, -k);
    }

    #[test]
    fn char_fn_reference_value() {
        let p = problem(0.5, 1.0, 10);
        let d = char_fn(&p, c(-1.0, 10.0)).unwrap();
        assert!((d - c(-0.667393201893128205, 0.389799051955603079)).norm() < 1e-11);
    }

    #[test]
    fn g_map_values() {
        let p = problem(0.5, 1.0, 100);
        let g0 = g_map(&p, c(0.0, 0.0)).unwrap();
        let k = eval_k(&p.params, c(0.0, 100.0), p.kernel_tol()).unwrap().value;
        assert!((g0 - c(0.0, -0.5) * k).norm() < 1e-15);

        let g = g_map(&p, c(0.01, -0.01)).unwrap();
        assert!((g - c(-0.103641310576206970, -0.113190186402801856)).norm() < 1e-11);

        assert!(matches!(g_map(&p, c(0.5, 0.0)), Err(Error::RegionViolation(_))));

        // |tau + 2i| >= 3/2 on the disc
        let p = problem(1.0, 1.0, 1_000_000);
        let g = g_map(&p, c(0.0, 0.0)).unwrap();
        let k = eval_k(&p.params, c(0.0, 1e6), p.kernel_tol()).unwrap().value;
        assert!(g.norm() <= k.norm() / 2.0 + 1e-18);
    }

    #[test]
    fn solves_square_root_order() {
        let p = problem(0.5, 1.0, 100);
        let s = solve_mode(&p).unwrap();
        assert_eq!(s.diagnostics.method, SolveMethod::FixedPoint);
        assert!((s.z - c(-13.0976254920828675, 89.3703559525719786)).norm() < 1e-9, "{}", s.z);
        assert!(s.residual < 1e-10);
        let first = s.diagnostics.fp_steps[0];
        let k = eval_k(&p.params, c(0.0, 100.0), p.kernel_tol()).unwrap().value;
        assert!((first - (c(0.0, -0.5) * k).norm()).abs() < 1e-12);
    }

    #[test]
    fn solves_logarithmic_order() {
        let s = solve_mode(&problem(1.0, 1.0, 100)).unwrap();
        assert!((s.z - c(-2.64400353501127561, 99.3006158720429507)).norm() < 1e-9, "{}", s.z);
        assert!((s.z.re + 0.5 * 100f64.ln()).abs() < 1.0);
    }

    #[test]
    fn conjugate_is_a_root() {
        let p = problem(0.75, 1.0, 40);
        let s = solve_mode(&p).unwrap();
        let (d, e) = char_fn_eval(&p, s.conjugate_root()).unwrap();
        assert!(d.norm() + e < p.tol.tol_residual);
        assert_eq!(d.norm(), char_fn(&p, s.z).unwrap().norm());
    }

    #[test]
    fn below_threshold_falls_back() {
        let s = solve_mode(&problem(0.2, 1.0, 30)).unwrap();
        assert!(s.diagnostics.escaped_at.is_some());
        assert_ne!(s.diagnostics.method, SolveMethod::FixedPoint);
        assert!(s.residual < 1e-10 && s.z.im > 0.0);
    }

    #[test]
    fn range_rejects_empty() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        assert!(solve_range(&p, 60, 50, Tolerances::default()).is_err());
        assert!(solve_range(&p, 0, 5, Tolerances::default()).is_err());
    }
}
