//! Leading-order predictions for `z_n^+` and empirical remainder fits.
//!
//! For `r < 1` the prediction is `in + C e^{-i(r+1)pi/2} n^(1-r)`; for `r = 1`
//! it is `in - log(n) / (2 beta)`. Two values of `C` are carried side by side:
//! `c_r` and `c_r / 2` (the value obtained by substituting the leading form of
//! `K` into `z ~ in - (in/2) K(in)`). Which one the computed spectrum follows
//! is measured by [`fit_remainder`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::charfunc::SpectrumPoint;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantVariant {
    AsStated,
    Half,
}

impl ConstantVariant {
    pub const ALL: [ConstantVariant; 2] = [ConstantVariant::AsStated, ConstantVariant::Half];

    pub fn name(self) -> &'static str {
        match self {
            ConstantVariant::AsStated => "as_stated",
            ConstantVariant::Half => "half",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    RLess1,
    REqual1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub n: u64,
    pub branch: Branch,
    pub leading: Complex64,
    pub correction: Complex64,
    pub constant_variant: ConstantVariant,
    pub predicted_z: Complex64,
}

/// Unit direction `e^{-i(r+1)pi/2}` of the power-law correction.
pub fn correction_direction(r: f64) -> Complex64 {
    Complex64::from_polar(1.0, -(r + 1.0) * PI / 2.0)
}

pub fn predict(params: &KernelParams, n: u64, variant: ConstantVariant) -> Result<Prediction> {
    if n == 0 {
        return Err(Error::DomainError("mode index n must be at least 1".into()));
    }
    let r = params.r();
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::DomainError(format!("predictions require 0 < r <= 1, got {r}")));
    }
    let nf = n as f64;
    let leading = Complex64::new(0.0, nf);
    let (branch, correction) = match params.c_r() {
        Some(c_r) => {
            let constant = match variant {
                ConstantVariant::AsStated => c_r,
                ConstantVariant::Half => 0.5 * c_r,
            };
            (Branch::RLess1, correction_direction(r) * (constant * nf.powf(1.0 - r)))
        }
        None => (Branch::REqual1, Complex64::new(-nf.ln() / (2.0 * params.beta()), 0.0)),
    };
    Ok(Prediction {
        n,
        branch,
        leading,
        correction,
        constant_variant: variant,
        predicted_z: leading + correction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub n: u64,
    pub z: Complex64,
    pub predicted: Complex64,
    pub deviation: f64,
}

/// Estimate of the leading constant from the computed roots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantFit {
    /// Extrapolated constant: `A` with `z_n - in ~ A e^{-i(r+1)pi/2} n^(1-r)`
    /// (`r < 1`), or with `Re z_n ~ -A log(n) / (2 beta)` (`r = 1`).
    pub estimate: Complex64,
    /// `estimate / c_r` for `r < 1`, `estimate` itself for `r = 1`.
    pub ratio: Complex64,
    /// `"1"` or `"1/2"`, whichever the ratio is closer to.
    pub nearer: &'static str,
    /// Extrapolated estimates from one-octave windows inside the last decade.
    pub windowed: Vec<(u64, Complex64)>,
    /// Diameter of `windowed` relative to `|estimate|`.
    pub spread: f64,
    /// Relative spread of the raw per-point ratios over the last decade.
    pub pointwise_spread: f64,
    /// Exponent `q` of the regressor `n^-q` (or `1/log n`) used for extrapolation.
    pub regressor_exponent: f64,
}

/// Additional measurements for the logarithmic case `r = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogBranchReport {
    /// `max_n |Re z_n + log(n) / (2 beta)|`.
    pub max_offset: f64,
    pub first_decade_drift: f64,
    pub last_decade_drift: f64,
    /// Least-squares slope of `Im z_n - n` against `log n`.
    pub im_shift_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub variant: ConstantVariant,
    pub n_points: usize,
    pub fit_points: usize,
    /// Slope of `log |z_n - prediction|` against `log n` over the largest-n half.
    /// `None` when some deviation is zero and the log fit is degenerate.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Mean of `log |z_n - prediction|` over the fit window.
    pub mean_log_deviation: Option<f64>,
    pub deviations: Vec<DeviationRow>,
    pub constant: ConstantFit,
    pub log_branch: Option<LogBranchReport>,
}

/// Least squares `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

fn complex_intercept(x: &[f64], y: &[Complex64]) -> Option<Complex64> {
    let re: Vec<f64> = y.iter().map(|v| v.re).collect();
    let im: Vec<f64> = y.iter().map(|v| v.im).collect();
    let (a_re, _) = linear_fit(x, &re)?;
    let (a_im, _) = linear_fit(x, &im)?;
    Some(Complex64::new(a_re, a_im))
}

/// Fits the remainder `|z_n - prediction(n)|` and the leading constant.
///
/// Needs at least 8 points spanning a decade in `n`. The slope is fitted on the
/// largest-n half. The constant is extrapolated by regressing the per-point
/// ratio against the slowest relative remainder allowed by the expansion:
/// `n^-min(r, 1-r)` for `r < 1`, `1/log n` for `r = 1`.
pub fn fit_remainder(
    points: &[SpectrumPoint],
    params: &KernelParams,
    variant: ConstantVariant,
) -> Result<FitReport> {
    let mut pts: Vec<&SpectrumPoint> = points.iter().collect();
    pts.sort_by_key(|p| p.n);
    pts.dedup_by_key(|p| p.n);
    if pts.len() < 8 {
        return Err(Error::InsufficientData(format!("{} points, need at least 8", pts.len())));
    }
    let n_lo = pts[0].n as f64;
    let n_hi = pts[pts.len() - 1].n as f64;
    if n_hi < 10.0 * n_lo {
        return Err(Error::InsufficientData(format!("n spans [{n_lo}, {n_hi}], less than a decade")));
    }

    let mut deviations = Vec::with_capacity(pts.len());
    for p in &pts {
        let predicted = predict(params, p.n, variant)?.predicted_z;
        deviations.push(DeviationRow { n: p.n, z: p.z, predicted, deviation: (p.z - predicted).norm() });
    }

    let upper = &deviations[deviations.len() / 2..];
    let degenerate = upper.iter().any(|d| !(d.deviation > 0.0));
    let (slope, intercept, mean_log_deviation) = if degenerate {
        (None, None, None)
    } else {
        let x: Vec<f64> = upper.iter().map(|d| (d.n as f64).ln()).collect();
        let y: Vec<f64> = upper.iter().map(|d| d.deviation.ln()).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        match linear_fit(&x, &y) {
            Some((a, b)) => (Some(b), Some(a), Some(mean)),
            None => (None, None, Some(mean)),
        }
    };

    let constant = fit_constant(&pts, params)?;
    let log_branch = params.is_log_branch().then(|| log_branch_report(&pts, params));

    Ok(FitReport {
        variant,
        n_points: pts.len(),
        fit_points: upper.len(),
        slope,
        intercept,
        mean_log_deviation,
        deviations,
        constant,
        log_branch,
    })
}

fn fit_constant(pts: &[&SpectrumPoint], params: &KernelParams) -> Result<ConstantFit> {
    let r = params.r();
    let beta = params.beta();
    let (ratios, regressor, exponent): (Vec<Complex64>, Vec<f64>, f64) = match params.c_r() {
        Some(_) => {
            let q = r.min(1.0 - r);
            let dir = correction_direction(r);
            let ratios = pts
                .iter()
                .map(|p| {
                    let n = p.n as f64;
                    (p.z - Complex64::new(0.0, n)) / (dir * n.powf(1.0 - r))
                })
                .collect();
            let x = pts.iter().map(|p| (p.n as f64).powf(-q)).collect();
            (ratios, x, q)
        }
        None => {
            let ratios = pts
                .iter()
                .map(|p| {
                    let n = p.n as f64;
                    Complex64::new(p.z.re / (-n.ln() / (2.0 * beta)), 0.0)
                })
                .collect();
            let x = pts.iter().map(|p| 1.0 / (p.n as f64).ln()).collect();
            (ratios, x, 0.0)
        }
    };

    let half = pts.len() / 2;
    let estimate = complex_intercept(&regressor[half..], &ratios[half..])
        .ok_or_else(|| Error::InsufficientData("degenerate regressor".into()))?;

    let n_max = pts[pts.len() - 1].n as f64;
    let decade_start = n_max / 10.0;
    let mut windowed = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let m = p.n as f64;
        if m < 2.0 * decade_start {
            continue;
        }
        let idx: Vec<usize> = (0..=i).filter(|&j| pts[j].n as f64 >= m / 2.0).collect();
        if idx.len() < 4 {
            continue;
        }
        let x: Vec<f64> = idx.iter().map(|&j| regressor[j]).collect();
        let y: Vec<Complex64> = idx.iter().map(|&j| ratios[j]).collect();
        if let Some(a) = complex_intercept(&x, &y) {
            windowed.push((p.n, a));
        }
    }
    let spread = diameter(windowed.iter().map(|w| w.1)) / estimate.norm();

    let last: Vec<f64> = pts
        .iter()
        .zip(&ratios)
        .filter(|(p, _)| p.n as f64 >= decade_start)
        .map(|(_, a)| a.norm())
        .collect();
    let pointwise_spread = if last.is_empty() {
        0.0
    } else {
        let lo = last.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = last.iter().sum::<f64>() / last.len() as f64;
        (hi - lo) / mean
    };

    let ratio = match params.c_r() {
        Some(c_r) => estimate / c_r,
        None => estimate,
    };
    let nearer = if (ratio - 1.0).norm() <= (ratio - 0.5).norm() { "1" } else { "1/2" };

    Ok(ConstantFit {
        estimate,
        ratio,
        nearer,
        windowed,
        spread,
        pointwise_spread,
        regressor_exponent: exponent,
    })
}

fn diameter(values: impl Iterator<Item = Complex64> + Clone) -> f64 {
    let v: Vec<Complex64> = values.collect();
    let mut d: f64 = 0.0;
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn log_branch_report(pts: &[&SpectrumPoint], params: &KernelParams) -> LogBranchReport {
    let beta = params.beta();
    let offset = |p: &SpectrumPoint| p.z.re + (p.n as f64).ln() / (2.0 * beta);
    let max_offset = pts.iter().map(|p| offset(p).abs()).fold(0.0, f64::max);
    let n_min = pts[0].n as f64;
    let n_max = pts[pts.len() - 1].n as f64;
    let drift = |lo: f64, hi: f64| {
        let vals: Vec<f64> = pts
            .iter()
            .filter(|p| (p.n as f64) >= lo && (p.n as f64) <= hi)
            .map(|p| offset(p))
            .collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if vals.is_empty() { 0.0 } else { max - min }
    };
    let x: Vec<f64> = pts.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.z.im - p.n as f64).collect();
    LogBranchReport {
        max_offset,
        first_decade_drift: drift(n_min, 10.0 * n_min),
        last_decade_drift: drift(n_max / 10.0, n_max),
        im_shift_slope: linear_fit(&x, &y).map(|f| f.1).unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfunc::{Diagnostics, SolveMethod};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn synthetic(params: &KernelParams, variant: ConstantVariant, ns: &[u64]) -> Vec<SpectrumPoint> {
        ns.iter()
            .map(|&n| {
                let z = predict(params, n, variant).unwrap().predicted_z;
                SpectrumPoint {
                    n,
                    z,
                    tau: Complex64::new(0.0, 0.0),
                    residual: 0.0,
                    iterations: 0,
                    refined: false,
                    prediction: z,
                    deviation: 0.0,
                    prediction_half: z,
                    deviation_half: 0.0,
                    diagnostics: Diagnostics {
                        method: SolveMethod::FixedPoint,
                        fp_steps: vec![],
                        escaped_at: None,
                        fp_residual: None,
                        newton_residual: None,
                        newton_steps: 0,
                    },
                }
            })
            .collect()
    }

    #[test]
    fn stated_prediction_square_root() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let pr = predict(&p, 100, ConstantVariant::AsStated).unwrap();
        let s = 10.0 * PI * FRAC_1_SQRT_2;
        assert!((pr.predicted_z - Complex64::new(-s, 100.0 - s)).norm() < 1e-12);
        assert!((pr.predicted_z.re + 22.214).abs() < 1e-3);
        let half = predict(&p, 100, ConstantVariant::Half).unwrap();
        assert!((pr.correction - 2.0 * half.correction).norm() < 1e-14);
    }

    #[test]
    fn logarithmic_prediction() {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        for v in ConstantVariant::ALL {
            let pr = predict(&p, 100, v).unwrap();
            assert_eq!(pr.branch, Branch::REqual1);
            assert!((pr.predicted_z - Complex64::new(-0.5 * 100f64.ln(), 100.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn correction_scaling_and_sign() {
        for (a, b) in [(0.5, 1.0), (0.2, 1.0), (0.75, 1.0), (0.5, 2.0)] {
            let p = KernelParams::new(a, b).unwrap();
            for n in [1u64, 7, 100, 12345] {
                let c1 = predict(&p, n, ConstantVariant::AsStated).unwrap().correction;
                let c2 = predict(&p, 2 * n, ConstantVariant::AsStated).unwrap().correction;
                assert!((c2.norm() / c1.norm() - 2f64.powf(1.0 - p.r())).abs() < 1e-13);
                assert!(c1.re < 0.0);
            }
        }
    }

    #[test]
    fn exact_points_are_degenerate() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let ns: Vec<u64> = (1..=12).map(|k| 10 * k).collect();
        let pts = synthetic(&p, ConstantVariant::Half, &ns);
        let f = fit_remainder(&pts, &p, ConstantVariant::Half).unwrap();
        assert!(f.slope.is_none());
        assert!(f.deviations.iter().all(|d| d.deviation == 0.0));
        assert!((f.constant.ratio - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert_eq!(f.constant.nearer, "1/2");
        assert!(f.constant.spread < 1e-12);

        let other = fit_remainder(&pts, &p, ConstantVariant::AsStated).unwrap();
        let slope = other.slope.unwrap();
        assert!((slope - 0.5).abs() < 1e-12, "{slope}");
    }

    #[test]
    fn insufficient_data() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let pts = synthetic(&p, ConstantVariant::Half, &[10, 20, 30]);
        assert!(matches!(fit_remainder(&pts, &p, ConstantVariant::Half), Err(Error::InsufficientData(_))));
        let pts = synthetic(&p, ConstantVariant::Half, &[10, 11, 12, 13, 14, 15, 16, 17, 18]);
        assert!(matches!(fit_remainder(&pts, &p, ConstantVariant::Half), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (a, b) = linear_fit(&x, &y).unwrap();
        assert!((a - 3.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14);
    }
}
