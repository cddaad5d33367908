use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default angular margin of the sector `|arg z| <= pi - delta`.
pub const DEFAULT_DELTA: f64 = PI / 6.0;

/// Smallest sector margin accepted by the sector-restricted operations.
pub const MIN_DELTA: f64 = 1e-3;

/// Model kernel `a_k = k^-alpha`, `b_k = k^beta`.
///
/// Construction enforces `0 < alpha <= 1` and `alpha + beta > 1`, which is the
/// region where `sum a_k` diverges while `sum a_k / b_k` converges, i.e. the
/// order `r = (alpha + beta - 1) / beta` lies in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    alpha: f64,
    beta: f64,
    r: f64,
    c_r: Option<f64>,
}

impl KernelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParams("alpha and beta must be finite".into()));
        }
        if alpha <= 0.0 {
            return Err(Error::InvalidParams("requires alpha > 0".into()));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidParams("requires beta > 0".into()));
        }
        if alpha > 1.0 {
            return Err(Error::InvalidParams(
                "requires alpha <= 1 (otherwise sum a_k converges and r > 1)".into(),
            ));
        }
        if alpha + beta <= 1.0 {
            return Err(Error::InvalidParams("requires alpha + beta > 1".into()));
        }
        let r = if alpha == 1.0 {
            1.0
        } else {
            (alpha + beta - 1.0) / beta
        };
        let c_r = (r < 1.0).then(|| PI / (beta * (PI * r).sin()));
        Ok(Self { alpha, beta, r, c_r })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Decay order of `K(z) ~ z^-r`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// `pi / (beta sin(pi r))`, present only when `r < 1`.
    pub fn c_r(&self) -> Option<f64> {
        self.c_r
    }

    /// True when `r == 1` and the logarithmic asymptotics apply.
    pub fn is_log_branch(&self) -> bool {
        self.c_r.is_none()
    }

    /// `a_k = k^-alpha`.
    pub fn coefficient(&self, k: f64) -> f64 {
        k.powf(-self.alpha)
    }

    /// `b_k = k^beta`.
    pub fn rate(&self, k: f64) -> f64 {
        k.powf(self.beta)
    }
}

/// Value of `K`, `K'` or `h` at a point with a bound on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: Complex64,
    pub error_bound: f64,
    pub terms_used: u64,
}

/// Region `rho_min <= |z| <= rho_max`, `|arg z| <= pi - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorSpec {
    pub delta: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl SectorSpec {
    pub fn new(delta: f64, rho_min: f64, rho_max: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < PI) {
            return Err(Error::DomainError(format!("sector margin delta = {delta} not in (0, pi)")));
        }
        if !(rho_min > 0.0 && rho_min < rho_max && rho_max.is_finite()) {
            return Err(Error::DomainError(format!(
                "modulus range [{rho_min}, {rho_max}] must satisfy 0 < rho_min < rho_max"
            )));
        }
        Ok(Self { delta, rho_min, rho_max })
    }

    /// Largest admissible `|arg z|`.
    pub fn max_arg(&self) -> f64 {
        PI - self.delta
    }
}

impl Default for SectorSpec {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, rho_min: 10.0, rho_max: 1e4 }
    }
}

/// Rejects `z` outside `|arg z| <= pi - delta` (closed sector, rays on the edge allowed).
pub fn check_sector(z: Complex64, delta: f64) -> Result<()> {
    if !(delta >= MIN_DELTA && delta < PI) {
        return Err(Error::SectorViolation { arg: z.arg().abs(), limit: PI - delta });
    }
    let arg = z.im.atan2(z.re).abs();
    let limit = PI - delta;
    if arg > limit + 1e-12 {
        return Err(Error::SectorViolation { arg, limit });
    }
    Ok(())
}

pub(crate) fn check_finite(z: Complex64, what: &'static str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        assert_eq!(p.r(), 0.5);
        assert!((p.c_r().unwrap() - PI).abs() < 1e-15);

        let p = KernelParams::new(0.25, 2.0).unwrap();
        assert!((p.r() - 0.625).abs() < 1e-15);

        let p = KernelParams::new(1.0, 2.0).unwrap();
        assert_eq!(p.r(), 1.0);
        assert!(p.is_log_branch());
    }

    #[test]
    fn rejects_outside_model_class() {
        let msg = KernelParams::new(0.2, 0.5).unwrap_err().to_string();
        assert!(msg.contains("alpha + beta > 1"), "{msg}");
        assert!(KernelParams::new(1.5, 1.0).is_err());
        assert!(KernelParams::new(0.0, 2.0).is_err());
        assert!(KernelParams::new(0.5, -1.0).is_err());
        assert!(KernelParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn sector_edges() {
        let edge = Complex64::from_polar(10.0, PI - DEFAULT_DELTA);
        assert!(check_sector(edge, DEFAULT_DELTA).is_ok());
        assert!(check_sector(edge.conj(), DEFAULT_DELTA).is_ok());
        let outside = Complex64::from_polar(10.0, PI - DEFAULT_DELTA / 2.0);
        assert!(matches!(check_sector(outside, DEFAULT_DELTA), Err(Error::SectorViolation { .. })));
        assert!(check_sector(Complex64::new(1.0, 0.0), 1e-9).is_err());
        assert!(SectorSpec::new(0.5, 10.0, 1.0).is_err());
    }
}
