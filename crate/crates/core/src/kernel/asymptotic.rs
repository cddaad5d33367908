use num_complex::Complex64;

use super::params::{check_finite, check_sector, KernelParams, DEFAULT_DELTA};
use crate::error::{Error, Result};

/// Leading large-`|z|` behaviour of `K`: `c_r z^-r` for `r < 1`,
/// `log(1 + z) / (beta z)` for `r = 1`. Principal branches throughout.
pub fn asymptotic_k(params: &KernelParams, z: Complex64) -> Result<Complex64> {
    asymptotic_k_in_sector(params, z, DEFAULT_DELTA)
}

pub fn asymptotic_k_in_sector(params: &KernelParams, z: Complex64, delta: f64) -> Result<Complex64> {
    check_finite(z, "asymptotic argument")?;
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::DomainError("asymptotic form undefined at z = 0".into()));
    }
    check_sector(z, delta)?;
    let value = match params.c_r() {
        Some(c_r) => c_r * principal_power(z, -params.r()),
        None => (z + 1.0).ln() / z / params.beta(),
    };
    check_finite(value, "asymptotic value")?;
    Ok(value)
}

/// `z^p` on the principal branch, `arg z` in `(-pi, pi]`.
pub fn principal_power(z: Complex64, p: f64) -> Complex64 {
    let modulus = z.norm().powf(p);
    let angle = p * z.im.atan2(z.re);
    Complex64::new(modulus * angle.cos(), modulus * angle.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

    #[test]
    fn square_root_branch() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        let v = asymptotic_k(&p, Complex64::new(0.0, 100.0)).unwrap();
        let expected = Complex64::from_polar(PI / 10.0, -PI / 4.0);
        assert!((v - expected).norm() < 1e-15);
        assert!((v.re - 0.22214).abs() < 1e-5 && (v.im + 0.22214).abs() < 1e-5);
    }

    #[test]
    fn logarithmic_branch() {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let v = asymptotic_k(&p, Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - LN_2).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn quarter_order_beta_two() {
        // r = 0.25 with beta = 2 would need alpha = -0.5, outside the model
        // class, so the formula is checked through principal_power directly.
        let c_r = PI / (2.0 * (PI / 4.0).sin());
        assert!((c_r - PI * FRAC_1_SQRT_2).abs() < 1e-15);
        let z = Complex64::new(0.0, 1e4);
        let v = c_r * principal_power(z, -0.25);
        let expected = Complex64::from_polar(PI * FRAC_1_SQRT_2 * 0.1, -PI / 8.0);
        assert!((v - expected).norm() < 1e-15);
    }

    #[test]
    fn rejects_origin_and_cut() {
        let p = KernelParams::new(0.5, 1.0).unwrap();
        assert!(asymptotic_k(&p, Complex64::new(0.0, 0.0)).is_err());
        assert!(asymptotic_k(&p, Complex64::new(-5.0, 0.1)).is_err());
    }
}
