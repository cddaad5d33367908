//! Laplace transform `K(z) = sum_k k^-alpha / (z + k^beta)` of the relaxation
//! kernel, its derivative, the integral surrogate `h(z)` and the leading
//! asymptotic forms.

mod asymptotic;
mod integral;
mod params;
mod series;

pub use asymptotic::{asymptotic_k, asymptotic_k_in_sector, principal_power};
pub use integral::{euler_integral, euler_integral_quadrature, eval_h, eval_h_in_sector};
pub use params::{check_sector, KernelEval, KernelParams, SectorSpec, DEFAULT_DELTA, MIN_DELTA};
pub use series::{
    check_poles, eval_k, eval_k_truncated, eval_k_with, eval_kprime, eval_kprime_with,
    pole_exclusion_radius, SeriesOptions, DEFAULT_TERM_BUDGET,
};
