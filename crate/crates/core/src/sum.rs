//! Compensated summation helpers.

use num_complex::Complex64;

/// Neumaier (improved Kahan–Babuška) summation of complex terms, componentwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
    abs_total: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: Complex64) {
        neumaier(&mut self.sum.re, &mut self.comp.re, x.re);
        neumaier(&mut self.sum.im, &mut self.comp.im, x.im);
        self.abs_total += x.re.abs() + x.im.abs();
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }

    /// Sum of `|re| + |im|` over all added terms; scales the rounding error bound.
    pub fn abs_total(&self) -> f64 {
        self.abs_total
    }
}
