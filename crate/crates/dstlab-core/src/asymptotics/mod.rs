//! Laplace–Mellin constants and Fourier series of the periodic fluctuations.
//!
//! Every constant here has the shape (1/log 2)∫_0^∞ s^{ω−1}·R(s)/Q(−2s)^b ds at
//! ω = 2, where R is a Laplace transform. The inner transforms are evaluated in
//! closed form on [`ExpPolySeries`], so each constant is one quadrature.

use core::f64::consts::LN_2;

use num_complex::Complex64;

pub use crate::exppoly::ExpPolySeries;
pub use crate::quad::{quad_0_inf, quad_0_inf_complex, ConstantResult, Method, QuadError, QuadOptions};

use crate::qseries::chi;
use crate::special::complex_gamma;

pub mod bucket;
pub mod dpl;
pub mod fringe;
pub mod kps;

pub use bucket::{bdst_mean_exppoly, c10, c_h, gtilde, npl_p20_mean, NplMeanFamilies};
pub use dpl::{depth_constants, dpl_constants, ipl_mean_fourier, wpl_mean_coeff, DepthConstants, DplConstants};
pub use fringe::{c_fs, c_kp, c_w, ppl_var_mean};
pub use kps::{ckps, ckps_fourier};

/// Number of poles −2^{−i} kept when inverting Laplace transforms.
pub const POLES: u32 = 60;

/// A 1-periodic function Σ_{|k|≤K} c_k e^{2kπit}.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    /// c_{−K}, …, c_K.
    coeffs: alloc::vec::Vec<Complex64>,
    /// Frequency base; χ_k = 2kπi/base.
    pub base: f64,
}

impl FourierSeries {
    pub fn from_fn<F: FnMut(i64) -> Complex64>(k_max: usize, mut f: F) -> Self {
        let k = k_max as i64;
        Self {
            coeffs: (-k..=k).map(&mut f).collect(),
            base: LN_2,
        }
    }

    /// Fills k < 0 by conjugation, for real functions.
    pub fn real_from_fn<F: FnMut(i64) -> Complex64>(k_max: usize, mut f: F) -> Self {
        let pos: alloc::vec::Vec<Complex64> = (0..=k_max as i64).map(&mut f).collect();
        let mut coeffs: alloc::vec::Vec<Complex64> = pos[1..].iter().rev().map(|c| c.conj()).collect();
        coeffs.extend(pos);
        Self { coeffs, base: LN_2 }
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let i = k + self.k_max() as i64;
        if i < 0 || i as usize >= self.coeffs.len() {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[i as usize]
    }

    /// The mean value c_0.
    pub fn mean(&self) -> f64 {
        self.coeff(0).re
    }

    /// Σ_{k≠0} |c_k|, a bound for the fluctuation around the mean.
    pub fn amplitude(&self) -> f64 {
        let k = self.k_max() as i64;
        (-k..=k).filter(|&j| j != 0).map(|j| self.coeff(j).norm()).sum()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let k = self.k_max() as i64;
        (-k..=k)
            .map(|j| self.coeff(j) * Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * j as f64 * t))
            .sum()
    }

    pub fn max_conjugate_defect(&self) -> f64 {
        let k = self.k_max() as i64;
        (1..=k).map(|j| (self.coeff(-j) - self.coeff(j).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// (1/log 2)∫_0^∞ s·f(s) ds.
pub(crate) fn mellin_at_two<F: FnMut(f64) -> f64>(mut f: F) -> Result<ConstantResult, QuadError> {
    let r = quad_0_inf(|s| s * f(s), &QuadOptions::default())?;
    Ok(ConstantResult::new(r.value / LN_2, r.est_error / LN_2, Method::SingleQuadrature))
}

/// ∫_0^∞ s^{ω−1} f(s) ds for complex ω, with the step refined for the
/// oscillation of s^{i Im ω}.
pub(crate) fn mellin<F: FnMut(f64) -> f64>(mut f: F, omega: Complex64) -> Result<(Complex64, f64), QuadError> {
    let h = 0.1 / (1.0 + libm::fabs(omega.im) / 10.0);
    let opts = QuadOptions::with_h(h);
    let e = omega - 1.0;
    let r = quad_0_inf_complex(|s| Complex64::new(s, 0.0).powc(e) * f(s), &opts)?;
    Ok((r.value, r.est_error))
}

/// Fourier series (1/log 2)Σ_k G(2+χ_k)/Γ(γ_shift+χ_k)·e^{2kπit} with
/// G(ω) = ∫ s^{ω−1}f(s)ds.
pub(crate) fn mellin_fourier<F: Fn(f64) -> f64>(
    f: F,
    gamma_shift: f64,
    k_max: usize,
) -> Result<(FourierSeries, f64), QuadError> {
    let mut err: f64 = 0.0;
    let mut failure = None;
    let series = FourierSeries::real_from_fn(k_max, |k| {
        let c = chi(k);
        match mellin(&f, c + 2.0) {
            Ok((g, e)) => {
                let gam = complex_gamma(c + gamma_shift).expect("no pole on the line");
                err = err.max(e / (gam.norm() * LN_2));
                g / (gam * LN_2)
            }
            Err(e) => {
                failure = Some(e);
                Complex64::new(0.0, 0.0)
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((series, err)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_series_basics() {
        let f = FourierSeries::real_from_fn(3, |k| Complex64::new(1.0 / (1 + k * k) as f64, k as f64 * 0.01));
        assert_eq!(f.k_max(), 3);
        assert_eq!(f.mean(), 1.0);
        assert!(f.max_conjugate_defect() == 0.0);
        let v = f.eval(0.3);
        assert!(v.im.abs() < 1e-15);
        assert!((f.amplitude() - 1.611_001_135_027_045_7).abs() < 1e-15);
        assert_eq!(f.coeff(7), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mellin_of_exponential_is_gamma() {
        let w = Complex64::new(2.0, 3.0);
        let (v, e) = mellin(|s| libm::exp(-s), w).unwrap();
        let g = complex_gamma(w).unwrap();
        assert!((v - g).norm() < 1e-10, "{v} {g} {e}");
    }
}
