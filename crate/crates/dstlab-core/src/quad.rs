//! Integrals over (0, ∞) by the trapezoid rule in u = log s.
//!
//! After the substitution the integrand s·f(s) decays exponentially at both ends
//! of the real u-line and is analytic in a strip, so the trapezoid rule converges
//! geometrically in 1/h. The grid grows outward from u = 0 until the terms are
//! negligible; halving h reuses every node and gives the error estimate.

use core::fmt;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TripleSum,
    SingleQuadrature,
    DoubleQuadrature,
    Series,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::TripleSum => "triple-sum",
            Method::SingleQuadrature => "single-quadrature",
            Method::DoubleQuadrature => "double-quadrature",
            Method::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantResult {
    pub value: f64,
    pub est_error: f64,
    pub method: Method,
}

impl ConstantResult {
    pub fn new(value: f64, est_error: f64, method: Method) -> Self {
        let floor = 4.0 * f64::EPSILON * libm::fabs(value);
        Self {
            value,
            est_error: est_error.max(floor).max(f64::MIN_POSITIVE),
            method,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadError {
    /// The grid reached `max_u` on one side without the terms becoming negligible.
    NonConvergence { partial: f64, est_error: f64 },
    NonFinite { s: f64 },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::NonConvergence { partial, est_error } => {
                write!(f, "quadrature did not converge (partial {partial:e} ± {est_error:e})")
            }
            QuadError::NonFinite { s } => write!(f, "integrand not finite at s = {s:e}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Coarse step in u; the returned value uses h/2.
    pub h: f64,
    /// A side of the grid stops after `run` consecutive terms below `tail_rel`·|sum|.
    pub tail_rel: f64,
    pub run: usize,
    pub max_u: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            h: 0.1,
            tail_rel: 1e-18,
            run: 12,
            max_u: 400.0,
        }
    }
}

impl QuadOptions {
    pub fn with_h(h: f64) -> Self {
        Self { h, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ComplexQuad {
    pub value: Complex64,
    pub est_error: f64,
}

/// ∫_0^∞ f(s) ds for a complex-valued integrand.
pub fn quad_0_inf_complex<F>(mut f: F, opts: &QuadOptions) -> Result<ComplexQuad, QuadError>
where
    F: FnMut(f64) -> Complex64,
{
    let h = opts.h;
    let mut g = |u: f64| -> Result<Complex64, QuadError> {
        let s = libm::exp(u);
        let v = f(s) * s;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(QuadError::NonFinite { s });
        }
        Ok(v)
    };

    let mut coarse = g(0.0)?;
    let mut fine_mid = Complex64::new(0.0, 0.0);
    let mut abs_sum = coarse.norm();
    let mut tail = 0.0;
    let mut converged = true;
    for dir in [1.0, -1.0] {
        let mut k = 1usize;
        let mut quiet = 0usize;
        let mut prev = f64::INFINITY;
        loop {
            let u = dir * k as f64 * h;
            let mid = dir * (k as f64 - 0.5) * h;
            let t = g(u)?;
            let m = g(mid)?;
            coarse += t;
            fine_mid += m;
            abs_sum += t.norm() + m.norm();
            let scale = (coarse * h).norm().max(f64::MIN_POSITIVE);
            let size = t.norm().max(m.norm()) * h;
            if size <= opts.tail_rel * scale {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if quiet >= opts.run {
                // geometric tail beyond the last node
                let r = if prev.is_finite() && prev > 0.0 { (t.norm() / prev).min(0.999) } else { 0.5 };
                tail += t.norm() * h * r / (1.0 - r);
                break;
            }
            prev = t.norm();
            if libm::fabs(u) >= opts.max_u {
                converged = false;
                tail += size;
                break;
            }
            k += 1;
        }
    }
    let t_h = coarse * h;
    let t_h2 = (coarse + fine_mid) * (h * 0.5);
    let diff = (t_h - t_h2).norm();
    let rounding = 8.0 * f64::EPSILON * abs_sum * h;
    let est_error = diff + tail + rounding;
    if !converged {
        return Err(QuadError::NonConvergence {
            partial: t_h2.re,
            est_error,
        });
    }
    Ok(ComplexQuad {
        value: t_h2,
        est_error: est_error.max(f64::MIN_POSITIVE),
    })
}

/// ∫_0^∞ f(s) ds.
pub fn quad_0_inf<F>(mut f: F, opts: &QuadOptions) -> Result<ConstantResult, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let r = quad_0_inf_complex(|s| Complex64::new(f(s), 0.0), opts)?;
    Ok(ConstantResult::new(r.value.re, r.est_error, Method::SingleQuadrature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{LN_2, PI};

    #[test]
    fn exponential() {
        let r = quad_0_inf(|s| libm::exp(-s), &QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{r:?}");
        assert!(r.est_error > 0.0);
    }

    #[test]
    fn rational_matches_phi() {
        let r = quad_0_inf(|s| s / ((s + 1.0) * (s + 2.0) * (s + 2.0)), &QuadOptions::default()).unwrap();
        assert!((r.value - (1.0 - LN_2)).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        let r = quad_0_inf(|s| libm::exp(-s) / libm::sqrt(s), &QuadOptions::default()).unwrap();
        assert!((r.value - libm::sqrt(PI)).abs() < 1e-12);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let r = quad_0_inf(|s| 1.0 / (1.0 + s), &QuadOptions { max_u: 30.0, ..QuadOptions::default() });
        assert!(matches!(r, Err(QuadError::NonConvergence { .. })));
    }

    #[test]
    fn refinement_within_estimate() {
        let f = |s: f64| libm::pow(s, 0.3) / ((s + 1.0) * (s + 0.25) * (s + 0.25));
        let a = quad_0_inf(f, &QuadOptions::with_h(0.2)).unwrap();
        let b = quad_0_inf(f, &QuadOptions::with_h(0.05)).unwrap();
        assert!((a.value - b.value).abs() <= a.est_error);
    }
}
