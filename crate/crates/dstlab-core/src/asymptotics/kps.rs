//! Variance constant of the internal path length: the triple sum over
//! (j, h, ℓ) and its Fourier coefficients through the λ kernel.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_complex::Complex64;

use super::{ConstantResult, FourierSeries, Method};
use crate::qseries::{chi, lambda_at, phi2, QContext};
use crate::special::complex_gamma;

/// Terms of the triple sum are dropped once their weight falls below this.
pub const WEIGHT_CUTOFF: f64 = 1e-18;

/// (weight, t) pairs with weight (−1)^j 2^{−j(j+1)/2}/(Q_jQ_hQ_ℓ2^{h+ℓ}) and
/// t = 2^{−j−h} + 2^{−j−ℓ}.
fn triple_terms(ctx: &QContext, cutoff: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for j in 0usize.. {
        let wj = libm::exp2(-((j * (j + 1) / 2) as f64)) / ctx.q(j);
        if wj < cutoff {
            break;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for h in 0usize.. {
            let wh = wj / (ctx.q(h) * libm::exp2(h as f64));
            if wh < cutoff {
                break;
            }
            for l in 0usize.. {
                let w = wh / (ctx.q(l) * libm::exp2(l as f64));
                if w < cutoff {
                    break;
                }
                let t = libm::exp2(-((j + h) as f64)) + libm::exp2(-((j + l) as f64));
                out.push((sign * w, t));
            }
        }
    }
    out
}

/// Σ w·φ(2; t) truncated at `cutoff`.
pub fn ckps_truncated(ctx: &QContext, cutoff: f64) -> f64 {
    let terms = triple_terms(ctx, cutoff);
    // small terms first
    let mut acc = 0.0;
    for (w, t) in terms.iter().rev() {
        acc += w * phi2(*t);
    }
    ctx.q_infinity() * acc / LN_2
}

/// C_kps = G_2(2)/log 2 by the triple sum.
pub fn ckps() -> ConstantResult {
    let ctx = QContext::default();
    let v = ckps_truncated(&ctx, WEIGHT_CUTOFF);
    let coarse = ckps_truncated(&ctx, WEIGHT_CUTOFF * 1e3);
    ConstantResult::new(v, (v - coarse).abs() + 1e-14, Method::TripleSum)
}

/// Γ(−1−a)·Q_∞·Σ w·λ(t; a)/log 2, which is G_2(2+a)/(Γ(2+a) log 2).
pub fn g2_over_gamma(ctx: &QContext, a: Complex64) -> Complex64 {
    let terms = triple_terms(ctx, WEIGHT_CUTOFF);
    let mut acc = Complex64::new(0.0, 0.0);
    for (w, t) in terms.iter().rev() {
        acc += lambda_at(*t, a) * *w;
    }
    let g = complex_gamma(Complex64::new(-1.0, 0.0) - a).expect("a is off the integers");
    g * acc * ctx.q_infinity() / LN_2
}

/// The k = 0 coefficient through the λ kernel: the removable singularity at
/// a = 0 is approached along a = ±iε and Richardson-extrapolated in ε².
pub fn ckps_via_lambda(ctx: &QContext) -> f64 {
    let eps = 1e-3;
    let sym = |e: f64| {
        let a = Complex64::new(0.0, e);
        ((g2_over_gamma(ctx, a) + g2_over_gamma(ctx, -a)) * 0.5).re
    };
    (4.0 * sym(eps) - sym(2.0 * eps)) / 3.0
}

/// Fourier series of the fluctuation around C_kps, coefficients |k| ≤ k_max.
pub fn ckps_fourier(k_max: usize) -> FourierSeries {
    let ctx = QContext::default();
    let c0 = ckps().value;
    FourierSeries::real_from_fn(k_max, |k| {
        if k == 0 {
            Complex64::new(c0, 0.0)
        } else {
            g2_over_gamma(&ctx, chi(k))
        }
    })
}
