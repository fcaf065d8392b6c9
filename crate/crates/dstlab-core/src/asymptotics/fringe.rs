//! Peripheral path length (PPL) and the number of leaves.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use super::{mellin_at_two, ConstantResult, ExpPolySeries, Method, QuadError, POLES};
use crate::partial::{principal_parts, taylor_at, PartialOptions, RationalTerm};
use crate::qseries::QContext;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |p, k| p * k as f64)
}

/// Σ_r c_r z^r·e^{−az} from coefficients low order first.
fn poly_exp(coeffs: &[f64], a: f64) -> ExpPolySeries {
    let mut p = ExpPolySeries::new();
    for (r, &c) in coeffs.iter().enumerate() {
        p.add_term(c, r as u32, a);
    }
    p
}

/// c_1 = Σ_{k≥1} 1/(2^k − 1).
pub(crate) fn c1() -> f64 {
    (1..=80).rev().map(|k| 1.0 / (libm::exp2(k as f64) - 1.0)).sum()
}

// ---------------------------------------------------------------------------
// PPL

/// L[f̃_1; s] = 16Σ_k 4^k/(∏_{i<k}(2^i s+1)·(2^{k+1}s+1)³), or s² times it.
fn ppl_mean_terms(count: u32, times_s2: bool) -> Vec<RationalTerm> {
    (0..count)
        .map(|k| {
            let c = 16.0 * libm::exp2(2.0 * k as f64);
            let mut factors: Vec<(u32, u32)> = (0..k).map(|i| (i, 1)).collect();
            factors.push((k + 1, 3));
            let numer = if times_s2 { vec![0.0, 0.0, c] } else { vec![c] };
            RationalTerm { numer, factors }
        })
        .collect()
}

/// C_w = (16/log 2)∫ s/(Q(−s)(2s+1)³) ds, with Q(−s) = Q(−2s)/(1+s).
pub fn c_w_integral() -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    let r = mellin_at_two(|s| 16.0 * (1.0 + s) * ctx.recip_q_neg2s_real(s, 1) / libm::pow(2.0 * s + 1.0, 3.0))?;
    Ok(r)
}

/// The series form Σ_ℓ (ℓ+1)(ℓ−2)/(Q_ℓ2^ℓ)(Σ_k 1/(2^{ℓ+k}−1) − 1) + (1/log 2)Σ_ℓ (2ℓ−1)/(Q_ℓ2^ℓ).
pub fn c_w_series() -> ConstantResult {
    let ctx = QContext::default();
    let mut a = 0.0;
    let mut b = 0.0;
    let mut last = 0.0;
    for l in 0..120usize {
        let w = 1.0 / (ctx.q(l) * libm::exp2(l as f64));
        let tail: f64 = (1..=90).rev().map(|k| 1.0 / (libm::exp2((l + k) as f64) - 1.0)).sum();
        let lf = l as f64;
        last = w * (lf + 1.0) * (lf - 2.0) * (tail - 1.0);
        a += last;
        b += w * (2.0 * lf - 1.0);
    }
    let v = a + b / LN_2;
    ConstantResult::new(v, last.abs() + 1e-15, Method::Series)
}

/// The integral form, checked against the series form.
pub fn c_w() -> Result<ConstantResult, QuadError> {
    let i = c_w_integral()?;
    let s = c_w_series();
    Ok(ConstantResult::new(i.value, i.est_error.max((i.value - s.value).abs()), i.method))
}

/// L[z^m e^{−z/2} h(z/2); s] for h = f̃_1 or f̃_1', from Taylor data of L[f̃_1] at σ = 2s+1.
fn half_shift(taylor: &[f64], sigma: f64, m: usize, derivative: bool) -> f64 {
    let d = |j: usize| taylor[j] * factorial(j);
    let v = if derivative {
        // L[f'](σ) = σL[f](σ) since f(0) = 0
        sigma * d(m) + if m > 0 { m as f64 * d(m - 1) } else { 0.0 }
    } else {
        d(m)
    };
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    libm::exp2((m + 1) as f64) * sign * v
}

/// Mean of P_w, the periodic factor of V(PPL)/n.
///
/// g̃_2 = z f̃_1''² − (z/16)e^{−z}(z⁴+4z³+16z²−8z+64)
///       − (z/4)e^{−z/2}(4(z+4)f̃_1(z/2) − 2(z²+2z−8)f̃_1'(z/2) − (z+2)(z+8)),
/// with f̃_1 the PPL mean.
pub fn ppl_var_mean() -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    let f2 = principal_parts(&ppl_mean_terms(POLES, true), PartialOptions { poles: POLES, max_order: 3 });
    let mut fixed = f2.mul(&f2).times_z();
    fixed.add_assign_scaled(&poly_exp(&[0.0, 64.0, -8.0, 16.0, 4.0, 1.0], 1.0), -1.0 / 16.0);
    fixed.add_assign_scaled(&poly_exp(&[0.0, 16.0, 10.0, 1.0], 0.5), 0.25);
    let mean_terms = ppl_mean_terms(POLES + 10, false);
    mellin_at_two(|s| {
        let sigma = 2.0 * s + 1.0;
        let t = taylor_at(&mean_terms, sigma, 4);
        let f = |m| half_shift(&t, sigma, m, false);
        let fp = |m| half_shift(&t, sigma, m, true);
        let mixed = 4.0 * (f(2) + 4.0 * f(1)) - 2.0 * (fp(3) + 2.0 * fp(2) - 8.0 * fp(1));
        (fixed.laplace(s) - 0.25 * mixed) * ctx.recip_q_neg2s_real(s, 1)
    })
}

// ---------------------------------------------------------------------------
// Leaves

/// L[f̃_1; s] = Σ_k 4^k/(∏_{i<k}(2^i s+1)·(2^k s+1)²).
fn leaves_mean_terms(count: u32) -> Vec<RationalTerm> {
    (0..count)
        .map(|k| {
            let mut factors: Vec<(u32, u32)> = (0..k).map(|i| (i, 1)).collect();
            factors.push((k, 2));
            RationalTerm { numer: vec![libm::exp2(2.0 * k as f64)], factors }
        })
        .collect()
}

/// L[f̃_1''; s] = s²L[f̃_1; s] − 1, the −1 folded into the k = 0 term.
fn leaves_second_terms(count: u32) -> Vec<RationalTerm> {
    let mut t = leaves_mean_terms(count);
    t[0].numer = vec![-1.0, -2.0];
    for term in t.iter_mut().skip(1) {
        term.numer = vec![0.0, 0.0, term.numer[0]];
    }
    t
}

/// C_fs = (1/log 2)∫ s/((s+1)Q(−2s)) ds.
pub fn c_fs_integral() -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    mellin_at_two(|s| ctx.recip_q_neg2s_real(s, 1) / (s + 1.0))
}

/// 1 + Σ_k k/(Q_k2^k)Σ_{j≤k}1/(2^j−1) − (1/Q_∞)(1/log 2 + c_1² − c_1).
pub fn c_fs_series_harmonic() -> ConstantResult {
    let ctx = QContext::default();
    let c = c1();
    let mut h = 0.0;
    let mut acc = 0.0;
    let mut last = 0.0;
    for k in 1..200usize {
        h += 1.0 / (libm::exp2(k as f64) - 1.0);
        last = k as f64 * h / (ctx.q(k) * libm::exp2(k as f64));
        acc += last;
    }
    let v = 1.0 + acc - (1.0 / LN_2 + c * c - c) / ctx.q_infinity();
    ConstantResult::new(v, last.abs() + 1e-14, Method::Series)
}

/// 1 + c_1 − (1/Q_∞)(1/log 2 + Σ_k (−1)^k k/(Q_k(2^k−1)2^{k(k+1)/2})).
pub fn c_fs_series_alternating() -> ConstantResult {
    let ctx = QContext::default();
    let mut acc = 0.0;
    for k in (1..30usize).rev() {
        let t = k as f64 / (ctx.q(k) * (libm::exp2(k as f64) - 1.0) * libm::exp2((k * (k + 1) / 2) as f64));
        acc += if k % 2 == 0 { t } else { -t };
    }
    let v = 1.0 + c1() - (1.0 / LN_2 + acc) / ctx.q_infinity();
    ConstantResult::new(v, 1e-15, Method::Series)
}

#[derive(Debug, Clone, Copy)]
pub struct CfsForms {
    pub integral: ConstantResult,
    pub harmonic: ConstantResult,
    pub alternating: ConstantResult,
}

impl CfsForms {
    pub fn compute() -> Result<Self, QuadError> {
        Ok(Self {
            integral: c_fs_integral()?,
            harmonic: c_fs_series_harmonic(),
            alternating: c_fs_series_alternating(),
        })
    }

    pub fn max_spread(&self) -> f64 {
        let v = [self.integral.value, self.harmonic.value, self.alternating.value];
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        hi - lo
    }
}

/// C_fs by the integral.
pub fn c_fs() -> Result<ConstantResult, QuadError> {
    c_fs_integral()
}

/// δ_ℓ = 3 + 2Σ_{j≤ℓ}1/(2^j−1) + Σ_{j≥1}(−1)^j(3·2^j−1)2^{−j(j+1)/2}/((2^j−1)2^jQ_j).
pub fn delta(l: usize) -> f64 {
    let ctx = QContext::default();
    let mut k = 0.0;
    for j in (1..40usize).rev() {
        let p = libm::exp2(j as f64);
        let t = (3.0 * p - 1.0) * libm::exp2(-((j * (j + 1) / 2) as f64)) / ((p - 1.0) * p * ctx.q(j));
        k += if j % 2 == 0 { t } else { -t };
    }
    let h: f64 = (1..=l).rev().map(|j| 1.0 / (libm::exp2(j as f64) - 1.0)).sum();
    3.0 + 2.0 * h + k
}

/// C_kp through L[g̃_2] with
/// g̃_2 = z f̃_1''² + e^{−z}(1 − e^{−z}(1+z) + 2z f̃_1'(z/2) − 4f̃_1(z/2)).
pub fn c_kp_laplace() -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    let f2 = principal_parts(&leaves_second_terms(POLES + 1), PartialOptions { poles: POLES, max_order: 2 });
    let zf2 = f2.mul(&f2).times_z();
    let mean_terms = leaves_mean_terms(POLES + 10);
    mellin_at_two(|s| {
        let sigma = 2.0 * s + 2.0;
        let t = taylor_at(&mean_terms, sigma, 2);
        let rest = 1.0 / ((s + 1.0) * (s + 2.0) * (s + 2.0)) - 8.0 * (t[0] + sigma * t[1]) - 8.0 * t[0];
        (zf2.laplace(s) + rest) * ctx.recip_q_neg2s_real(s, 1)
    })
}

/// f̂_1'' − 1 and f̂_1' from the δ_ℓ sums, where f̂_1 = f̃_1 − z + z²/2.
/// Returns the two series and the constant term of f̂_1'' − 1, which must vanish.
pub fn fhat_derivatives(terms: usize) -> (ExpPolySeries, ExpPolySeries, f64) {
    let ctx = QContext::default();
    let mut fpp = ExpPolySeries::new();
    let mut fp = ExpPolySeries::new();
    let mut constant = -1.0;
    // small ℓ last so the constant is summed from the small end
    for l in (0..terms).rev() {
        let d = delta(l);
        let a = libm::exp2(-(l as f64));
        let q = ctx.q(l);
        let c = 0.5 * a / q;
        constant += c * (d - 2.0);
        fpp.add_term(c * (2.0 - d), 0, a);
        fpp.add_term(c * 2.0 * a, 1, a);
        let c = 0.5 / q;
        fp.add_term(c * (4.0 - d), 0, 0.0);
        fp.add_term(c * (d - 2.0) * a, 1, 0.0);
        fp.add_term(c * (d - 4.0), 0, a);
        fp.add_term(-c * 2.0 * a, 1, a);
    }
    (fpp, fp, constant)
}

/// C_kp through the three-integral form built on f̂_1:
/// (log 2)C_kp = ∫s/(Q(s+1)(s+2)²) + ∫(s/Q)L[z(f̂_1''−1)²] + 2∫(s/Q)∫e^{−z(s+1)}(z − 1/(s+1))h(z)dz
/// with h(z) = f̃_1'(z/2) = f̂_1'(z/2) + 1 − z/2.
pub fn c_kp_delta() -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    let (fpp, fp, _) = fhat_derivatives(POLES as usize + 4);
    let sq = fpp.mul(&fpp).times_z();
    let mut h = fp.rescale(0.5);
    h.add_term(1.0, 0, 0.0);
    h.add_term(-0.5, 1, 0.0);
    let zh = h.times_z();
    let r = mellin_at_two(|s| {
        let p = s + 1.0;
        let third = 2.0 * (zh.laplace(p) - h.laplace(p) / p);
        (1.0 / (p * (s + 2.0) * (s + 2.0)) + sq.laplace(s) + third) * ctx.recip_q_neg2s_real(s, 1)
    })?;
    Ok(ConstantResult::new(r.value, r.est_error, Method::SingleQuadrature))
}

/// C_kp by the Laplace route, with the δ_ℓ route folded into the error.
pub fn c_kp() -> Result<ConstantResult, QuadError> {
    let a = c_kp_laplace()?;
    let b = c_kp_delta()?;
    Ok(ConstantResult::new(a.value, a.est_error.max((a.value - b.value).abs()), a.method))
}
