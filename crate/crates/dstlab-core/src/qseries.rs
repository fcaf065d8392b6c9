//! q-Pochhammer products at q = 1/2 and the small closed-form kernels φ and λ_k.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};
use num_complex::Complex64;

/// Complex numbers throughout the crate.
pub type ComplexValue = Complex64;

/// Relative size below which an infinite-product factor is treated as 1.
pub const PRODUCT_TOL: f64 = 1e-18;

/// Radius around x = 1 (resp. t = 1) inside which φ and λ_k switch to Taylor series.
pub const NEAR_ONE: f64 = 1e-4;

/// χ_k = 2kπi / log 2.
pub fn chi(k: i64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * k as f64 / LN_2)
}

/// Q_k = ∏_{1≤j≤k} (1 − 2^{−j}).
pub fn q_k(k: usize) -> f64 {
    let mut p = 1.0;
    let mut t = 1.0;
    for _ in 0..k {
        t *= 0.5;
        p *= 1.0 - t;
    }
    p
}

#[derive(Debug, Clone)]
pub struct QContext {
    qk_table: Vec<f64>,
    q_infinity: f64,
    truncation_bound: f64,
}

impl Default for QContext {
    fn default() -> Self {
        Self::new(PRODUCT_TOL)
    }
}

impl QContext {
    pub fn new(truncation_bound: f64) -> Self {
        let mut qk_table = Vec::with_capacity(80);
        qk_table.push(1.0);
        let mut p = 1.0;
        let mut t = 1.0;
        loop {
            t *= 0.5;
            // stop once a factor is 1 in double precision as well
            if t < truncation_bound || 1.0 - t == 1.0 || p * (1.0 - t) == p {
                break;
            }
            p *= 1.0 - t;
            qk_table.push(p);
        }
        Self {
            q_infinity: p,
            qk_table,
            truncation_bound,
        }
    }

    /// Q_k, equal to Q_∞ once the remaining factors are below the truncation bound.
    pub fn q(&self, k: usize) -> f64 {
        self.qk_table.get(k).copied().unwrap_or(self.q_infinity)
    }

    pub fn q_infinity(&self) -> f64 {
        self.q_infinity
    }

    pub fn table(&self) -> &[f64] {
        &self.qk_table
    }

    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// Q(z) = ∏_{j≥1} (1 − z/2^j).
    pub fn q_of(&self, z: Complex64) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        let mut t = 1.0;
        loop {
            t *= 0.5;
            let w = z * t;
            if w.norm() < self.truncation_bound {
                return p;
            }
            p *= Complex64::new(1.0, 0.0) - w;
        }
    }

    /// log ∏_{j≥0} (1 + s/2^j), real s > −1.
    pub fn ln_q_neg2s_real(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        let mut t = s;
        while libm::fabs(t) >= self.truncation_bound {
            acc += libm::log1p(t);
            t *= 0.5;
        }
        acc
    }

    /// Q(−2s)^b = ∏_{j≥0} (1 + s/2^j)^b.
    ///
    /// Overflows to infinity for large s and b; integrands should use
    /// [`QContext::recip_q_neg2s`] instead.
    pub fn q_neg2s(&self, s: Complex64, b: u32) -> Complex64 {
        (self.ln_q_neg2s(s) * b as f64).exp()
    }

    pub fn recip_q_neg2s(&self, s: Complex64, b: u32) -> Complex64 {
        (-self.ln_q_neg2s(s) * b as f64).exp()
    }

    pub fn recip_q_neg2s_real(&self, s: f64, b: u32) -> f64 {
        libm::exp(-(b as f64) * self.ln_q_neg2s_real(s))
    }

    fn ln_q_neg2s(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut t = s;
        while t.norm() >= self.truncation_bound {
            acc += (t + 1.0).ln();
            t *= 0.5;
        }
        acc
    }

    /// Σ_{ℓ≤L} z^ℓ/(Q_ℓ 2^ℓ), the reciprocal series of Q(z) for |z| < 2.
    pub fn inv_q_series(&self, z: Complex64, terms: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zp = Complex64::new(1.0, 0.0);
        let mut two = 1.0;
        for l in 0..terms {
            acc += zp / (self.q(l) * two);
            zp *= z;
            two *= 2.0;
        }
        acc
    }
}

/// Constant term of the large-s expansion of log Q(−2s).
pub fn logq_q0() -> f64 {
    LN_2 / 12.0 + PI * PI / (6.0 * LN_2)
}

/// Coefficient of s^{−χ_k} in the large-s expansion of log Q(−2s), k ≠ 0.
///
/// Fitted against the direct product at s ≈ 2^90: the oscillation has amplitude
/// 1/(k sinh(2kπ²/log 2)) and a negative sign at integer log₂ s.
pub fn logq_qk(k: i64) -> f64 {
    let kf = k as f64;
    -1.0 / (2.0 * kf * libm::sinh(2.0 * kf * PI * PI / LN_2))
}

/// (log s)²/(2 log 2) + (log s)/2 + Σ_{|k|≤1} q_k s^{−χ_k}.
pub fn logq_asymptotic(s: f64) -> f64 {
    let ls = libm::log(s);
    let phase = 2.0 * PI * ls / LN_2;
    ls * ls / (2.0 * LN_2) + 0.5 * ls + logq_q0() + 2.0 * logq_qk(1) * libm::cos(phase)
}

fn binom_c(a: Complex64, n: usize) -> Complex64 {
    let mut c = Complex64::new(1.0, 0.0);
    for i in 0..n {
        c = c * (a - i as f64) / (i + 1) as f64;
    }
    c
}

// (1 − x^a(1 − a(x−1)) ... ) / (x−1)^2 expanded at x = 1 + e:
// coefficient of e^{n-2} is C(a, n−1)(n−1)(a+1)/n.
fn near_one_series(a: Complex64, e: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ep = 1.0;
    for n in 2..6 {
        acc += binom_c(a, n - 1) * ((n - 1) as f64) * (a + 1.0) / (n as f64) * ep;
        ep *= e;
    }
    acc
}

/// φ(ω; x) = ∫_0^∞ s^{ω−1} / ((s+1)(s+x)²) ds, continued meromorphically in ω.
///
/// ω = 2 is handled as a limit; other integers ω make the closed form 0/0 and
/// are outside the supported domain.
pub fn phi(omega: Complex64, x: f64) -> Complex64 {
    if libm::fabs(x - 1.0) < NEAR_ONE {
        phi_series(omega, x)
    } else {
        phi_closed(omega, x)
    }
}

pub fn phi_closed(omega: Complex64, x: f64) -> Complex64 {
    let a = omega - 2.0;
    let e = x - 1.0;
    if a.norm() == 0.0 {
        return Complex64::new((x - libm::log(x) - 1.0) / (e * e), 0.0);
    }
    let xa = Complex64::new(x, 0.0).powc(a);
    let num = xa * (a * x - 1.0 - a) + 1.0;
    num * PI / ((omega * PI).sin() * e * e)
}

pub fn phi_series(omega: Complex64, x: f64) -> Complex64 {
    let a = omega - 2.0;
    if a.norm() == 0.0 {
        // (e − log(1+e))/e² = 1/2 − e/3 + e²/4 − e³/5 + …
        let e = x - 1.0;
        return Complex64::new(0.5 - e / 3.0 + e * e / 4.0 - e * e * e / 5.0, 0.0);
    }
    near_one_series(a, x - 1.0) * PI / (omega * PI).sin()
}

/// φ(2; x) = (x − log x − 1)/(x − 1)².
///
/// For |x − 1| < 1/4 the quotient is summed as Σ_{n≥2} (−e)^{n−2}/n, since the
/// closed form cancels to e²/2 there.
pub fn phi2(x: f64) -> f64 {
    let e = x - 1.0;
    if libm::fabs(e) < 0.25 {
        let mut acc = 0.0;
        for n in (2..32).rev() {
            acc = 1.0 / n as f64 - e * acc;
        }
        acc
    } else {
        (x - libm::log(x) - 1.0) / (e * e)
    }
}

/// λ_k(t) = (1 − t^{χ_k}(1 + χ_k(1 − t)))/(1 − t)², equal to χ_k(χ_k+1)/2 at t = 1.
pub fn lambda_k(t: f64, k: i64) -> Complex64 {
    if libm::fabs(t - 1.0) < NEAR_ONE {
        lambda_series(t, k)
    } else {
        lambda_closed(t, k)
    }
}

pub fn lambda_closed(t: f64, k: i64) -> Complex64 {
    lambda_general(t, chi(k))
}

/// The λ kernel with χ_k replaced by an arbitrary exponent a, so that
/// φ(2 + a; x) = π/sin(π(2+a)) · λ(x; a).
pub fn lambda_at(t: f64, a: Complex64) -> Complex64 {
    if libm::fabs(t - 1.0) < NEAR_ONE {
        near_one_series(a, t - 1.0)
    } else {
        lambda_general(t, a)
    }
}

fn lambda_general(t: f64, c: Complex64) -> Complex64 {
    let e = t - 1.0;
    let tc = Complex64::new(t, 0.0).powc(c);
    (-(tc * (c * (-e) + 1.0)) + 1.0) / (e * e)
}

pub fn lambda_series(t: f64, k: i64) -> Complex64 {
    near_one_series(chi(k), t - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qk_values() {
        assert_eq!(q_k(0), 1.0);
        assert_eq!(q_k(1), 0.5);
        let ctx = QContext::default();
        let qi = ctx.q_infinity();
        assert!(qi > 0.28878 && qi < 0.28879);
        assert!((qi - 0.288_788_095_086_602_42).abs() < 1e-15);
        for k in 1..ctx.table().len() {
            assert!(ctx.q(k) < ctx.q(k - 1));
        }
    }

    #[test]
    fn q_of_matches_reciprocal_series() {
        let ctx = QContext::default();
        assert_eq!(ctx.q_of(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        assert!((ctx.q_of(Complex64::new(1.0, 0.0)).re - ctx.q_infinity()).abs() < 1e-15);
        let z = Complex64::new(0.5, 0.0);
        let inv = ctx.inv_q_series(z, 80);
        assert!((ctx.q_of(z) * inv - 1.0).norm() < 1e-12);
    }

    #[test]
    fn euler_identity() {
        let ctx = QContext::default();
        for jj in 1..9usize {
            let mut s = 0.0;
            for j in 0..=jj {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * libm::exp2(-((j * (j + 1) / 2) as f64)) / ctx.q(j);
            }
            let bound = libm::exp2(-((jj * (jj + 1) / 2) as f64)) / ctx.q_infinity();
            assert!((s - ctx.q_infinity()).abs() <= bound + 1e-16);
        }
    }

    #[test]
    fn q_neg2s_values() {
        let ctx = QContext::default();
        let one = Complex64::new(1.0, 0.0);
        assert!((ctx.q_neg2s(Complex64::new(0.0, 0.0), 3) - one).norm() < 1e-15);
        // direct product, cross-checked through exp Σ log(1+2^{-j})
        let direct = (0..70).fold(1.0, |p, j| p * (1.0 + libm::exp2(-(j as f64))));
        let v1 = ctx.q_neg2s(one, 1).re;
        assert!((v1 - direct).abs() < 1e-13 * direct);
        assert!((v1 - 4.768_462_058_062_743_4).abs() < 1e-12);
        let v2 = ctx.q_neg2s(one, 2).re;
        assert!((v2 - v1 * v1).abs() < 1e-12 * v2);
    }

    #[test]
    fn logq_expansion() {
        let ctx = QContext::default();
        let s = 1e3;
        assert!((ctx.ln_q_neg2s_real(s) - logq_asymptotic(s)).abs() <= 0.01);
        assert!((logq_q0() - 2.430_900_485_877_913).abs() < 1e-14);
        assert!((logq_qk(1).abs() - 4.288_545_190_303_603e-13).abs() < 1e-25);
        assert_eq!(logq_qk(1), logq_qk(-1));
    }

    #[test]
    fn phi_closed_forms() {
        assert!((phi2(1.0) - 0.5).abs() < 1e-15);
        assert!((phi2(2.0) - (1.0 - LN_2)).abs() < 1e-15);
        // mpmath at 30 digits
        assert!((phi2(1.0 + libm::exp2(-10.0)) - 0.499_674_717_399_132_7).abs() < 1e-16);
        assert!((phi2(0.8) - 0.578_588_782_855_243_9).abs() < 3e-16);
        assert!((phi2(1.2) - 0.441_961_080_151_134_4).abs() < 3e-16);
        let w = Complex64::new(2.3, 0.4);
        assert!((phi(w, 1.0) - (w - 1.0) * (w - 2.0) * PI / (2.0 * (w * PI).sin())).norm() < 1e-13);
    }

    #[test]
    fn branch_switch_continuity() {
        for &x in &[1.0 - NEAR_ONE, 1.0 + NEAR_ONE] {
            for w in [Complex64::new(2.0, 0.0), Complex64::new(2.3, 0.4), Complex64::new(0.7, -3.0)] {
                let d = (phi_closed(w, x) - phi_series(w, x)).norm();
                assert!(d <= 1e-6, "phi at {x}, {w}: {d}");
            }
            for k in [-2, 1, 3] {
                let d = (lambda_closed(x, k) - lambda_series(x, k)).norm();
                assert!(d <= 1e-6, "lambda at {x}, k={k}: {d}");
            }
        }
    }

    #[test]
    fn lambda_branches() {
        assert_eq!(lambda_k(0.3, 0), Complex64::new(0.0, 0.0));
        let c = chi(1);
        assert!((lambda_k(1.0, 1) - c * (c + 1.0) / 2.0).norm() < 1e-12);
    }

    #[test]
    fn lambda_is_phi_over_gamma_product() {
        use crate::special::complex_gamma;
        // φ(2+χ;x) = Γ(2+χ)Γ(−1−χ)λ_k(x), since 2^{jχ} = 1
        for k in [1i64, 2] {
            let w = chi(k) + 2.0;
            let g = complex_gamma(w).unwrap() * complex_gamma(-chi(k) - 1.0).unwrap();
            for &x in &[0.5, 0.75, 1.0, 1.5, 3.0] {
                let lhs = phi(w, x);
                let rhs = g * lambda_k(x, k);
                assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1e-300), "k={k} x={x}");
            }
        }
    }
}
