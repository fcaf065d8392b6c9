//! Expected profile polynomial P_n(y) = Σ_k E(#nodes at level k)·y^k.
//!
//! Closed form: P_n(y) = Σ_{k≥1} C(n,k)(−1)^{k−1} ∏_{0≤j≤k−2}(1 − y/2^j).
//! Recurrence: P_{m+1}(y) = 1 + y·2^{1−m} Σ_k C(m,k) P_k(y).
//!
//! Both are evaluated in integers over a power-of-two denominator. Reduced
//! rationals would spend nearly all their time in gcds.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{MomentError, EXACT_NMAX};

/// Largest n for the float closed form; beyond it the alternating sum has lost
/// more than half the digits.
pub const FLOAT_CLOSED_NMAX: usize = 60;

fn c2(k: usize) -> usize {
    if k < 2 {
        0
    } else {
        k * (k - 1) / 2
    }
}

fn binomials(n: usize) -> Vec<BigInt> {
    let mut c = BigInt::one();
    let mut row = Vec::with_capacity(n + 1);
    for k in 0..=n {
        row.push(c.clone());
        c = c * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    row
}

/// Integer numerators of the closed form over 2^{C(n−1,2)}.
fn closed_numerators(n: usize) -> (Vec<BigInt>, usize) {
    let d = c2(n.saturating_sub(1));
    let mut acc = vec![BigInt::zero(); n.max(1)];
    if n == 0 {
        return (acc, 0);
    }
    let binom = binomials(n);
    // prod = ∏_{j≤k−2}(2^j − y), low order first
    let mut prod = vec![BigInt::one()];
    for k in 1..=n {
        if k >= 2 {
            let pj = BigInt::one() << (k - 2);
            let mut next = vec![BigInt::zero(); prod.len() + 1];
            for (i, c) in prod.iter().enumerate() {
                next[i] += &pj * c;
                next[i + 1] -= c;
            }
            prod = next;
        }
        let shift = d - c2(k - 1);
        let scale = if k % 2 == 1 { binom[k].clone() } else { -binom[k].clone() } << shift;
        for (i, c) in prod.iter().enumerate() {
            acc[i] += &scale * c;
        }
    }
    (acc, d)
}

/// Exact coefficients of P_n(y), low order first; [y^k] is n·P(depth = k).
pub fn profile_poly_closed(n: usize) -> Result<Vec<BigRational>, MomentError> {
    if n > EXACT_NMAX {
        return Err(MomentError::TooLarge { n, limit: EXACT_NMAX });
    }
    let (num, d) = closed_numerators(n);
    let den = BigInt::one() << d;
    Ok(num.into_iter().map(|c| BigRational::new(c, den.clone())).collect())
}

/// The closed form summed in floating point, for small n only.
pub fn profile_poly_closed_f64(n: usize) -> Result<Vec<f64>, MomentError> {
    if n > FLOAT_CLOSED_NMAX {
        return Err(MomentError::Cancellation { n, limit: FLOAT_CLOSED_NMAX });
    }
    let mut acc = vec![0.0; n.max(1)];
    let mut prod = vec![1.0];
    let mut binom = 1.0;
    for k in 1..=n {
        binom *= (n - k + 1) as f64 / k as f64;
        if k >= 2 {
            let inv = libm::exp2(-((k - 2) as f64));
            let mut next = vec![0.0; prod.len() + 1];
            for (i, c) in prod.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= inv * c;
            }
            prod = next;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        for (i, c) in prod.iter().enumerate() {
            acc[i] += sign * binom * c;
        }
    }
    Ok(acc)
}

/// Exact coefficients of P_n(y) from the recurrence. Cost grows like n³ in
/// big-integer operations; use it as a cross-check at moderate n.
pub fn profile_poly_recurrence(n: usize) -> Result<Vec<BigRational>, MomentError> {
    if n > EXACT_NMAX {
        return Err(MomentError::TooLarge { n, limit: EXACT_NMAX });
    }
    if n == 0 {
        return Ok(vec![BigRational::zero()]);
    }
    // polys[m] holds the numerator of P_m over 2^{C(m−1,2)}
    let mut polys: Vec<Vec<BigInt>> = vec![Vec::new(), vec![BigInt::one()]];
    for m in 1..n {
        let e_next = c2(m);
        let binom = binomials(m);
        let mut next = vec![BigInt::zero(); m + 1];
        next[0] = BigInt::one() << e_next;
        for k in 1..=m {
            let shift = c2(m - 1) - c2(k - 1);
            let w = &binom[k] << shift;
            for (i, c) in polys[k].iter().enumerate() {
                next[i + 1] += &w * c;
            }
        }
        polys.push(next);
    }
    let den = BigInt::one() << c2(n - 1);
    Ok(polys[n].iter().map(|c| BigRational::new(c.clone(), den.clone())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMoments {
    pub n: usize,
    /// P_n'(1) and P_n''(1).
    pub p1: f64,
    pub p2: f64,
    /// Mean and variance of the depth of a uniformly chosen node.
    pub mean: f64,
    pub variance: f64,
}

impl DepthMoments {
    fn from_derivatives(n: usize, p1: f64, p2: f64) -> Self {
        let nf = n as f64;
        let mean = p1 / nf;
        Self { n, p1, p2, mean, variance: p2 / nf + mean - mean * mean }
    }
}

fn dyadic_to_f64(num: &BigInt, e: usize) -> f64 {
    let bits = num.bits() as usize;
    let drop = bits.saturating_sub(64);
    let top = (num.abs() >> drop).to_f64().unwrap_or(f64::NAN);
    let v = libm::ldexp(top, drop as i32 - e as i32);
    if num.is_negative() {
        -v
    } else {
        v
    }
}

/// P_n'(1) and P_n''(1) from the closed form, exactly.
///
/// With R_k(y) = ∏_{1≤j≤k−2}(1 − y/2^j), P_n'(1) = Σ_{k≥2} C(n,k)(−1)^k R_k(1)
/// and P_n''(1) = 2Σ_{k≥2} C(n,k)(−1)^k R_k'(1). Both sums run by Horner's rule
/// over the step (R, R') ↦ (rR, rR' − dR), r = 1 − d, d = 2^{1−k}, with all
/// numerators kept over one common power of two.
pub fn depth_moments_exact(n: usize) -> DepthMoments {
    assert!(n >= 1);
    if n == 1 {
        return DepthMoments::from_derivatives(1, 0.0, 0.0);
    }
    let mut c = BigInt::one(); // C(n, k), from k = n downwards
    let signed = |c: &BigInt, k: usize| if k % 2 == 0 { c.clone() } else { -c.clone() };
    let mut s1 = signed(&c, n);
    let mut alpha = BigInt::zero();
    let mut beta = signed(&c, n) << 1usize;
    let mut e = 0usize;
    for k in (2..n).rev() {
        // C(n,k) from C(n,k+1)
        c = c * BigInt::from(k + 1) / BigInt::from(n - k);
        let j = k - 1;
        s1 = (&s1 << j) - &s1;
        let a_next = (&alpha << j) - &alpha - &beta;
        beta = (&beta << j) - &beta;
        alpha = a_next;
        e += j;
        let ck = signed(&c, k) << e;
        s1 += &ck;
        beta += ck << 1usize;
    }
    let p1 = dyadic_to_f64(&s1, e);
    let p2 = dyadic_to_f64(&alpha, e);
    DepthMoments::from_derivatives(n, p1, p2)
}

/// P_n'(1) and P_n''(1) from the derivatives of the recurrence at y = 1:
/// with A_m = 2^{1−m}Σ_k C(m,k)P_k, P'_{m+1}(1) = A_m(1) + A_m'(1) and
/// P''_{m+1}(1) = 2A_m'(1) + A_m''(1). All terms are positive.
pub fn depth_moments_f64(n: usize) -> DepthMoments {
    assert!(n >= 1);
    let mut d1 = vec![0.0; n + 1];
    let mut d2 = vec![0.0; n + 1];
    for m in 1..n {
        let (k0, row) = crate::scalar::float_binomial_row(m);
        let mut a1 = 0.0;
        let mut a2 = 0.0;
        for (i, w) in row.iter().enumerate() {
            let k = k0 + i;
            a1 += w * d1[k];
            a2 += w * d2[k];
        }
        // A(1) = 2^{1−m}Σ C(m,k)·k = m
        d1[m + 1] = m as f64 + 2.0 * a1;
        d2[m + 1] = 4.0 * a1 + 2.0 * a2;
    }
    DepthMoments::from_derivatives(n, d1[n], d2[n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_at_one(p: &[BigRational]) -> BigRational {
        p.iter().fold(BigRational::zero(), |a, c| a + c)
    }

    #[test]
    fn small_cases() {
        let one = profile_poly_closed(1).unwrap();
        assert_eq!(one, vec![BigRational::one()]);
        // P_3 = 1 + 3y/2 + y²/2
        let p3 = profile_poly_closed(3).unwrap();
        assert_eq!(p3[1], BigRational::new(3.into(), 2.into()));
        assert_eq!(p3[2], BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn closed_form_equals_recurrence() {
        for n in 1..=40 {
            let a = profile_poly_closed(n).unwrap();
            let b = profile_poly_recurrence(n).unwrap();
            assert_eq!(a, b, "n = {n}");
            assert_eq!(eval_at_one(&a), BigRational::from_integer(n.into()));
        }
    }

    #[test]
    fn float_closed_form_limits() {
        let exact = profile_poly_closed(30).unwrap();
        let fl = profile_poly_closed_f64(30).unwrap();
        for (a, b) in exact.iter().zip(&fl) {
            assert!((crate::scalar::rational_to_f64(a) - b).abs() < 1e-6);
        }
        assert!(matches!(profile_poly_closed_f64(61), Err(MomentError::Cancellation { .. })));
    }

    #[test]
    fn derivative_routes_agree() {
        for n in [2usize, 3, 7, 50, 300] {
            let a = depth_moments_exact(n);
            let b = depth_moments_f64(n);
            assert!((a.p1 - b.p1).abs() < 1e-10 * a.p1.max(1.0), "{a:?} {b:?}");
            assert!((a.p2 - b.p2).abs() < 1e-10 * a.p2.max(1.0), "{a:?} {b:?}");
        }
        let p = profile_poly_closed(50).unwrap();
        let p1: BigRational = p.iter().enumerate().fold(BigRational::zero(), |a, (k, c)| {
            a + c * BigRational::from_integer(k.into())
        });
        let a = depth_moments_exact(50);
        assert!((crate::scalar::rational_to_f64(&p1) - a.p1).abs() < 1e-10 * a.p1);
    }
}
