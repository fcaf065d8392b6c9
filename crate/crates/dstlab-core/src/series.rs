//! Truncated power series in one variable, stored low order first.

use alloc::vec;
use alloc::vec::Vec;

pub fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            c[i + j] += ai * bj;
        }
    }
    c
}

/// Series of (c0 + αt)^{−e} to order n.
pub fn inv_pow(c0: f64, alpha: f64, e: u32, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = libm::pow(c0, -(e as f64));
    let ratio = alpha / c0;
    for r in 1..n {
        let k = (r - 1) as f64;
        out[r] = out[r - 1] * (-(e as f64) - k) / (k + 1.0) * ratio;
    }
    out
}

/// Taylor coefficients at s0 of a polynomial given low order first.
pub fn poly_taylor(coeffs: &[f64], s0: f64, n: usize) -> Vec<f64> {
    // synthetic division, repeated
    let mut work = coeffs.to_vec();
    let mut out = vec![0.0; n];
    for slot in out.iter_mut() {
        if work.is_empty() {
            break;
        }
        let mut carry = 0.0;
        for c in work.iter_mut().rev() {
            let v = *c + carry * s0;
            carry = v;
            *c = v;
        }
        // work[0] now holds p(s0); the rest is the quotient shifted by one
        *slot = work[0];
        work.remove(0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_pow_matches_binomial_series() {
        // (2 + 3t)^{-2}: 1/4, -3/4, 27/16
        let s = inv_pow(2.0, 3.0, 2, 3);
        assert!((s[0] - 0.25).abs() < 1e-15);
        assert!((s[1] + 0.75).abs() < 1e-15);
        assert!((s[2] - 27.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn taylor_of_polynomial() {
        // p(s) = 1 + 2s + 3s², at s0 = -1: p = 2, p' = -4, p''/2 = 3
        let t = poly_taylor(&[1.0, 2.0, 3.0], -1.0, 4);
        assert_eq!(t, vec![2.0, -4.0, 3.0, 0.0]);
    }

    #[test]
    fn product_truncates() {
        let c = mul(&[1.0, 1.0], &[1.0, -1.0], 3);
        assert_eq!(c, vec![1.0, 0.0, -1.0]);
    }
}
