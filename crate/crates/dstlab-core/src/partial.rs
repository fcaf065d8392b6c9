//! Partial fractions of sums of rational functions with poles at s = −2^{−i}.
//!
//! Each summand is p(s)·∏_m (2^m s + 1)^{−e_m}. At a pole s0 = −2^{−i} the
//! co-factor is expanded in a local power series, which avoids the linear solves
//! that become hopeless once the poles are repeated (b ≥ 2).

use alloc::vec::Vec;

use crate::exppoly::ExpPolySeries;
use crate::series;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalTerm {
    /// Numerator polynomial in s, low order first.
    pub numer: Vec<f64>,
    /// (m, e): a factor (2^m s + 1)^{−e}.
    pub factors: Vec<(u32, u32)>,
}

impl RationalTerm {
    pub fn eval(&self, s: f64) -> f64 {
        let mut p = 0.0;
        for &c in self.numer.iter().rev() {
            p = p * s + c;
        }
        for &(m, e) in &self.factors {
            p *= libm::pow(libm::ldexp(s, m as i32) + 1.0, -(e as f64));
        }
        p
    }

    fn exponent_at(&self, i: u32) -> u32 {
        self.factors.iter().filter(|f| f.0 == i).map(|f| f.1).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartialOptions {
    /// Poles s = −2^{−i} for i < `poles` are kept.
    pub poles: u32,
    /// Highest pole order occurring in any term.
    pub max_order: usize,
}

/// Inverse Laplace transform of Σ_j terms[j], as an exponential polynomial.
///
/// A term whose numerator degree reaches the total denominator degree would
/// carry a delta component at z = 0; callers keep numerators strictly proper.
pub fn principal_parts(terms: &[RationalTerm], opts: PartialOptions) -> ExpPolySeries {
    let n = opts.max_order;
    let mut out = ExpPolySeries::new();
    for i in 0..opts.poles {
        let s0 = -libm::exp2(-(i as f64));
        let mut h = alloc::vec![0.0; n];
        for term in terms {
            let e = term.exponent_at(i);
            if e == 0 {
                continue;
            }
            assert!(e as usize <= n, "pole order {e} exceeds max_order {n}");
            let mut ser = series::poly_taylor(&term.numer, s0, n);
            let mut merged: Vec<(u32, u32)> = Vec::new();
            for &(m, em) in &term.factors {
                if m == i {
                    continue;
                }
                match merged.iter_mut().find(|f| f.0 == m) {
                    Some(f) => f.1 += em,
                    None => merged.push((m, em)),
                }
            }
            for (m, em) in merged {
                let alpha = libm::exp2(m as f64);
                ser = series::mul(&ser, &series::inv_pow(1.0 + alpha * s0, alpha, em, n), n);
            }
            // (2^i s + 1)^{−e} = 2^{−ie} (s − s0)^{−e}; store t^{n−e}·(rest) so that
            // h holds the Taylor series of (s − s0)^n · R(s)
            let shift = n - e as usize;
            let scale = libm::exp2(-((i * e) as f64));
            for r in 0..(n - shift) {
                h[r + shift] += scale * ser[r];
            }
        }
        let mut fact = 1.0;
        for q in 1..=n {
            // 1/(s − s0)^q  ↔  z^{q−1} e^{s0 z}/(q−1)!
            if q > 1 {
                fact *= (q - 1) as f64;
            }
            let c = h[n - q];
            if c != 0.0 {
                out.add_term(c / fact, (q - 1) as u32, -s0);
            }
        }
    }
    out
}

/// Taylor coefficients of Σ_j terms[j] at a regular point s0, to order n.
pub fn taylor_at(terms: &[RationalTerm], s0: f64, n: usize) -> Vec<f64> {
    let mut acc = alloc::vec![0.0; n];
    for term in terms {
        let mut ser = series::poly_taylor(&term.numer, s0, n);
        for &(m, e) in &term.factors {
            let alpha = libm::exp2(m as f64);
            ser = series::mul(&ser, &series::inv_pow(1.0 + alpha * s0, alpha, e, n), n);
        }
        for (a, c) in acc.iter_mut().zip(&ser) {
            *a += c;
        }
    }
    acc
}

/// Terms of the Laplace transform of f̃_1'' for key-wise path length in b-DSTs:
/// Σ_{j≥0} ∏_{m≤j} (2^m s + 1)^{−b}.
pub fn kpl_second_derivative_terms(b: u32, count: u32) -> Vec<RationalTerm> {
    (0..count)
        .map(|j| RationalTerm {
            numer: alloc::vec![1.0],
            factors: (0..=j).map(|m| (m, b)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::QContext;

    #[test]
    fn b1_reproduces_closed_form() {
        let ctx = QContext::default();
        let terms = kpl_second_derivative_terms(1, 70);
        let f2 = principal_parts(&terms, PartialOptions { poles: 60, max_order: 1 });
        for l in 0..20u32 {
            let a = libm::exp2(-(l as f64));
            let want = ctx.q_infinity() / (libm::exp2(l as f64) * ctx.q(l as usize));
            let got = f2.coefficient(0, a);
            assert!((got - want).abs() < 1e-12 * want, "l={l}: {got} vs {want}");
        }
    }

    #[test]
    fn taylor_matches_difference_quotients() {
        let terms = kpl_second_derivative_terms(2, 40);
        let t = taylor_at(&terms, 1.5, 3);
        let f = |s: f64| terms.iter().map(|x| x.eval(s)).sum::<f64>();
        let h = 1e-4;
        assert!((t[0] - f(1.5)).abs() < 1e-14);
        assert!((t[1] - (f(1.5 + h) - f(1.5 - h)) / (2.0 * h)).abs() < 1e-7);
        assert!((2.0 * t[2] - (f(1.5 + h) - 2.0 * f(1.5) + f(1.5 - h)) / (h * h)).abs() < 1e-5);
    }

    #[test]
    fn laplace_round_trip() {
        for b in 1..=4u32 {
            let terms = kpl_second_derivative_terms(b, 70);
            let f2 = principal_parts(&terms, PartialOptions { poles: 60, max_order: b as usize });
            for s in [0.1, 1.0, 10.0] {
                let direct: f64 = terms.iter().map(|t| t.eval(s)).sum();
                let rel = (f2.laplace(s) - direct).abs() / direct;
                assert!(rel < 1e-9, "b={b} s={s} rel={rel}");
            }
        }
    }
}
