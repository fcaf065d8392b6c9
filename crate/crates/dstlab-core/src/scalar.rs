//! Number types the moment recurrences run over.
//!
//! `f64` is the large-n workhorse, `BigRational` gives exact dyadic results for
//! integer-valued parameters, and [`LogPoly`] keeps logarithmic tolls exact.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone + PartialEq + Debug + Zero + One + Sub<Output = Self> + Neg<Output = Self>
{
    const EXACT: bool;
    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &BigRational) -> Self;
    /// Natural logarithm of a positive integer, when the type can hold it.
    fn ln_int(n: u64) -> Option<Self>;
    fn as_f64(&self) -> f64;
    /// num·2^e.
    fn dyadic(num: i64, e: i64) -> Self;

    /// Row n of C(n,k)/2^n as (first k, weights). Float rows drop weights that
    /// cannot affect a double-precision sum.
    fn binomial_row(n: usize) -> (usize, Vec<Self>);

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

/// Weights below this fraction of the central one are dropped in float rows.
pub const FLOAT_ROW_CUTOFF: f64 = 1e-30;

/// Float binomial row: centre from log-gamma, then the ratio recurrence
/// π_{n,k+1} = π_{n,k}(n−k)/(k+1) outward, then renormalised to sum 1.
pub fn float_binomial_row(n: usize) -> (usize, Vec<f64>) {
    if n == 0 {
        return (0, vec![1.0]);
    }
    let nf = n as f64;
    let c = n / 2;
    let lc = crate::special::ln_gamma(nf + 1.0)
        - crate::special::ln_gamma(c as f64 + 1.0)
        - crate::special::ln_gamma((n - c) as f64 + 1.0)
        - nf * core::f64::consts::LN_2;
    let wc = libm::exp(lc);
    let mut right = vec![wc];
    let mut w = wc;
    let mut k = c;
    while k < n {
        w *= (n - k) as f64 / (k + 1) as f64;
        k += 1;
        if w < FLOAT_ROW_CUTOFF * wc {
            break;
        }
        right.push(w);
    }
    let mut left = Vec::new();
    let mut w = wc;
    let mut k = c;
    while k > 0 {
        w *= k as f64 / (n - k + 1) as f64;
        k -= 1;
        if w < FLOAT_ROW_CUTOFF * wc {
            break;
        }
        left.push(w);
    }
    let start = c - left.len();
    left.reverse();
    left.extend(right);
    let total: f64 = left.iter().sum();
    for x in left.iter_mut() {
        *x /= total;
    }
    (start, left)
}

pub fn rational_binomial_row(n: usize) -> Vec<BigRational> {
    let den = BigInt::one() << n;
    let mut c = BigInt::one();
    let mut row = Vec::with_capacity(n + 1);
    for k in 0..=n {
        row.push(BigRational::new(c.clone(), den.clone()));
        c = c * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    row
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(q: &BigRational) -> Self {
        rational_to_f64(q)
    }
    fn ln_int(n: u64) -> Option<Self> {
        Some(libm::log(n as f64))
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn dyadic(num: i64, e: i64) -> Self {
        libm::ldexp(num as f64, e.clamp(-100_000, 100_000) as i32)
    }
    fn binomial_row(n: usize) -> (usize, Vec<Self>) {
        float_binomial_row(n)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn ln_int(n: u64) -> Option<Self> {
        (n == 1).then(BigRational::zero)
    }
    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn dyadic(num: i64, e: i64) -> Self {
        dyadic_rational(num, e)
    }
    fn binomial_row(n: usize) -> (usize, Vec<Self>) {
        (0, rational_binomial_row(n))
    }
}

pub fn dyadic_rational(num: i64, e: i64) -> BigRational {
    let n = BigInt::from(num);
    if e >= 0 {
        BigRational::from_integer(n << e as usize)
    } else {
        BigRational::new(n, BigInt::one() << (-e) as usize)
    }
}

/// Correctly scaled conversion, also for numerators and denominators far beyond
/// the f64 exponent range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    if let Some(v) = q.to_f64() {
        if v.is_finite() && v != 0.0 {
            return v;
        }
    }
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        q.numer().clone() / (q.denom().clone() << shift as usize)
    } else {
        (q.numer().clone() << (-shift) as usize) / q.denom().clone()
    };
    let m = scaled.to_f64().unwrap_or(f64::NAN);
    libm::ldexp(m, shift as i32)
}

/// Polynomials over ℚ in the symbols log 2, log 3, log 5, … .
///
/// A monomial is an exponent vector indexed by prime position; trailing zeros
/// are trimmed so every value has one representation and structural equality
/// is mathematical equality (the logs of primes are algebraically independent
/// over ℚ, so no further identities exist).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct LogPoly {
    terms: BTreeMap<Vec<u32>, BigRational>,
}

fn nth_prime_index(p: u64) -> usize {
    let mut idx = 0;
    let mut q = 2u64;
    while q < p {
        q += 1;
        if is_prime(q) {
            idx += 1;
        }
    }
    idx
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn nth_prime(idx: usize) -> u64 {
    let mut count = 0;
    let mut q = 1u64;
    loop {
        q += 1;
        if is_prime(q) {
            if count == idx {
                return q;
            }
            count += 1;
        }
    }
}

impl LogPoly {
    pub fn constant(q: BigRational) -> Self {
        let mut p = Self::default();
        p.add_monomial(Vec::new(), q);
        p
    }

    fn add_monomial(&mut self, mut e: Vec<u32>, c: BigRational) {
        while e.last() == Some(&0) {
            e.pop();
        }
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(Zero::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// log n as Σ_p v_p(n)·(log p).
    pub fn ln(n: u64) -> Self {
        assert!(n >= 1);
        let mut p = Self::default();
        let mut m = n;
        let mut d = 2u64;
        while m > 1 {
            let mut k = 0u32;
            while m % d == 0 {
                m /= d;
                k += 1;
            }
            if k > 0 {
                let mut e = vec![0; nth_prime_index(d) + 1];
                *e.last_mut().unwrap() = 1;
                p.add_monomial(e, BigRational::from_integer(BigInt::from(k)));
            }
            d += 1;
        }
        p
    }
}

impl Add for LogPoly {
    type Output = LogPoly;
    fn add(mut self, rhs: LogPoly) -> LogPoly {
        for (e, c) in rhs.terms {
            self.add_monomial(e, c);
        }
        self
    }
}

impl Neg for LogPoly {
    type Output = LogPoly;
    fn neg(mut self) -> LogPoly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Sub for LogPoly {
    type Output = LogPoly;
    fn sub(self, rhs: LogPoly) -> LogPoly {
        self + (-rhs)
    }
}

impl Mul for LogPoly {
    type Output = LogPoly;
    fn mul(self, rhs: LogPoly) -> LogPoly {
        let mut out = LogPoly::default();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let len = e1.len().max(e2.len());
                let e: Vec<u32> = (0..len)
                    .map(|i| e1.get(i).copied().unwrap_or(0) + e2.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_monomial(e, c1 * c2);
            }
        }
        out
    }
}

impl Zero for LogPoly {
    fn zero() -> Self {
        LogPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for LogPoly {
    fn one() -> Self {
        LogPoly::constant(BigRational::one())
    }
}

impl Scalar for LogPoly {
    const EXACT: bool = true;
    fn from_i64(v: i64) -> Self {
        LogPoly::constant(BigRational::from_integer(BigInt::from(v)))
    }
    fn from_rational(q: &BigRational) -> Self {
        LogPoly::constant(q.clone())
    }
    fn ln_int(n: u64) -> Option<Self> {
        Some(LogPoly::ln(n))
    }
    fn as_f64(&self) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                t *= libm::pow(libm::log(nth_prime(i) as f64), k as f64);
            }
            acc += t;
        }
        acc
    }
    fn dyadic(num: i64, e: i64) -> Self {
        LogPoly::constant(dyadic_rational(num, e))
    }
    fn binomial_row(n: usize) -> (usize, Vec<Self>) {
        (0, rational_binomial_row(n).iter().map(LogPoly::from_rational).collect())
    }
}

/// Sign-aware absolute value used by exact tolls.
pub fn abs_rational(q: &BigRational) -> BigRational {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_row_sums_to_one_and_is_symmetric() {
        for n in [0usize, 1, 5, 100, 1500, 40000] {
            let (start, row) = float_binomial_row(n);
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            let end = start + row.len() - 1;
            assert_eq!(start, n - end);
            for (i, w) in row.iter().enumerate() {
                let mirror = row[row.len() - 1 - i];
                assert!((w - mirror).abs() <= 1e-15 * w.max(mirror) + 1e-300);
            }
        }
        let (_, r4) = float_binomial_row(4);
        assert!((r4[2] - 6.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn rational_row_exact() {
        let row = rational_binomial_row(6);
        let total = row.iter().fold(BigRational::zero(), |a, b| a + b);
        assert!(total.is_one());
        assert_eq!(row[2], BigRational::new(15.into(), 64.into()));
    }

    #[test]
    fn log_poly_arithmetic() {
        let l12 = LogPoly::ln(12);
        let l2 = LogPoly::ln(2);
        let l3 = LogPoly::ln(3);
        assert_eq!(l12.clone(), l2.clone() + l2.clone() + l3.clone());
        let sq = l12.clone() * l12.clone();
        assert_eq!(sq.degree(), 2);
        assert!((sq.as_f64() - libm::log(12.0).powi(2)).abs() < 1e-12);
        assert!((l12.clone() - l12).is_zero());
        assert!(LogPoly::ln(1).is_zero());
    }

    #[test]
    fn huge_rational_to_f64() {
        let q = BigRational::new(BigInt::one() << 3000usize, (BigInt::one() << 2999usize) * BigInt::from(3));
        assert!((rational_to_f64(&q) - 2.0 / 3.0).abs() < 1e-15);
    }
}
