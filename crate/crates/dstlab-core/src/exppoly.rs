//! Finite sums Σ d·z^r·e^{−a z}.
//!
//! Rates are kept as exact f64 keys. Every rate produced here is a sum of a few
//! dyadic numbers, so equal rates coming from different products collide exactly
//! and merge. Rate 0 carries the polynomial (affine) part.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    r: u32,
    // bit pattern of a non-negative f64, monotone in the value
    a: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpPolySeries {
    terms: BTreeMap<Key, f64>,
}

fn factorial(r: u32) -> f64 {
    (1..=r).fold(1.0, |p, k| p * k as f64)
}

impl ExpPolySeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(d: f64, r: u32, a: f64) -> Self {
        let mut p = Self::new();
        p.add_term(d, r, a);
        p
    }

    pub fn add_term(&mut self, d: f64, r: u32, a: f64) {
        assert!(a >= 0.0, "decay rate must be non-negative");
        if d == 0.0 {
            return;
        }
        let k = Key { r, a: (a + 0.0).to_bits() };
        *self.terms.entry(k).or_insert(0.0) += d;
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// (d, r, a) triples in key order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, u32, f64)> + '_ {
        self.terms.iter().map(|(k, &d)| (d, k.r, f64::from_bits(k.a)))
    }

    pub fn coefficient(&self, r: u32, a: f64) -> f64 {
        self.terms.get(&Key { r, a: (a + 0.0).to_bits() }).copied().unwrap_or(0.0)
    }

    pub fn add_assign_scaled(&mut self, other: &Self, c: f64) {
        for (d, r, a) in other.iter() {
            self.add_term(c * d, r, a);
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = Self::new();
        out.add_assign_scaled(self, c);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (d1, r1, a1) in self.iter() {
            for (d2, r2, a2) in other.iter() {
                out.add_term(d1 * d2, r1 + r2, a1 + a2);
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::new();
        for (d, r, a) in self.iter() {
            if r > 0 {
                out.add_term(d * r as f64, r - 1, a);
            }
            out.add_term(-a * d, r, a);
        }
        out
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// z·p(z).
    pub fn times_z(&self) -> Self {
        let mut out = Self::new();
        for (d, r, a) in self.iter() {
            out.add_term(d, r + 1, a);
        }
        out
    }

    /// e^{−δz}·p(z).
    pub fn times_exp(&self, delta: f64) -> Self {
        let mut out = Self::new();
        for (d, r, a) in self.iter() {
            out.add_term(d, r, a + delta);
        }
        out
    }

    /// p(cz).
    pub fn rescale(&self, c: f64) -> Self {
        let mut out = Self::new();
        for (d, r, a) in self.iter() {
            out.add_term(d * libm::pow(c, r as f64), r, a * c);
        }
        out
    }

    /// ∫_0^z p(t) dt.
    pub fn integrate(&self) -> Self {
        let mut out = Self::new();
        for (d, r, a) in self.iter() {
            if a == 0.0 {
                out.add_term(d / (r + 1) as f64, r + 1, 0.0);
                continue;
            }
            // ∫_0^z t^r e^{−at} dt = r!/a^{r+1} (1 − e^{−az} Σ_{k≤r} (az)^k/k!)
            let lead = d * factorial(r) / libm::pow(a, (r + 1) as f64);
            out.add_term(lead, 0, 0.0);
            let mut ak = 1.0;
            for k in 0..=r {
                out.add_term(-lead * ak / factorial(k), k, a);
                ak *= a;
            }
        }
        out
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.iter()
            .map(|(d, r, a)| d * libm::pow(z, r as f64) * libm::exp(-a * z))
            .sum()
    }

    /// L[p](s) = Σ d·r!/(s+a)^{r+1}; needs s + a > 0 for every term.
    pub fn laplace(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (d, r, a) in self.iter() {
            acc += d * factorial(r) / libm::pow(s + a, (r + 1) as f64);
        }
        acc
    }

    pub fn laplace_complex(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (d, r, a) in self.iter() {
            acc += (s + a).powi(-((r + 1) as i32)) * (d * factorial(r));
        }
        acc
    }

    /// Drops terms with |d| below `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, d| libm::fabs(*d) >= tol);
    }

    pub fn max_power(&self) -> u32 {
        self.terms.keys().map(|k| k.r).max().unwrap_or(0)
    }

    /// Terms as (d, r, a), convenient for tests and serialisation.
    pub fn to_vec(&self) -> Vec<(f64, u32, f64)> {
        self.iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{quad_0_inf, QuadOptions};

    fn sample() -> ExpPolySeries {
        let mut p = ExpPolySeries::new();
        p.add_term(1.5, 0, 1.0);
        p.add_term(-0.25, 2, 0.5);
        p.add_term(0.75, 1, 0.125);
        p
    }

    #[test]
    fn laplace_of_product_matches_quadrature() {
        let p = sample();
        let q = p.derivative().times_z();
        let pq = p.mul(&q);
        for s in [0.5, 2.0] {
            let sym = pq.laplace(s);
            let num = quad_0_inf(|z| libm::exp(-s * z) * p.eval(z) * q.eval(z), &QuadOptions::default())
                .unwrap()
                .value;
            assert!((sym - num).abs() < 1e-9 * (1.0 + num.abs()), "{sym} vs {num}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = sample();
        let d = p.derivative();
        let z = 1.7;
        let h = 1e-5;
        let fd = (p.eval(z + h) - p.eval(z - h)) / (2.0 * h);
        assert!((d.eval(z) - fd).abs() < 1e-8);
    }

    #[test]
    fn integrate_inverts_derivative() {
        let p = sample();
        let ip = p.integrate();
        assert!(ip.eval(0.0).abs() < 1e-14);
        let back = ip.derivative();
        for z in [0.0, 0.3, 4.0] {
            assert!((back.eval(z) - p.eval(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn merging_equal_rates() {
        let mut p = ExpPolySeries::single(1.0, 0, 0.25);
        p.add_term(2.0, 0, 0.125 + 0.125);
        assert_eq!(p.len(), 1);
        assert_eq!(p.coefficient(0, 0.25), 3.0);
    }
}
