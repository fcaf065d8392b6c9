//! Poisson–Charlier expansions and the Poissonized variance of IPL.
//!
//! For a Poisson generating function f̃(z) = e^{−z}Σ a_n z^n/n!,
//! a_n = Σ_j f̃^{(j)}(n) τ_j(n)/j! with τ_j(n) = n![z^n](z−n)^j e^z.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::qseries::QContext;
use crate::scalar::rational_to_f64;

/// τ_j(n) = Σ_ℓ C(j,ℓ)(−1)^{j−ℓ} n^{j−ℓ} n!/(n−ℓ)!, a polynomial in n of
/// degree ⌊j/2⌋.
pub fn tau(j: u32, n: u64) -> BigInt {
    let nn = BigInt::from(n);
    let mut acc = BigInt::zero();
    let mut binom = BigInt::one();
    let mut falling = BigInt::one();
    for l in 0..=j as u64 {
        if l > 0 {
            binom = binom * BigInt::from(j as u64 - l + 1) / BigInt::from(l);
            if l > n {
                break;
            }
            falling *= BigInt::from(n - l + 1);
        }
        let t = &binom * &falling * nn.pow(j - l as u32);
        if (j as u64 - l) % 2 == 0 {
            acc += t;
        } else {
            acc -= t;
        }
    }
    acc
}

pub fn tau_f64(j: u32, n: u64) -> f64 {
    tau(j, n).to_f64().unwrap_or(f64::NAN)
}

fn factorial(j: u32) -> BigInt {
    (1..=j as u64).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Partial sums Σ_{j≤J} f̃^{(j)}(n)τ_j(n)/j! for J = 0, …, derivs.len()−1.
pub fn charlier_identity_sum(derivs: &[f64], n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(derivs.len());
    let mut acc = 0.0;
    for (j, d) in derivs.iter().enumerate() {
        let t = BigRational::new(tau(j as u32, n), factorial(j as u32));
        acc += d * rational_to_f64(&t);
        out.push(acc);
    }
    out
}

/// The same partial sums for f̃(z) = e^{az}, accumulated exactly and scaled by
/// e^{an} once at the end. With a = −2 they tend to (−1)^n; with a = 1, to 2^n.
pub fn charlier_exp_partial_sums(a: i64, n: u64, jmax: u32) -> Vec<f64> {
    let scale = libm::exp(a as f64 * n as f64);
    let base = BigInt::from(a);
    let mut acc = BigRational::zero();
    let mut out = Vec::with_capacity(jmax as usize + 1);
    for j in 0..=jmax {
        acc += BigRational::new(base.pow(j) * tau(j, n), factorial(j));
        out.push(rational_to_f64(&acc) * scale);
    }
    out
}

/// e^{−z} − 1 + z, without cancellation for small |z|.
fn em1z(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        let mut term = z * z / 2.0;
        let mut acc = term;
        for k in 3..14 {
            term = -term * z / k as f64;
            acc += term;
        }
        acc
    } else {
        (-z).exp() - 1.0 + z
    }
}

/// 1 − e^{−z}.
fn one_minus_exp(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        let mut term = z;
        let mut acc = term;
        for k in 2..14 {
            term = -term * z / k as f64;
            acc += term;
        }
        acc
    } else {
        1.0 - (-z).exp()
    }
}

/// r-th derivative of the Poisson mean of IPL,
/// f̃_1(z) = Q_∞ Σ_ℓ (2^ℓ/Q_ℓ)(e^{−z/2^ℓ} − 1 + z/2^ℓ).
pub fn ipl_poisson_mean(ctx: &QContext, z: Complex64, r: u32) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut l = 0usize;
    loop {
        let p = libm::exp2(l as f64);
        let x = z / p;
        let ql = ctx.q(l);
        let t = match r {
            0 => em1z(x) * (p / ql),
            1 => one_minus_exp(x) / ql,
            _ => {
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                (-x).exp() * (sign * libm::exp2(-(((r as usize - 1) * l) as f64)) / ql)
            }
        };
        acc += t;
        l += 1;
        let small = t.norm() <= 1e-18 * acc.norm().max(f64::MIN_POSITIVE);
        if (p > z.norm() * 1e3 && small) || l > 1100 {
            break;
        }
    }
    acc * ctx.q_infinity()
}

/// Closed form of the IPL mean: μ_n = Q_∞ Σ_ℓ (2^ℓ/Q_ℓ)((1 − 2^{−ℓ})^n − 1 + n2^{−ℓ}).
pub fn ipl_mean_closed(ctx: &QContext, n: u64) -> f64 {
    let nf = n as f64;
    let mut acc = 0.0;
    for l in 0..1100usize {
        let x = libm::exp2(-(l as f64));
        let t = if nf * x < 0.1 {
            // Σ_{i≥2} C(n,i)(−x)^i
            let mut c = nf * (nf - 1.0) / 2.0 * x * x;
            let mut s = c;
            let mut i = 2.0;
            while c != 0.0 && i < nf && libm::fabs(c) > 1e-20 * libm::fabs(s) {
                c *= -(nf - i) / (i + 1.0) * x;
                s += c;
                i += 1.0;
            }
            s
        } else {
            libm::expm1(nf * libm::log1p(-x)) + nf * x
        };
        let term = t / (x * ctx.q(l));
        acc += term;
        if l > 0 && libm::fabs(term) < 1e-18 * acc {
            break;
        }
    }
    acc * ctx.q_infinity()
}

/// Σ_{j<2K} f̃_1^{(j)}(n)τ_j(n)/j!, the de-Poissonized mean of IPL to order K.
pub fn depoissonized_ipl_mean(ctx: &QContext, n: u64, order: u32) -> f64 {
    let derivs: Vec<f64> = (0..2 * order)
        .map(|j| ipl_poisson_mean(ctx, Complex64::new(n as f64, 0.0), j).re)
        .collect();
    *charlier_identity_sum(&derivs, n).last().unwrap_or(&0.0)
}

/// Ṽ = f̃_2 − f̃_1² − z f̃_1'².
pub fn vz_correction(f2: f64, f1: f64, f1prime: f64, z: f64) -> f64 {
    f2 - f1 * f1 - z * f1prime * f1prime
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepoissonError {
    /// Float coefficients of Ṽ beyond this index are dominated by cancellation.
    Cancellation { nmax: usize, limit: usize },
}

impl fmt::Display for DepoissonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepoissonError::Cancellation { nmax, limit } => {
                write!(f, "float coefficients requested to {nmax}, reliable only to {limit}; use exact mode")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DepoissonError {}

/// Largest coefficient index computed in float mode.
pub const FLOAT_VTILDE_NMAX: usize = 30;

/// Taylor coefficients c_n of an entire function Σ c_n z^n/n!.
///
/// Exact series keep every coefficient as a fixed-point integer c_n ≈ m_n·2^{−prec}
/// with a precision chosen from the number of coefficients, so that the
/// alternating evaluation at z ≈ n loses nothing visible at double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSeries {
    pub prec: Option<usize>,
    fixed: Vec<BigInt>,
    approx: Vec<f64>,
}

fn fixed_of(q: &BigRational, prec: usize) -> BigInt {
    (q.numer() << prec) / q.denom()
}

fn fixed_to_f64(m: &BigInt, prec: usize) -> f64 {
    rational_to_f64(&BigRational::new(m.clone(), BigInt::one() << prec))
}

impl PoissonSeries {
    pub fn from_f64(c: Vec<f64>) -> Self {
        Self { prec: None, fixed: Vec::new(), approx: c }
    }

    pub fn from_rationals(c: &[BigRational], prec: usize) -> Self {
        let fixed: Vec<BigInt> = c.iter().map(|q| fixed_of(q, prec)).collect();
        Self::from_fixed(fixed, prec)
    }

    fn from_fixed(fixed: Vec<BigInt>, prec: usize) -> Self {
        let approx = fixed.iter().map(|m| fixed_to_f64(m, prec)).collect();
        Self { prec: Some(prec), fixed, approx }
    }

    pub fn len(&self) -> usize {
        self.approx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.approx.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.approx
    }

    /// Σ_k c_{k+d} z^k/k! at an integer point.
    pub fn eval_at(&self, z: u64, d: usize) -> f64 {
        match self.prec {
            Some(p) => {
                let zz = BigInt::from(z);
                let mut t = BigInt::one() << p; // z^k/k! in fixed point
                let mut acc = BigInt::zero();
                for (k, c) in self.fixed.iter().skip(d).enumerate() {
                    if k > 0 {
                        t = t * &zz / BigInt::from(k);
                    }
                    acc += c * &t;
                }
                fixed_to_f64(&(acc >> p), p)
            }
            None => {
                let zf = z as f64;
                let mut t = 1.0;
                let mut acc = 0.0;
                for (k, c) in self.approx.iter().skip(d).enumerate() {
                    if k > 0 {
                        t *= zf / k as f64;
                    }
                    acc += c * t;
                }
                acc
            }
        }
    }
}

/// Alternating binomial transform ã_k = Σ_j C(k,j)(−1)^{k−j} a_j: the Taylor
/// coefficients of e^{−z}Σ a_j z^j/j!.
pub fn poisson_coeffs(seq: &[BigRational], prec: usize) -> PoissonSeries {
    let a: Vec<BigInt> = seq.iter().map(|q| fixed_of(q, prec)).collect();
    let mut out = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let mut c = BigInt::one();
        let mut acc = BigInt::zero();
        for (j, aj) in a.iter().enumerate().take(k + 1) {
            if (k - j) % 2 == 0 {
                acc += &c * aj;
            } else {
                acc -= &c * aj;
            }
            c = c * BigInt::from(k - j) / BigInt::from(j + 1);
        }
        out.push(acc);
    }
    PoissonSeries::from_fixed(out, prec)
}

/// Coefficients ṽ_0 … ṽ_nmax of Ṽ for IPL from
/// ṽ_{n+1} = −(1 − 2^{1−n})ṽ_n + n Σ_i C(n−1,i) μ̃_{i+2} μ̃_{n+1−i},
/// where μ̃_n = (−1)^n Q_{n−2}.
pub fn vtilde_coeffs(nmax: usize, exact: bool) -> Result<PoissonSeries, DepoissonError> {
    if !exact {
        if nmax > FLOAT_VTILDE_NMAX {
            return Err(DepoissonError::Cancellation { nmax, limit: FLOAT_VTILDE_NMAX });
        }
        let mut q = vec![1.0f64];
        for k in 1..=nmax {
            q.push(q[k - 1] * (1.0 - libm::exp2(-(k as f64))));
        }
        let mt = |n: usize| if n < 2 { 0.0 } else if n % 2 == 0 { q[n - 2] } else { -q[n - 2] };
        let mut v = vec![0.0; nmax + 1];
        for n in 1..nmax {
            let mut c = 1.0;
            let mut h = 0.0;
            for i in 0..n {
                h += c * mt(i + 2) * mt(n + 1 - i);
                c *= (n - 1 - i) as f64 / (i + 1) as f64;
            }
            v[n + 1] = -(1.0 - libm::exp2(1.0 - n as f64)) * v[n] + n as f64 * h;
        }
        return Ok(PoissonSeries::from_f64(v));
    }
    let prec = 4 * nmax + 128;
    let one = BigInt::one() << prec;
    let mut q = vec![one.clone()];
    for k in 1..=nmax {
        let prev = q[k - 1].clone();
        let cut = &prev >> k;
        q.push(prev - cut);
    }
    let mt = |n: usize| -> BigInt {
        if n < 2 {
            BigInt::zero()
        } else if n % 2 == 0 {
            q[n - 2].clone()
        } else {
            -q[n - 2].clone()
        }
    };
    let mut v = vec![BigInt::zero(); nmax + 1];
    for n in 1..nmax {
        let mut c = BigInt::one();
        let mut h = BigInt::zero();
        for i in 0..n {
            h += &c * mt(i + 2) * mt(n + 1 - i);
            c = c * BigInt::from(n - 1 - i) / BigInt::from(i + 1);
        }
        let h = (h * BigInt::from(n)) >> prec;
        // (1 − 2^{1−n})·v
        let damp = &v[n] - (&v[n] >> (n - 1));
        v[n + 1] = h - damp;
    }
    Ok(PoissonSeries::from_fixed(v, prec))
}

/// Number of Ṽ coefficients needed to evaluate at z = n to double precision.
pub fn vtilde_terms(n: u64) -> usize {
    6 * n as usize + 80
}

/// Ṽ(n) and Ṽ''(n) for IPL.
pub fn vtilde_at(n: u64) -> (f64, f64) {
    let s = vtilde_coeffs(vtilde_terms(n), true).expect("exact mode");
    (s.eval_at(n, 0), s.eval_at(n, 2))
}

/// Ṽ(n) − (n/2)Ṽ''(n) − (n²/2) f̃_1''(n)².
pub fn vtilde_refined(ctx: &QContext, n: u64) -> f64 {
    let (v, v2) = vtilde_at(n);
    let f2 = ipl_poisson_mean(ctx, Complex64::new(n as f64, 0.0), 2).re;
    let nf = n as f64;
    v - nf / 2.0 * v2 - nf * nf / 2.0 * f2 * f2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{mean_series, variance_series, Param, ParamSpec, VariancePath};

    #[test]
    fn tau_table() {
        for n in 0..12u64 {
            assert_eq!(tau(0, n), BigInt::one());
            assert!(tau(1, n).is_zero());
            assert_eq!(tau(2, n), -BigInt::from(n));
            assert_eq!(tau(3, n), BigInt::from(2 * n));
        }
        assert_eq!(tau(4, 5), BigInt::from(45));
        assert_eq!(tau(5, 5), BigInt::from(-380));
    }

    #[test]
    fn tau_by_polynomial_convolution() {
        for j in 0..=8u32 {
            for n in 0..=12u64 {
                // (z − n)^j, then n!·[z^n] of its product with e^z
                let mut poly = vec![BigInt::one()];
                for _ in 0..j {
                    let mut next = vec![BigInt::zero(); poly.len() + 1];
                    for (i, c) in poly.iter().enumerate() {
                        next[i + 1] += c;
                        next[i] -= c * BigInt::from(n);
                    }
                    poly = next;
                }
                let mut acc = BigRational::zero();
                for (i, c) in poly.iter().enumerate() {
                    if i as u64 <= n {
                        acc += BigRational::new(c.clone(), factorial((n - i as u64) as u32));
                    }
                }
                acc *= BigRational::from_integer(factorial(n as u32));
                assert_eq!(acc, BigRational::from_integer(tau(j, n)), "j={j} n={n}");
            }
        }
    }

    #[test]
    fn charlier_demos() {
        let alt = charlier_exp_partial_sums(-2, 10, 80);
        assert!((alt[49] - 0.9968211389189966).abs() < 1e-12);
        assert!((alt[80] - 1.0).abs() < 1e-9);
        let pow = charlier_exp_partial_sums(1, 10, 80);
        assert!((pow[80] - 1024.0).abs() < 1e-9);
        assert_eq!(charlier_identity_sum(&[1.0], 7), vec![1.0]);
    }

    #[test]
    fn closed_mean_matches_recurrence() {
        let ctx = QContext::default();
        let s = mean_series::<f64>(ParamSpec::new(Param::Ipl), 2000).unwrap();
        for n in 2..=2000u64 {
            let c = ipl_mean_closed(&ctx, n);
            let r = s.mu[n as usize];
            assert!((c - r).abs() <= 1e-10 * r, "n={n}: {c} vs {r}");
        }
    }

    #[test]
    fn poisson_mean_derivatives() {
        let ctx = QContext::default();
        assert_eq!(ipl_poisson_mean(&ctx, Complex64::new(0.0, 0.0), 0).norm(), 0.0);
        let z = Complex64::new(7.5, 0.0);
        let h = 1e-4;
        for r in 0..4 {
            let fd = (ipl_poisson_mean(&ctx, z + h, r) - ipl_poisson_mean(&ctx, z - h, r)) / (2.0 * h);
            let an = ipl_poisson_mean(&ctx, z, r + 1);
            assert!((fd - an).norm() < 1e-7 * an.norm().max(1.0), "r={r}");
        }
        let big = 1e6;
        let f = ipl_poisson_mean(&ctx, Complex64::new(big, 0.0), 0).re;
        let slope = f / (big * libm::log2(big));
        assert!((slope - 1.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn depoissonization_orders() {
        let ctx = QContext::default();
        let s = mean_series::<f64>(ParamSpec::new(Param::Ipl), 200).unwrap();
        let mu = s.mu[200];
        let errs: Vec<f64> = (1..=3).map(|k| (depoissonized_ipl_mean(&ctx, 200, k) - mu).abs()).collect();
        assert!(errs[0] >= 5.0 * errs[1] && errs[1] >= 5.0 * errs[2], "{errs:?}");
        let mu100 = s.mu[100];
        assert!((depoissonized_ipl_mean(&ctx, 100, 3) - mu100).abs() <= 1e-6 * mu100);
    }

    #[test]
    fn vtilde_float_and_exact_agree() {
        let e = vtilde_coeffs(30, true).unwrap();
        let f = vtilde_coeffs(30, false).unwrap();
        for (a, b) in e.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
        assert_eq!(e.coeffs()[..5], [0.0, 0.0, 1.0, -2.5, 5.625]);
        assert!(vtilde_coeffs(31, false).is_err());
    }

    // frozen from an independent 3000-bit evaluation of the same quantities
    #[test]
    fn vtilde_against_variance() {
        let ctx = QContext::default();
        let s = variance_series::<f64>(ParamSpec::new(Param::Ipl), 64, VariancePath::Direct).unwrap();
        let (v20, _) = vtilde_at(20);
        assert!((v20 - 5.553026522679014).abs() < 1e-10);
        let table = vtilde_coeffs(vtilde_terms(64), true).unwrap();
        for n in 16..=64u64 {
            let vt = table.eval_at(n, 0);
            assert!((s.var()[n as usize] - vt).abs() <= 5.0);
        }
        let gap = s.var()[64] - vtilde_at(64).0;
        let refined = s.var()[64] - vtilde_refined(&ctx, 64);
        assert!((gap + 1.0143022555660437).abs() < 1e-8, "{gap}");
        assert!((refined + 0.005622111284040443).abs() < 1e-8, "{refined}");
    }

    #[test]
    fn vz_route_at_twenty() {
        let s = variance_series::<BigRational>(ParamSpec::new(Param::Ipl), 96, VariancePath::SecondMoment).unwrap();
        let sec = s.second_moment.as_ref().unwrap();
        let prec = 600;
        let f1 = poisson_coeffs(&s.mu, prec);
        let f2 = poisson_coeffs(sec, prec);
        let v = vz_correction(f2.eval_at(20, 0), f1.eval_at(20, 0), f1.eval_at(20, 1), 20.0);
        assert!((v - vtilde_at(20).0).abs() < 1e-8, "{v}");
        assert_eq!(vz_correction(4.0, 2.0, 0.0, 3.0), 0.0);
        assert_eq!(vz_correction(0.0, 0.0, 0.0, 0.0), 0.0);
    }
}
