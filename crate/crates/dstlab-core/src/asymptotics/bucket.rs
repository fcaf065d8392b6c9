//! Bucket digital search trees: key-wise path length (C_h) and the node
//! count / node-wise path length family (c_{1,0}, P_{2,0}).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;


use super::{mellin, mellin_at_two, mellin_fourier, ConstantResult, ExpPolySeries, FourierSeries, QuadError, POLES};
use crate::partial::{kpl_second_derivative_terms, principal_parts, PartialOptions, RationalTerm};
use crate::qseries::{chi, QContext};
use crate::special::{complex_gamma, digamma};

fn binom(n: i64, k: i64) -> i64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    (0..k).fold(1i64, |c, i| c * (n - i) / (i + 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialFractionError {
    pub residual: f64,
}

impl fmt::Display for PartialFractionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "partial fractions ill-conditioned (relative residual {:e})", self.residual)
    }
}

/// Smallest J with 4^J/2^{bJ(J+1)/2} < 1e−16.
pub fn default_truncation(b: u32) -> u32 {
    let mut j = 1u32;
    while 2.0 * j as f64 - (b * j * (j + 1)) as f64 / 2.0 > -53.2 {
        j += 1;
    }
    j
}

/// f̃_1 for key-wise path length in b-DSTs, inverted from
/// s^{−2}Σ_{j<J}∏_{i≤j}(2^i s+1)^{−b}.
///
/// The representation carries an affine part whose size grows like 2^J, so
/// f̃_1 itself loses about J bits near z = 0; derivatives of order ≥ 2 do not.
pub fn bdst_mean_exppoly(b: u32, truncation: u32) -> Result<ExpPolySeries, PartialFractionError> {
    let terms = kpl_second_derivative_terms(b, truncation);
    let f2 = principal_parts(&terms, PartialOptions { poles: truncation, max_order: b as usize });
    // checked before integrating: the affine part of f̃_1 makes its own
    // transform cancel badly for large J
    let mut residual: f64 = 0.0;
    for s in [0.1, 1.0, 10.0] {
        let direct: f64 = terms.iter().map(|t| t.eval(s)).sum();
        residual = residual.max((f2.laplace(s) - direct).abs() / direct.abs());
    }
    if residual > 1e-9 {
        return Err(PartialFractionError { residual });
    }
    Ok(f2.integrate().integrate())
}

/// f̃_1'' for key-wise path length, with all [`POLES`] poles kept.
pub fn kpl_f2(b: u32) -> ExpPolySeries {
    let terms = kpl_second_derivative_terms(b, POLES + 10);
    principal_parts(&terms, PartialOptions { poles: POLES, max_order: b as usize })
}

/// Coefficients (g̃, g̃') of the variance toll, as maps over (i1, i2).
pub fn gcoef(b: u32) -> (Vec<(u32, u32, i64)>, Vec<(u32, u32, i64)>) {
    let b = b as i64;
    let mut g = Vec::new();
    let mut gp = Vec::new();
    for i1 in 2..=b {
        for i2 in 2..=b {
            let c = binom(b, i1) * binom(b, i2)
                - binom(b, i1) * binom(b - i1, i2)
                - (b - i1 + 1) * binom(b, i1 - 1) * binom(b - i1, i2 - 1);
            g.push((i1 as u32, i2 as u32, c));
        }
    }
    for i1 in 2..=b + 1 {
        for i2 in 2..=b + 1 {
            let c = binom(b, i1 - 1) * binom(b, i2 - 1) - binom(b, i1 - 1) * binom(b - i1 + 1, i2 - 1);
            gp.push((i1 as u32, i2 as u32, c));
        }
    }
    (g, gp)
}

/// g̃ assembled from f̃_1'' by the bilinear form over derivatives 2..=b+1.
pub fn gtilde(f2: &ExpPolySeries, b: u32) -> ExpPolySeries {
    let mut d = vec![ExpPolySeries::new(), ExpPolySeries::new(), f2.clone()];
    for i in 3..=(b as usize + 1) {
        let next = d[i - 1].derivative();
        d.push(next);
    }
    let (g, gp) = gcoef(b);
    let mut plain = ExpPolySeries::new();
    let mut with_z = ExpPolySeries::new();
    // both forms are symmetric: take i1 ≤ i2 and double the off-diagonal
    for (list, target) in [(&g, &mut plain), (&gp, &mut with_z)] {
        for &(i1, i2, c) in list.iter() {
            if c == 0 || i1 > i2 {
                continue;
            }
            let w = if i1 == i2 { c as f64 } else { 2.0 * c as f64 };
            target.add_assign_scaled(&d[i1 as usize].mul(&d[i2 as usize]), w);
        }
    }
    plain.add_assign_scaled(&with_z.times_z(), 1.0);
    plain
}

/// C_h = (1/log 2)∫ s·L[g̃; s]/Q(−2s)^b ds.
pub fn c_h(b: u32) -> Result<ConstantResult, QuadError> {
    assert!((1..=6).contains(&b), "b must lie in 1..=6");
    let ctx = QContext::default();
    let g = gtilde(&kpl_f2(b), b);
    mellin_at_two(|s| g.laplace(s) * ctx.recip_q_neg2s_real(s, b))
}

/// Fourier series of the fluctuation ϖ_h around C_h.
pub fn c_h_fourier(b: u32, k_max: usize) -> Result<FourierSeries, QuadError> {
    let ctx = QContext::default();
    let g = gtilde(&kpl_f2(b), b);
    Ok(mellin_fourier(|s| g.laplace(s) * ctx.recip_q_neg2s_real(s, b), 2.0, k_max)?.0)
}

fn g10_integrand(ctx: &QContext, b: u32, s: f64) -> f64 {
    libm::pow(s + 1.0, (b - 1) as f64) * ctx.recip_q_neg2s_real(s, b) / s
}

/// c_{1,0} = (1/log 2)∫ (s+1)^{b−1}/Q(−2s)^b ds, the mean of P_{1,0}.
pub fn c10(b: u32) -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    mellin_at_two(|s| g10_integrand(&ctx, b, s))
}

/// Fourier data of the NPL mean: P_{1,0} and the lower-order families of the
/// mean of X_n.
#[derive(Debug, Clone)]
pub struct NplMeanFamilies {
    pub p10: FourierSeries,
    /// Coefficients (G'_{1,0} − G_{1,0}ψ)/(log²2·Γ) at 2+χ_k.
    pub p01_2: FourierSeries,
    /// The same family with G' and ψ placed as (G'ψ − G), negated.
    pub p01_2_as_printed: FourierSeries,
    pub p01_4: FourierSeries,
}

impl NplMeanFamilies {
    pub fn compute(b: u32, k_max: usize) -> Result<Self, QuadError> {
        let ctx = QContext::default();
        let f = |s: f64| g10_integrand(&ctx, b, s);
        let fl = |s: f64| g10_integrand(&ctx, b, s) * libm::log(s);
        let mut rows = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max as i64 {
            let w = chi(k) + 2.0;
            let (g, _) = mellin(f, w)?;
            let (gp, _) = mellin(fl, w)?;
            rows.push((g, gp));
        }
        let l2 = LN_2 * LN_2;
        let gam = |k: i64, shift: f64| complex_gamma(chi(k) + shift).expect("off the poles");
        let psi = |k: i64| digamma(chi(k) + 2.0).expect("off the poles");
        let p10 = FourierSeries::real_from_fn(k_max, |k| rows[k as usize].0 / (gam(k, 2.0) * LN_2));
        let p01_2 = FourierSeries::real_from_fn(k_max, |k| {
            let (g, gp) = rows[k as usize];
            (gp - g * psi(k)) / (gam(k, 2.0) * l2)
        });
        let p01_2_as_printed = FourierSeries::real_from_fn(k_max, |k| {
            let (g, gp) = rows[k as usize];
            -(gp * psi(k) - g) / (gam(k, 2.0) * l2)
        });
        let p01_4 = FourierSeries::real_from_fn(k_max, |k| rows[k as usize].0 * b as f64 / (gam(k, 1.0) * LN_2));
        Ok(Self { p10, p01_2, p01_2_as_printed, p01_4 })
    }
}

/// Laplace terms of f̃_{1,0}'' for the node count of b-DSTs:
/// −1/(s+1) + Σ_{j≥1} 2^j s/((2^j s+1)∏_{m<j}(2^m s+1)^b).
pub fn npl_f10_second_terms(b: u32, count: u32) -> Vec<RationalTerm> {
    let mut out = vec![RationalTerm { numer: vec![-1.0], factors: vec![(0, 1)] }];
    for j in 1..count {
        let mut factors: Vec<(u32, u32)> = (0..j).map(|m| (m, b)).collect();
        factors.push((j, 1));
        out.push(RationalTerm { numer: vec![0.0, libm::exp2(j as f64)], factors });
    }
    out
}

/// Ṽ^{(j)}(0) = (−1)^j(1 + (j−2)2^{j−1}) for the node-count variance.
fn vtilde_initial(j: i64) -> f64 {
    let v = 1.0 + (j - 2) as f64 * libm::exp2((j - 1) as f64);
    if j % 2 == 0 {
        v
    } else {
        -v
    }
}

/// Boundary terms Σ_j C(b,j)Σ_{l<j} s^l Ṽ^{(j−1−l)}(0) of the Laplace
/// transform of Σ_j C(b,j)Ṽ^{(j)}.
pub fn npl_boundary_poly(b: u32, s: f64) -> f64 {
    let b = b as i64;
    let mut acc = 0.0;
    for j in 1..=b {
        let inner: f64 = (0..j).map(|l| libm::pow(s, l as f64) * vtilde_initial(j - 1 - l)).sum();
        acc += binom(b, j) as f64 * inner;
    }
    acc
}

/// The same correction in the rational form ((s+1)^{b−1} − (−1)^b(2b−3+(b−1)s))/(s+2)².
pub fn npl_boundary_rational(b: u32, s: f64) -> f64 {
    let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
    let bf = b as f64;
    (libm::pow(s + 1.0, bf - 1.0) - sign * (2.0 * bf - 3.0 + (bf - 1.0) * s)) / ((s + 2.0) * (s + 2.0))
}

/// Mean of P_{2,0}: G_{2,0}(2)/log 2, the leading coefficient of V(N_n)/n.
pub fn npl_p20_mean(b: u32) -> Result<ConstantResult, QuadError> {
    assert!(b >= 2, "node-wise path length needs b ≥ 2");
    let ctx = QContext::default();
    let terms = npl_f10_second_terms(b, POLES + 1);
    let f2 = principal_parts(&terms, PartialOptions { poles: POLES + 1, max_order: b as usize });
    let g = gtilde(&f2, b);
    mellin_at_two(|s| (g.laplace(s) + npl_boundary_poly(b, s)) * ctx.recip_q_neg2s_real(s, b))
}
