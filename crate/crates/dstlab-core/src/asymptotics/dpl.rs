//! Differential path length, depth, the IPL mean fluctuations and the WPL
//! leading coefficient.

use core::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use super::fringe::c1;
use super::{mellin_at_two, ConstantResult, FourierSeries, QuadError};
use crate::moments::{mean_series, MomentError, Param, ParamSpec};
use crate::qseries::{chi, QContext};
use crate::special::{complex_gamma, EULER_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DplConstants {
    pub m: u32,
    /// m = 1: G_1(2)/log 2, the mean of the periodic factor of E(X_n)/n.
    pub periodic_mean: Option<ConstantResult>,
    /// m = 1: the two √n coefficients in circulation,
    /// −√2/(√π(√2−1)) and −√2/(√(2π)(√2−1)).
    pub sqrt_candidates: Option<[f64; 2]>,
    /// m = 1: coefficient of n log₂ n in the variance.
    pub var_slope: Option<f64>,
    /// m = 2: the mean coincides with the internal path length.
    pub mean_equals_ipl: bool,
    /// m > 2: E(X_n) ~ mean_coeff·n^{m/2}.
    pub mean_coeff: Option<f64>,
    /// m > 2: the same with denominator 1 − 2^{1−m}.
    pub mean_coeff_as_printed: Option<f64>,
    /// m ≥ 2: V(X_n) ~ var_coeff·n^m.
    pub var_coeff: Option<f64>,
}

/// G_1(2)/log 2 with G_1(ω) = ∫ s^{ω−5/2}/(Q(−2s)√(s+2)) ds.
pub fn dpl_periodic_mean() -> Result<ConstantResult, QuadError> {
    let ctx = QContext::default();
    mellin_at_two(|s| ctx.recip_q_neg2s_real(s, 1) / (libm::pow(s, 1.5) * libm::sqrt(s + 2.0)))
}

/// E|Z|^m·2^{m/2} for a standard normal Z, i.e. the n^{m/2} coefficient of
/// 2^{−n}Σ_k C(n,k)|n−2k|^m.
fn abs_moment(m: u32) -> f64 {
    libm::exp2(m as f64 / 2.0) * libm::tgamma((m as f64 + 1.0) / 2.0) / libm::sqrt(PI)
}

pub fn dpl_constants(m: u32) -> Result<DplConstants, QuadError> {
    assert!((1..=6).contains(&m), "m must lie in 1..=6");
    let mut out = DplConstants {
        m,
        periodic_mean: None,
        sqrt_candidates: None,
        var_slope: None,
        mean_equals_ipl: m == 2,
        mean_coeff: None,
        mean_coeff_as_printed: None,
        var_coeff: None,
    };
    if m == 1 {
        out.periodic_mean = Some(dpl_periodic_mean()?);
        let d = core::f64::consts::SQRT_2 - 1.0;
        out.sqrt_candidates = Some([
            -core::f64::consts::SQRT_2 / (libm::sqrt(PI) * d),
            -core::f64::consts::SQRT_2 / (libm::sqrt(2.0 * PI) * d),
        ]);
        out.var_slope = Some(1.0 - 2.0 / PI);
        return Ok(out);
    }
    let mf = m as f64;
    let var_num = libm::exp2(mf) * (libm::tgamma(mf + 0.5) - libm::pow(libm::tgamma((mf + 1.0) / 2.0), 2.0) / libm::sqrt(PI))
        / libm::sqrt(PI);
    out.var_coeff = Some(var_num / (1.0 - libm::exp2(1.0 - mf)));
    if m > 2 {
        out.mean_coeff = Some(abs_moment(m) / (1.0 - libm::exp2(1.0 - mf / 2.0)));
        out.mean_coeff_as_printed = Some(abs_moment(m) / (1.0 - libm::exp2(1.0 - mf)));
    }
    Ok(out)
}

/// Outcome of the doubling test for the √n term of the DPL mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtDoubling {
    pub n: usize,
    /// (μ_{2n} − 2μ_n)/√(2n); a term c√n contributes c(1 − √2).
    pub observed: f64,
    /// c(1 − √2) for each candidate.
    pub predicted: [f64; 2],
    /// Index of the closer candidate.
    pub selected: usize,
}

pub fn dpl_sqrt_doubling(n: usize) -> Result<SqrtDoubling, MomentError> {
    let s = mean_series::<f64>(ParamSpec::new(Param::Dpl), 2 * n)?;
    let observed = (s.mu[2 * n] - 2.0 * s.mu[n]) / libm::sqrt(2.0 * n as f64);
    let c = dpl_constants(1).expect("m = 1 needs one quadrature").sqrt_candidates.expect("m = 1");
    let f = 1.0 - core::f64::consts::SQRT_2;
    let predicted = [c[0] * f, c[1] * f];
    let selected = if (observed - predicted[0]).abs() <= (observed - predicted[1]).abs() { 0 } else { 1 };
    Ok(SqrtDoubling { n, observed, predicted, selected })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthConstants {
    /// c_1 = Σ 1/(2^k − 1).
    pub c1: f64,
    /// E(depth) − log₂ n → (γ−1)/log 2 + 1/2 − c_1, up to fluctuations.
    pub mean: f64,
    /// V(depth) → 1/12 + (1 + π²/6)/log²2 − Σ 2^k/(2^k−1)², up to fluctuations.
    pub variance: f64,
}

pub fn depth_constants() -> DepthConstants {
    let c = c1();
    let s: f64 = (1..=80)
        .rev()
        .map(|k| {
            let p = libm::exp2(k as f64);
            p / ((p - 1.0) * (p - 1.0))
        })
        .sum();
    DepthConstants {
        c1: c,
        mean: (EULER_GAMMA - 1.0) / LN_2 + 0.5 - c,
        variance: 1.0 / 12.0 + (1.0 + PI * PI / 6.0) / (LN_2 * LN_2) - s,
    }
}

/// ϖ_1 and ϖ_2 of the IPL mean, with coefficients Γ(−1−χ_k)/log 2 and
/// −(1−χ_k/2)Γ(−χ_k)/log 2.
pub fn ipl_mean_fourier(k_max: usize) -> (FourierSeries, FourierSeries) {
    let zero = Complex64::new(0.0, 0.0);
    let w1 = FourierSeries::real_from_fn(k_max, |k| {
        if k == 0 {
            return zero;
        }
        complex_gamma(-chi(k) - 1.0).expect("off the poles") / LN_2
    });
    let w2 = FourierSeries::real_from_fn(k_max, |k| {
        if k == 0 {
            return zero;
        }
        let c = chi(k);
        -(Complex64::new(1.0, 0.0) - c / 2.0) * complex_gamma(-c).expect("off the poles") / LN_2
    });
    (w1, w2)
}

/// Leading coefficient of E(WPL) ~ n(log n)^{m+1}/((m+1) log 2).
pub fn wpl_mean_coeff(m: u32) -> f64 {
    1.0 / ((m as f64 + 1.0) * LN_2)
}
