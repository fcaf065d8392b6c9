//! Binomial-splitting recurrences for the moments of shape parameters.
//!
//! A random DST with n+1 keys (or n+b keys for capacity b) sends the keys below
//! the root left or right by fair coin flips, so its subtrees have sizes k and
//! n−k with probability π_{n,k} = C(n,k)/2^n and are independent given k.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::scalar::Scalar;

pub mod depth;
pub mod oracle;

pub use depth::{
    depth_moments_exact, depth_moments_f64, profile_poly_closed, profile_poly_closed_f64, profile_poly_recurrence,
    DepthMoments,
};
pub use oracle::{npl_joint_pmf, pmf_oracle, Pmf};

/// Largest nmax accepted in float mode.
pub const FLOAT_NMAX: usize = 1 << 15;
/// Largest nmax accepted in exact mode.
pub const EXACT_NMAX: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    /// Internal path length (b = 1).
    Ipl,
    /// Key-wise path length of a b-DST.
    Kpl,
    /// Node-wise path length of a b-DST.
    Npl,
    /// Sum over leaves of the size of the subtree rooted at the leaf's parent.
    Ppl,
    Leaves,
    /// Differential path length Σ|left − right|^m.
    Dpl,
    /// Weighted path length, toll (n+1)·log(n+1)^m.
    Wpl,
}

impl Param {
    pub const ALL: [Param; 7] = [Param::Ipl, Param::Kpl, Param::Npl, Param::Ppl, Param::Leaves, Param::Dpl, Param::Wpl];

    pub fn name(self) -> &'static str {
        match self {
            Param::Ipl => "ipl",
            Param::Kpl => "kpl",
            Param::Npl => "npl",
            Param::Ppl => "ppl",
            Param::Leaves => "leaves",
            Param::Dpl => "dpl",
            Param::Wpl => "wpl",
        }
    }

    pub fn from_name(s: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub param: Param,
    pub b: u32,
    /// Power for DPL and WPL; ignored elsewhere.
    pub m: u32,
}

impl ParamSpec {
    pub fn new(param: Param) -> Self {
        Self { param, b: 1, m: 1 }
    }

    pub fn with_b(self, b: u32) -> Self {
        Self { b, ..self }
    }

    pub fn with_m(self, m: u32) -> Self {
        Self { m, ..self }
    }

    pub fn check(&self) -> Result<(), MomentError> {
        let ok = match self.param {
            Param::Kpl | Param::Npl => self.b >= 1,
            _ => self.b == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(MomentError::Unsupported { param: self.param, b: self.b })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Float64,
    Exact,
}

impl Mode {
    pub fn of<S: Scalar>() -> Mode {
        if S::EXACT {
            Mode::Exact
        } else {
            Mode::Float64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariancePath {
    Direct,
    SecondMoment,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MomentError {
    Unsupported { param: Param, b: u32 },
    TooLarge { n: usize, limit: usize },
    /// The toll involves logarithms the chosen number type cannot represent.
    NeedsLogs,
    /// The two variance paths disagree.
    PathMismatch { n: usize },
    /// Float-mode alternating sums would lose too many digits.
    Cancellation { n: usize, limit: usize },
}

impl fmt::Display for MomentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentError::Unsupported { param, b } => write!(f, "{param} is not supported for b = {b}"),
            MomentError::TooLarge { n, limit } => write!(f, "n = {n} exceeds the limit {limit} for this mode"),
            MomentError::NeedsLogs => f.write_str("logarithmic toll needs float or log-polynomial values"),
            MomentError::PathMismatch { n } => write!(f, "variance paths disagree at n = {n}"),
            MomentError::Cancellation { n, limit } => {
                write!(f, "float evaluation beyond n = {limit} loses all digits (n = {n}); use exact mode")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MomentError {}

/// E(N_n), V(N_n) and Cov(N_n, X_n) for node-wise path length.
#[derive(Debug, Clone, PartialEq)]
pub struct NplJoint<S> {
    pub mu_n: Vec<S>,
    pub var_n: Vec<S>,
    pub cov: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries<S> {
    pub spec: ParamSpec,
    pub nmax: usize,
    pub mode: Mode,
    pub mu: Vec<S>,
    pub var: Option<Vec<S>>,
    pub second_moment: Option<Vec<S>>,
    pub npl: Option<NplJoint<S>>,
}

impl<S: Scalar> MomentSeries<S> {
    pub fn var(&self) -> &[S] {
        self.var.as_deref().unwrap_or(&[])
    }
}

fn check_size<S: Scalar>(nmax: usize) -> Result<(), MomentError> {
    let limit = if S::EXACT { EXACT_NMAX } else { FLOAT_NMAX };
    if nmax > limit {
        return Err(MomentError::TooLarge { n: nmax, limit });
    }
    Ok(())
}

type Toll<S> = Box<dyn Fn(usize, usize) -> S>;

/// X_{n+off} = X_k + X'_{n−k} + t(n,k) for n ≥ start, with deterministic
/// X_0 … X_{off+start−1}.
pub struct SplitModel<S> {
    pub off: usize,
    pub start: usize,
    pub init: Vec<S>,
    toll: Toll<S>,
}

impl<S> SplitModel<S> {
    pub fn toll(&self, n: usize, k: usize) -> S {
        (self.toll)(n, k)
    }
}

impl<S: Scalar + 'static> SplitModel<S> {
    pub fn new(off: usize, start: usize, init: Vec<S>, toll: impl Fn(usize, usize) -> S + 'static) -> Self {
        assert_eq!(init.len(), off + start);
        Self { off, start, init, toll: Box::new(toll) }
    }

    /// The recurrence of a parameter in its plain split form. PPL is given in
    /// its tree form here, with the toll charged at the parent of each leaf.
    pub fn for_spec(spec: ParamSpec) -> Result<Self, MomentError> {
        spec.check()?;
        let m = spec.m;
        Ok(match spec.param {
            Param::Ipl => SplitModel::new(1, 0, vec![S::zero()], |n, _| S::from_i64(n as i64)),
            Param::Kpl => {
                let b = spec.b as usize;
                SplitModel::new(b, 0, vec![S::zero(); b], |n, _| S::from_i64(n as i64))
            }
            Param::Npl => return Err(MomentError::Unsupported { param: Param::Npl, b: spec.b }),
            Param::Leaves => SplitModel::new(1, 1, vec![S::zero(), S::one()], |_, _| S::zero()),
            Param::Ppl => SplitModel::new(1, 0, vec![S::zero()], |n, k| {
                let hits = (k == 1) as i64 + (n - k == 1) as i64;
                S::from_i64((n as i64 + 1) * hits)
            }),
            Param::Dpl => SplitModel::new(1, 0, vec![S::zero()], move |n, k| {
                let d = S::from_i64((n as i64 - 2 * k as i64).abs());
                (0..m).fold(S::one(), |p, _| p * d.clone())
            }),
            Param::Wpl => {
                if S::ln_int(3).is_none() {
                    return Err(MomentError::NeedsLogs);
                }
                SplitModel::new(1, 0, vec![S::zero()], move |n, _| {
                    let l = S::ln_int(n as u64 + 1).expect("checked above");
                    let mut p = S::from_i64(n as i64 + 1);
                    for _ in 0..m {
                        p = p * l.clone();
                    }
                    p
                })
            }
        })
    }
}

struct Filled<S> {
    mu: Vec<S>,
    var: Option<Vec<S>>,
    second: Option<Vec<S>>,
}

fn run_split<S: Scalar>(model: &SplitModel<S>, nmax: usize, var: bool, second: bool) -> Filled<S> {
    let len = nmax + 1;
    let known = model.init.len().min(len);
    let mut mu: Vec<S> = model.init[..known].to_vec();
    let mut v: Vec<S> = vec![S::zero(); known];
    let mut s: Vec<S> = mu.iter().map(|x| x.square()).collect();
    let mut e = Vec::new();
    let mut n = model.start;
    while n + model.off <= nmax {
        let (k0, row) = S::binomial_row(n);
        e.clear();
        let mut mean = S::zero();
        let mut sm = S::zero();
        let mut vin = S::zero();
        for (i, w) in row.iter().enumerate() {
            let k = k0 + i;
            let t = model.toll(n, k);
            let pair = mu[k].clone() + mu[n - k].clone();
            let ek = pair.clone() + t.clone();
            mean = mean + w.clone() * ek.clone();
            if var {
                vin = vin + w.clone() * (v[k].clone() + v[n - k].clone());
            }
            if second {
                let two = S::from_i64(2);
                let term = s[k].clone()
                    + s[n - k].clone()
                    + two.clone() * mu[k].clone() * mu[n - k].clone()
                    + t.square()
                    + two * t * pair;
                sm = sm + w.clone() * term;
            }
            e.push(ek);
        }
        if var {
            let mut spread = S::zero();
            for (w, ek) in row.iter().zip(&e) {
                spread = spread + w.clone() * (ek.clone() - mean.clone()).square();
            }
            v.push(vin + spread);
        }
        mu.push(mean);
        s.push(sm);
        n += 1;
    }
    Filled {
        mu,
        var: var.then_some(v),
        second: second.then_some(s),
    }
}

/// The four-configuration law of PPL: for n ≥ 4, X_n is X_{n−1} with
/// probability 2^{2−n}, n + X_{n−2} with probability (n−1)2^{2−n}, and
/// X_k + X'_{n−1−k} with probability C(n−1,k)2^{1−n} for 2 ≤ k ≤ n−3.
fn run_ppl<S: Scalar>(nmax: usize, var: bool, second: bool) -> Filled<S> {
    // X_0 = X_1 = 0, X_2 = 2, X_3 ∈ {2, 6} equiprobable
    let base_mu = [0, 0, 2, 4];
    let base_var = [0, 0, 0, 4];
    let take = (nmax + 1).min(4);
    let mut mu: Vec<S> = base_mu[..take].iter().map(|&x| S::from_i64(x)).collect();
    let mut v: Vec<S> = base_var[..take].iter().map(|&x| S::from_i64(x)).collect();
    let mut s: Vec<S> = (0..take).map(|i| v[i].clone() + mu[i].square()).collect();
    for n in 4..=nmax {
        let ni = n as i64;
        let mut configs: Vec<(S, S, S, S)> = Vec::new();
        let p1 = S::dyadic(1, 2 - ni);
        configs.push((p1, mu[n - 1].clone(), v[n - 1].clone(), s[n - 1].clone()));
        let p2 = S::dyadic(ni - 1, 2 - ni);
        let nn = S::from_i64(ni);
        configs.push((
            p2,
            nn.clone() + mu[n - 2].clone(),
            v[n - 2].clone(),
            s[n - 2].clone() + S::from_i64(2) * nn.clone() * mu[n - 2].clone() + nn.square(),
        ));
        let (k0, row) = S::binomial_row(n - 1);
        for (i, w) in row.into_iter().enumerate() {
            let k = k0 + i;
            if k < 2 || k + 3 > n {
                continue;
            }
            let j = n - 1 - k;
            configs.push((
                w,
                mu[k].clone() + mu[j].clone(),
                v[k].clone() + v[j].clone(),
                s[k].clone() + s[j].clone() + S::from_i64(2) * mu[k].clone() * mu[j].clone(),
            ));
        }
        let mean = configs.iter().fold(S::zero(), |a, c| a + c.0.clone() * c.1.clone());
        if var {
            let vv = configs.iter().fold(S::zero(), |a, c| {
                a + c.0.clone() * (c.2.clone() + (c.1.clone() - mean.clone()).square())
            });
            v.push(vv);
        }
        if second {
            s.push(configs.iter().fold(S::zero(), |a, c| a + c.0.clone() * c.3.clone()));
        } else {
            s.push(S::zero());
        }
        mu.push(mean);
    }
    Filled {
        mu,
        var: var.then_some(v),
        second: second.then_some(s),
    }
}

fn assemble<S: Scalar>(spec: ParamSpec, nmax: usize, f: Filled<S>) -> MomentSeries<S> {
    MomentSeries {
        spec,
        nmax,
        mode: Mode::of::<S>(),
        mu: f.mu,
        var: f.var,
        second_moment: f.second,
        npl: None,
    }
}

pub fn mean_series<S: Scalar + 'static>(spec: ParamSpec, nmax: usize) -> Result<MomentSeries<S>, MomentError> {
    spec.check()?;
    check_size::<S>(nmax)?;
    match spec.param {
        Param::Npl => {
            let mut j = npl_joint_series::<S>(spec.b, nmax)?;
            j.var = None;
            Ok(j)
        }
        Param::Ppl => Ok(assemble(spec, nmax, run_ppl(nmax, false, false))),
        _ => Ok(assemble(spec, nmax, run_split(&SplitModel::for_spec(spec)?, nmax, false, false))),
    }
}

/// Fills mu and var. With [`VariancePath::Both`] the second-moment path is kept
/// as well and the two are compared; exact types must agree exactly.
pub fn variance_series<S: Scalar + 'static>(
    spec: ParamSpec,
    nmax: usize,
    path: VariancePath,
) -> Result<MomentSeries<S>, MomentError> {
    spec.check()?;
    check_size::<S>(nmax)?;
    let (direct, second) = match path {
        VariancePath::Direct => (true, false),
        VariancePath::SecondMoment => (false, true),
        VariancePath::Both => (true, true),
    };
    let mut out = match spec.param {
        Param::Npl => npl_series::<S>(spec.b, nmax, second)?,
        Param::Ppl => assemble(spec, nmax, run_ppl(nmax, direct, second)),
        _ => assemble(spec, nmax, run_split(&SplitModel::for_spec(spec)?, nmax, direct, second)),
    };
    if let Some(s) = &out.second_moment {
        let from_second: Vec<S> = s.iter().zip(&out.mu).map(|(s, m)| s.clone() - m.square()).collect();
        match &out.var {
            Some(v) if path == VariancePath::Both => {
                for (n, (a, b)) in v.iter().zip(&from_second).enumerate() {
                    let bad = if S::EXACT {
                        a != b
                    } else {
                        let (a, b) = (a.as_f64(), b.as_f64());
                        libm::fabs(a - b) > 1e-6 * a.abs().max(1.0)
                    };
                    if bad {
                        return Err(MomentError::PathMismatch { n });
                    }
                }
            }
            _ => out.var = Some(from_second),
        }
    }
    Ok(out)
}

/// Splits for an arbitrary model, for cross-checks against the named recurrences.
pub fn split_series<S: Scalar>(model: &SplitModel<S>, nmax: usize) -> (Vec<S>, Vec<S>) {
    let f = run_split(model, nmax, true, false);
    (f.mu, f.var.unwrap_or_default())
}

/// Joint moments of (N_n, X_n): N_{n+b} = N_k + N'_{n−k} + 1 and
/// X_{n+b} = X_k + X'_{n−k} + N_k + N'_{n−k}, with N_0 = 0, N_1..N_b = 1.
pub fn npl_joint_series<S: Scalar>(b: u32, nmax: usize) -> Result<MomentSeries<S>, MomentError> {
    check_size::<S>(nmax)?;
    npl_series(b, nmax, true)
}

fn npl_series<S: Scalar>(b: u32, nmax: usize, second: bool) -> Result<MomentSeries<S>, MomentError> {
    if b == 0 {
        return Err(MomentError::Unsupported { param: Param::Npl, b });
    }
    let b = b as usize;
    let len = nmax + 1;
    // (a, mu) = means of (N, X); (vn, c, vx) = covariance entries; (sn, sc, sx) raw second moments
    let mut a = Vec::with_capacity(len);
    let mut mu = Vec::with_capacity(len);
    let mut vn = Vec::with_capacity(len);
    let mut c = Vec::with_capacity(len);
    let mut vx = Vec::with_capacity(len);
    let mut sn = Vec::with_capacity(len);
    let mut sc = Vec::with_capacity(len);
    let mut sx = Vec::with_capacity(len);
    for n in 0..len.min(b) {
        let nn = if n == 0 { S::zero() } else { S::one() };
        sn.push(nn.square());
        a.push(nn);
        mu.push(S::zero());
        for v in [&mut vn, &mut c, &mut vx, &mut sc, &mut sx] {
            v.push(S::zero());
        }
    }
    let two = S::from_i64(2);
    let mut n = 0;
    while n + b <= nmax {
        let (k0, row) = S::binomial_row(n);
        let mut ea = S::zero();
        let mut ex = S::zero();
        let mut cvn = S::zero();
        let mut cc = S::zero();
        let mut cvx = S::zero();
        let mut r_n = S::zero();
        let mut r_c = S::zero();
        let mut r_x = S::zero();
        let mut pts = Vec::with_capacity(row.len());
        for (i, w) in row.iter().enumerate() {
            let k = k0 + i;
            let j = n - k;
            let pn = a[k].clone() + a[j].clone();
            let px = mu[k].clone() + mu[j].clone();
            // mean of (N, X) given the split: (pn + 1, px + pn)
            let en = pn.clone() + S::one();
            let exk = px.clone() + pn.clone();
            ea = ea + w.clone() * en.clone();
            ex = ex + w.clone() * exk.clone();
            // conditional covariance A(Σ_k + Σ_j)A^T with A = [[1,0],[1,1]]
            let svn = vn[k].clone() + vn[j].clone();
            let sc_ = c[k].clone() + c[j].clone();
            let svx = vx[k].clone() + vx[j].clone();
            cvn = cvn + w.clone() * svn.clone();
            cc = cc + w.clone() * (sc_.clone() + svn.clone());
            cvx = cvx + w.clone() * (svx.clone() + two.clone() * sc_.clone() + svn.clone());
            if second {
                // raw moments of the sums N_k + N'_j and X_k + X'_j, then of the transformed pair
                let ssn = sn[k].clone() + sn[j].clone() + two.clone() * a[k].clone() * a[j].clone();
                let ssc = sc[k].clone()
                    + sc[j].clone()
                    + a[k].clone() * mu[j].clone()
                    + a[j].clone() * mu[k].clone();
                let ssx = sx[k].clone() + sx[j].clone() + two.clone() * mu[k].clone() * mu[j].clone();
                // N = SN + 1, X = SX + SN
                r_n = r_n + w.clone() * (ssn.clone() + two.clone() * pn.clone() + S::one());
                r_c = r_c + w.clone() * (ssc.clone() + ssn.clone() + px.clone() + pn.clone());
                r_x = r_x + w.clone() * (ssx + two.clone() * ssc + ssn);
            }
            pts.push((en, exk));
        }
        for (w, (en, exk)) in row.iter().zip(pts) {
            let dn = en - ea.clone();
            let dx = exk - ex.clone();
            cvn = cvn + w.clone() * dn.square();
            cc = cc + w.clone() * dn * dx.clone();
            cvx = cvx + w.clone() * dx.square();
        }
        a.push(ea);
        mu.push(ex);
        vn.push(cvn);
        c.push(cc);
        vx.push(cvx);
        sn.push(r_n);
        sc.push(r_c);
        sx.push(r_x);
        n += 1;
    }
    Ok(MomentSeries {
        spec: ParamSpec::new(Param::Npl).with_b(b as u32),
        nmax,
        mode: Mode::of::<S>(),
        mu,
        var: Some(vx),
        second_moment: second.then_some(sx),
        npl: Some(NplJoint { mu_n: a, var_n: vn, cov: c }),
    })
}

/// u_n = Σ_k π_{n,k}(μ_k + μ_{n−k} − μ_{n+off} + t(n,k))², the spread term of
/// the direct variance recurrence, from a float mean series.
pub fn u_diagnostic(spec: ParamSpec, n: usize) -> Result<f64, MomentError> {
    Ok(u_profile(spec, n)?[n])
}

/// u_0, …, u_nmax in one pass over the mean series.
pub fn u_profile(spec: ParamSpec, nmax: usize) -> Result<Vec<f64>, MomentError> {
    let model = SplitModel::<f64>::for_spec(spec)?;
    check_size::<f64>(nmax + model.off)?;
    let f = run_split(&model, nmax + model.off, false, false);
    let mut out = vec![0.0; nmax + 1];
    for (n, slot) in out.iter_mut().enumerate().skip(model.start) {
        let target = f.mu[n + model.off];
        let (k0, row) = float_row(n);
        let mut u = 0.0;
        for (i, w) in row.iter().enumerate() {
            let k = k0 + i;
            let d = f.mu[k] + f.mu[n - k] - target + model.toll(n, k);
            u += w * d * d;
        }
        *slot = u;
    }
    Ok(out)
}

fn float_row(n: usize) -> (usize, Vec<f64>) {
    crate::scalar::float_binomial_row(n)
}

#[cfg(test)]
mod tests;
