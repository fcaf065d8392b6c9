//! The fourteen acceptance criteria, each a list of checks with pinned
//! tolerances.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use dstlab_core::asymptotics::{self, dpl};
use dstlab_core::depoisson::{
    charlier_exp_partial_sums, depoissonized_ipl_mean, ipl_mean_closed, vtilde_coeffs, vtilde_refined, vtilde_terms,
};
use dstlab_core::moments::{
    depth_moments_exact, mean_series, npl_joint_series, variance_series, Param, ParamSpec, VariancePath,
};
use dstlab_core::qseries::QContext;
use dstlab_core::scalar::{rational_to_f64, Scalar};
use dstlab_core::trees::profile_from_parents;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::montecarlo::{occupancy_study, simulate, Observable, SimConfig};
use crate::validate::{oracle_checks, spec_label, Check};

pub const COUNT: usize = 14;

/// Criteria that cannot pass at the stated size. Criterion 13 asks for the
/// depth mean within 1e−4 and the variance within 1e−2 at n = 4096, but the
/// gaps there are about 1.08·log₂n/n ≈ 3.2e−3 and −1.06·(log₂n)²/n ≈ −3.7e−2,
/// and both keep shrinking at those rates up to n = 2^14.
pub const KNOWN_FAILURES: &[usize] = &[13];

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn prefixed_checks(&self) -> Vec<Check> {
        self.checks
            .iter()
            .map(|c| Check { name: format!("[{}] {}", self.id, c.name), ..c.clone() })
            .collect()
    }

    /// One line: id, verdict, title, and the first failing check if any.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("criterion {:>2} {verdict} {} ({:.1}s)", self.id, self.title, self.seconds);
        if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            s.push_str(&format!(" -- {c}"));
        }
        s
    }
}

pub fn title(id: usize) -> &'static str {
    match id {
        1 => "oracle equivalence and Monte Carlo agreement",
        2 => "IPL closed-form mean and Poisson coefficients",
        3 => "small-n and n = 1024 variance anchors",
        4 => "C_kps and its fluctuation",
        5 => "C_h table",
        6 => "c10 table and NPL node count",
        7 => "leaves: C_fs and C_kp",
        8 => "PPL: C_w and its variance",
        9 => "DPL mean constant and variance slope",
        10 => "NPL b = 2 correlation, growth and occupancy",
        11 => "Charlier identity demos and de-Poissonization",
        12 => "corrected Poisson variance",
        13 => "depth of a random node",
        14 => "WPL doubling laws",
        _ => "unknown",
    }
}

/// Runs criterion `id` (1-based).
pub fn criterion(id: usize) -> Criterion {
    let t = Instant::now();
    let checks = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        11 => c11(),
        12 => c12(),
        13 => c13(),
        14 => c14(),
        _ => vec![Check::flag(format!("criterion {id}"), false, "no such criterion")],
    };
    Criterion { id, title: title(id), checks, seconds: t.elapsed().as_secs_f64() }
}

pub fn run_all() -> Vec<Criterion> {
    (1..=COUNT).map(criterion).collect()
}

const BIG: usize = 1 << 13;

fn fail(name: &str, e: impl ToString) -> Check {
    Check::flag(name, false, e.to_string())
}

fn mean_var(spec: ParamSpec, nmax: usize) -> Result<(Vec<f64>, Vec<f64>), String> {
    let s = variance_series::<f64>(spec, nmax, VariancePath::Direct).map_err(|e| e.to_string())?;
    let var = s.var().to_vec();
    Ok((s.mu, var))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1() -> Vec<Check> {
    let t = Instant::now();
    let mut out = oracle_checks(12);

    const TRIALS: u64 = 100_000;
    const SIGMAS: f64 = 4.0;
    let groups: [(u32, Vec<ParamSpec>); 2] = [
        (
            1,
            vec![
                ParamSpec::new(Param::Ipl),
                ParamSpec::new(Param::Kpl),
                ParamSpec::new(Param::Ppl),
                ParamSpec::new(Param::Leaves),
                ParamSpec::new(Param::Dpl),
                ParamSpec::new(Param::Wpl),
            ],
        ),
        (2, vec![ParamSpec::new(Param::Kpl).with_b(2), ParamSpec::new(Param::Npl).with_b(2)]),
    ];
    for (b, specs) in groups {
        let exact: Vec<_> = specs.iter().map(|s| mean_var(*s, 12)).collect();
        let obs: Vec<Observable> = specs.iter().map(|s| Observable::Shape(s.param)).collect();
        let mut worst = (0.0f64, String::new());
        let mut err = None;
        for n in 1..=12usize {
            let cfg = SimConfig::new(obs.clone(), b, n, TRIALS, 0x5eed + n as u64);
            let sum = match simulate(&cfg) {
                Ok(s) => s,
                Err(e) => {
                    err = Some(e.to_string());
                    break;
                }
            };
            for ((spec, o), ex) in specs.iter().zip(&obs).zip(&exact) {
                let Ok((mu, var)) = ex else {
                    err = Some(format!("{} recurrence failed", spec_label(spec)));
                    continue;
                };
                let st = sum.get(*o).expect("requested observable");
                let z_mean = if st.std_error > 0.0 { (st.mean - mu[n]).abs() / st.std_error } else { 0.0 };
                let z_var =
                    if st.variance_std_error > 0.0 { (st.variance - var[n]).abs() / st.variance_std_error } else { 0.0 };
                // a degenerate law must be reproduced exactly
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
                let degenerate_miss = (st.std_error == 0.0 && !close(st.mean, mu[n]))
                    || (st.variance_std_error == 0.0 && !close(var[n], 0.0));
                let z = if degenerate_miss { f64::INFINITY } else { z_mean.max(z_var) };
                if z > worst.0 {
                    worst = (z, format!("{} n={n}", spec_label(spec)));
                }
            }
        }
        let name = format!("Monte Carlo b={b}, 1e5 trials, n≤12: worst |z| on mean and variance");
        match err {
            Some(e) => out.push(fail(&name, e)),
            None => out.push(Check::at_most(name, worst.0, SIGMAS).with_note(worst.1)),
        }
    }
    out.push(Check::at_most("runtime in seconds", t.elapsed().as_secs_f64(), 60.0));
    out
}

fn c2() -> Vec<Check> {
    let ctx = QContext::default();
    let mut out = Vec::new();
    match mean_series::<f64>(ParamSpec::new(Param::Ipl), 2000) {
        Ok(s) => {
            let worst = (2..=2000u64)
                .map(|n| rel(ipl_mean_closed(&ctx, n), s.mu[n as usize]))
                .fold(0.0, f64::max);
            out.push(Check::at_most("closed-form IPL mean vs recurrence, n≤2000 (relative)", worst, 1e-10));
        }
        Err(e) => out.push(fail("closed-form IPL mean", e)),
    }

    let name = "Poisson coefficients of the exact mean equal (−1)^n Q_{n−2}, 2≤n≤40";
    match mean_series::<BigRational>(ParamSpec::new(Param::Ipl), 40) {
        Ok(s) => {
            let mut q = BigRational::from_integer(BigInt::from(1));
            let mut first_bad = None;
            for n in 2..=40usize {
                if n >= 3 {
                    let j = n - 2;
                    q = &q - &q / BigRational::from_integer(BigInt::from(1) << j);
                }
                let coeff = poisson_coefficient(&s.mu, n);
                let target = if n % 2 == 0 { q.clone() } else { -q.clone() };
                if coeff != target && first_bad.is_none() {
                    first_bad = Some(n);
                }
            }
            out.push(match first_bad {
                None => Check::flag(name, true, "exact"),
                Some(n) => Check::flag(name, false, format!("differs at n={n}")),
            });
        }
        Err(e) => out.push(fail(name, e)),
    }
    out
}

/// n![z^n] e^{−z}Σ a_k z^k/k! = Σ_k C(n,k)(−1)^{n−k} a_k.
fn poisson_coefficient(a: &[BigRational], n: usize) -> BigRational {
    let mut c = BigInt::from(1);
    let mut acc = BigRational::from_integer(BigInt::from(0));
    for (k, ak) in a.iter().enumerate().take(n + 1) {
        let term = ak * BigRational::from_integer(c.clone());
        acc = if (n - k) % 2 == 0 { acc + term } else { acc - term };
        c = c * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    acc
}

fn exact_var(spec: ParamSpec, n: usize) -> Result<BigRational, String> {
    variance_series::<BigRational>(spec, n, VariancePath::Both)
        .map(|s| s.var()[n].clone())
        .map_err(|e| e.to_string())
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn exact_eq(name: &str, got: Result<BigRational, String>, want: BigRational) -> Check {
    match got {
        Ok(v) => Check::within(name, rational_to_f64(&v), rational_to_f64(&want), 0.0)
            .with_note(if v == want { "exact".to_string() } else { format!("got {v}") }),
        Err(e) => fail(name, e),
    }
}

fn c3() -> Vec<Check> {
    let mut out = vec![exact_eq("IPL V(X_4) = 31/64", exact_var(ParamSpec::new(Param::Ipl), 4), ratio(31, 64))];
    match mean_var(ParamSpec::new(Param::Ipl), 1024) {
        Ok((_, v)) => out.push(Check::within("IPL V(X_1024)/1024", v[1024] / 1024.0, 0.2652, 5e-4)),
        Err(e) => out.push(fail("IPL V(X_1024)/1024", e)),
    }
    out.push(exact_eq("KPL b=2 V(X_5) = 3/16", exact_var(ParamSpec::new(Param::Kpl).with_b(2), 5), ratio(3, 16)));
    out.push(exact_eq("NPL b=2 V(X_4) = 1/4", exact_var(ParamSpec::new(Param::Npl).with_b(2), 4), ratio(1, 4)));
    out
}

fn c4() -> Vec<Check> {
    let ck = asymptotics::ckps();
    let mut out = vec![Check::within("C_kps", ck.value, 0.266_003_645_4, 1e-7)];
    match mean_var(ParamSpec::new(Param::Ipl), BIG) {
        Ok((_, v)) => out.push(Check::within("IPL V/n at n=8192", v[BIG] / BIG as f64, ck.value, 2e-3)),
        Err(e) => out.push(fail("IPL V/n at n=8192", e)),
    }
    out.push(Check::at_most("fluctuation amplitude Σ_{k≠0}|c_k|", asymptotics::ckps_fourier(12).amplitude(), 1.9e-5));
    out
}

const C_H: [f64; 5] = [0.26600, 0.13260, 0.09004, 0.06958, 0.05781];
const C10: [f64; 6] = [1.0, 0.57470, 0.40698, 0.31594, 0.25849, 0.21885];

fn c5() -> Vec<Check> {
    let mut out = Vec::new();
    for b in 1..=5u32 {
        let name = format!("C_h b={b}");
        out.push(match asymptotics::c_h(b) {
            Ok(c) => Check::within(name, c.value, C_H[b as usize - 1], 5e-4),
            Err(e) => fail(&name, e),
        });
    }
    out.push(match asymptotics::c_h(1) {
        Ok(c) => Check::within("C_h(1) vs C_kps", c.value, asymptotics::ckps().value, 1e-6),
        Err(e) => fail("C_h(1) vs C_kps", e),
    });
    out
}

fn c6() -> Vec<Check> {
    let mut out = Vec::new();
    for b in 1..=6u32 {
        let name = format!("c10 b={b}");
        out.push(match asymptotics::c10(b) {
            Ok(c) => Check::within(name, c.value, C10[b as usize - 1], 1e-4),
            Err(e) => fail(&name, e),
        });
    }
    let name = "NPL b=2 E(N_n)/n at n=8192";
    out.push(match npl_joint_series::<f64>(2, BIG) {
        Ok(s) => Check::within(name, s.npl.as_ref().expect("joint").mu_n[BIG] / BIG as f64, 0.57470, 5e-3),
        Err(e) => fail(name, e),
    });
    out
}

fn c7() -> Vec<Check> {
    let mut out = Vec::new();
    let cfs = asymptotics::c_fs();
    match &cfs {
        Ok(c) => out.push(Check::within("C_fs", c.value, 0.372_048_681_2, 1e-6)),
        Err(e) => out.push(fail("C_fs", e)),
    }
    match asymptotics::fringe::CfsForms::compute() {
        Ok(f) => out.push(Check::at_most("C_fs integral and series forms, spread", f.max_spread(), 1e-6)),
        Err(e) => out.push(fail("C_fs forms", e)),
    }
    let ckp = asymptotics::c_kp();
    match &ckp {
        Ok(c) => out.push(Check::within("C_kp", c.value, 0.034_203, 5e-4)),
        Err(e) => out.push(fail("C_kp", e)),
    }
    match (mean_var(ParamSpec::new(Param::Leaves), BIG), cfs, ckp) {
        (Ok((mu, v)), Ok(cfs), Ok(ckp)) => {
            out.push(Check::within("leaves E/n at n=8192 vs C_fs", mu[BIG] / BIG as f64, cfs.value, 2e-3));
            out.push(Check::within("leaves V/n at n=8192 vs C_kp", v[BIG] / BIG as f64, ckp.value, 2e-3));
        }
        (Err(e), _, _) => out.push(fail("leaves recurrence", e)),
        _ => out.push(fail("leaves recurrence", "constants unavailable")),
    }
    out
}

fn c8() -> Vec<Check> {
    let mut out = Vec::new();
    let cw = asymptotics::c_w();
    match &cw {
        Ok(c) => out.push(Check::within("C_w", c.value, 1.103_026_695_9, 1e-6)),
        Err(e) => out.push(fail("C_w", e)),
    }
    match asymptotics::fringe::c_w_integral() {
        Ok(i) => out.push(Check::within(
            "C_w integral vs series",
            i.value,
            asymptotics::fringe::c_w_series().value,
            1e-6,
        )),
        Err(e) => out.push(fail("C_w integral", e)),
    }
    let pw = asymptotics::ppl_var_mean();
    match (mean_var(ParamSpec::new(Param::Ppl), BIG), cw, pw) {
        (Ok((mu, v)), Ok(cw), Ok(pw)) => {
            out.push(Check::within("PPL E/n at n=8192 vs C_w", mu[BIG] / BIG as f64, cw.value, 5e-3));
            out.push(Check::within("PPL V/n at n=8192 vs mean of P_w", v[BIG] / BIG as f64, pw.value, 5e-3));
        }
        (Err(e), _, _) => out.push(fail("PPL recurrence", e)),
        _ => out.push(fail("PPL recurrence", "constants unavailable")),
    }
    out
}

fn c9() -> Vec<Check> {
    let mut out = Vec::new();
    match dpl::dpl_periodic_mean() {
        Ok(c) => out.push(Check::within("DPL periodic mean G_1(2)/log 2", c.value, 1.339_074_649_4, 1e-6)),
        Err(e) => out.push(fail("DPL periodic mean", e)),
    }
    let n = 4096;
    match mean_var(ParamSpec::new(Param::Dpl), 2 * n) {
        Ok((_, v)) => {
            let slope = (v[2 * n] - 2.0 * v[n]) / (2 * n) as f64;
            out.push(Check::within("DPL (V(2n) − 2V(n))/(2n) at n=4096", slope, 1.0 - 2.0 / PI, 0.02));
        }
        Err(e) => out.push(fail("DPL variance", e)),
    }
    match dpl::dpl_sqrt_doubling(n) {
        Ok(d) => {
            let which = ["−√2/(√π(√2−1))", "−√2/(√(2π)(√2−1))"][d.selected];
            let gap = (d.observed - d.predicted[d.selected]).abs();
            let other = (d.observed - d.predicted[1 - d.selected]).abs();
            out.push(
                Check::flag("√n coefficient of the DPL mean resolved by doubling", gap < other, "")
                    .with_note(format!(
                        "observed {:.6}, predicted {:.6} / {:.6}; selected {which}",
                        d.observed, d.predicted[0], d.predicted[1]
                    )),
            );
        }
        Err(e) => out.push(fail("DPL √n doubling", e)),
    }
    out
}

fn c10() -> Vec<Check> {
    let mut out = Vec::new();
    match npl_joint_series::<f64>(2, BIG) {
        Ok(s) => {
            let j = s.npl.as_ref().expect("joint");
            let corr = j.cov[BIG] / (j.var_n[BIG] * s.var()[BIG]).sqrt();
            out.push(Check::at_least("corr(N_n, X_n) at n=8192", corr, 0.99));
            let n = BIG / 2;
            let growth = s.var()[2 * n] / s.var()[n];
            let law = 2.0 * (1.0 + 1.0 / (n as f64).log2()).powi(2);
            out.push(Check::at_most("|V(2n)/V(n) / 2(1+1/log₂n)² − 1| at n=4096", (growth / law - 1.0).abs(), 0.10));
        }
        Err(e) => out.push(fail("NPL b=2 joint series", e)),
    }
    match occupancy_study(2, BIG, 1000, 0x0cc) {
        Ok(f) => {
            out.push(Check::within("two-key nodes per key, b=2, n=8192", f[1], 0.425, 0.01));
            out.push(Check::within("one-key nodes per key, b=2, n=8192", f[0], 0.14, 0.01));
        }
        Err(e) => out.push(fail("occupancy study", e)),
    }
    out
}

pub(crate) fn c11() -> Vec<Check> {
    let alt = charlier_exp_partial_sums(-2, 10, 80);
    let pow = charlier_exp_partial_sums(1, 10, 80);
    let mut out = vec![
        Check::within("(−1)^n demo at n=10, J=80", alt[80], 1.0, 1e-9),
        Check::within("2^n demo at n=10, J=80", pow[80], 1024.0, 1e-9),
        Check::within("(−1)^n trajectory at J=49", alt[49], 0.9968, 1e-3),
    ];
    let ctx = QContext::default();
    match mean_series::<f64>(ParamSpec::new(Param::Ipl), 200) {
        Ok(s) => {
            let errs: Vec<f64> = (1..=3).map(|k| (depoissonized_ipl_mean(&ctx, 200, k) - s.mu[200]).abs()).collect();
            let shrink = (errs[0] / errs[1]).min(errs[1] / errs[2]);
            out.push(
                Check::at_least("de-Poissonized IPL mean at n=200: error ratio per order", shrink, 5.0)
                    .with_note(format!("errors {:.3e}, {:.3e}, {:.3e}", errs[0], errs[1], errs[2])),
            );
        }
        Err(e) => out.push(fail("IPL mean", e)),
    }
    out
}

fn c12() -> Vec<Check> {
    let mut out = Vec::new();
    let exact = variance_series::<BigRational>(ParamSpec::new(Param::Ipl), 64, VariancePath::Both);
    let table = vtilde_coeffs(vtilde_terms(64), true);
    match (exact, table) {
        (Ok(s), Ok(t)) => {
            let v = |n: usize| s.var()[n].as_f64();
            let worst = (16..=64usize).map(|n| (v(n) - t.eval_at(n as u64, 0)).abs()).fold(0.0, f64::max);
            out.push(Check::at_most("max |V(X_n) − Ṽ(n)|, 16≤n≤64", worst, 5.0));
            let gap = (v(64) - t.eval_at(64, 0)).abs();
            let refined = (v(64) - vtilde_refined(&QContext::default(), 64)).abs();
            out.push(Check::flag("refined correction narrows the gap at n=64", refined < gap, "")
                .with_note(format!("{gap:.6} → {refined:.6}")));
        }
        (Err(e), _) => out.push(fail("exact IPL variance", e)),
        (_, Err(e)) => out.push(fail("Ṽ coefficients", e)),
    }
    out
}

fn c13() -> Vec<Check> {
    let n = 4096;
    let d = depth_moments_exact(n);
    let k = asymptotics::depth_constants();
    vec![
        Check::within("E(depth) − log₂n at n=4096", d.mean - (n as f64).log2(), k.mean, 1e-4),
        Check::within("V(depth) at n=4096", d.variance, k.variance, 1e-2),
        {
            let parents = [None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(3), Some(4), Some(7), Some(7), Some(7)];
            let p = profile_from_parents(&parents);
            Check::flag("profile of the example tree is {1,2,3,2,3}", p == [1, 2, 3, 2, 3], format!("{p:?}"))
        },
    ]
}

/// (μ(2n)/(2n) − μ(n)/n) / ((ln 2n)^{m+1} − (ln n)^{m+1}), the coefficient of
/// n(ln n)^{m+1} with lower-order terms partly cancelled.
pub fn wpl_doubling_coefficient(mu: &[f64], n: usize, m: u32) -> f64 {
    let l = |k: usize| (k as f64).ln().powi(m as i32 + 1);
    (mu[2 * n] / (2 * n) as f64 - mu[n] / n as f64) / (l(2 * n) - l(n))
}

fn c14() -> Vec<Check> {
    let n = 4096;
    let mut out = Vec::new();
    for m in 1..=2u32 {
        match mean_var(ParamSpec::new(Param::Wpl).with_m(m), 2 * n) {
            Ok((mu, v)) => {
                out.push(Check::within(format!("WPL m={m} V(2n)/V(n) at n=4096"), v[2 * n] / v[n], 2.0, 0.1));
                let target = 1.0 / ((m + 1) as f64 * LN_2);
                let c = wpl_doubling_coefficient(&mu, n, m);
                out.push(Check::at_most(format!("WPL m={m} mean coefficient, relative error"), rel(c, target), 0.15)
                    .with_note(format!("{c:.6} vs {target:.6}")));
            }
            Err(e) => out.push(fail(&format!("WPL m={m}"), e)),
        }
    }
    out
}
