//! Named suites of checks with measured values, for `dstlab validate`.

use std::fmt;

use dstlab_core::moments::{pmf_oracle, variance_series, Param, ParamSpec, VariancePath};
use dstlab_core::qseries::{lambda_closed, lambda_series, phi, QContext};
use dstlab_core::quad::{quad_0_inf, QuadOptions};
use dstlab_core::scalar::{LogPoly, Scalar};
use dstlab_core::trees::{measure, BucketTree};
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::acceptance;
use crate::registry;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    pub fn within(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: (measured - target).abs() <= tol,
            measured: Some(measured),
            target: Some(target),
            tolerance: Some(tol),
            note: String::new(),
        }
    }

    /// measured ≤ bound.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= bound,
            measured: Some(measured),
            target: Some(bound),
            tolerance: None,
            note: "upper bound".into(),
        }
    }

    /// measured ≥ bound.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured >= bound,
            measured: Some(measured),
            target: Some(bound),
            tolerance: None,
            note: "lower bound".into(),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, note: impl Into<String>) -> Self {
        Self { name: name.into(), passed, measured: None, target: None, tolerance: None, note: note.into() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", if self.passed { "PASS" } else { "FAIL" }, self.name)?;
        if let Some(m) = self.measured {
            write!(f, ": {m:.12}")?;
            match (self.target, self.tolerance) {
                (Some(t), Some(tol)) => write!(f, " vs {t:.12} ± {tol:e}")?,
                (Some(t), None) => write!(f, " ({} {t:e})", self.note)?,
                _ => {}
            }
        }
        if !self.note.is_empty() && (self.measured.is_none() || self.tolerance.is_some()) {
            write!(f, " [{}]", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    Constants,
    Charlier,
    Invariants,
    Acceptance,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["oracle", "constants", "charlier", "invariants", "acceptance", "all"];

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "oracle" => Suite::Oracle,
            "constants" => Suite::Constants,
            "charlier" => Suite::Charlier,
            "invariants" => Suite::Invariants,
            "acceptance" => Suite::Acceptance,
            "all" => Suite::All,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// The parameter set compared against the exact distributions.
pub fn oracle_specs() -> Vec<ParamSpec> {
    vec![
        ParamSpec::new(Param::Ipl),
        ParamSpec::new(Param::Kpl),
        ParamSpec::new(Param::Kpl).with_b(2),
        ParamSpec::new(Param::Npl).with_b(2),
        ParamSpec::new(Param::Ppl),
        ParamSpec::new(Param::Leaves),
        ParamSpec::new(Param::Dpl),
        ParamSpec::new(Param::Wpl),
    ]
}

pub fn spec_label(s: &ParamSpec) -> String {
    match s.param {
        Param::Dpl | Param::Wpl => format!("{}(m={})", s.param, s.m),
        Param::Kpl | Param::Npl => format!("{}(b={})", s.param, s.b),
        _ => s.param.name().to_string(),
    }
}

fn exact_vs_oracle<V: Scalar + Ord + 'static>(spec: ParamSpec, nmax: usize) -> Check {
    let label = format!("exact recurrence = exact law, {} n≤{nmax}", spec_label(&spec));
    let s = match variance_series::<V>(spec, nmax, VariancePath::Both) {
        Ok(s) => s,
        Err(e) => return Check::flag(label, false, e.to_string()),
    };
    for n in 0..=nmax {
        let pmf = match pmf_oracle::<V>(spec, n) {
            Ok(p) => p,
            Err(e) => return Check::flag(label, false, e.to_string()),
        };
        if pmf.mean() != s.mu[n] || pmf.variance() != s.var()[n] {
            return Check::flag(label, false, format!("first mismatch at n={n}"));
        }
    }
    Check::flag(label, true, "")
}

/// Exact-mode recurrence moments equal the brute-force law for every n ≤ nmax.
pub fn oracle_checks(nmax: usize) -> Vec<Check> {
    oracle_specs()
        .into_iter()
        .map(|spec| match spec.param {
            Param::Wpl => exact_vs_oracle::<LogPoly>(spec, nmax),
            _ => exact_vs_oracle::<BigRational>(spec, nmax),
        })
        .collect()
}

pub fn constants_checks() -> Vec<Check> {
    registry::evaluate_all(None)
        .into_iter()
        .filter(|r| r.reference.is_some() || r.error.is_some())
        .map(|r| {
            let name = match (r.b, r.m) {
                (Some(b), _) => format!("{} b={b}", r.name),
                (_, Some(m)) => format!("{} m={m}", r.name),
                _ => r.name.to_string(),
            };
            match (r.value, r.reference, r.tolerance) {
                (Some(v), Some(t), Some(tol)) => Check::within(name, v, t, tol),
                _ => Check::flag(name, false, r.error.unwrap_or_default()),
            }
        })
        .collect()
}

pub fn invariant_checks() -> Vec<Check> {
    let ctx = QContext::default();
    let mut out = Vec::new();

    // Euler: Σ_{j≤J}(−1)^j 2^{−j(j+1)/2}/Q_j → Q_∞
    let mut worst: f64 = 0.0;
    let mut partial = 0.0;
    for j in 0..6usize {
        let t = (-((j * (j + 1) / 2) as f64)).exp2() / ctx.q(j);
        partial += if j % 2 == 0 { t } else { -t };
        let bound = (-(((j + 1) * (j + 2) / 2) as f64)).exp2() / ctx.q_infinity();
        worst = worst.max((partial - ctx.q_infinity()).abs() / bound);
    }
    out.push(Check::at_most("Euler identity error / its bound", worst, 1.0));

    let mut worst: f64 = 0.0;
    for z in [Complex64::new(1.9, 0.0), Complex64::new(-1.5, 0.7), Complex64::new(0.3, -1.2)] {
        let prod = ctx.q_of(z) * ctx.inv_q_series(z, 900);
        worst = worst.max((prod - 1.0).norm());
    }
    out.push(Check::at_most("Q(z)·Σ z^l/(Q_l 2^l) − 1, |z| ≤ 1.9", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for (k, &(w, x)) in [(0.7, 0.3), (1.3, 2.0), (2.0, 5.0), (2.6, 0.15), (1.9, 9.0)].iter().enumerate() {
        let om = Complex64::new(w, 0.1 * k as f64);
        let q = dstlab_core::quad::quad_0_inf_complex(
            |s| Complex64::new(s, 0.0).powc(om - 1.0) / ((s + 1.0) * (s + x) * (s + x)),
            &QuadOptions::default(),
        );
        match q {
            Ok(q) => worst = worst.max((q.value - phi(om, x)).norm() / phi(om, x).norm()),
            Err(_) => worst = f64::INFINITY,
        }
    }
    out.push(Check::at_most("phi(ω;x) against its integral (relative)", worst, 1e-8));

    let mut worst: f64 = 0.0;
    for k in [1i64, 2, 5] {
        for t in [1.0 - 1e-4, 1.0 + 1e-4] {
            worst = worst.max((lambda_closed(t, k) - lambda_series(t, k)).norm());
        }
    }
    out.push(Check::at_most("lambda_k branch switch at t = 1 ± 1e−4", worst, 1e-6));

    let f = dstlab_core::asymptotics::bdst_mean_exppoly(2, 20).map(|f| f.nth_derivative(2));
    match f {
        Ok(f2) => {
            let mut worst: f64 = 0.0;
            let prod = f2.mul(&f2);
            for s in [0.5, 2.0] {
                let direct = prod.laplace(s);
                let q = quad_0_inf(|z| (-s * z).exp() * prod.eval(z), &QuadOptions::default());
                worst = worst.max(q.map_or(f64::INFINITY, |q| (q.value - direct).abs() / direct.abs()));
            }
            out.push(Check::at_most("Laplace of an exp-poly product, symbolic vs quadrature", worst, 1e-9));
        }
        Err(e) => out.push(Check::flag("Laplace of an exp-poly product", false, e.to_string())),
    }

    let ck = dstlab_core::asymptotics::kps::ckps_via_lambda(&ctx);
    out.push(Check::within("ckps via lambda_k at k=0", ck, dstlab_core::asymptotics::ckps().value, 1e-10));

    let fs = dstlab_core::asymptotics::ckps_fourier(12);
    out.push(Check::at_most("ϖ_kps conjugate symmetry defect", fs.max_conjugate_defect(), 0.0));
    let decays = (2..12).all(|k| fs.coeff(k + 1).norm() < fs.coeff(k).norm());
    out.push(Check::flag("ϖ_kps coefficients decrease for k ≥ 2", decays, ""));

    let mut ok = true;
    for seed in 0..20u64 {
        for b in 1..=3 {
            let t = BucketTree::random(b, 200, seed, 0).expect("random keys never run out");
            let r = measure(&t, &[1]);
            ok &= r.depth_profile.iter().sum::<u64>() == r.node_count as u64;
            ok &= r.occupancy.iter().enumerate().map(|(j, c)| (j as u64 + 1) * c).sum::<u64>() == 200;
            ok &= r.kpl >= r.npl;
        }
    }
    out.push(Check::flag("tree profile and occupancy sums", ok, "60 random trees"));

    let cfg = crate::montecarlo::SimConfig::new(vec![crate::montecarlo::Observable::Shape(Param::Ipl)], 1, 64, 2000, 5);
    let same = crate::montecarlo::simulate(&cfg).ok() == crate::montecarlo::simulate(&cfg).ok();
    out.push(Check::flag("simulation is deterministic", same, ""));
    out
}

pub fn charlier_checks() -> Vec<Check> {
    acceptance::criterion(11).checks
}

pub fn run(suite: Suite) -> Vec<SuiteReport> {
    let one = |name, checks| SuiteReport { suite: name, checks };
    match suite {
        Suite::Oracle => vec![one("oracle", oracle_checks(12))],
        Suite::Constants => vec![one("constants", constants_checks())],
        Suite::Charlier => vec![one("charlier", charlier_checks())],
        Suite::Invariants => vec![one("invariants", invariant_checks())],
        Suite::Acceptance => vec![one(
            "acceptance",
            acceptance::run_all().into_iter().flat_map(|c| c.prefixed_checks()).collect(),
        )],
        Suite::All => [Suite::Oracle, Suite::Constants, Suite::Charlier, Suite::Invariants, Suite::Acceptance]
            .into_iter()
            .flat_map(run)
            .collect(),
    }
}
