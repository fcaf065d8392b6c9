use super::*;
use crate::scalar::LogPoly;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn exact(spec: ParamSpec, nmax: usize) -> MomentSeries<BigRational> {
    variance_series::<BigRational>(spec, nmax, VariancePath::Both).unwrap()
}

#[test]
fn ipl_anchor_values() {
    let s = exact(ParamSpec::new(Param::Ipl), 8);
    assert_eq!(s.mu[3], q(5, 2));
    assert_eq!(s.var()[4], q(31, 64));
    assert!(s.mu[0].is_zero() && s.mu[1].is_zero() && s.var()[1].is_zero());
}

#[test]
fn kpl_b2_anchor_values() {
    let s = exact(ParamSpec::new(Param::Kpl).with_b(2), 12);
    assert_eq!(s.mu[5], q(13, 4));
    assert_eq!(s.var()[5], q(3, 16));
    assert_eq!(s.var()[6], q(7, 16));
}

#[test]
fn npl_b2_anchor_values() {
    let s = exact(ParamSpec::new(Param::Npl).with_b(2), 12);
    assert_eq!(s.var()[4], q(1, 4));
    let j = s.npl.as_ref().unwrap();
    let want = [q(0, 1), q(1, 1), q(1, 1), q(2, 1), q(5, 2), q(3, 1)];
    assert_eq!(&j.mu_n[..6], &want);
    // n = 3: two keys in the root and one child node
    assert_eq!(s.mu[3], q(1, 1));
    assert!(j.var_n[3].is_zero());
}

#[test]
fn npl_b1_is_ipl() {
    let npl = exact(ParamSpec::new(Param::Npl), 20);
    let ipl = exact(ParamSpec::new(Param::Ipl), 20);
    assert_eq!(npl.mu, ipl.mu);
    assert_eq!(npl.var, ipl.var);
    let j = npl.npl.unwrap();
    assert!(j.var_n.iter().all(|v| v.is_zero()));
    assert!(j.cov.iter().all(|v| v.is_zero()));
    for (n, m) in j.mu_n.iter().enumerate() {
        assert_eq!(*m, BigRational::from_integer(n.into()));
    }
}

#[test]
fn dpl_and_ppl_small_laws() {
    let d = exact(ParamSpec::new(Param::Dpl), 6);
    assert_eq!(d.var()[3], q(9, 4));
    let p = exact(ParamSpec::new(Param::Ppl), 6);
    assert_eq!(p.mu[3], q(4, 1));
    assert_eq!(p.var()[3], q(4, 1));
}

#[test]
fn ppl_configurations_equal_tree_form() {
    let four = exact(ParamSpec::new(Param::Ppl), 60);
    let model = SplitModel::<BigRational>::for_spec(ParamSpec::new(Param::Ppl)).unwrap();
    let (mu, var) = split_series(&model, 60);
    assert_eq!(four.mu, mu);
    assert_eq!(four.var.unwrap(), var);
}

#[test]
fn oracle_laws_from_the_examples() {
    let ipl = pmf_oracle::<BigRational>(ParamSpec::new(Param::Ipl), 3).unwrap();
    assert_eq!(ipl.probs.len(), 2);
    assert_eq!(ipl.probs[&q(2, 1)], q(1, 2));
    let ppl = pmf_oracle::<BigRational>(ParamSpec::new(Param::Ppl), 3).unwrap();
    assert_eq!(ppl.probs[&q(2, 1)], q(1, 2));
    assert_eq!(ppl.probs[&q(6, 1)], q(1, 2));
    let leaves = pmf_oracle::<BigRational>(ParamSpec::new(Param::Leaves), 3).unwrap();
    assert_eq!(leaves.probs[&q(1, 1)], q(1, 2));
    assert_eq!(leaves.probs[&q(2, 1)], q(1, 2));
    let joint = npl_joint_pmf(2, 4).unwrap();
    // n = 4: the two keys below the root share a child with probability 1/2
    let pn2: BigRational = joint.iter().filter(|((n, _), _)| *n == 2).map(|(_, p)| p.clone()).sum();
    assert_eq!(pn2, q(1, 2));
}

fn oracle_matches(spec: ParamSpec, nmax: usize) {
    let s = exact(spec, nmax);
    for n in 0..=nmax {
        let pmf = pmf_oracle::<BigRational>(spec, n).unwrap();
        assert!(pmf.total().is_one());
        assert_eq!(pmf.mean(), s.mu[n], "{spec:?} mean at n={n}");
        assert_eq!(pmf.variance(), s.var()[n], "{spec:?} var at n={n}");
    }
}

#[test]
fn oracle_equivalence_integer_parameters() {
    for spec in [
        ParamSpec::new(Param::Ipl),
        ParamSpec::new(Param::Kpl),
        ParamSpec::new(Param::Kpl).with_b(2),
        ParamSpec::new(Param::Kpl).with_b(3),
        ParamSpec::new(Param::Npl).with_b(2),
        ParamSpec::new(Param::Ppl),
        ParamSpec::new(Param::Leaves),
        ParamSpec::new(Param::Dpl),
        ParamSpec::new(Param::Dpl).with_m(2),
    ] {
        oracle_matches(spec, 12);
    }
}

#[test]
fn oracle_equivalence_wpl() {
    let spec = ParamSpec::new(Param::Wpl);
    let s = variance_series::<LogPoly>(spec, 10, VariancePath::Both).unwrap();
    for n in 0..=10 {
        let pmf = pmf_oracle::<LogPoly>(spec, n).unwrap();
        assert_eq!(pmf.mean(), s.mu[n]);
        assert_eq!(pmf.variance(), s.var()[n]);
    }
    assert_eq!(
        variance_series::<BigRational>(spec, 4, VariancePath::Direct),
        Err(MomentError::NeedsLogs)
    );
}

#[test]
fn float_follows_exact() {
    for spec in [ParamSpec::new(Param::Wpl).with_m(2), ParamSpec::new(Param::Npl).with_b(3)] {
        let e = variance_series::<LogPoly>(spec, 20, VariancePath::Direct);
        let f = variance_series::<f64>(spec, 20, VariancePath::Both).unwrap();
        if let Ok(e) = e {
            for n in 0..=20 {
                let (a, b) = (e.var()[n].as_f64(), f.var()[n]);
                assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "{spec:?} n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn ipl_alternating_coefficients() {
    let s = mean_series::<BigRational>(ParamSpec::new(Param::Ipl), 40).unwrap();
    let mut qk = BigRational::one();
    for n in 2..=40usize {
        if n >= 3 {
            qk = qk * (BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << (n - 2)));
        }
        let row = crate::scalar::rational_binomial_row(n);
        let two_n = BigRational::from_integer(BigInt::one() << n);
        let mut alt = BigRational::zero();
        for k in 0..=n {
            let c = &row[k] * &two_n;
            let t = c * &s.mu[k];
            if (n - k) % 2 == 0 {
                alt += t;
            } else {
                alt -= t;
            }
        }
        let want = if n % 2 == 0 { qk.clone() } else { -qk.clone() };
        assert_eq!(alt, want, "n={n}");
    }
}

#[test]
fn dpl_toll_identities() {
    for n in 0..=100usize {
        let row = crate::scalar::rational_binomial_row(n);
        let mut sq = BigRational::zero();
        let mut ab = BigRational::zero();
        for (k, w) in row.iter().enumerate() {
            let d = BigRational::from_integer(BigInt::from(n as i64 - 2 * k as i64));
            sq += w * &d * &d;
            ab += w * if d < BigRational::zero() { -d } else { d };
        }
        assert_eq!(sq, BigRational::from_integer(n.into()));
        if n >= 1 {
            // Σ C(n,k)|n−2k| = 2·n!/(⌊n/2⌋!(⌈n/2⌉−1)!)
            let fact = |m: usize| (1..=m).fold(BigInt::one(), |a, i| a * BigInt::from(i));
            let closed = BigInt::from(2) * fact(n) / (fact(n / 2) * fact(n.div_ceil(2) - 1));
            assert_eq!(ab * BigRational::from_integer(BigInt::one() << n), BigRational::from_integer(closed));
        }
    }
}

#[test]
fn u_diagnostics() {
    let u = u_profile(ParamSpec::new(Param::Ipl), 1 << 13).unwrap();
    assert_eq!(u[0], 0.0);
    assert!(u.iter().all(|&x| x <= 3.0), "max {}", u.iter().cloned().fold(0.0, f64::max));
    let n = 1 << 12;
    let ud = u_diagnostic(ParamSpec::new(Param::Dpl), n).unwrap() / n as f64;
    assert!((ud - (1.0 - 2.0 / core::f64::consts::PI)).abs() < 0.02, "{ud}");
}

#[test]
fn unsupported_combinations() {
    assert!(matches!(
        mean_series::<f64>(ParamSpec::new(Param::Ppl).with_b(2), 10),
        Err(MomentError::Unsupported { .. })
    ));
    assert!(matches!(
        mean_series::<BigRational>(ParamSpec::new(Param::Ipl), 300),
        Err(MomentError::TooLarge { .. })
    ));
    assert!(pmf_oracle::<BigRational>(ParamSpec::new(Param::Ipl), 15).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variance_paths_agree_and_are_nonnegative(pi in 0usize..7, b in 1u32..4, m in 1u32..3, nmax in 1usize..400) {
        let param = Param::ALL[pi];
        let spec = match param {
            Param::Kpl | Param::Npl => ParamSpec::new(param).with_b(b),
            _ => ParamSpec::new(param).with_m(m),
        };
        let s = variance_series::<f64>(spec, nmax, VariancePath::Both).unwrap();
        prop_assert_eq!(s.mu.len(), nmax + 1);
        for v in s.var() {
            prop_assert!(*v >= -1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn exact_paths_agree(pi in 0usize..7, b in 1u32..4, nmax in 1usize..30) {
        let param = Param::ALL[pi];
        let spec = match param {
            Param::Kpl | Param::Npl => ParamSpec::new(param).with_b(b),
            _ => ParamSpec::new(param),
        };
        if param == Param::Wpl {
            prop_assert!(variance_series::<LogPoly>(spec, nmax.min(16), VariancePath::Both).is_ok());
        } else {
            prop_assert!(variance_series::<BigRational>(spec, nmax, VariancePath::Both).is_ok());
        }
    }

    #[test]
    fn path_length_means_increase(pi in 0usize..3, b in 1u32..5) {
        let param = Param::ALL[pi];
        let spec = ParamSpec::new(param).with_b(if param == Param::Ipl { 1 } else { b });
        let s = mean_series::<f64>(spec, 300).unwrap();
        let first = s.mu.iter().position(|&x| x > 0.0).unwrap();
        for w in s.mu[first..].windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn binomial_rows_symmetric(n in 0usize..3000) {
        let (k0, row) = crate::scalar::float_binomial_row(n);
        let total: f64 = row.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-14);
        prop_assert_eq!(k0 + row.len() - 1, n - k0);
    }
}
