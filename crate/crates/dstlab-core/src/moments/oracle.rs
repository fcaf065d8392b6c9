//! Exact distributions at small n by convolving subtree distributions.
//!
//! The tolls here are written per node of an actual tree (what the node adds to
//! the parameter given its subtree sizes), not copied from the recurrences.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{MomentError, Param, ParamSpec};
use crate::scalar::{rational_binomial_row, Scalar};

pub const ORACLE_NMAX: usize = 14;

/// A finite law with exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<V> {
    pub probs: BTreeMap<V, BigRational>,
}

impl<V: Scalar + Ord> Pmf<V> {
    pub fn total(&self) -> BigRational {
        self.probs.values().fold(BigRational::zero(), |a, p| a + p)
    }

    pub fn mean(&self) -> V {
        self.probs
            .iter()
            .fold(V::zero(), |a, (x, p)| a + V::from_rational(p) * x.clone())
    }

    pub fn variance(&self) -> V {
        let m = self.mean();
        let s = self
            .probs
            .iter()
            .fold(V::zero(), |a, (x, p)| a + V::from_rational(p) * x.square());
        s - m.square()
    }
}

type Joint<V> = BTreeMap<(i64, V), BigRational>;

fn node_toll<V: Scalar>(spec: &ParamSpec, size: usize, l: usize, r: usize, nl: i64, nr: i64) -> V {
    let b = spec.b as usize;
    match spec.param {
        // every key stored below this node is one level deeper than it would be here
        Param::Ipl | Param::Kpl => V::from_i64((size - b) as i64),
        Param::Npl => V::from_i64(nl + nr),
        Param::Leaves => V::from_i64((l == 0 && r == 0) as i64),
        Param::Ppl => V::from_i64(size as i64 * ((l == 1) as i64 + (r == 1) as i64)),
        Param::Dpl => {
            let d = V::from_i64((l as i64 - r as i64).abs());
            (0..spec.m).fold(V::one(), |p, _| p * d.clone())
        }
        Param::Wpl => {
            let lg = V::ln_int(size as u64).expect("log-capable value type");
            (0..spec.m).fold(V::from_i64(size as i64), |p, _| p * lg.clone())
        }
    }
}

fn joint_laws<V: Scalar + Ord>(spec: ParamSpec, n: usize) -> Result<Vec<Joint<V>>, MomentError> {
    spec.check()?;
    if n > ORACLE_NMAX {
        return Err(MomentError::TooLarge { n, limit: ORACLE_NMAX });
    }
    if spec.param == Param::Wpl && V::ln_int(3).is_none() {
        return Err(MomentError::NeedsLogs);
    }
    let b = spec.b as usize;
    let mut laws: Vec<Joint<V>> = Vec::with_capacity(n + 1);
    for size in 0..=n {
        let mut law = Joint::new();
        if size == 0 {
            law.insert((0, V::zero()), BigRational::one());
        } else if size <= b {
            // a lone node: nothing lies below it
            let x = match spec.param {
                Param::Leaves => V::one(),
                Param::Wpl => node_toll::<V>(&spec, size, 0, 0, 0, 0),
                _ => V::zero(),
            };
            law.insert((1, x), BigRational::one());
        } else {
            let rest = size - b;
            for (k, w) in rational_binomial_row(rest).into_iter().enumerate() {
                let (left, right) = (&laws[k], &laws[rest - k]);
                for ((nl, xl), pl) in left {
                    for ((nr, xr), pr) in right {
                        let t = node_toll::<V>(&spec, size, k, rest - k, *nl, *nr);
                        let key = (nl + nr + 1, xl.clone() + xr.clone() + t);
                        let p = &w * pl * pr;
                        *law.entry(key).or_insert_with(BigRational::zero) += p;
                    }
                }
            }
        }
        laws.push(law);
    }
    Ok(laws)
}

/// The exact law of the parameter at n keys.
pub fn pmf_oracle<V: Scalar + Ord>(spec: ParamSpec, n: usize) -> Result<Pmf<V>, MomentError> {
    let laws = joint_laws::<V>(spec, n)?;
    let mut probs = BTreeMap::new();
    for ((_, x), p) in laws.into_iter().nth(n).expect("built up to n") {
        *probs.entry(x).or_insert_with(BigRational::zero) += p;
    }
    Ok(Pmf { probs })
}

/// The exact joint law of (node count, node-wise path length).
pub fn npl_joint_pmf(b: u32, n: usize) -> Result<BTreeMap<(i64, i64), BigRational>, MomentError> {
    let laws = joint_laws::<BigRational>(ParamSpec::new(Param::Npl).with_b(b), n)?;
    let mut out = BTreeMap::new();
    for ((nodes, x), p) in laws.into_iter().nth(n).expect("built up to n") {
        let x = x.to_integer().to_i64().ok_or(MomentError::TooLarge { n, limit: ORACLE_NMAX })?;
        out.insert((nodes, x), p);
    }
    Ok(out)
}
