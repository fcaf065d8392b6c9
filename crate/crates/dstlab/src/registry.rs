//! Every asymptotic constant the library computes, with the published value
//! and tolerance where one exists.

use std::f64::consts::PI;

use dstlab_core::asymptotics::{self, ConstantResult};
use dstlab_core::qseries::QContext;
use rayon::prelude::*;
use serde::Serialize;

use crate::montecarlo::with_pool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    B,
    M,
}

type Eval = fn(u32) -> Result<ConstantResult, String>;

#[derive(Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub index: Option<(IndexKind, u32)>,
    pub eval: Eval,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub method: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    pub value: Option<f64>,
    pub est_error: Option<f64>,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub method: String,
    /// None when there is no reference value to compare with.
    pub within_tolerance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    /// True unless a referenced value misses or the evaluation failed.
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.within_tolerance != Some(false)
    }
}

fn closed(v: f64) -> Result<ConstantResult, String> {
    Ok(ConstantResult { value: v, est_error: 4.0 * f64::EPSILON * v.abs(), method: asymptotics::Method::Series })
}

fn s<E: ToString>(r: Result<ConstantResult, E>) -> Result<ConstantResult, String> {
    r.map_err(|e| e.to_string())
}

const C_H: [f64; 5] = [0.26600, 0.13260, 0.09004, 0.06958, 0.05781];
const C10: [f64; 6] = [1.0, 0.57470, 0.40698, 0.31594, 0.25849, 0.21885];

fn entry(name: &'static str, eval: Eval) -> Entry {
    Entry { name, index: None, eval, reference: None, tolerance: None, method: None }
}

impl Entry {
    fn at(self, kind: IndexKind, i: u32) -> Self {
        Self { index: Some((kind, i)), ..self }
    }

    fn anchored(self, reference: f64, tolerance: f64) -> Self {
        Self { reference: Some(reference), tolerance: Some(tolerance), ..self }
    }

    fn closed_form(self) -> Self {
        Self { method: Some("closed-form"), ..self }
    }

    pub fn key(&self) -> String {
        match self.index {
            Some((IndexKind::B, i)) => format!("{}[b={i}]", self.name),
            Some((IndexKind::M, i)) => format!("{}[m={i}]", self.name),
            None => self.name.to_string(),
        }
    }
}

pub fn entries() -> Vec<Entry> {
    use IndexKind::{B, M};
    let mut v = vec![
        entry("q_infinity", |_| closed(QContext::default().q_infinity())).closed_form().anchored(0.28878809, 1e-8),
        entry("ckps", |_| Ok(asymptotics::ckps())).anchored(0.266_003_645_405_936, 1e-8),
    ];
    for b in 1..=5 {
        v.push(entry("c_h", |b| s(asymptotics::c_h(b))).at(B, b).anchored(C_H[b as usize - 1], 5e-4));
    }
    for b in 1..=6 {
        v.push(entry("c10", |b| s(asymptotics::c10(b))).at(B, b).anchored(C10[b as usize - 1], 1e-4));
    }
    for b in 2..=3 {
        v.push(entry("npl_p20_mean", |b| s(asymptotics::npl_p20_mean(b))).at(B, b));
    }
    v.extend([
        entry("c_w", |_| s(asymptotics::c_w())).anchored(1.103_026_695_9, 1e-6),
        entry("ppl_var_mean", |_| s(asymptotics::ppl_var_mean())),
        entry("c_fs", |_| s(asymptotics::c_fs())).anchored(0.372_048_681_2, 1e-6),
        entry("c_kp", |_| s(asymptotics::c_kp())).anchored(0.034_203, 5e-4),
        entry("dpl_mean", |_| {
            let c = asymptotics::dpl_constants(1).map_err(|e| e.to_string())?;
            Ok(c.periodic_mean.expect("m = 1"))
        })
        .anchored(1.339_074_649_4, 1e-6),
        entry("dpl_var_slope", |_| closed(1.0 - 2.0 / PI)).closed_form(),
    ]);
    for m in 3..=6 {
        v.push(
            entry("dpl_mean_coeff", |m| {
                let c = asymptotics::dpl_constants(m).map_err(|e| e.to_string())?;
                closed(c.mean_coeff.expect("m > 2"))
            })
            .at(M, m)
            .closed_form(),
        );
    }
    for m in 2..=6 {
        v.push(
            entry("dpl_var_coeff", |m| {
                let c = asymptotics::dpl_constants(m).map_err(|e| e.to_string())?;
                closed(c.var_coeff.expect("m ≥ 2"))
            })
            .at(M, m)
            .closed_form(),
        );
    }
    v.extend([
        entry("c1", |_| closed(asymptotics::depth_constants().c1)),
        entry("depth_mean", |_| closed(asymptotics::depth_constants().mean)).closed_form(),
        entry("depth_variance", |_| closed(asymptotics::depth_constants().variance)).closed_form(),
    ]);
    for m in 1..=2 {
        v.push(entry("wpl_mean_coeff", |m| closed(asymptotics::wpl_mean_coeff(m))).at(M, m).closed_form());
    }
    v
}

/// Whether `name` passes a comma-separated filter; an item ending in '*' is a
/// prefix.
pub fn matches(filter: &str, name: &str) -> bool {
    filter.split(',').map(str::trim).filter(|f| !f.is_empty()).any(|f| match f.strip_suffix('*') {
        Some(prefix) => name.starts_with(prefix),
        None => name == f,
    })
}

pub fn evaluate(e: &Entry) -> Record {
    let i = e.index.map_or(0, |(_, i)| i);
    let (b, m) = match e.index {
        Some((IndexKind::B, i)) => (Some(i), None),
        Some((IndexKind::M, i)) => (None, Some(i)),
        None => (None, None),
    };
    let mut rec = Record {
        name: e.name,
        b,
        m,
        value: None,
        est_error: None,
        reference: e.reference,
        tolerance: e.tolerance,
        method: e.method.unwrap_or("").to_string(),
        within_tolerance: None,
        error: None,
    };
    match (e.eval)(i) {
        Ok(c) => {
            rec.value = Some(c.value);
            rec.est_error = Some(c.est_error);
            if rec.method.is_empty() {
                rec.method = c.method.tag().to_string();
            }
            if let (Some(r), Some(t)) = (e.reference, e.tolerance) {
                rec.within_tolerance = Some((c.value - r).abs() <= t);
            }
        }
        Err(msg) => rec.error = Some(msg),
    }
    rec
}

/// Evaluates the entries selected by `filter` (all when None), in registry order.
pub fn evaluate_all(filter: Option<&str>) -> Vec<Record> {
    let chosen: Vec<Entry> = entries().into_iter().filter(|e| filter.is_none_or(|f| matches(f, e.name))).collect();
    with_pool(|| chosen.par_iter().map(evaluate).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters() {
        assert!(matches("c_h", "c_h"));
        assert!(!matches("c_h", "c10"));
        assert!(matches("c10, c_w", "c_w"));
        assert!(matches("dpl*", "dpl_var_coeff"));
        assert!(!matches("", "c_h"));
    }

    #[test]
    fn registry_shape() {
        let all = entries();
        assert!(all.len() >= 12);
        assert_eq!(all.iter().filter(|e| e.name == "c_h").count(), 5);
        assert_eq!(all.iter().filter(|e| e.name == "c10").count(), 6);
        let mut keys: Vec<String> = all.iter().map(Entry::key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), all.len());
    }

    #[test]
    fn closed_forms_evaluate() {
        let recs = evaluate_all(Some("depth*,dpl_var_coeff,q_infinity"));
        assert!(recs.iter().all(Record::ok), "{recs:?}");
        let v4 = recs.iter().find(|r| r.name == "dpl_var_coeff" && r.m == Some(2)).unwrap();
        assert!((v4.value.unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(recs.iter().find(|r| r.name == "q_infinity").unwrap().within_tolerance, Some(true));
    }
}
