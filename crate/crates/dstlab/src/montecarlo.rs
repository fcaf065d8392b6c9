//! Random trees from addressable bit streams, measured and aggregated.
//!
//! Trials are grouped into fixed chunks of [`CHUNK`] consecutive indices. Each
//! chunk is accumulated in index order and the chunk summaries are merged left
//! to right, so the result does not depend on the number of threads.

use std::collections::BTreeMap;

use dstlab_core::moments::Param;
use dstlab_core::trees::{measure, BucketTree, ShapeReport, TreeError};
use rayon::prelude::*;
use serde::Serialize;

pub const CHUNK: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    Shape(Param),
    /// Number of nodes.
    Nodes,
    /// WPL with level-order labels rather than the subtree toll.
    WplLabel,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Shape(p) => p.name(),
            Observable::Nodes => "nodes",
            Observable::WplLabel => "wpl_label",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "nodes" => Some(Observable::Nodes),
            "wpl_label" => Some(Observable::WplLabel),
            _ => Param::from_name(s).map(Observable::Shape),
        }
    }

    /// Whether trees of capacity b define this observable.
    pub fn supports(self, b: u32) -> bool {
        match self {
            Observable::Shape(Param::Ipl | Param::Ppl | Param::Dpl) => b == 1,
            _ => true,
        }
    }

    fn read(self, r: &ShapeReport, m: u32) -> f64 {
        match self {
            Observable::Shape(Param::Ipl | Param::Kpl) => r.kpl as f64,
            Observable::Shape(Param::Npl) => r.npl as f64,
            Observable::Shape(Param::Ppl) => r.ppl.expect("b = 1") as f64,
            Observable::Shape(Param::Leaves) => r.leaf_count as f64,
            Observable::Shape(Param::Dpl) => r.dpl(m).expect("b = 1"),
            // the toll Σ size·log(size)^m is what the moment recurrence tracks
            Observable::Shape(Param::Wpl) => r.wpl_toll(m).expect("m requested"),
            Observable::Nodes => r.node_count as f64,
            Observable::WplLabel => r.wpl(m).expect("m requested"),
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub observables: Vec<Observable>,
    pub b: u32,
    /// Power for DPL and WPL.
    pub m: u32,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Histogram bin width; values v fall in bin ⌊v/width⌋.
    pub hist_width: f64,
}

impl SimConfig {
    pub fn new(observables: Vec<Observable>, b: u32, n: usize, trials: u64, seed: u64) -> Self {
        Self { observables, b, m: 1, n, trials, seed, hist_width: 1.0 }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("{0} is not defined for bucket capacity {1}")]
    Unsupported(&'static str, u32),
    #[error("histogram width must be positive")]
    BadWidth,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Power sums of x − shift. Integer data are summed exactly in i128 while it
/// fits, so merging is then exactly associative.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    count: u64,
    shift: f64,
    float: [f64; 4],
    exact: Option<[i128; 4]>,
}

impl Moments {
    pub fn new(shift: f64) -> Self {
        Self { count: 0, shift, float: [0.0; 4], exact: Some([0; 4]) }
    }

    pub fn push(&mut self, x: f64) {
        let d = x - self.shift;
        self.count += 1;
        let mut p = 1.0;
        for s in self.float.iter_mut() {
            p *= d;
            *s += p;
        }
        self.exact = self.exact.and_then(|mut e| {
            if d.fract() != 0.0 || d.abs() > 1e9 {
                return None;
            }
            let di = d as i128;
            let mut p: i128 = 1;
            for s in e.iter_mut() {
                p = p.checked_mul(di)?;
                *s = s.checked_add(p)?;
            }
            Some(e)
        });
    }

    pub fn merge(&mut self, other: &Moments) {
        assert_eq!(self.shift, other.shift, "summaries with different shifts");
        self.count += other.count;
        for (a, b) in self.float.iter_mut().zip(other.float) {
            *a += b;
        }
        self.exact = match (self.exact, other.exact) {
            (Some(mut a), Some(b)) => (|| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.checked_add(y)?;
                }
                Some(a)
            })(),
            _ => None,
        };
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Raw moments E(d^p) for p = 1..4 of the shifted data.
    fn raw(&self) -> [f64; 4] {
        let n = self.count as f64;
        match self.exact {
            Some(e) => e.map(|s| s as f64 / n),
            None => self.float.map(|s| s / n),
        }
    }

    pub fn mean(&self) -> f64 {
        self.shift + self.raw()[0]
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.count;
        if n < 2 {
            return 0.0;
        }
        if let Some(e) = self.exact {
            if let Some(num) = (n as i128).checked_mul(e[1]).and_then(|a| e[0].checked_mul(e[0]).map(|b| a - b)) {
                return num as f64 / (n as f64 * (n - 1) as f64);
            }
        }
        let r = self.raw();
        ((r[1] - r[0] * r[0]) * n as f64 / (n - 1) as f64).max(0.0)
    }

    fn central(&self) -> (f64, f64, f64) {
        let [m1, m2, m3, m4] = self.raw();
        let c2 = m2 - m1 * m1;
        let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        (c2.max(0.0), c3, c4)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance, √((μ4 − σ⁴)/N).
    pub fn variance_std_error(&self) -> f64 {
        let (c2, _, c4) = self.central();
        ((c4 - c2 * c2).max(0.0) / self.count as f64).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let (c2, c3, _) = self.central();
        if c2 == 0.0 {
            0.0
        } else {
            c3 / c2.powf(1.5)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Tally {
    moments: Moments,
    hist: BTreeMap<i64, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub name: &'static str,
    pub trials: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub variance_std_error: f64,
    pub skewness: f64,
    /// (bin start, count).
    pub histogram: Vec<(f64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub config: SimConfig,
    pub stats: Vec<ObservableSummary>,
    /// Mean number of nodes holding j keys, j = 1..=b.
    pub occupancy: Vec<f64>,
}

impl SimSummary {
    pub fn get(&self, o: Observable) -> Option<&ObservableSummary> {
        self.stats.iter().find(|s| s.name == o.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Partial {
    tallies: Vec<Tally>,
    occupancy: Vec<u64>,
}

impl Partial {
    fn merge(&mut self, other: &Partial) {
        for (a, b) in self.tallies.iter_mut().zip(&other.tallies) {
            a.moments.merge(&b.moments);
            for (k, c) in &b.hist {
                *a.hist.entry(*k).or_insert(0) += c;
            }
        }
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
    }
}

fn powers(cfg: &SimConfig) -> Vec<u32> {
    let needs = cfg
        .observables
        .iter()
        .any(|o| matches!(o, Observable::Shape(Param::Dpl | Param::Wpl) | Observable::WplLabel));
    if needs {
        vec![cfg.m]
    } else {
        Vec::new()
    }
}

fn run_trial(cfg: &SimConfig, t: u64) -> Result<ShapeReport, TreeError> {
    let tree = BucketTree::random(cfg.b, cfg.n, cfg.seed, t)?;
    Ok(measure(&tree, &powers(cfg)))
}

fn run_chunk(cfg: &SimConfig, shifts: &[f64], lo: u64, hi: u64) -> Result<Partial, TreeError> {
    let mut p = Partial {
        tallies: shifts.iter().map(|&s| Tally { moments: Moments::new(s), hist: BTreeMap::new() }).collect(),
        occupancy: vec![0; cfg.b as usize],
    };
    for t in lo..hi {
        let r = run_trial(cfg, t)?;
        for (tally, o) in p.tallies.iter_mut().zip(&cfg.observables) {
            let x = o.read(&r, cfg.m);
            tally.moments.push(x);
            *tally.hist.entry((x / cfg.hist_width + 1e-9).floor() as i64).or_insert(0) += 1;
        }
        for (a, c) in p.occupancy.iter_mut().zip(&r.occupancy) {
            *a += c;
        }
    }
    Ok(p)
}

/// Thread count from `DSTLAB_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("DSTLAB_THREADS").ok()?.trim().parse().ok().filter(|&k| k > 0)
}

/// Runs `f` on a pool capped by `DSTLAB_THREADS`, or on the global pool.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match thread_cap().and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<SimSummary, SimError> {
    if cfg.trials == 0 {
        return Err(SimError::NoTrials);
    }
    if !(cfg.hist_width > 0.0) {
        return Err(SimError::BadWidth);
    }
    if let Some(o) = cfg.observables.iter().find(|o| !o.supports(cfg.b)) {
        return Err(SimError::Unsupported(o.name(), cfg.b));
    }
    // shifting by the first trial keeps the power sums small
    let first = run_trial(cfg, 0)?;
    let shifts: Vec<f64> = cfg.observables.iter().map(|o| o.read(&first, cfg.m).round()).collect();
    let chunks = cfg.trials.div_ceil(CHUNK);
    let parts: Vec<Result<Partial, TreeError>> = with_pool(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| run_chunk(cfg, &shifts, c * CHUNK, ((c + 1) * CHUNK).min(cfg.trials)))
            .collect()
    });
    let mut total: Option<Partial> = None;
    for p in parts {
        let p = p?;
        match total.as_mut() {
            Some(t) => t.merge(&p),
            None => total = Some(p),
        }
    }
    let total = total.expect("at least one chunk");
    Ok(summarize(cfg, total))
}

fn summarize(cfg: &SimConfig, total: Partial) -> SimSummary {
    let stats = cfg
        .observables
        .iter()
        .zip(total.tallies)
        .map(|(o, t)| ObservableSummary {
            name: o.name(),
            trials: t.moments.count(),
            mean: t.moments.mean(),
            variance: t.moments.variance(),
            std_error: t.moments.std_error(),
            variance_std_error: t.moments.variance_std_error(),
            skewness: t.moments.skewness(),
            histogram: t.hist.into_iter().map(|(k, c)| (k as f64 * cfg.hist_width, c)).collect(),
        })
        .collect();
    SimSummary {
        config: cfg.clone(),
        stats,
        occupancy: total.occupancy.iter().map(|&c| c as f64 / cfg.trials as f64).collect(),
    }
}

/// Mean count of j-key nodes divided by n, for j = 1..=b.
pub fn occupancy_study(b: u32, n: usize, trials: u64, seed: u64) -> Result<Vec<f64>, SimError> {
    let s = simulate(&SimConfig::new(vec![Observable::Nodes], b, n, trials, seed))?;
    Ok(s.occupancy.iter().map(|c| c / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_key() {
        let obs = vec![
            Observable::Shape(Param::Ipl),
            Observable::Shape(Param::Ppl),
            Observable::Shape(Param::Dpl),
            Observable::Shape(Param::Leaves),
        ];
        let s = simulate(&SimConfig::new(obs, 1, 1, 50, 3)).unwrap();
        for o in &s.stats[..3] {
            assert_eq!((o.mean, o.variance), (0.0, 0.0));
        }
        assert_eq!((s.stats[3].mean, s.stats[3].variance), (1.0, 0.0));
        assert_eq!(s.occupancy, [1.0]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = SimConfig::new(vec![Observable::Shape(Param::Dpl)], 2, 10, 10, 0);
        assert_eq!(simulate(&c), Err(SimError::Unsupported("dpl", 2)));
        c.b = 1;
        c.trials = 0;
        assert_eq!(simulate(&c), Err(SimError::NoTrials));
        c.trials = 1;
        c.hist_width = 0.0;
        assert_eq!(simulate(&c), Err(SimError::BadWidth));
    }

    #[test]
    fn b1_occupancy_is_one() {
        assert_eq!(occupancy_study(1, 40, 20, 9).unwrap(), [1.0]);
    }

    #[test]
    fn moments_of_a_known_sample() {
        let mut m = Moments::new(3.0);
        for x in [1.0, 2.0, 2.0, 3.0, 7.0] {
            m.push(x);
        }
        assert!(m.is_exact());
        assert_eq!(m.mean(), 3.0);
        assert_eq!(m.variance(), 5.5);
        // central moments 22/5 and 54/5 (population)
        assert!((m.skewness() - 10.8 / 4.4f64.powf(1.5)).abs() < 1e-12);
        let mut f = Moments::new(0.0);
        f.push(0.5);
        f.push(1.5);
        assert!(!f.is_exact());
        assert_eq!(f.variance(), 0.5);
    }

    proptest! {
        #[test]
        fn merging_is_associative(xs in prop::collection::vec(-1000i64..1000, 1..60), cut1 in 0usize..60, cut2 in 0usize..60) {
            let (a, b) = (cut1.min(xs.len()), cut2.min(xs.len()));
            let (lo, hi) = (a.min(b), a.max(b));
            let acc = |s: &[i64]| {
                let mut m = Moments::new(17.0);
                for &x in s {
                    m.push(x as f64);
                }
                m
            };
            let whole = acc(&xs);
            let (p, q, r) = (acc(&xs[..lo]), acc(&xs[lo..hi]), acc(&xs[hi..]));
            let mut left = p.clone();
            left.merge(&q);
            left.merge(&r);
            let mut right = q.clone();
            right.merge(&r);
            let mut right2 = p.clone();
            right2.merge(&right);
            prop_assert_eq!(left.mean(), whole.mean());
            prop_assert_eq!(left.variance(), whole.variance());
            prop_assert_eq!(right2.mean(), whole.mean());
            prop_assert_eq!(right2.variance(), whole.variance());
        }

        #[test]
        fn real_valued_merge_within_rounding(xs in prop::collection::vec(-50.0f64..50.0, 2..60), cut in 0usize..60) {
            let c = cut.min(xs.len());
            let mut a = Moments::new(0.0);
            let mut whole = Moments::new(0.0);
            let mut b = Moments::new(0.0);
            for (i, &x) in xs.iter().enumerate() {
                whole.push(x);
                if i < c { a.push(x) } else { b.push(x) }
            }
            a.merge(&b);
            prop_assert!((a.mean() - whole.mean()).abs() <= 1e-12 * (1.0 + whole.mean().abs()));
            prop_assert!((a.variance() - whole.variance()).abs() <= 1e-12 * (1.0 + whole.variance()));
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = SimConfig {
            m: 2,
            ..SimConfig::new(
                vec![Observable::Shape(Param::Ipl), Observable::Shape(Param::Wpl), Observable::WplLabel],
                1,
                30,
                1500,
                11,
            )
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate(&cfg)).unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| simulate(&cfg)).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.stats[0].trials, 1500);
        assert_eq!(one.stats[0].histogram.iter().map(|h| h.1).sum::<u64>(), 1500);
    }
}
