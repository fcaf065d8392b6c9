//! Actual digital search trees, built key by key, and their shape parameters.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::RandomBits;

/// Source of the bits of one key.
#[derive(Clone, Debug)]
pub enum Key {
    /// A finite string; inserting it fails if it runs out before placement.
    Bits(Vec<bool>),
    Random(RandomBits),
}

impl Key {
    /// Parses a string of '0' and '1'.
    pub fn parse(s: &str) -> Result<Key, TreeError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(TreeError::BadKeyChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Key::Bits)
    }

    pub fn random(seed: u64, trial: u64, index: u64) -> Key {
        Key::Random(RandomBits::new(seed, trial, index))
    }

    pub fn bit(&mut self, i: usize) -> Option<bool> {
        match self {
            Key::Bits(v) => v.get(i).copied(),
            Key::Random(r) => Some(r.bit(i)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// The key's bits ran out at this depth before a free slot was reached.
    Exhausted { key: usize, depth: usize },
    BadKeyChar(char),
    Empty,
    ZeroCapacity,
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::Exhausted { key, depth } => {
                write!(f, "key {key} has no bit left at depth {depth}")
            }
            TreeError::BadKeyChar(c) => write!(f, "keys are strings of 0 and 1, found {c:?}"),
            TreeError::Empty => f.write_str("the tree is empty"),
            TreeError::ZeroCapacity => f.write_str("bucket capacity must be at least 1"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TreeError {}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub keys: u32,
    pub depth: u32,
    pub parent: u32,
    /// Indexed by bit: [0] is the left child.
    pub child: [u32; 2],
}

impl Node {
    pub fn child(&self, bit: usize) -> Option<usize> {
        (self.child[bit] != NONE).then_some(self.child[bit] as usize)
    }

    pub fn parent(&self) -> Option<usize> {
        (self.parent != NONE).then_some(self.parent as usize)
    }

    pub fn is_leaf(&self) -> bool {
        self.child == [NONE, NONE]
    }
}

/// A b-DST. Nodes are stored in creation order, so every child comes after its
/// parent.
#[derive(Debug, Clone)]
pub struct BucketTree {
    b: u32,
    nodes: Vec<Node>,
    /// Node holding the i-th inserted key.
    home: Vec<u32>,
}

impl BucketTree {
    pub fn new(b: u32) -> Result<Self, TreeError> {
        if b == 0 {
            return Err(TreeError::ZeroCapacity);
        }
        Ok(Self { b, nodes: Vec::new(), home: Vec::new() })
    }

    pub fn with_capacity(b: u32, n: usize) -> Result<Self, TreeError> {
        let mut t = Self::new(b)?;
        t.nodes.reserve(n);
        t.home.reserve(n);
        Ok(t)
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.home.len()
    }

    pub fn is_empty(&self) -> bool {
        self.home.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_of_key(&self, key: usize) -> usize {
        self.home[key] as usize
    }

    /// Places `key` in the first non-full node on its bit path and returns
    /// that node. On exhaustion the tree is left unchanged.
    pub fn insert(&mut self, key: &mut Key) -> Result<usize, TreeError> {
        if self.nodes.is_empty() {
            self.nodes.push(Node { keys: 1, depth: 0, parent: NONE, child: [NONE, NONE] });
            self.home.push(0);
            return Ok(0);
        }
        let mut at = 0usize;
        loop {
            if self.nodes[at].keys < self.b {
                self.nodes[at].keys += 1;
                self.home.push(at as u32);
                return Ok(at);
            }
            let depth = self.nodes[at].depth as usize;
            let bit = key
                .bit(depth)
                .ok_or(TreeError::Exhausted { key: self.home.len(), depth })? as usize;
            match self.nodes[at].child(bit) {
                Some(c) => at = c,
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(Node { keys: 1, depth: depth as u32 + 1, parent: at as u32, child: [NONE, NONE] });
                    self.nodes[at].child[bit] = id as u32;
                    self.home.push(id as u32);
                    return Ok(id);
                }
            }
        }
    }

    /// Builds a tree from '0'/'1' strings in order.
    pub fn from_strings<'a, I: IntoIterator<Item = &'a str>>(b: u32, keys: I) -> Result<Self, TreeError> {
        let mut t = Self::new(b)?;
        for s in keys {
            t.insert(&mut Key::parse(s)?)?;
        }
        Ok(t)
    }

    /// n random keys from trial `trial` of the stream `seed`.
    pub fn random(b: u32, n: usize, seed: u64, trial: u64) -> Result<Self, TreeError> {
        let mut t = Self::with_capacity(b, n)?;
        for i in 0..n {
            t.insert(&mut Key::random(seed, trial, i as u64))?;
        }
        Ok(t)
    }

    /// The path of bits from the root to `node`, as a '0'/'1' string.
    pub fn path(&self, node: usize) -> String {
        let mut bits = Vec::new();
        let mut at = node;
        while let Some(p) = self.nodes[at].parent() {
            bits.push(if self.nodes[p].child[1] == at as u32 { '1' } else { '0' });
            at = p;
        }
        bits.iter().rev().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    pub b: u32,
    pub n: usize,
    pub node_count: usize,
    /// Key-wise path length; the internal path length when b = 1.
    pub kpl: u64,
    pub npl: u64,
    pub leaf_count: usize,
    /// b = 1 only.
    pub ppl: Option<u64>,
    /// (m, Σ|left − right|^m), subtree sizes in keys; b = 1 only.
    pub dpl: Vec<(u32, f64)>,
    /// (m, Σ (ln j)^m·depth) with nodes labelled 1, 2, … level by level, left to right.
    pub wpl: Vec<(u32, f64)>,
    /// (m, Σ size·(ln size)^m) over subtree key counts, the toll behind the WPL recurrence.
    pub wpl_toll: Vec<(u32, f64)>,
    /// Nodes per level, from the root.
    pub depth_profile: Vec<u64>,
    /// occupancy[j − 1] = number of nodes holding j keys.
    pub occupancy: Vec<u64>,
}

impl ShapeReport {
    pub fn ipl(&self) -> Option<u64> {
        (self.b == 1).then_some(self.kpl)
    }

    pub fn dpl(&self, m: u32) -> Option<f64> {
        self.dpl.iter().find(|d| d.0 == m).map(|d| d.1)
    }

    pub fn wpl(&self, m: u32) -> Option<f64> {
        self.wpl.iter().find(|d| d.0 == m).map(|d| d.1)
    }

    pub fn wpl_toll(&self, m: u32) -> Option<f64> {
        self.wpl_toll.iter().find(|d| d.0 == m).map(|d| d.1)
    }
}

/// Nodes per level for a tree given by parent links (`None` for the root).
/// Parents must precede their children.
pub fn profile_from_parents(parents: &[Option<usize>]) -> Vec<u64> {
    let mut depth = vec![0usize; parents.len()];
    let mut profile: Vec<u64> = Vec::new();
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            assert!(p < i, "parents must precede children");
            depth[i] = depth[p] + 1;
        }
        if profile.len() <= depth[i] {
            profile.resize(depth[i] + 1, 0);
        }
        profile[depth[i]] += 1;
    }
    profile
}

pub fn measure(tree: &BucketTree, powers: &[u32]) -> ShapeReport {
    let nodes = &tree.nodes;
    let b = tree.b;
    let mut size = vec![0u64; nodes.len()];
    let mut kpl = 0u64;
    let mut npl = 0u64;
    let mut leaves = 0usize;
    let mut ppl = 0u64;
    let mut dpl = vec![0.0f64; powers.len()];
    let mut toll = vec![0.0f64; powers.len()];
    let mut profile: Vec<u64> = Vec::new();
    let mut occupancy = vec![0u64; b as usize];
    // children come after parents, so a reverse scan sees subtrees complete
    for i in (0..nodes.len()).rev() {
        let nd = &nodes[i];
        let [l, r] = nd.child.map(|c| if c == NONE { 0 } else { size[c as usize] });
        size[i] = nd.keys as u64 + l + r;
        kpl += nd.keys as u64 * nd.depth as u64;
        npl += nd.depth as u64;
        occupancy[nd.keys as usize - 1] += 1;
        let d = nd.depth as usize;
        if profile.len() <= d {
            profile.resize(d + 1, 0);
        }
        profile[d] += 1;
        if nd.is_leaf() {
            leaves += 1;
        }
        if b == 1 {
            ppl += size[i] * nd.child.iter().filter(|&&c| c != NONE && nodes[c as usize].is_leaf()).count() as u64;
            let diff = l.abs_diff(r) as f64;
            for (acc, &m) in dpl.iter_mut().zip(powers) {
                *acc += libm::pow(diff, m as f64);
            }
        }
        let s = size[i] as f64;
        let ln = libm::log(s);
        for (acc, &m) in toll.iter_mut().zip(powers) {
            *acc += s * libm::pow(ln, m as f64);
        }
    }
    // labels run level by level, left to right
    let mut wpl = vec![0.0f64; powers.len()];
    if !nodes.is_empty() {
        let mut level = vec![0usize];
        let mut label = 1u64;
        while !level.is_empty() {
            let mut next = Vec::new();
            for &i in &level {
                let w = libm::log(label as f64);
                for (acc, &m) in wpl.iter_mut().zip(powers) {
                    *acc += libm::pow(w, m as f64) * nodes[i].depth as f64;
                }
                label += 1;
                next.extend(nodes[i].child.iter().filter(|&&c| c != NONE).map(|&c| c as usize));
            }
            level = next;
        }
    }
    let zip = |v: Vec<f64>| powers.iter().copied().zip(v).collect::<Vec<_>>();
    ShapeReport {
        b,
        n: tree.len(),
        node_count: nodes.len(),
        kpl,
        npl,
        leaf_count: leaves,
        ppl: (b == 1).then_some(ppl),
        dpl: if b == 1 { zip(dpl) } else { Vec::new() },
        wpl: zip(wpl),
        wpl_toll: zip(toll),
        depth_profile: profile,
        occupancy,
    }
}

/// occupancy[j − 1]/N for j = 1..=b.
pub fn occupancy_fractions(report: &ShapeReport) -> Result<Vec<f64>, TreeError> {
    if report.node_count == 0 {
        return Err(TreeError::Empty);
    }
    let n = report.node_count as f64;
    Ok(report.occupancy.iter().map(|&c| c as f64 / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIG_KEYS: [&str; 9] =
        ["010111", "101011", "100001", "011011", "111110", "110111", "010011", "011110", "000100"];

    #[test]
    fn nine_strings_b1() {
        let t = BucketTree::from_strings(1, FIG_KEYS).unwrap();
        let paths: Vec<String> = (0..9).map(|k| t.path(t.node_of_key(k))).collect();
        assert_eq!(paths, ["", "1", "10", "0", "11", "110", "01", "011", "00"]);
        let r = measure(&t, &[1, 2]);
        assert_eq!(r.ipl(), Some(16));
        assert_eq!(r.leaf_count, 4);
        assert_eq!(r.depth_profile, [1, 2, 4, 2]);
        assert_eq!(r.occupancy, [9]);
        // leaves 100001, 110111, 011110, 000100 hang below subtrees of 4, 2, 2, 4 keys
        assert_eq!(r.ppl, Some(12));
        // |l − r| is 1 at 101011, 011011, 111110, 010011 and 0 elsewhere
        assert_eq!(r.dpl(1), Some(4.0));
        assert_eq!(r.dpl(2), Some(4.0));
    }

    #[test]
    fn nine_strings_b2() {
        let t = BucketTree::from_strings(2, FIG_KEYS).unwrap();
        let r = measure(&t, &[]);
        assert_eq!(r.kpl, 10);
        assert_eq!(r.npl, 8);
        assert_eq!(r.node_count, 6);
        assert_eq!(r.occupancy, [3, 3]);
        assert_eq!(t.path(t.node_of_key(5)), "11");
        assert_eq!(r.ppl, None);
        assert!(r.dpl.is_empty());
    }

    #[test]
    fn example_profile() {
        // the small example tree, given by parent links in level order
        let parents = [None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(3), Some(4), Some(7), Some(7), Some(7)];
        assert_eq!(profile_from_parents(&parents), [1, 2, 3, 2, 3]);
    }

    #[test]
    fn single_node() {
        let mut t = BucketTree::new(1).unwrap();
        t.insert(&mut Key::parse("").unwrap()).unwrap();
        let r = measure(&t, &[1]);
        assert_eq!((r.kpl, r.ppl, r.dpl(1), r.leaf_count), (0, Some(0), Some(0.0), 1));
        assert_eq!(r.depth_profile, [1]);
        assert_eq!(occupancy_fractions(&r).unwrap(), [1.0]);
    }

    #[test]
    fn exhaustion_is_reported() {
        let mut t = BucketTree::from_strings(1, ["0", "1"]).unwrap();
        let e = t.insert(&mut Key::parse("1").unwrap()).unwrap_err();
        assert_eq!(e, TreeError::Exhausted { key: 2, depth: 1 });
        assert_eq!(t.len(), 2);
        assert_eq!(Key::parse("01x").unwrap_err(), TreeError::BadKeyChar('x'));
        assert_eq!(BucketTree::new(0).unwrap_err(), TreeError::ZeroCapacity);
    }

    #[test]
    fn two_keys_in_one_bucket() {
        let t = BucketTree::from_strings(2, ["", ""]).unwrap();
        let r = measure(&t, &[]);
        assert_eq!(r.occupancy, [0, 1]);
        assert!(occupancy_fractions(&measure(&BucketTree::new(2).unwrap(), &[])).is_err());
    }

    #[test]
    fn wpl_labels_level_order() {
        // root, then 0 and 1 at depth 1, then 00 at depth 2: labels 1, 2, 3, 4
        let t = BucketTree::from_strings(1, ["", "1", "0", "00"]).unwrap();
        let r = measure(&t, &[1]);
        let want = libm::log(2.0) + libm::log(3.0) + 2.0 * libm::log(4.0);
        assert!((r.wpl(1).unwrap() - want).abs() < 1e-12);
        // subtree sizes 4, 2, 1, 1
        let toll = 4.0 * libm::log(4.0) + 2.0 * libm::log(2.0);
        assert!((r.wpl_toll(1).unwrap() - toll).abs() < 1e-12);
    }

    fn perfect_keys(levels: u32) -> Vec<String> {
        let mut keys = Vec::new();
        for d in 0..levels {
            for p in 0..(1u32 << d) {
                let mut s: String = (0..d).rev().map(|i| if p >> i & 1 == 1 { '1' } else { '0' }).collect();
                s.push('0');
                keys.push(s);
            }
        }
        keys
    }

    #[test]
    fn balanced_tree_has_zero_dpl() {
        let keys = perfect_keys(5);
        let t = BucketTree::from_strings(1, keys.iter().map(|s| s.as_str())).unwrap();
        let r = measure(&t, &[1, 3]);
        assert_eq!(r.depth_profile, [1, 2, 4, 8, 16]);
        assert_eq!(r.dpl(1), Some(0.0));
        assert_eq!(r.dpl(3), Some(0.0));
    }

    proptest! {
        #[test]
        fn shape_invariants(b in 1u32..4, n in 1usize..300, seed in any::<u64>()) {
            let t = BucketTree::random(b, n, seed, 0).unwrap();
            let r = measure(&t, &[1]);
            prop_assert_eq!(r.depth_profile.iter().sum::<u64>(), r.node_count as u64);
            prop_assert_eq!(r.occupancy.iter().enumerate().map(|(j, c)| (j as u64 + 1) * c).sum::<u64>(), n as u64);
            let by_level: u64 = r.depth_profile.iter().enumerate().map(|(l, c)| l as u64 * c).sum();
            prop_assert_eq!(by_level, r.npl);
            prop_assert!(r.kpl >= r.npl);
            for nd in t.nodes() {
                prop_assert!(nd.is_leaf() || nd.keys == b);
            }
            if b == 1 {
                prop_assert_eq!(r.kpl, r.npl);
                prop_assert_eq!(r.node_count, n);
                let internal = t.nodes().iter().filter(|nd| !nd.is_leaf()).count();
                prop_assert_eq!(r.leaf_count + internal, n);
            }
        }

        #[test]
        fn deterministic_given_seed(n in 1usize..100, seed in any::<u64>(), trial in 0u64..5) {
            let a = measure(&BucketTree::random(1, n, seed, trial).unwrap(), &[1, 2]);
            let b = measure(&BucketTree::random(1, n, seed, trial).unwrap(), &[1, 2]);
            prop_assert_eq!(a, b);
        }
    }
}
