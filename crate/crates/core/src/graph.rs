//! Directed sensor topologies and the robustness checks that gate a scenario.
//!
//! An edge `j -> i` means sensor `i` receives the broadcast of sensor `j`, so
//! `j` is an in-neighbor of `i`. Node indices are 0-based.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default bound on `|V \ S|` for exhaustive subset enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Hard ceiling on the enumeration cap (subsets are tracked as `u64` masks).
pub const MAX_ENUMERATION_CAP: usize = 63;

/// An ordered set of node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(BTreeSet<usize>);

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The set `{0, 1, .., n - 1}`.
    pub fn range(n: usize) -> Self {
        (0..n).collect()
    }

    pub fn insert(&mut self, node: usize) -> bool {
        self.0.insert(node)
    }

    pub fn remove(&mut self, node: usize) -> bool {
        self.0.remove(&node)
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.contains(&node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        self.0.intersection(&other.0).copied().collect()
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        self.0.union(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn check_within(&self, node_count: usize) -> Result<()> {
        match self.0.iter().next_back() {
            Some(&node) if node >= node_count => Err(Error::NodeOutOfRange { node, node_count }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = &'a usize;
    type IntoIter = alloc::collections::btree_set::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A static directed graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    node_count: usize,
    // Both lists are kept sorted and deduplicated.
    in_adj: Vec<Vec<usize>>,
    out_adj: Vec<Vec<usize>>,
}

impl Digraph {
    /// Creates an edgeless graph. `node_count` must be positive.
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Infeasible(
                "a digraph needs at least one node".into(),
            ));
        }
        Ok(Digraph {
            node_count,
            in_adj: alloc::vec![Vec::new(); node_count],
            out_adj: alloc::vec![Vec::new(); node_count],
        })
    }

    /// Builds a graph from `(from, to)` pairs. Duplicate pairs collapse into one edge.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(node_count)?;
        for (from, to) in edges {
            g.add_edge(from, to)?;
        }
        Ok(g)
    }

    /// The complete digraph on `node_count` nodes.
    pub fn complete(node_count: usize) -> Result<Self> {
        let pairs = (0..node_count)
            .flat_map(|j| (0..node_count).map(move |i| (j, i)))
            .filter(|(j, i)| j != i);
        Self::from_edges(node_count, pairs)
    }

    /// Adds `from -> to`. Returns `false` if the edge was already present.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<bool> {
        self.check_node(from)?;
        self.check_node(to)?;
        if from == to {
            return Err(Error::SelfLoop(from));
        }
        match self.in_adj[to].binary_search(&from) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.in_adj[to].insert(pos, from);
                let out = &mut self.out_adj[from];
                let pos = out.binary_search(&to).unwrap_err();
                out.insert(pos, to);
                Ok(true)
            }
        }
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        to < self.node_count && self.in_adj[to].binary_search(&from).is_ok()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.in_adj.iter().map(Vec::len).sum()
    }

    /// All edges as `(from, to)`, ordered by `from` then `to`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(from, outs)| outs.iter().map(move |&to| (from, to)))
    }

    /// Sorted in-neighbors of `i`; panics on an invalid index.
    pub fn in_neighbor_slice(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    /// Sorted out-neighbors of `i`; panics on an invalid index.
    pub fn out_neighbor_slice(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    pub fn in_neighbors(&self, i: usize) -> Result<NodeSet> {
        self.check_node(i)?;
        Ok(self.in_adj[i].iter().copied().collect())
    }

    pub fn out_neighbors(&self, i: usize) -> Result<NodeSet> {
        self.check_node(i)?;
        Ok(self.out_adj[i].iter().copied().collect())
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    pub fn max_in_degree(&self) -> usize {
        self.in_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn nodes(&self) -> NodeSet {
        NodeSet::range(self.node_count)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.node_count {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node,
                node_count: self.node_count,
            })
        }
    }
}

/// True iff some `i` in `s` has at least `r` in-neighbors outside `s`.
pub fn is_r_reachable(g: &Digraph, s: &NodeSet, r: usize) -> Result<bool> {
    if s.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    s.check_within(g.node_count())?;
    Ok(s.iter().any(|i| {
        g.in_neighbor_slice(i)
            .iter()
            .filter(|&&j| !s.contains(j))
            .count()
            >= r
    }))
}

/// Strong `r`-robustness w.r.t. `s` using [`DEFAULT_ENUMERATION_CAP`].
pub fn is_strongly_r_robust_wrt(g: &Digraph, s: &NodeSet, r: usize) -> Result<bool> {
    robustness_witness(g, s, r, DEFAULT_ENUMERATION_CAP).map(|w| w.is_none())
}

/// Searches for a nonempty subset of `V \ s` that is not `r`-reachable.
///
/// Returns `Ok(None)` when the graph is strongly `r`-robust w.r.t. `s`
/// (vacuously so when `s` covers every node). Enumeration is exhaustive over
/// the `2^|V \ s| - 1` candidate subsets and refuses to start when
/// `|V \ s| > cap`.
pub fn robustness_witness(
    g: &Digraph,
    s: &NodeSet,
    r: usize,
    cap: usize,
) -> Result<Option<NodeSet>> {
    if s.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    s.check_within(g.node_count())?;
    let outside: Vec<usize> = (0..g.node_count()).filter(|&i| !s.contains(i)).collect();
    let m = outside.len();
    if m > cap.min(MAX_ENUMERATION_CAP) {
        return Err(Error::EnumerationCap { outside: m, cap });
    }
    if m == 0 || r == 0 {
        return Ok(None);
    }

    // For each outside node: its in-degree and the mask (over `outside`
    // positions) of its in-neighbors that are themselves outside `s`.
    let mut position = alloc::vec![usize::MAX; g.node_count()];
    for (p, &v) in outside.iter().enumerate() {
        position[v] = p;
    }
    let profile: Vec<(usize, u64)> = outside
        .iter()
        .map(|&v| {
            let mask = g
                .in_neighbor_slice(v)
                .iter()
                .filter(|&&j| position[j] != usize::MAX)
                .fold(0u64, |acc, &j| acc | (1u64 << position[j]));
            (g.in_degree(v), mask)
        })
        .collect();

    let full: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut subset: u64 = 1;
    loop {
        let reachable = BitIter(subset).any(|p| {
            let (degree, mask) = profile[p];
            degree - (mask & subset).count_ones() as usize >= r
        });
        if !reachable {
            return Ok(Some(BitIter(subset).map(|p| outside[p]).collect()));
        }
        if subset == full {
            return Ok(None);
        }
        subset += 1;
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let p = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(p)
    }
}

/// Checks the f-local attack model: every normal node hears at most `f` faulty nodes.
///
/// `faulty` and `normal` must partition the node set.
pub fn is_f_local_admissible(
    g: &Digraph,
    faulty: &NodeSet,
    normal: &NodeSet,
    f: usize,
) -> Result<bool> {
    faulty.check_within(g.node_count())?;
    normal.check_within(g.node_count())?;
    if !faulty.is_disjoint(normal) {
        return Err(Error::InvalidPartition(format!(
            "nodes {:?} are both faulty and normal",
            faulty.intersection(normal).to_vec()
        )));
    }
    if faulty.len() + normal.len() != g.node_count() {
        return Err(Error::InvalidPartition(format!(
            "{} faulty + {} normal nodes do not cover {} nodes",
            faulty.len(),
            normal.len(),
            g.node_count()
        )));
    }
    Ok(f_local_violations(g, faulty, f).is_empty())
}

/// Normal nodes (those outside `faulty`) with more than `f` faulty in-neighbors.
pub fn f_local_violations(g: &Digraph, faulty: &NodeSet, f: usize) -> Vec<usize> {
    (0..g.node_count())
        .filter(|&i| !faulty.contains(i))
        .filter(|&i| {
            g.in_neighbor_slice(i)
                .iter()
                .filter(|&&j| faulty.contains(j))
                .count()
                > f
        })
        .collect()
}

/// Generates a digraph that is strongly `r`-robust w.r.t. `S = {0, .., s_size - 1}`.
pub fn generate_robust_topology(n: usize, s_size: usize, r: usize, seed: u64) -> Result<Digraph> {
    if s_size > n {
        return Err(Error::Infeasible(format!("s_size {s_size} exceeds n {n}")));
    }
    TopologyGenerator::new(n, NodeSet::range(s_size), r)
        .seed(seed)
        .generate()
}

/// Randomized construction of strongly robust topologies.
///
/// Nodes outside `S` are visited in a shuffled order and each draws `r`
/// in-neighbors from `S` plus the outside nodes visited before it. For any
/// subset `S'` of `V \ S`, its earliest-visited member then has all `r`
/// in-neighbors outside `S'`. Extra edges are sprinkled on top; adding edges
/// never breaks robustness. The result is re-verified by [`robustness_witness`].
#[derive(Debug, Clone)]
pub struct TopologyGenerator {
    n: usize,
    s: NodeSet,
    r: usize,
    seed: u64,
    extra_edge_probability: f64,
    f_local: Option<(NodeSet, usize)>,
    max_attempts: usize,
    cap: usize,
}

impl TopologyGenerator {
    pub fn new(n: usize, s: NodeSet, r: usize) -> Self {
        TopologyGenerator {
            n,
            s,
            r,
            seed: 0,
            extra_edge_probability: 0.15,
            f_local: None,
            max_attempts: 64,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn extra_edge_probability(mut self, p: f64) -> Self {
        self.extra_edge_probability = p;
        self
    }

    /// Keep the result admissible under an `f`-local attack by `faulty`.
    pub fn f_local(mut self, faulty: NodeSet, f: usize) -> Self {
        self.f_local = Some((faulty, f));
        self
    }

    pub fn max_attempts(mut self, attempts: usize) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }

    pub fn enumeration_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn generate(&self) -> Result<Digraph> {
        self.check_feasible()?;
        for attempt in 0..self.max_attempts {
            let mixed = self
                .seed
                .wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(mixed);
            let Some(g) = self.build(&mut rng)? else {
                continue;
            };
            if robustness_witness(&g, &self.s, self.r, self.cap)?.is_none() {
                return Ok(g);
            }
        }
        Err(Error::GenerationFailed {
            attempts: self.max_attempts,
        })
    }

    fn check_feasible(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Infeasible("n must be positive".into()));
        }
        if self.s.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        self.s.check_within(self.n)?;
        if !(0.0..=1.0).contains(&self.extra_edge_probability) {
            return Err(Error::Infeasible(format!(
                "extra edge probability {} is not in [0, 1]",
                self.extra_edge_probability
            )));
        }
        if let Some((faulty, _)) = &self.f_local {
            faulty.check_within(self.n)?;
        }
        let outside = self.n - self.s.len();
        if outside > 0 && self.r > 0 {
            if self.r > self.n - 1 {
                return Err(Error::Infeasible(format!(
                    "r = {} exceeds n - 1 = {}",
                    self.r,
                    self.n - 1
                )));
            }
            if self.r > self.s.len() {
                return Err(Error::Infeasible(format!(
                    "r = {} exceeds |S| = {}, so V \\ S cannot be r-reachable",
                    self.r,
                    self.s.len()
                )));
            }
        }
        Ok(())
    }

    fn is_faulty(&self, v: usize) -> bool {
        self.f_local
            .as_ref()
            .is_some_and(|(faulty, _)| faulty.contains(v))
    }

    // Room for one more faulty in-neighbor at `to`?
    fn accepts_faulty(&self, g: &Digraph, to: usize) -> bool {
        match &self.f_local {
            Some((faulty, f)) if !faulty.contains(to) => {
                g.in_neighbor_slice(to)
                    .iter()
                    .filter(|&&j| faulty.contains(j))
                    .count()
                    < *f
            }
            _ => true,
        }
    }

    fn build(&self, rng: &mut ChaCha8Rng) -> Result<Option<Digraph>> {
        let mut g = Digraph::new(self.n)?;
        let mut order: Vec<usize> = (0..self.n).filter(|&v| !self.s.contains(v)).collect();
        order.shuffle(rng);

        let mut pool: Vec<usize> = self.s.to_vec();
        for &v in &order {
            let mut candidates = pool.clone();
            candidates.shuffle(rng);
            let mut chosen = 0;
            for &j in &candidates {
                if chosen == self.r {
                    break;
                }
                if self.is_faulty(j) && !self.accepts_faulty(&g, v) {
                    continue;
                }
                g.add_edge(j, v)?;
                chosen += 1;
            }
            if chosen < self.r {
                return Ok(None);
            }
            pool.push(v);
        }

        for to in 0..self.n {
            for from in 0..self.n {
                if from == to || g.has_edge(from, to) {
                    continue;
                }
                if !rng.gen_bool(self.extra_edge_probability) {
                    continue;
                }
                if self.is_faulty(from) && !self.accepts_faulty(&g, to) {
                    continue;
                }
                g.add_edge(from, to)?;
            }
        }
        Ok(Some(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set(nodes: &[usize]) -> NodeSet {
        nodes.iter().copied().collect()
    }

    // Independent oracle: plain loops over every subset, no bit tricks shared
    // with the implementation.
    pub(crate) fn naive_robust(g: &Digraph, s: &NodeSet, r: usize) -> bool {
        let outside: Vec<usize> = (0..g.node_count()).filter(|v| !s.contains(*v)).collect();
        let m = outside.len();
        for code in 1..(1usize << m) {
            let mut members = Vec::new();
            for (bit, &v) in outside.iter().enumerate() {
                if (code >> bit) & 1 == 1 {
                    members.push(v);
                }
            }
            let mut reachable = false;
            for &i in &members {
                let mut count = 0;
                for j in 0..g.node_count() {
                    if g.has_edge(j, i) && !members.contains(&j) {
                        count += 1;
                    }
                }
                if count >= r {
                    reachable = true;
                }
            }
            if !reachable {
                return false;
            }
        }
        true
    }

    #[test]
    fn in_neighbors_of_single_edge() {
        let g = Digraph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(g.in_neighbors(1).unwrap(), set(&[0]));
        assert_eq!(g.in_neighbors(0).unwrap(), set(&[]));
        assert_eq!(g.out_neighbors(0).unwrap(), set(&[1]));
    }

    #[test]
    fn in_neighbors_of_complete_graph() {
        let g = Digraph::complete(4).unwrap();
        assert_eq!(g.in_neighbors(2).unwrap(), set(&[0, 1, 3]));
        assert_eq!(g.edge_count(), 12);
    }

    #[test]
    fn in_neighbors_rejects_bad_index() {
        let g = Digraph::new(2).unwrap();
        assert_eq!(
            g.in_neighbors(2),
            Err(Error::NodeOutOfRange {
                node: 2,
                node_count: 2
            })
        );
    }

    #[test]
    fn self_loops_and_bad_endpoints_rejected() {
        let mut g = Digraph::new(3).unwrap();
        assert_eq!(g.add_edge(1, 1), Err(Error::SelfLoop(1)));
        assert!(g.add_edge(0, 3).is_err());
        assert!(g.add_edge(0, 1).unwrap());
        assert!(!g.add_edge(0, 1).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert!(Digraph::new(0).is_err());
    }

    #[test]
    fn r_reachability() {
        let g = Digraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        assert!(is_r_reachable(&g, &set(&[2]), 0).unwrap());
        assert!(is_r_reachable(&g, &set(&[0]), 0).unwrap());
        assert!(is_r_reachable(&g, &set(&[2]), 2).unwrap());
        assert!(!is_r_reachable(&g, &set(&[2]), 3).unwrap());
        assert_eq!(is_r_reachable(&g, &set(&[]), 1), Err(Error::EmptyNodeSet));
    }

    #[test]
    fn robustness_is_vacuous_when_s_covers_everything() {
        let g = Digraph::new(4).unwrap();
        assert!(is_strongly_r_robust_wrt(&g, &NodeSet::range(4), 9).unwrap());
    }

    #[test]
    fn node_with_few_in_neighbors_breaks_robustness() {
        // f = 1: node 4 sits outside S with only 3f = 3 in-neighbors.
        let f = 1;
        let g = Digraph::from_edges(5, [(0, 4), (1, 4), (2, 4)]).unwrap();
        let s = set(&[0, 1, 2, 3]);
        assert!(!is_strongly_r_robust_wrt(&g, &s, 3 * f + 1).unwrap());
        assert_eq!(robustness_witness(&g, &s, 4, 20).unwrap(), Some(set(&[4])));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = Digraph::new(6).unwrap();
        let s = set(&[0]);
        assert_eq!(
            robustness_witness(&g, &s, 1, 4),
            Err(Error::EnumerationCap { outside: 5, cap: 4 })
        );
        assert!(robustness_witness(&g, &s, 1, 5).unwrap().is_some());
    }

    #[test]
    fn f_local_admissibility() {
        let g = Digraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        assert!(is_f_local_admissible(&g, &set(&[]), &set(&[0, 1, 2]), 0).unwrap());
        assert!(!is_f_local_admissible(&g, &set(&[0, 1]), &set(&[2]), 1).unwrap());
        assert!(is_f_local_admissible(&g, &set(&[0, 1]), &set(&[2]), 2).unwrap());
        assert!(is_f_local_admissible(&g, &set(&[0]), &set(&[0, 1, 2]), 1).is_err());
        assert!(is_f_local_admissible(&g, &set(&[0]), &set(&[1]), 1).is_err());
    }

    #[test]
    fn generator_examples() {
        let g = generate_robust_topology(8, 4, 4, 7).unwrap();
        assert!(is_strongly_r_robust_wrt(&g, &NodeSet::range(4), 4).unwrap());
        assert!(naive_robust(&g, &NodeSet::range(4), 4));

        let single = generate_robust_topology(1, 1, 0, 0).unwrap();
        assert_eq!(single.node_count(), 1);
        assert_eq!(single.edge_count(), 0);

        assert!(matches!(
            generate_robust_topology(5, 1, 5, 0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            generate_robust_topology(5, 2, 3, 0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_robust_topology(9, 4, 3, 11).unwrap();
        let b = generate_robust_topology(9, 4, 3, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_respects_f_local_constraint() {
        let faulty = set(&[0, 4]);
        for seed in 0..20 {
            let g = TopologyGenerator::new(8, NodeSet::range(4), 4)
                .seed(seed)
                .extra_edge_probability(0.3)
                .f_local(faulty.clone(), 1)
                .generate()
                .unwrap();
            assert!(f_local_violations(&g, &faulty, 1).is_empty());
            assert!(naive_robust(&g, &NodeSet::range(4), 4));
        }
    }

    #[test]
    fn robustness_implies_membership_consequences() {
        let f = 1;
        let r = 3 * f + 1;
        for seed in 0..30 {
            let g = generate_robust_topology(9, 5, r, seed).unwrap();
            let s = NodeSet::range(5);
            assert!(is_strongly_r_robust_wrt(&g, &s, r).unwrap());
            assert!(s.len() >= r);
            for i in 5..9 {
                assert!(g.in_degree(i) >= r);
            }
        }
    }

    #[test]
    fn edges_listing_is_sorted() {
        let g = Digraph::from_edges(3, [(2, 0), (0, 2), (0, 1)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (2, 0)]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = (Digraph, NodeSet)> {
            (2usize..=8).prop_flat_map(|n| {
                (
                    proptest::collection::vec(any::<bool>(), n * n),
                    proptest::collection::vec(any::<bool>(), n),
                )
                    .prop_map(move |(adj, in_s)| {
                        let mut g = Digraph::new(n).unwrap();
                        for j in 0..n {
                            for i in 0..n {
                                if i != j && adj[j * n + i] {
                                    g.add_edge(j, i).unwrap();
                                }
                            }
                        }
                        let mut s: NodeSet = (0..n).filter(|&v| in_s[v]).collect();
                        if s.is_empty() {
                            s.insert(0);
                        }
                        (g, s)
                    })
            })
        }

        proptest! {
            #[test]
            fn agrees_with_naive_oracle((g, s) in arb_graph(), r in 0usize..=5) {
                prop_assert_eq!(
                    is_strongly_r_robust_wrt(&g, &s, r).unwrap(),
                    naive_robust(&g, &s, r)
                );
            }

            #[test]
            fn monotone_in_r((g, s) in arb_graph(), r in 1usize..=5) {
                if is_strongly_r_robust_wrt(&g, &s, r).unwrap() {
                    for smaller in 0..r {
                        prop_assert!(is_strongly_r_robust_wrt(&g, &s, smaller).unwrap());
                    }
                }
            }

            #[test]
            fn monotone_in_edges((g, s) in arb_graph(), r in 0usize..=4, from in 0usize..8, to in 0usize..8) {
                let before = is_strongly_r_robust_wrt(&g, &s, r).unwrap();
                let mut h = g.clone();
                let n = h.node_count();
                if from % n != to % n {
                    h.add_edge(from % n, to % n).unwrap();
                }
                if before {
                    prop_assert!(is_strongly_r_robust_wrt(&h, &s, r).unwrap());
                }
            }

            #[test]
            fn witness_is_not_reachable((g, s) in arb_graph(), r in 1usize..=5) {
                if let Some(w) = robustness_witness(&g, &s, r, DEFAULT_ENUMERATION_CAP).unwrap() {
                    prop_assert!(!w.is_empty());
                    prop_assert!(w.is_disjoint(&s));
                    prop_assert!(!is_r_reachable(&g, &w, r).unwrap());
                }
            }
        }
    }
}
