//! Clusters (multisets of Hamiltonian terms), their enumeration, and their
//! partitions into connected subclusters.

use crate::graphs::{InteractionGraph, SimpleGraph};
use crate::linalg::factorial_u128;
use crate::{Error, Result};

/// A nonempty multiset of term indices, stored as `(term, multiplicity)`
/// pairs sorted by term index. The derived ordering is the canonical order
/// used for every deterministic reduction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cluster {
    parts: Vec<(usize, usize)>,
}

impl Cluster {
    /// Merges repeated indices and drops zero multiplicities.
    pub fn new(parts: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut parts: Vec<(usize, usize)> = parts.into_iter().filter(|&(_, k)| k > 0).collect();
        parts.sort_unstable();
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(parts.len());
        for (x, k) in parts {
            match merged.last_mut() {
                Some((y, acc)) if *y == x => *acc += k,
                _ => merged.push((x, k)),
            }
        }
        Cluster { parts: merged }
    }

    pub fn from_units(units: &[usize]) -> Self {
        Self::new(units.iter().map(|&x| (x, 1)))
    }

    pub fn single(x: usize) -> Self {
        Cluster {
            parts: vec![(x, 1)],
        }
    }

    pub fn parts(&self) -> &[(usize, usize)] {
        &self.parts
    }

    pub fn terms(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts.iter().map(|&(x, _)| x)
    }

    /// Each term repeated by its multiplicity, ascending.
    pub fn units(&self) -> Vec<usize> {
        self.parts
            .iter()
            .flat_map(|&(x, k)| std::iter::repeat_n(x, k))
            .collect()
    }

    /// `m = |W|`.
    pub fn size(&self) -> usize {
        self.parts.iter().map(|&(_, k)| k).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.parts.len()
    }

    pub fn multiplicity(&self, x: usize) -> usize {
        self.parts
            .binary_search_by_key(&x, |&(y, _)| y)
            .map(|i| self.parts[i].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, x: usize) -> bool {
        self.multiplicity(x) > 0
    }

    /// `W! = Π_X μ_W(X)!`.
    pub fn factorial(&self) -> u128 {
        self.parts.iter().map(|&(_, k)| factorial_u128(k)).product()
    }

    /// `λ^W = Π_X λ_X^{μ_W(X)}`.
    pub fn lambda_power(&self, coefficients: &[f64]) -> f64 {
        self.parts
            .iter()
            .map(|&(x, k)| coefficients[x].powi(k as i32))
            .product()
    }

    pub fn with_added(&self, x: usize) -> Cluster {
        let mut parts = self.parts.clone();
        match parts.binary_search_by_key(&x, |&(y, _)| y) {
            Ok(i) => parts[i].1 += 1,
            Err(i) => parts.insert(i, (x, 1)),
        }
        Cluster { parts }
    }

    /// One copy of `x` removed; `None` if `x` is absent.
    pub fn with_removed(&self, x: usize) -> Option<Cluster> {
        let i = self.parts.binary_search_by_key(&x, |&(y, _)| y).ok()?;
        let mut parts = self.parts.clone();
        if parts[i].1 == 1 {
            parts.remove(i);
        } else {
            parts[i].1 -= 1;
        }
        Some(Cluster { parts })
    }

    /// Multiset union (multiplicities add).
    pub fn union(&self, other: &Cluster) -> Cluster {
        Cluster::new(self.parts.iter().chain(other.parts.iter()).copied())
    }

    /// `self − other`, if `other` is a sub-multiset.
    pub fn difference(&self, other: &Cluster) -> Option<Cluster> {
        let mut out = Vec::with_capacity(self.parts.len());
        for &(x, k) in &self.parts {
            let j = other.multiplicity(x);
            if j > k {
                return None;
            }
            out.push((x, k - j));
        }
        if other.parts.iter().any(|&(x, _)| !self.contains(x)) {
            return None;
        }
        Some(Cluster::new(out))
    }

    /// All sub-multisets, including the empty one and `self`.
    pub fn sub_multisets(&self) -> Vec<Cluster> {
        let mut out = vec![Vec::new()];
        for &(x, k) in &self.parts {
            let mut next = Vec::with_capacity(out.len() * (k + 1));
            for prefix in &out {
                for j in 0..=k {
                    let mut p: Vec<(usize, usize)> = prefix.clone();
                    if j > 0 {
                        p.push((x, j));
                    }
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(|parts| Cluster { parts }).collect()
    }

    /// Connectivity of the cluster graph. Copies of one term are mutually
    /// adjacent, so this only depends on the distinct terms.
    pub fn is_connected(&self, g: &InteractionGraph) -> bool {
        let terms: Vec<usize> = self.terms().collect();
        connected_term_set(&terms, g)
    }

    /// Whether the cluster graph of `W ∪ {a}` is connected.
    pub fn is_connected_to(&self, a: usize, g: &InteractionGraph) -> bool {
        let mut terms: Vec<usize> = self.terms().collect();
        if !terms.contains(&a) {
            terms.push(a);
        }
        connected_term_set(&terms, g)
    }

    /// Sorted union of the supports of the terms.
    pub fn support(&self, g: &InteractionGraph) -> Vec<usize> {
        let mut sites: Vec<usize> = self
            .terms()
            .flat_map(|x| g.support(x).iter().copied())
            .collect();
        sites.sort_unstable();
        sites.dedup();
        sites
    }

    /// Some term of `self` overlaps some term of `other`.
    pub fn overlaps(&self, other: &Cluster, g: &InteractionGraph) -> bool {
        self.terms()
            .any(|x| other.terms().any(|y| g.overlaps(x, y)))
    }

    /// Split into maximal connected sub-multisets.
    pub fn components(&self, g: &InteractionGraph) -> Vec<Cluster> {
        let mut remaining: Vec<(usize, usize)> = self.parts.clone();
        let mut out = Vec::new();
        while let Some(first) = remaining.pop() {
            let mut comp = vec![first];
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i].0;
                let mut j = 0;
                while j < remaining.len() {
                    if g.overlaps(x, remaining[j].0) {
                        comp.push(remaining.swap_remove(j));
                    } else {
                        j += 1;
                    }
                }
                i += 1;
            }
            out.push(Cluster::new(comp));
        }
        out.sort();
        out
    }
}

fn connected_term_set(terms: &[usize], g: &InteractionGraph) -> bool {
    if terms.is_empty() {
        return false;
    }
    let mut seen = vec![false; terms.len()];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..terms.len() {
            if !seen[j] && g.overlaps(terms[i], terms[j]) {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == terms.len()
}

/// Graph with one vertex per multiplicity unit (units in ascending term order).
pub fn cluster_graph(w: &Cluster, g: &InteractionGraph) -> SimpleGraph {
    let units = w.units();
    let mut edges = Vec::new();
    for a in 0..units.len() {
        for b in a + 1..units.len() {
            if g.overlaps(units[a], units[b]) {
                edges.push((a, b));
            }
        }
    }
    SimpleGraph::from_edges(units.len(), edges)
}

/// Every connected vertex set of size ≤ `max` that contains `root` and uses
/// only vertices accepted by `allowed`, each reported once.
fn connected_sets<F: Fn(usize) -> bool>(
    g: &InteractionGraph,
    root: usize,
    max: usize,
    allowed: F,
) -> Vec<Vec<usize>> {
    fn rec<F: Fn(usize) -> bool>(
        g: &InteractionGraph,
        cur: &mut Vec<usize>,
        mut ext: Vec<usize>,
        blocked: &mut Vec<bool>,
        max: usize,
        allowed: &F,
        out: &mut Vec<Vec<usize>>,
    ) {
        out.push(cur.clone());
        if cur.len() == max {
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            let mut added = Vec::new();
            for &u in g.neighbors(w) {
                if !blocked[u] && allowed(u) {
                    blocked[u] = true;
                    added.push(u);
                    next.push(u);
                }
            }
            cur.push(w);
            rec(g, cur, next, blocked, max, allowed, out);
            cur.pop();
            for u in added {
                blocked[u] = false;
            }
        }
    }

    let mut out = Vec::new();
    if max == 0 || !allowed(root) {
        return out;
    }
    let mut blocked = vec![false; g.len()];
    blocked[root] = true;
    let mut ext = Vec::new();
    for &u in g.neighbors(root) {
        if allowed(u) {
            blocked[u] = true;
            ext.push(u);
        }
    }
    rec(g, &mut vec![root], ext, &mut blocked, max, &allowed, &mut out);
    for set in &mut out {
        set.sort_unstable();
    }
    out
}

/// All ways to write `m` as an ordered sum of `parts` positive integers.
pub(crate) fn compositions(m: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(m);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 1..=m - (parts - 1) {
            cur.push(first);
            rec(m - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 || parts > m {
        return out;
    }
    rec(m, parts, &mut Vec::new(), &mut out);
    out
}

fn clusters_on_set(set: &[usize], m: usize, out: &mut Vec<Cluster>) {
    for comp in compositions(m, set.len()) {
        out.push(Cluster {
            parts: set.iter().copied().zip(comp).collect(),
        });
    }
}

/// Connected clusters of size `m` containing `root`, in canonical order.
pub fn enumerate_connected_clusters(
    g: &InteractionGraph,
    root: usize,
    m: usize,
) -> Result<Vec<Cluster>> {
    if m == 0 {
        return Err(Error::SizeZero);
    }
    let mut out = Vec::new();
    for set in connected_sets(g, root, m, |_| true) {
        clusters_on_set(&set, m, &mut out);
    }
    out.sort_unstable();
    Ok(out)
}

/// All connected clusters of size `m` over the terms accepted by `allowed`,
/// in canonical order. Each cluster is generated from its smallest term only.
pub fn enumerate_all_connected_clusters_where<F: Fn(usize) -> bool + Copy>(
    g: &InteractionGraph,
    m: usize,
    allowed: F,
) -> Result<Vec<Cluster>> {
    if m == 0 {
        return Err(Error::SizeZero);
    }
    let mut out = Vec::new();
    for root in 0..g.len() {
        for set in connected_sets(g, root, m, |u| u >= root && allowed(u)) {
            clusters_on_set(&set, m, &mut out);
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub fn enumerate_all_connected_clusters(g: &InteractionGraph, m: usize) -> Result<Vec<Cluster>> {
    enumerate_all_connected_clusters_where(g, m, |_| true)
}

/// Clusters `W` of size `m` with `W ∪ {a}` connected, in canonical order.
///
/// Equivalent to taking every connected cluster of size `m + 1` that
/// contains `a` and removing one copy of `a`.
pub fn enumerate_clusters_connected_to_a(
    g: &InteractionGraph,
    a: usize,
    m: usize,
) -> Result<Vec<Cluster>> {
    if m == 0 {
        return Err(Error::SizeZero);
    }
    let mut out = Vec::new();
    for set in connected_sets(g, a, m + 1, |_| true) {
        if set.len() <= m {
            clusters_on_set(&set, m, &mut out);
        }
        let rest: Vec<usize> = set.iter().copied().filter(|&x| x != a).collect();
        if !rest.is_empty() {
            clusters_on_set(&rest, m, &mut out);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// A multiset of connected subclusters, parts in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<Cluster>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionFactors {
    pub w_factorial: u128,
    pub p_factorial: u128,
    /// `N_P(W) = W! / (P! Π_V V!)`.
    pub n_p: u128,
}

impl Partition {
    pub fn new(mut parts: Vec<Cluster>) -> Self {
        parts.sort();
        Partition { parts }
    }

    pub fn parts(&self) -> &[Cluster] {
        &self.parts
    }

    /// `|P|`, counting repeated parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Distinct parts with their multiplicities `μ̃_P`.
    pub fn distinct(&self) -> Vec<(&Cluster, usize)> {
        let mut out: Vec<(&Cluster, usize)> = Vec::new();
        for part in &self.parts {
            match out.last_mut() {
                Some((p, k)) if *p == part => *k += 1,
                _ => out.push((part, 1)),
            }
        }
        out
    }

    /// `P! = Π_V μ̃_P(V)!`.
    pub fn factorial(&self) -> u128 {
        self.distinct()
            .iter()
            .map(|&(_, k)| factorial_u128(k))
            .product()
    }

    pub fn union(&self) -> Cluster {
        self.parts
            .iter()
            .fold(Cluster::new([]), |acc, p| acc.union(p))
    }

    /// One vertex per part; parts adjacent iff they overlap.
    pub fn partition_graph(&self, g: &InteractionGraph) -> SimpleGraph {
        let k = self.parts.len();
        let mut edges = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                if self.parts[a].overlaps(&self.parts[b], g) {
                    edges.push((a, b));
                }
            }
        }
        SimpleGraph::from_edges(k, edges)
    }

    pub(crate) fn partition_graph_masks(&self, g: &InteractionGraph) -> Vec<u32> {
        let k = self.parts.len();
        let mut masks = vec![0u32; k];
        for a in 0..k {
            for b in a + 1..k {
                if self.parts[a].overlaps(&self.parts[b], g) {
                    masks[a] |= 1 << b;
                    masks[b] |= 1 << a;
                }
            }
        }
        masks
    }
}

pub fn partition_factors(w: &Cluster, p: &Partition) -> Result<PartitionFactors> {
    if p.is_empty() || p.union() != *w {
        return Err(Error::NotAPartition);
    }
    let w_factorial = w.factorial();
    let p_factorial = p.factorial();
    let denom = p_factorial * p.parts().iter().map(Cluster::factorial).product::<u128>();
    debug_assert_eq!(w_factorial % denom, 0);
    Ok(PartitionFactors {
        w_factorial,
        p_factorial,
        n_p: w_factorial / denom,
    })
}

pub const DEFAULT_PARTITION_CAP: usize = 14;

/// Partitions of `W` into connected subclusters.
///
/// Units are labeled `0..m`; the block holding the smallest remaining label
/// is grown as a connected set of remaining units, for every block size in
/// turn, and the labeled set partitions are then collapsed to multisets.
pub fn enumerate_connected_partitions(
    w: &Cluster,
    g: &InteractionGraph,
    cap: usize,
) -> Result<Vec<Partition>> {
    Ok(labeled_connected_partitions(w, g, cap)?
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// Like [`enumerate_connected_partitions`], with the number of labeled set
/// partitions that collapse onto each multiset partition.
pub fn labeled_connected_partitions(
    w: &Cluster,
    g: &InteractionGraph,
    cap: usize,
) -> Result<Vec<(Partition, u128)>> {
    let m = w.size();
    let cap = cap.min(31);
    if m > cap {
        return Err(Error::SizeCap { size: m, cap });
    }
    if m == 0 {
        return Err(Error::SizeZero);
    }
    if !w.is_connected(g) {
        return Err(Error::DisconnectedCluster);
    }
    let units = w.units();
    let adj: Vec<u32> = (0..m)
        .map(|a| {
            (0..m)
                .filter(|&b| b != a && g.overlaps(units[a], units[b]))
                .fold(0u32, |mask, b| mask | (1 << b))
        })
        .collect();

    let mut counts: std::collections::BTreeMap<Partition, u128> = Default::default();
    let full = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut blocks: Vec<u32> = Vec::new();
    split(full, &adj, &mut blocks, &mut |blocks| {
        let parts = blocks
            .iter()
            .map(|&b| {
                Cluster::from_units(
                    &(0..m)
                        .filter(|&i| b >> i & 1 == 1)
                        .map(|i| units[i])
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        *counts.entry(Partition::new(parts)).or_insert(0) += 1;
    });
    Ok(counts.into_iter().collect())
}

fn split(remaining: u32, adj: &[u32], blocks: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if remaining == 0 {
        emit(blocks);
        return;
    }
    let anchor = remaining.trailing_zeros() as usize;
    let mut sets = Vec::new();
    grow(1 << anchor, adj[anchor] & remaining, 0, remaining, adj, &mut sets);
    for block in sets {
        blocks.push(block);
        split(remaining & !block, adj, blocks, emit);
        blocks.pop();
    }
}

/// Connected subsets of `within` that contain `cur`, each once.
fn grow(cur: u32, ext: u32, excluded: u32, within: u32, adj: &[u32], out: &mut Vec<u32>) {
    out.push(cur);
    let mut ext = ext;
    let mut excluded = excluded;
    while ext != 0 {
        let w = ext.trailing_zeros() as usize;
        let bit = 1u32 << w;
        ext &= !bit;
        let next_cur = cur | bit;
        let next_ext = (ext | adj[w]) & within & !next_cur & !excluded;
        grow(next_cur, next_ext, excluded, within, adj, out);
        excluded |= bit;
    }
}

/// `(e · max(𝔡, 1))^m`.
pub fn cluster_count_bound(g: &InteractionGraph, m: usize) -> f64 {
    (std::f64::consts::E * g.effective_degree() as f64).powi(m as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashSet};

    fn graph(supports: &[&[usize]]) -> InteractionGraph {
        InteractionGraph::from_supports(supports.iter().map(|s| s.to_vec()).collect())
    }

    fn cl(parts: &[(usize, usize)]) -> Cluster {
        Cluster::new(parts.iter().copied())
    }

    /// Every multiset of size `m` over `0..n`, by brute force.
    fn all_multisets(n: usize, m: usize) -> Vec<Cluster> {
        fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Cluster>) {
            if m == 0 {
                out.push(Cluster::from_units(cur));
                return;
            }
            for x in start..n {
                cur.push(x);
                rec(x, n, m - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, m, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn cluster_accessors() {
        let w = cl(&[(3, 2), (1, 1), (3, 1)]);
        assert_eq!(w.parts(), &[(1, 1), (3, 3)]);
        assert_eq!(w.size(), 4);
        assert_eq!(w.factorial(), 6);
        assert_eq!(w.units(), vec![1, 3, 3, 3]);
        assert!((w.lambda_power(&[0.0, 0.5, 0.0, -2.0]) - (-4.0)).abs() < 1e-15);
        assert_eq!(w.with_removed(1), Some(cl(&[(3, 3)])));
        assert_eq!(w.with_removed(2), None);
        assert_eq!(w.with_added(2).size(), 5);
        assert_eq!(w.sub_multisets().len(), 2 * 4);
        assert_eq!(w.difference(&cl(&[(3, 2)])), Some(cl(&[(1, 1), (3, 1)])));
        assert_eq!(w.difference(&cl(&[(0, 1)])), None);
    }

    #[test]
    fn cluster_graph_examples() {
        let g = graph(&[&[0], &[1]]);
        let k2 = cluster_graph(&cl(&[(0, 2)]), &g);
        assert_eq!(k2.edges(), &[(0, 1)]);
        let apart = cluster_graph(&cl(&[(0, 1), (1, 1)]), &g);
        assert_eq!(apart.vertex_count(), 2);
        assert!(apart.edges().is_empty());
    }

    /// Terms on a four-site chain: W1 = {0,1}, W2 = {1,2}, W3 = {2,3}, W4 = {3}.
    fn four_unit_fixture() -> (InteractionGraph, Cluster) {
        let g = graph(&[&[0, 1], &[1, 2], &[2, 3], &[3]]);
        (g, cl(&[(0, 1), (1, 1), (2, 1), (3, 1)]))
    }

    #[test]
    fn four_unit_cluster_graph_and_partition_graph() {
        let (g, w) = four_unit_fixture();
        // W1–W2, W2–W3, W3–W4 overlap; W3 and W4 share site 3.
        let cg = cluster_graph(&w, &g);
        assert_eq!(cg.edges(), &[(0, 1), (1, 2), (2, 3)]);
        let target = Partition::new(vec![cl(&[(0, 1)]), cl(&[(1, 1), (2, 1)]), cl(&[(3, 1)])]);
        let parts = enumerate_connected_partitions(&w, &g, DEFAULT_PARTITION_CAP).unwrap();
        assert!(parts.contains(&target));
        // Parts in canonical order: {W1}, {W2,W3}, {W4}; a path through the middle part.
        let pg = target.partition_graph(&g);
        assert_eq!(pg.edges(), &[(0, 1), (1, 2)]);
        // A path of four units has 2^3 connected partitions (cut any subset of edges).
        assert_eq!(parts.len(), 8);
    }

    #[test]
    fn single_term_enumeration() {
        let g = graph(&[&[0]]);
        assert_eq!(enumerate_connected_clusters(&g, 0, 3).unwrap(), vec![cl(&[(0, 3)])]);
        assert!(matches!(enumerate_connected_clusters(&g, 0, 0), Err(Error::SizeZero)));
    }

    #[test]
    fn two_overlapping_terms() {
        let g = graph(&[&[0, 1], &[1, 2]]);
        let got = enumerate_connected_clusters(&g, 0, 2).unwrap();
        assert_eq!(got, vec![cl(&[(0, 1), (1, 1)]), cl(&[(0, 2)])]);
    }

    #[test]
    fn path_of_three_terms_excludes_disjoint_pair() {
        let g = graph(&[&[0, 1], &[1, 2], &[2, 3]]);
        let got = enumerate_connected_clusters(&g, 0, 2).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got.contains(&cl(&[(0, 2)])));
        assert!(got.contains(&cl(&[(0, 1), (1, 1)])));
        assert!(!got.contains(&cl(&[(0, 1), (2, 1)])));
    }

    fn sample_graphs() -> Vec<InteractionGraph> {
        vec![
            graph(&[&[0, 1], &[1, 2], &[2, 3], &[3, 4]]),
            graph(&[&[0, 1], &[1, 2], &[0, 2], &[2, 3], &[3]]),
            graph(&[&[0], &[1], &[0, 1], &[1, 2], &[2], &[5]]),
            InteractionGraph::build(&crate::fixtures::square_lattice(3, 1.0)),
        ]
    }

    #[test]
    fn rooted_enumeration_matches_brute_force() {
        for g in sample_graphs().into_iter().take(3) {
            for m in 1..=4 {
                let all = all_multisets(g.len(), m);
                for root in 0..g.len() {
                    let mut want: Vec<Cluster> = all
                        .iter()
                        .filter(|w| w.contains(root) && w.is_connected(&g))
                        .cloned()
                        .collect();
                    want.sort();
                    assert_eq!(enumerate_connected_clusters(&g, root, m).unwrap(), want);
                }
                let mut want: Vec<Cluster> =
                    all.iter().filter(|w| w.is_connected(&g)).cloned().collect();
                want.sort();
                assert_eq!(enumerate_all_connected_clusters(&g, m).unwrap(), want);
            }
        }
    }

    #[test]
    fn connected_to_a_matches_decrement_construction() {
        for g in sample_graphs() {
            for m in 1..=4 {
                for a in 0..g.len() {
                    let mut want: BTreeSet<Cluster> = BTreeSet::new();
                    for w in enumerate_connected_clusters(&g, a, m + 1).unwrap() {
                        want.insert(w.with_removed(a).unwrap());
                    }
                    let got = enumerate_clusters_connected_to_a(&g, a, m).unwrap();
                    assert_eq!(got, want.into_iter().collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn connected_to_a_examples() {
        let g = graph(&[&[0]]);
        assert_eq!(enumerate_clusters_connected_to_a(&g, 0, 1).unwrap(), vec![cl(&[(0, 1)])]);
        let g = graph(&[&[0, 1], &[1, 2]]);
        assert_eq!(
            enumerate_clusters_connected_to_a(&g, 0, 1).unwrap(),
            vec![cl(&[(0, 1)]), cl(&[(1, 1)])]
        );
    }

    #[test]
    fn complete_connection_to_observable() {
        // A on site 0 (term 0); chain of terms {0,1}, {1,2}, {2,3}, {4,5}.
        let g = graph(&[&[0], &[0, 1], &[1, 2], &[2, 3], &[4, 5]]);
        let reaches = cl(&[(1, 1), (2, 2), (3, 1)]);
        let detached = cl(&[(2, 1), (3, 1)]);
        let list = enumerate_clusters_connected_to_a(&g, 0, 4).unwrap();
        assert!(list.contains(&reaches));
        let list = enumerate_clusters_connected_to_a(&g, 0, 2).unwrap();
        assert!(!list.contains(&detached));
        assert!(detached.is_connected(&g));
        assert!(!detached.is_connected_to(0, &g));
    }

    #[test]
    fn counts_respect_growth_bound() {
        for g in sample_graphs() {
            for m in 1..=6 {
                for root in 0..g.len() {
                    let count = enumerate_connected_clusters(&g, root, m).unwrap().len();
                    assert!(count as f64 <= cluster_count_bound(&g, m));
                }
            }
        }
    }

    #[test]
    fn enumerated_clusters_are_connected_and_unique() {
        let g = InteractionGraph::build(&crate::fixtures::square_lattice(3, 1.0));
        let list = enumerate_all_connected_clusters(&g, 4).unwrap();
        let unique: HashSet<_> = list.iter().collect();
        assert_eq!(unique.len(), list.len());
        for w in &list {
            assert!(cluster_graph(w, &g).is_connected());
        }
    }

    #[test]
    fn small_partition_examples() {
        let g = graph(&[&[0], &[1, 2]]);
        let doubled = cl(&[(0, 2)]);
        let parts = enumerate_connected_partitions(&doubled, &g, 14).unwrap();
        assert_eq!(
            parts,
            vec![
                Partition::new(vec![cl(&[(0, 1)]), cl(&[(0, 1)])]),
                Partition::new(vec![doubled.clone()]),
            ]
        );
        let single = cl(&[(0, 1)]);
        assert_eq!(enumerate_connected_partitions(&single, &g, 14).unwrap().len(), 1);
        let disconnected = cl(&[(0, 1), (1, 1)]);
        assert!(matches!(
            enumerate_connected_partitions(&disconnected, &g, 14),
            Err(Error::DisconnectedCluster)
        ));
        let big = cl(&[(0, 15)]);
        assert!(matches!(
            enumerate_connected_partitions(&big, &g, 14),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn factor_examples() {
        let x2 = cl(&[(0, 2)]);
        let one = partition_factors(&x2, &Partition::new(vec![x2.clone()])).unwrap();
        assert_eq!((one.w_factorial, one.p_factorial, one.n_p), (2, 1, 1));
        let x = cl(&[(0, 1)]);
        let two = partition_factors(&x2, &Partition::new(vec![x.clone(), x.clone()])).unwrap();
        assert_eq!((two.w_factorial, two.p_factorial, two.n_p), (2, 2, 1));
        let xy = cl(&[(0, 1), (1, 1)]);
        let f = partition_factors(&xy, &Partition::new(vec![x.clone(), cl(&[(1, 1)])])).unwrap();
        assert_eq!((f.w_factorial, f.p_factorial, f.n_p), (1, 1, 1));
        assert!(matches!(
            partition_factors(&xy, &Partition::new(vec![x])),
            Err(Error::NotAPartition)
        ));
    }

    #[test]
    fn labeled_counts_equal_multiplicity_factor() {
        for g in sample_graphs() {
            for w in enumerate_all_connected_clusters(&g, 5).unwrap().iter().step_by(7) {
                for (p, labeled) in labeled_connected_partitions(w, &g, 14).unwrap() {
                    assert_eq!(labeled, partition_factors(w, &p).unwrap().n_p, "{w:?} {p:?}");
                    assert!(p.parts().iter().all(|v| v.is_connected(&g)));
                    assert_eq!(p.union(), *w);
                }
            }
        }
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(5, 2).len(), 4);
        assert_eq!(compositions(6, 3).len(), 10);
        assert!(compositions(2, 3).is_empty());
    }

    #[test]
    fn components_split_disconnected_clusters() {
        let g = graph(&[&[0, 1], &[1, 2], &[5], &[6]]);
        let w = cl(&[(0, 1), (1, 2), (2, 1), (3, 3)]);
        let comps = w.components(&g);
        assert_eq!(comps, vec![cl(&[(0, 1), (1, 2)]), cl(&[(2, 1)]), cl(&[(3, 3)])]);
    }
}
