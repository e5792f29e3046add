//! Simple graphs, the interaction graph of a Hamiltonian, and the exact
//! graph invariants the expansions need: `T_G(1,0)`, spanning-tree counts
//! and exact-k colorings.

use std::collections::HashMap;

use crate::model::{supports_overlap, LocalHamiltonian};
use crate::{Error, Result};

/// Undirected graph without loops or multi-edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    /// Strict constructor: edges must satisfy `u < v < n` and be distinct.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(u, v) in &edges {
            if u >= v || v >= n {
                return Err(Error::MalformedSpec(format!(
                    "edge ({u}, {v}) invalid for {n} vertices"
                )));
            }
        }
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedSpec("duplicate edge".into()));
        }
        Ok(Self::from_sorted(n, sorted))
    }

    /// Normalizes orientation, drops loops and merges parallel edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sorted: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        assert!(sorted.iter().all(|&(_, v)| v < n), "edge endpoint out of range");
        sorted.sort_unstable();
        sorted.dedup();
        Self::from_sorted(n, sorted)
    }

    fn from_sorted(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        SimpleGraph { n, edges, adj }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v)))
    }

    pub fn cycle(n: usize) -> Self {
        Self::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    fn masks(&self) -> Vec<u32> {
        self.adj
            .iter()
            .map(|list| list.iter().fold(0u32, |m, &w| m | (1 << w)))
            .collect()
    }
}

pub fn max_degree(g: &SimpleGraph) -> usize {
    g.max_degree()
}

/// Graph over Hamiltonian terms; `X ~ Y` iff their supports intersect.
#[derive(Clone, Debug)]
pub struct InteractionGraph {
    graph: SimpleGraph,
    supports: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn build(h: &LocalHamiltonian) -> Self {
        Self::from_supports(h.supports())
    }

    pub fn from_supports(supports: Vec<Vec<usize>>) -> Self {
        let mut edges = Vec::new();
        for x in 0..supports.len() {
            for y in x + 1..supports.len() {
                if supports_overlap(&supports[x], &supports[y]) {
                    edges.push((x, y));
                }
            }
        }
        InteractionGraph {
            graph: SimpleGraph::from_sorted(supports.len(), edges),
            supports,
        }
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn support(&self, x: usize) -> &[usize] {
        &self.supports[x]
    }

    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        self.graph.neighbors(x)
    }

    /// `x ~ y` in the sense of overlapping supports; a term overlaps itself.
    pub fn overlaps(&self, x: usize, y: usize) -> bool {
        x == y || self.graph.has_edge(x, y)
    }

    /// `𝔡`.
    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    /// `max(𝔡, 1)`.
    pub fn effective_degree(&self) -> usize {
        self.max_degree().max(1)
    }
}

pub fn build_interaction_graph(h: &LocalHamiltonian) -> InteractionGraph {
    InteractionGraph::build(h)
}

/// Degree-refined relabeling of a bitmask graph. Identical keys imply
/// isomorphic graphs; isomorphic graphs may still get distinct keys.
fn graph_key(adj: &[u32]) -> Vec<u32> {
    let n = adj.len();
    let mut colors: Vec<u64> = adj.iter().map(|m| m.count_ones() as u64).collect();
    for _ in 0..2 {
        let sigs: Vec<(u64, Vec<u64>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u64> = (0..n)
                    .filter(|&w| adj[v] >> w & 1 == 1)
                    .map(|w| colors[w])
                    .collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let mut distinct: Vec<&(u64, Vec<u64>)> = sigs.iter().collect();
        distinct.sort();
        distinct.dedup();
        colors = sigs
            .iter()
            .map(|s| distinct.binary_search(&s).unwrap() as u64)
            .collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (colors[v], v));
    let mut position = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let mut key = Vec::with_capacity(n + 1);
    key.push(n as u32);
    for &old in &order {
        let mut m = 0u32;
        for w in 0..n {
            if adj[old] >> w & 1 == 1 {
                m |= 1 << position[w];
            }
        }
        key.push(m);
    }
    key
}

fn masks_connected(adj: &[u32]) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0u32;
        let mut f = frontier;
        while f != 0 {
            let v = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= adj[v];
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen == full
}

/// Whether `v` is reachable from `u` after removing the edge `uv`.
fn reachable_without_edge(adj: &[u32], u: usize, v: usize) -> bool {
    let mut seen = 1u32 << u;
    let mut frontier = seen;
    while frontier != 0 {
        let mut next = 0u32;
        let mut f = frontier;
        while f != 0 {
            let x = f.trailing_zeros() as usize;
            f &= f - 1;
            let mut nb = adj[x];
            if x == u {
                nb &= !(1 << v);
            }
            next |= nb;
        }
        frontier = next & !seen;
        seen |= next;
        if seen >> v & 1 == 1 {
            return true;
        }
    }
    false
}

/// Remove vertex `v` and shift higher labels down.
fn remove_vertex(adj: &[u32], v: usize) -> Vec<u32> {
    let low = (1u32 << v) - 1;
    adj.iter()
        .enumerate()
        .filter(|&(w, _)| w != v)
        .map(|(_, &m)| (m & low) | ((m >> 1) & !low))
        .collect()
}

/// Contract the edge `uv` into `u`; loops vanish and parallel edges merge.
fn contract(adj: &[u32], u: usize, v: usize) -> Vec<u32> {
    let mut merged = adj.to_vec();
    merged[u] = (adj[u] | adj[v]) & !(1 << u) & !(1 << v);
    for (w, m) in merged.iter_mut().enumerate() {
        if w != u && *m >> v & 1 == 1 {
            *m |= 1 << u;
        }
    }
    remove_vertex(&merged, v)
}

fn t10_rec(mut adj: Vec<u32>, memo: &mut HashMap<Vec<u32>, u128>) -> u128 {
    // Leaves are bridges; contracting one deletes it.
    loop {
        if adj.len() <= 1 {
            return 1;
        }
        match adj.iter().position(|m| m.count_ones() == 1) {
            Some(leaf) => adj = remove_vertex(&adj, leaf),
            None => break,
        }
    }
    let key = graph_key(&adj);
    if let Some(&t) = memo.get(&key) {
        return t;
    }
    let u = (0..adj.len())
        .min_by_key(|&v| (adj[v].count_ones(), v))
        .unwrap();
    let v = adj[u].trailing_zeros() as usize;
    let contracted = t10_rec(contract(&adj, u, v), memo);
    let t = if reachable_without_edge(&adj, u, v) {
        let mut deleted = adj.clone();
        deleted[u] &= !(1 << v);
        deleted[v] &= !(1 << u);
        t10_rec(deleted, memo) + contracted
    } else {
        contracted
    };
    memo.insert(key, t);
    t
}

pub const DEFAULT_TUTTE_CAP: usize = 24;

/// `T_G(1, 0)` by deletion–contraction with memoization.
pub fn tutte_t10(g: &SimpleGraph) -> Result<u128> {
    tutte_t10_capped(g, DEFAULT_TUTTE_CAP)
}

pub fn tutte_t10_capped(g: &SimpleGraph, cap: usize) -> Result<u128> {
    let cap = cap.min(31);
    if g.vertex_count() > cap {
        return Err(Error::GraphTooLarge {
            vertices: g.vertex_count(),
            cap,
        });
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    Ok(t10_rec(g.masks(), &mut HashMap::new()))
}

/// Memoized `T(1, 0)` for graphs given as bitmask adjacency (vertices < 32).
#[derive(Default)]
pub(crate) struct TutteCache {
    memo: HashMap<Vec<u32>, u128>,
}

impl TutteCache {
    pub fn t10(&mut self, adj: Vec<u32>) -> u128 {
        debug_assert!(masks_connected(&adj));
        t10_rec(adj, &mut self.memo)
    }
}

/// Number of spanning trees via Kirchhoff's theorem (exact Bareiss elimination).
pub fn spanning_tree_count(g: &SimpleGraph) -> Result<u128> {
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    let n = g.vertex_count();
    if n <= 1 {
        return Ok(1);
    }
    let k = n - 1;
    let mut m = vec![vec![0i128; k]; k];
    for (u, row) in m.iter_mut().enumerate() {
        row[u] = g.degree(u) as i128;
        for &w in g.neighbors(u) {
            if w < k {
                row[w] = -1;
            }
        }
    }
    let mut prev = 1i128;
    let mut sign = 1i128;
    for i in 0..k {
        if m[i][i] == 0 {
            let swap = (i + 1..k).find(|&r| m[r][i] != 0);
            match swap {
                Some(r) => {
                    m.swap(i, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for r in i + 1..k {
            for c in i + 1..k {
                m[r][c] = (m[r][c] * m[i][i] - m[r][i] * m[i][c]) / prev;
            }
            m[r][i] = 0;
        }
        prev = m[i][i];
    }
    Ok((sign * m[k - 1][k - 1]) as u128)
}

fn trees_dc(mult: &mut Vec<Vec<u32>>) -> u128 {
    let n = mult.len();
    if n == 1 {
        return 1;
    }
    let Some((u, v)) = (0..n).find_map(|u| (u + 1..n).find(|&v| mult[u][v] > 0).map(|v| (u, v)))
    else {
        return 0;
    };
    let k = mult[u][v] as u128;
    mult[u][v] = 0;
    mult[v][u] = 0;
    let without = trees_dc(&mut mult.clone());
    // Contract v into u.
    let mut merged: Vec<Vec<u32>> = mult.clone();
    for w in 0..n {
        if w != u && w != v {
            merged[u][w] += mult[v][w];
            merged[w][u] += mult[w][v];
        }
    }
    merged.remove(v);
    for row in &mut merged {
        row.remove(v);
    }
    without + k * trees_dc(&mut merged)
}

/// Number of spanning trees via deletion–contraction on the multigraph.
pub fn spanning_tree_count_dc(g: &SimpleGraph) -> Result<u128> {
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    let n = g.vertex_count().max(1);
    let mut mult = vec![vec![0u32; n]; n];
    for &(u, v) in g.edges() {
        mult[u][v] = 1;
        mult[v][u] = 1;
    }
    Ok(trees_dc(&mut mult))
}

pub const COLORING_CAP: usize = 8;

/// Proper colorings using exactly `colors` colors, by exhaustive search.
pub fn exact_coloring_count(g: &SimpleGraph, colors: usize) -> Result<u128> {
    let n = g.vertex_count();
    if n > COLORING_CAP {
        return Err(Error::GraphTooLarge {
            vertices: n,
            cap: COLORING_CAP,
        });
    }
    if colors == 0 {
        return Ok(u128::from(n == 0));
    }
    let mut assignment = vec![0usize; n];
    let mut count = 0u128;
    fn rec(
        g: &SimpleGraph,
        v: usize,
        colors: usize,
        assignment: &mut Vec<usize>,
        count: &mut u128,
    ) {
        if v == g.vertex_count() {
            let mut used = vec![false; colors];
            for &c in assignment.iter() {
                used[c] = true;
            }
            if used.iter().all(|&u| u) {
                *count += 1;
            }
            return;
        }
        for c in 0..colors {
            if g.neighbors(v).iter().any(|&w| w < v && assignment[w] == c) {
                continue;
            }
            assignment[v] = c;
            rec(g, v + 1, colors, assignment, count);
        }
    }
    rec(g, 0, colors, &mut assignment, &mut count);
    Ok(count)
}

/// All connected graphs on `n ≤ 7` vertices, one per isomorphism class,
/// found by brute-force canonical forms.
pub fn connected_graphs(n: usize) -> Vec<SimpleGraph> {
    assert!(n <= 7, "brute-force enumeration is limited to 7 vertices");
    if n == 0 {
        return Vec::new();
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let perms = permutations(n);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let g = SimpleGraph::from_sorted(n, edges);
        if !g.is_connected() {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                let mut e: Vec<(usize, usize)> = g
                    .edges()
                    .iter()
                    .map(|&(u, v)| (p[u].min(p[v]), p[u].max(p[v])))
                    .collect();
                e.sort_unstable();
                e
            })
            .min()
            .unwrap();
        if seen.insert(canon) {
            out.push(g);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn star(n: usize) -> SimpleGraph {
        SimpleGraph::from_edges(n, (1..n).map(|v| (0, v)))
    }

    #[test]
    fn strict_constructor_validates() {
        assert!(SimpleGraph::new(3, vec![(0, 1), (1, 2)]).is_ok());
        assert!(SimpleGraph::new(3, vec![(1, 0)]).is_err());
        assert!(SimpleGraph::new(3, vec![(0, 3)]).is_err());
        assert!(SimpleGraph::new(3, vec![(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn interaction_graph_examples() {
        let h = fixtures::single_qubit(1.0);
        let g = InteractionGraph::build(&h);
        assert_eq!(g.graph().edges().len(), 0);
        assert_eq!(g.max_degree(), 0);
        assert_eq!(g.effective_degree(), 1);

        let g = InteractionGraph::from_supports(vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(g.graph().edges(), &[(0, 1)]);
        assert_eq!(g.max_degree(), 1);
    }

    #[test]
    fn square_lattice_degrees() {
        // L = 3: the two central edges of each middle row/column touch five others.
        assert_eq!(InteractionGraph::build(&fixtures::square_lattice(3, 1.0)).max_degree(), 5);
        // From L = 4 on, interior edges reach the full 2·(4 − 1) = 6.
        assert_eq!(InteractionGraph::build(&fixtures::square_lattice(4, 1.0)).max_degree(), 6);
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(max_degree(&SimpleGraph::path(3)), 2);
        assert_eq!(max_degree(&SimpleGraph::complete(4)), 3);
    }

    #[test]
    fn tutte_small_graphs() {
        assert_eq!(tutte_t10(&SimpleGraph::from_edges(1, [])).unwrap(), 1);
        assert_eq!(tutte_t10(&SimpleGraph::complete(3)).unwrap(), 2);
        for n in 3..9 {
            assert_eq!(tutte_t10(&SimpleGraph::cycle(n)).unwrap(), (n - 1) as u128);
        }
        // T_{K_n}(1,0) = (n-1)!.
        assert_eq!(tutte_t10(&SimpleGraph::complete(6)).unwrap(), 120);
        assert_eq!(tutte_t10(&star(5)).unwrap(), 1);
    }

    #[test]
    fn tutte_rejects_bad_input() {
        let disconnected = SimpleGraph::from_edges(3, [(0, 1)]);
        assert!(matches!(tutte_t10(&disconnected), Err(Error::DisconnectedInput)));
        let big = SimpleGraph::path(30);
        assert!(matches!(tutte_t10(&big), Err(Error::GraphTooLarge { .. })));
    }

    #[test]
    fn spanning_tree_examples() {
        assert_eq!(spanning_tree_count(&SimpleGraph::path(5)).unwrap(), 1);
        assert_eq!(spanning_tree_count(&star(6)).unwrap(), 1);
        assert_eq!(spanning_tree_count(&SimpleGraph::complete(3)).unwrap(), 3);
        assert_eq!(spanning_tree_count(&SimpleGraph::complete(4)).unwrap(), 16);
        assert_eq!(spanning_tree_count(&SimpleGraph::cycle(7)).unwrap(), 7);
        assert_eq!(spanning_tree_count_dc(&SimpleGraph::complete(4)).unwrap(), 16);
        assert_eq!(spanning_tree_count(&SimpleGraph::from_edges(1, [])).unwrap(), 1);
    }

    #[test]
    fn coloring_examples() {
        let k3 = SimpleGraph::complete(3);
        assert_eq!(exact_coloring_count(&k3, 3).unwrap(), 6);
        assert_eq!(exact_coloring_count(&k3, 2).unwrap(), 0);
        let empty2 = SimpleGraph::from_edges(2, []);
        assert_eq!(exact_coloring_count(&empty2, 1).unwrap(), 1);
        assert!(exact_coloring_count(&SimpleGraph::path(9), 2).is_err());
    }

    #[test]
    fn kirchhoff_and_deletion_contraction_agree() {
        for n in 1..=5 {
            for g in connected_graphs(n) {
                let a = spanning_tree_count(&g).unwrap();
                let b = spanning_tree_count_dc(&g).unwrap();
                assert_eq!(a, b, "{g:?}");
                assert!(tutte_t10(&g).unwrap() <= a);
            }
        }
    }

    #[test]
    fn connected_graph_counts_match_known_sequence() {
        let counts: Vec<usize> = (1..=5).map(|n| connected_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 6, 21]);
    }

    #[test]
    fn graph_key_is_invariant_under_identical_input() {
        let g = SimpleGraph::cycle(5);
        assert_eq!(graph_key(&g.masks()), graph_key(&g.masks()));
        let relabeled = SimpleGraph::from_edges(5, [(0, 2), (2, 4), (4, 1), (1, 3), (3, 0)]);
        // Both are 5-cycles; the keys may differ but the values cannot.
        assert_eq!(tutte_t10(&g).unwrap(), tutte_t10(&relabeled).unwrap());
    }
}
