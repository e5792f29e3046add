//! Normalized word sums applied to a purified product state.
//!
//! For a multiset `V` of (possibly labeled) terms define
//!
//! ```text
//! φ̂_V = (1 / m_*(V)) Σ_{X ∈ V, label(X) = l_*} h_X φ̂_{V−X},   φ̂_∅ = |Ψ⟩,
//! ```
//!
//! where `l_*` is the smallest label present in `V` and `m_*` the number of
//! units of `V` carrying it. Unrolled, `φ̂_V` is the ordered product over
//! labels of the permutation sums of each label's terms, divided by
//! `Π_l m_l! · V!`. With a single label this is `(1/|V|!) Σ_σ h_σ(1)⋯h_σ(m) |Ψ⟩ / V!`.
//!
//! `φ̂` factorizes over the connected components of `V`, so only connected
//! multisets are memoized; everything else is assembled by tensoring.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::clusters::Cluster;
use crate::graphs::InteractionGraph;
use crate::linalg::{CMatrix, CVector, Complex64, ZERO};
use crate::model::{union_support, ProductState};
use crate::ops::PurifiedSpace;

pub(crate) struct Entry {
    pub support: Vec<usize>,
    pub vec: CVector,
}

pub(crate) struct WordSums<'a> {
    space: PurifiedSpace<'a>,
    graph: &'a InteractionGraph,
    matrices: &'a [CMatrix],
    labels: Option<&'a [usize]>,
    memo: HashMap<Cluster, Entry>,
}

impl<'a> WordSums<'a> {
    /// `labels[x]` orders the factors; `None` means a single label.
    pub fn new(
        state: &'a ProductState,
        graph: &'a InteractionGraph,
        matrices: &'a [CMatrix],
        labels: Option<&'a [usize]>,
    ) -> Self {
        WordSums {
            space: PurifiedSpace::new(state),
            graph,
            matrices,
            labels,
            memo: HashMap::new(),
        }
    }

    pub fn space(&self) -> &PurifiedSpace<'a> {
        &self.space
    }

    pub fn graph(&self) -> &'a InteractionGraph {
        self.graph
    }

    fn label(&self, x: usize) -> usize {
        self.labels.map_or(0, |l| l[x])
    }

    /// Memoize every connected sub-multiset of the given clusters.
    pub fn ensure<'c>(&mut self, clusters: impl IntoIterator<Item = &'c Cluster>) {
        let mut needed: BTreeSet<(usize, Cluster)> = BTreeSet::new();
        for w in clusters {
            for v in w.sub_multisets() {
                if !v.is_empty() && !self.memo.contains_key(&v) && v.is_connected(self.graph) {
                    needed.insert((v.size(), v));
                }
            }
        }
        let mut needed: Vec<(usize, Cluster)> = needed.into_iter().collect();
        while !needed.is_empty() {
            let size = needed[0].0;
            let split = needed.partition_point(|(s, _)| *s == size);
            let level: Vec<Cluster> = needed.drain(..split).map(|(_, v)| v).collect();
            let this = &*self;
            let entries: Vec<Entry> = level.par_iter().map(|v| this.compute(v)).collect();
            for (v, e) in level.into_iter().zip(entries) {
                self.memo.insert(v, e);
            }
        }
    }

    fn compute(&self, v: &Cluster) -> Entry {
        let support = v.support(self.graph);
        let lowest = v.terms().map(|x| self.label(x)).min().unwrap();
        let mut count = 0usize;
        let mut acc = CVector::zeros(self.space.dim(&support));
        let mut out = vec![ZERO; acc.len()];
        for &(x, k) in v.parts() {
            if self.label(x) != lowest {
                continue;
            }
            count += k;
            let rest = v.with_removed(x).unwrap();
            let base = self.materialize(&rest, &support);
            let emb = self
                .space
                .embedding(&support, self.graph.support(x))
                .expect("term support inside cluster support");
            emb.apply(&self.matrices[x], base.as_slice(), &mut out);
            for (a, o) in acc.iter_mut().zip(&out) {
                *a += o;
            }
        }
        acc.unscale_mut(count as f64);
        Entry { support, vec: acc }
    }

    /// Memoized entry of a connected multiset.
    pub fn connected(&self, v: &Cluster) -> &Entry {
        self.memo
            .get(v)
            .unwrap_or_else(|| panic!("word sum for {v:?} was not prepared"))
    }

    /// `φ̂_V` on `target ⊇ supp(V)`, with `|ψ_v⟩` on the remaining sites.
    pub fn materialize(&self, v: &Cluster, target: &[usize]) -> CVector {
        if v.is_empty() {
            return self.space.product(target);
        }
        let comps = v.components(self.graph);
        let mut sites: Vec<usize> = Vec::new();
        let mut vec = CVector::from_element(1, crate::linalg::ONE);
        for c in &comps {
            let e = self.connected(c);
            vec = self.space.merge(&vec, &sites, &e.vec, &e.support);
            sites = union_support(&sites, &e.support);
        }
        self.space.extend(&vec, &sites, target)
    }

    /// `⟨Ψ|φ̂_V⟩` for a connected `V`.
    pub fn overlap(&self, v: &Cluster) -> Complex64 {
        let e = self.connected(v);
        let psi = self.space.product(&e.support);
        psi.dotc(&e.vec)
    }
}

/// `(1/m!) Σ_σ h_σ(1) ⋯ h_σ(m)` by explicit enumeration of all orderings.
pub(crate) fn naive_permutation_average(units: &[CMatrix], dim: usize) -> CMatrix {
    fn rec(prefix: &CMatrix, used: u32, units: &[CMatrix], acc: &mut CMatrix) {
        if used.count_ones() as usize == units.len() {
            *acc += prefix;
            return;
        }
        for (i, h) in units.iter().enumerate() {
            if used >> i & 1 == 0 {
                rec(&(prefix * h), used | 1 << i, units, acc);
            }
        }
    }
    let mut acc = CMatrix::zeros(dim, dim);
    rec(&crate::linalg::identity(dim), 0, units, &mut acc);
    acc.unscale(crate::linalg::factorial(units.len()))
}

/// Same as [`naive_permutation_average`], written as
/// `(1/m!) Σ_{K ⊆ [m]} (−1)^{m−|K|} (Σ_{i∈K} h_i)^m` with each power taken
/// from a Hermitian eigendecomposition.
pub(crate) fn permutation_average(units: &[CMatrix], dim: usize) -> CMatrix {
    let m = units.len();
    if m == 0 {
        return crate::linalg::identity(dim);
    }
    let mut acc = CMatrix::zeros(dim, dim);
    for mask in 1u32..(1 << m) {
        let sum = (0..m)
            .filter(|&i| mask >> i & 1 == 1)
            .fold(CMatrix::zeros(dim, dim), |s, i| s + &units[i]);
        let sign = if (m - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += crate::linalg::HermitianEigen::new(&sum).pow(m as u32).scale(sign);
    }
    acc.unscale(crate::linalg::factorial(m))
}
