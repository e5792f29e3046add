//! Cluster expansion of `⟨A(t)⟩ = tr(e^{iHt} A e^{-iHt} ρ)` and its analytic
//! continuation beyond the convergence radius.
//!
//! The order-`m` Taylor coefficient is `A_m t^m = (it)^m a_m` with
//!
//! ```text
//! a_m = Σ_{W ∈ 𝒢_m^A} λ^W · tr(G_W ρ) / W!,   G_W = (1/m!) Σ_σ [h_σ(1), [⋯, [h_σ(m), A]]],
//! ```
//!
//! the sum running over the `m!` orderings of the units of `W`. Clusters not
//! connected to `supp(A)` contribute nothing and are never generated.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bounds::{self, Thresholds};
use crate::clusters::{self, Cluster};
use crate::graphs::InteractionGraph;
use crate::linalg::{self, CMatrix, Complex64, HermitianEigen, KahanSum, I, ONE, ZERO};
use crate::model::{
    product_expectation, union_support, LocalHamiltonian, Observable, ProductState,
};
use crate::ops::{self, Embedding};
use crate::wordsums::WordSums;
use crate::{Caps, Error, Result};

/// A truncated expansion value with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    /// Rigorous bound on `|exact − value|`; `+∞` outside the radius.
    pub truncation_bound: f64,
    pub order: usize,
    pub within_radius: bool,
    /// `t*` or `t*_L`, whichever governs the expansion.
    pub threshold: f64,
    pub wall_time: Duration,
}

/// How the permutation sum of nested commutators of one cluster is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorMethod {
    /// Sum over all distinct orderings (test oracle, small clusters only).
    Naive,
    /// Left/right split over unit subsets, with each permutation sum of
    /// products written as an alternating sum of powers of partial sums.
    InclusionExclusion,
    /// Left/right split with memoized word sums applied to the state.
    WordSums,
}

/// Where the Taylor coefficients `A_l t^l` come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientSource {
    /// One term per connected cluster.
    Clusters,
    /// Order-by-order `ad_H` on the dense operator space of the connected
    /// component of `supp(A)` in the interaction graph. Identical totals,
    /// no per-cluster breakdown.
    LightCone,
    /// Clusters unless the requested order makes enumeration impractical
    /// and the light cone fits in the dense cap.
    Auto,
}

impl CoefficientSource {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientSource::Clusters => "clusters",
            CoefficientSource::LightCone => "light-cone",
            CoefficientSource::Auto => "auto",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObservableOptions {
    pub caps: Caps,
    pub source: CoefficientSource,
    /// Keep every cluster's contribution in the resulting series.
    pub keep_clusters: bool,
}

impl Default for ObservableOptions {
    fn default() -> Self {
        ObservableOptions {
            caps: Caps::default(),
            source: CoefficientSource::Auto,
            keep_clusters: false,
        }
    }
}

/// The term list with `supp(A)` registered as a term.
///
/// If no Hamiltonian term has support exactly `supp(A)`, a zero-coefficient
/// phantom term is appended; it only shapes the interaction graph.
pub struct ObservableSetup<'a> {
    h: &'a LocalHamiltonian,
    a: &'a Observable,
    state: &'a ProductState,
    graph: InteractionGraph,
    a_index: usize,
    phantom: bool,
    coefficients: Vec<f64>,
    matrices: Vec<CMatrix>,
}

impl<'a> ObservableSetup<'a> {
    pub fn new(h: &'a LocalHamiltonian, a: &'a Observable, state: &'a ProductState) -> Result<Self> {
        if state.n() != h.n() || state.d() != h.d() {
            return Err(Error::DimensionMismatch(format!(
                "state has n = {}, d = {}; Hamiltonian has n = {}, d = {}",
                state.n(),
                state.d(),
                h.n(),
                h.d()
            )));
        }
        if a.support().iter().any(|&v| v >= h.n()) {
            return Err(Error::DimensionMismatch(format!(
                "observable support {:?} outside {} sites",
                a.support(),
                h.n()
            )));
        }
        if a.matrix().nrows() != h.d().pow(a.support().len() as u32) {
            return Err(Error::DimensionMismatch("observable matrix size".into()));
        }
        let mut supports = h.supports();
        let mut coefficients: Vec<f64> = h.terms().iter().map(|t| t.coefficient).collect();
        let mut matrices: Vec<CMatrix> = h.terms().iter().map(|t| t.matrix.clone()).collect();
        let (a_index, phantom) = match supports.iter().position(|s| s == a.support()) {
            Some(i) => (i, false),
            None => {
                let dim = a.matrix().nrows();
                supports.push(a.support().to_vec());
                coefficients.push(0.0);
                matrices.push(CMatrix::zeros(dim, dim));
                (supports.len() - 1, true)
            }
        };
        Ok(ObservableSetup {
            h,
            a,
            state,
            graph: InteractionGraph::from_supports(supports),
            a_index,
            phantom,
            coefficients,
            matrices,
        })
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn a_index(&self) -> usize {
        self.a_index
    }

    pub fn has_phantom(&self) -> bool {
        self.phantom
    }

    /// Thresholds from the degree of the (augmented) interaction graph.
    pub fn thresholds(&self) -> Thresholds {
        bounds::thresholds(self.graph.max_degree())
    }

    /// `𝒢_m^A`, without clusters that still hold the phantom term.
    pub fn clusters(&self, m: usize) -> Result<Vec<Cluster>> {
        let mut list = clusters::enumerate_clusters_connected_to_a(&self.graph, self.a_index, m)?;
        if self.phantom {
            list.retain(|w| !w.contains(self.a_index));
        }
        Ok(list)
    }

    fn check_cluster(&self, w: &Cluster) -> Result<()> {
        if w.is_empty() {
            return Err(Error::SizeZero);
        }
        if let Some(x) = w.terms().find(|&x| x >= self.h.len()) {
            return Err(Error::MalformedSpec(format!("term index {x} out of range")));
        }
        Ok(())
    }

    /// Dense pieces on `U = supp(W) ∪ supp(A)`: one embedded matrix per
    /// unit, the embedded observable and `⊗_{v∈U} ρ_v`.
    fn dense_pieces(&self, w: &Cluster) -> Result<(Vec<CMatrix>, CMatrix, CMatrix)> {
        let d = self.h.d();
        let u = union_support(&w.support(&self.graph), self.a.support());
        let units = w
            .units()
            .iter()
            .map(|&x| ops::embed_operator(&self.matrices[x], self.graph.support(x), &u, d))
            .collect::<Result<Vec<_>>>()?;
        let a = ops::embed_operator(self.a.matrix(), self.a.support(), &u, d)?;
        Ok((units, a, self.state.reduced(&u)))
    }
}

/// `Σ_σ tr([h_σ(1), [⋯, [h_σ(m), A]]] ρ)` over the `m!` orderings of the units of `W`.
pub fn nested_commutator_trace(
    setup: &ObservableSetup<'_>,
    w: &Cluster,
    method: CommutatorMethod,
    caps: &Caps,
) -> Result<Complex64> {
    setup.check_cluster(w)?;
    let m = w.size();
    // The naive sum is the reference for the vanishing of detached clusters,
    // so it always evaluates.
    if method != CommutatorMethod::Naive && !w.is_connected_to(setup.a_index, &setup.graph) {
        return Ok(ZERO);
    }
    match method {
        CommutatorMethod::Naive => {
            if m > caps.max_naive_size {
                return Err(Error::SizeCap {
                    size: m,
                    cap: caps.max_naive_size,
                });
            }
            naive_trace(setup, w)
        }
        CommutatorMethod::InclusionExclusion => {
            if m > caps.max_partition_size {
                return Err(Error::SizeCap {
                    size: m,
                    cap: caps.max_partition_size,
                });
            }
            inclusion_exclusion_trace(setup, w)
        }
        CommutatorMethod::WordSums => {
            let mut words = WordSums::new(setup.state, &setup.graph, &setup.matrices, None);
            words.ensure([w]);
            let normalized = split_sum(&words, w, setup.a);
            Ok(normalized * linalg::factorial(m) * w.factorial() as f64)
        }
    }
}

fn naive_trace(setup: &ObservableSetup<'_>, w: &Cluster) -> Result<Complex64> {
    let (units, a, rho) = setup.dense_pieces(w)?;
    // One representative matrix per distinct term; units are grouped by term.
    let mut reps: Vec<(CMatrix, usize)> = Vec::new();
    let mut offset = 0;
    for &(_, k) in w.parts() {
        reps.push((units[offset].clone(), k));
        offset += k;
    }
    fn rec(c: &CMatrix, reps: &mut [(CMatrix, usize)], rho: &CMatrix, acc: &mut KahanSum) {
        let mut any = false;
        for i in 0..reps.len() {
            if reps[i].1 == 0 {
                continue;
            }
            any = true;
            let h = &reps[i].0;
            let next = h * c - c * h;
            reps[i].1 -= 1;
            rec(&next, reps, rho, acc);
            reps[i].1 += 1;
        }
        if !any {
            acc.add(linalg::trace_product(c, rho));
        }
    }
    let mut acc = KahanSum::new();
    rec(&a, &mut reps, &rho, &mut acc);
    // Each distinct word stands for W! labeled orderings.
    Ok(acc.value() * w.factorial() as f64)
}

/// `Σ_{σ∈S_l} Π_j h_σ(j)` for the units in `mask`, as
/// `Σ_{K ⊆ mask} (−1)^{l−|K|} (Σ_{i∈K} h_i)^l`.
fn permutation_sum(mask: u32, eigs: &[Option<HermitianEigen>], dim: usize) -> CMatrix {
    let l = mask.count_ones();
    if l == 0 {
        return linalg::identity(dim);
    }
    let mut acc = CMatrix::zeros(dim, dim);
    let mut sub = mask;
    loop {
        if sub != 0 {
            let sign = if (l - sub.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
            let power = eigs[sub as usize].as_ref().unwrap().pow(l);
            acc += power.scale(sign);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    acc
}

fn inclusion_exclusion_trace(setup: &ObservableSetup<'_>, w: &Cluster) -> Result<Complex64> {
    let (units, a, rho) = setup.dense_pieces(w)?;
    let m = units.len();
    let dim = a.nrows();
    let full = (1u32 << m) - 1;
    let eigs: Vec<Option<HermitianEigen>> = (0..=full)
        .map(|mask| {
            (mask != 0).then(|| {
                let sum = (0..m)
                    .filter(|&i| mask >> i & 1 == 1)
                    .fold(CMatrix::zeros(dim, dim), |acc, i| acc + &units[i]);
                HermitianEigen::new(&sum)
            })
        })
        .collect();
    let sums: Vec<CMatrix> = (0..=full).map(|mask| permutation_sum(mask, &eigs, dim)).collect();
    let mut acc = KahanSum::new();
    for left in 0..=full {
        let l = left.count_ones() as usize;
        let right = full & !left;
        let sign = if (m - l).is_multiple_of(2) { 1.0 } else { -1.0 };
        let coef = sign * linalg::binomial(m, l);
        let word = &sums[left as usize] * &a * &sums[right as usize];
        acc.add(linalg::trace_product(&word, &rho) * coef);
    }
    Ok(acc.value())
}

/// `tr(G_W ρ) / W!` from memoized word sums:
/// `Σ_{V ⊆ W} (−1)^{|W−V|} ⟨φ̂_V| A |φ̂_{W−V}⟩`.
fn split_sum(words: &WordSums<'_>, w: &Cluster, a: &Observable) -> Complex64 {
    let space = words.space();
    let subs = w.sub_multisets();
    let u = union_support(&w.support(words.graph()), a.support());
    let emb: Embedding = space.embedding(&u, a.support()).expect("observable inside U");
    let vecs: Vec<_> = subs.iter().map(|v| words.materialize(v, &u)).collect();
    let m = w.size();
    let n = subs.len();
    let mut scratch = vec![ZERO; vecs[0].len()];
    let mut acc = KahanSum::new();
    for (i, v) in subs.iter().enumerate() {
        let j = n - 1 - i;
        emb.apply(a.matrix(), vecs[j].as_slice(), &mut scratch);
        let inner: Complex64 = vecs[i]
            .iter()
            .zip(&scratch)
            .map(|(x, y)| x.conj() * y)
            .sum();
        let sign = if (m - v.size()).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc.add(inner * sign);
    }
    acc.value()
}

/// `D_W⟨A(t)⟩ = (it)^m/m! Σ_σ tr([h_σ(1), [⋯, [h_σ(m), A]]] ρ)`.
pub fn cluster_derivative_observable(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    w: &Cluster,
    t: Complex64,
    method: CommutatorMethod,
) -> Result<Complex64> {
    let setup = ObservableSetup::new(h, a, state)?;
    let m = w.size();
    let trace = nested_commutator_trace(&setup, w, method, &Caps::default())?;
    Ok((I * t).powu(m as u32) * trace / linalg::factorial(m))
}

/// Taylor data of `⟨A(t)⟩` in `t`, independent of `t` itself.
#[derive(Clone, Debug)]
pub struct ObservableSeries {
    /// `a_m` with `A_m t^m = (it)^m a_m`; `a_0 = ⟨A⟩`.
    pub taylor: Vec<Complex64>,
    /// Number of clusters evaluated per order (index 0 unused).
    pub clusters_per_order: Vec<usize>,
    /// Per-order `(W, tr(G_W ρ)/W!)`, if requested.
    pub cluster_terms: Vec<Vec<(Cluster, Complex64)>>,
    pub source: CoefficientSource,
    pub max_degree: usize,
    pub thresholds: Thresholds,
    pub norm: f64,
    /// `max_W |D_W| / ((2|t|)^m ‖A‖)` over evaluated clusters; at most 1.
    pub max_term_ratio: f64,
}

impl ObservableSeries {
    pub fn max_order(&self) -> usize {
        self.taylor.len() - 1
    }

    /// `A_l t^l` for `l = 0..=order`.
    pub fn coefficients(&self, t: Complex64, order: usize) -> Vec<Complex64> {
        let it = I * t;
        let mut power = ONE;
        self.taylor[..=order.min(self.max_order())]
            .iter()
            .map(|&a| {
                let c = a * power;
                power *= it;
                c
            })
            .collect()
    }

    pub fn partial_sum(&self, t: Complex64, order: usize) -> Complex64 {
        self.coefficients(t, order).into_iter().collect::<KahanSum>().value()
    }

    pub fn estimate(&self, t: f64, order: usize) -> Estimate {
        let t_star = self.thresholds.t_star;
        let bound = bounds::obs_truncation_bound(order, t, self.max_degree, self.norm).ok();
        Estimate {
            value: self.partial_sum(Complex64::new(t, 0.0), order),
            truncation_bound: bound.unwrap_or(f64::INFINITY),
            order,
            within_radius: bound.is_some(),
            threshold: t_star,
            wall_time: Duration::ZERO,
        }
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Taylor coefficients up to `max_order`.
pub fn observable_series(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    max_order: usize,
    options: &ObservableOptions,
) -> Result<ObservableSeries> {
    let setup = ObservableSetup::new(h, a, state)?;
    let a0 = product_expectation(&a.as_operator(h.d()), state)?;
    let source = resolve_source(&setup, max_order, options);
    let mut series = ObservableSeries {
        taylor: vec![a0],
        clusters_per_order: vec![0],
        cluster_terms: vec![Vec::new()],
        source,
        max_degree: setup.graph.max_degree(),
        thresholds: setup.thresholds(),
        norm: a.norm(),
        max_term_ratio: 0.0,
    };
    match source {
        CoefficientSource::LightCone => light_cone(&setup, max_order, &options.caps, &mut series)?,
        _ => cluster_route(&setup, max_order, options.keep_clusters, &mut series)?,
    }
    Ok(series)
}

fn a_component(setup: &ObservableSetup<'_>) -> Vec<usize> {
    let g = &setup.graph;
    let mut seen = vec![false; g.len()];
    seen[setup.a_index] = true;
    let mut stack = vec![setup.a_index];
    while let Some(x) = stack.pop() {
        for &y in g.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    (0..g.len())
        .filter(|&x| seen[x] && !(setup.phantom && x == setup.a_index))
        .collect()
}

fn resolve_source(
    setup: &ObservableSetup<'_>,
    max_order: usize,
    options: &ObservableOptions,
) -> CoefficientSource {
    match options.source {
        CoefficientSource::Auto => {
            let comp = a_component(setup);
            let sites = comp
                .iter()
                .fold(setup.a.support().to_vec(), |acc, &x| {
                    union_support(&acc, setup.graph.support(x))
                });
            let dense_ok = (setup.h.d() as f64).powi(sites.len() as i32)
                <= options.caps.max_dense_dim as f64;
            if max_order <= 12 || comp.len() <= 1 || !dense_ok {
                CoefficientSource::Clusters
            } else {
                CoefficientSource::LightCone
            }
        }
        s => s,
    }
}

fn cluster_route(
    setup: &ObservableSetup<'_>,
    max_order: usize,
    keep: bool,
    series: &mut ObservableSeries,
) -> Result<()> {
    let mut words = WordSums::new(setup.state, &setup.graph, &setup.matrices, None);
    let ln_norm = setup.a.norm().ln();
    for m in 1..=max_order {
        let list = setup.clusters(m)?;
        words.ensure(&list);
        let words_ref = &words;
        let values: Vec<Complex64> = list
            .par_iter()
            .map(|w| split_sum(words_ref, w, setup.a))
            .collect();
        let mut acc = KahanSum::new();
        for (w, &v) in list.iter().zip(&values) {
            acc.add(v * w.lambda_power(&setup.coefficients));
            if v != ZERO {
                // |D_W| / ((2|t|)^m ‖A‖) = W! |v| / (2^m ‖A‖).
                let ln_w_fact: f64 = w.parts().iter().map(|&(_, k)| ln_factorial(k)).sum();
                let ratio = (ln_w_fact + v.norm().ln() - m as f64 * 2f64.ln() - ln_norm).exp();
                series.max_term_ratio = series.max_term_ratio.max(ratio);
            }
        }
        series.taylor.push(acc.value());
        series.clusters_per_order.push(list.len());
        series.cluster_terms.push(if keep {
            list.into_iter().zip(values).collect()
        } else {
            Vec::new()
        });
    }
    Ok(())
}

fn light_cone(
    setup: &ObservableSetup<'_>,
    max_order: usize,
    caps: &Caps,
    series: &mut ObservableSeries,
) -> Result<()> {
    let d = setup.h.d();
    let comp = a_component(setup);
    let sites = comp.iter().fold(setup.a.support().to_vec(), |acc, &x| {
        union_support(&acc, setup.graph.support(x))
    });
    let dim = (d as f64).powi(sites.len() as i32);
    if dim > caps.max_dense_dim as f64 {
        return Err(Error::SystemTooLarge {
            dim,
            cap: caps.max_dense_dim,
        });
    }
    let rho = setup.state.reduced(&sites);
    let embs: Vec<Embedding> = comp
        .iter()
        .map(|&x| Embedding::new(&sites, setup.graph.support(x), d, |_| 1))
        .collect::<Result<_>>()?;
    let transposed: Vec<CMatrix> = comp.iter().map(|&x| setup.matrices[x].transpose()).collect();
    let left: Vec<_> = comp
        .iter()
        .zip(&embs)
        .map(|(&x, e)| (e, &setup.matrices[x], setup.coefficients[x]))
        .collect();
    let right: Vec<_> = comp
        .iter()
        .zip(&embs)
        .zip(&transposed)
        .map(|((&x, e), ht)| (e, ht, setup.coefficients[x]))
        .collect();
    let mut n = ops::embed_operator(setup.a.matrix(), setup.a.support(), &sites, d)?;
    for l in 1..=max_order {
        // [H, N] = H N − (Hᵀ Nᵀ)ᵀ.
        let hn = ops::sum_left_products(&left, &n);
        let nh = ops::sum_left_products(&right, &n.transpose()).transpose();
        n = (hn - nh).unscale(l as f64);
        series.taylor.push(linalg::trace_product(&n, &rho));
        series.clusters_per_order.push(0);
        series.cluster_terms.push(Vec::new());
    }
    Ok(())
}

/// `⟨A(0)⟩ + Σ_{m≤M} Σ_{W∈𝒢_m^A} (λ^W/W!) D_W⟨A(t)⟩` with its certificate.
pub fn expand_observable(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    t: f64,
    order: usize,
) -> Result<Estimate> {
    expand_observable_with(h, a, state, t, order, &ObservableOptions::default())
}

pub fn expand_observable_with(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    t: f64,
    order: usize,
    options: &ObservableOptions,
) -> Result<Estimate> {
    let start = Instant::now();
    let series = observable_series(h, a, state, order, options)?;
    let mut est = series.estimate(t, order);
    est.wall_time = start.elapsed();
    Ok(est)
}

/// `A_l t^l` for `l = 0..=M`.
pub fn taylor_coefficients_observable(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    t: f64,
    order: usize,
) -> Result<Vec<Complex64>> {
    let series = observable_series(h, a, state, order, &ObservableOptions::default())?;
    Ok(series.coefficients(Complex64::new(t, 0.0), order))
}

/// Conformal reparametrization `t → t φ(z)` with
/// `φ(z) = log(1 − z/R′) / log(1 − 1/R′)`, mapping the unit disk into a
/// strip around the real axis where the expansion converges.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationPlan {
    pub t: f64,
    pub eta: f64,
    pub r_prime: f64,
    pub w: f64,
    pub order: usize,
    /// `φ_1..φ_M`.
    pub phi: Vec<f64>,
}

pub const DEFAULT_ETA: f64 = 0.5;

impl ContinuationPlan {
    pub fn new(t: f64, t_star: f64, epsilon: f64, degree: usize) -> Result<Self> {
        Self::with_eta(t, t_star, epsilon, degree, DEFAULT_ETA)
    }

    pub fn with_eta(t: f64, t_star: f64, epsilon: f64, degree: usize, eta: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::EpsilonNonpositive(epsilon));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::MalformedSpec(format!("eta = {eta} outside (0, 1)")));
        }
        if !t.is_finite() {
            return Err(Error::MalformedSpec(format!("time {t} is not finite")));
        }
        let required = Self::required_order(t, t_star, epsilon, degree, eta);
        if t == 0.0 {
            return Ok(ContinuationPlan {
                t,
                eta,
                r_prime: f64::INFINITY,
                w: f64::INFINITY,
                order: 0,
                phi: Vec::new(),
            });
        }
        let w = eta * t_star / t.abs();
        let r_prime = 1.0 / (-(-std::f64::consts::PI / (2.0 * w)).exp_m1());
        if required > usize::MAX as f64 / 2.0 {
            return Err(Error::PlanInfeasible {
                required,
                cap: usize::MAX,
            });
        }
        let order = required as usize;
        let log_term = (-1.0 / r_prime).ln_1p();
        let phi = (1..=order)
            .map(|l| -(-(l as f64) * r_prime.ln()).exp() / (l as f64 * log_term))
            .collect();
        Ok(ContinuationPlan {
            t,
            eta,
            r_prime,
            w,
            order,
            phi,
        })
    }

    /// The smallest integer exceeding
    /// `e^{π|t|/(2ηt*)} · log(2e𝔡/((1−η)ε) · e^{π|t|/(2ηt*)})`, at least 1.
    pub fn required_order(t: f64, t_star: f64, epsilon: f64, degree: usize, eta: f64) -> f64 {
        let growth = (std::f64::consts::PI * t.abs() / (2.0 * eta * t_star)).exp();
        let d = degree.max(1) as f64;
        let x = growth * (2.0 * std::f64::consts::E * d / ((1.0 - eta) * epsilon) * growth).ln();
        (x.floor() + 1.0).max(1.0)
    }

    /// `Σ_{l≤M} φ_l`, which tends to `φ(1) = 1`.
    pub fn phi_at_one(&self) -> f64 {
        self.phi.iter().rev().sum()
    }

    /// Upper bound on `Σ_{l>M} φ_l`.
    pub fn phi_tail_bound(&self) -> f64 {
        if self.phi.is_empty() {
            return if self.t == 0.0 { 0.0 } else { 1.0 };
        }
        let m = self.order as f64 + 1.0;
        let log_term = -(-1.0 / self.r_prime).ln_1p();
        (-m * self.r_prime.ln()).exp() / (m * log_term * (1.0 - 1.0 / self.r_prime))
    }

    /// `Σ_{k≤M} c_k` with `c_k = Σ_l A_l t^l [z^k] φ(z)^l`, given
    /// `coefficients[l] = A_l t^l`. Uses the recurrence
    /// `r(k+1,l) = (k r(k,l) + (l/L) r(k,l−1)) / ((k+1) R′)` for
    /// `r(k,l) = [z^k] φ^l`, `L = −log(1 − 1/R′)`.
    pub fn compose(&self, coefficients: &[Complex64]) -> Complex64 {
        let mut total = KahanSum::new();
        total.add(coefficients[0]);
        if self.order == 0 {
            return total.value();
        }
        let big_l = -(-1.0 / self.r_prime).ln_1p();
        let inv_r = 1.0 / self.r_prime;
        let max_l = self.order.min(coefficients.len() - 1);
        // row[l] = r(k, l) for the current k.
        let mut row = vec![0.0f64; max_l + 1];
        row[0] = 1.0;
        for k in 0..self.order {
            let kf = k as f64;
            let mut next = vec![0.0f64; max_l + 1];
            for l in 1..=max_l.min(k + 1) {
                next[l] = inv_r * (kf * row[l] + l as f64 / big_l * row[l - 1]) / (kf + 1.0);
            }
            row = next;
            let mut c = KahanSum::new();
            for l in 1..=max_l.min(k + 1) {
                if row[l] != 0.0 {
                    c.add(coefficients[l] * row[l]);
                }
            }
            total.add(c.value());
        }
        total.value()
    }

    /// Same as [`compose`](Self::compose) by iterated truncated polynomial
    /// multiplication of `φ`; `O(M³)`, for cross-checks.
    pub fn compose_by_powers(&self, coefficients: &[Complex64]) -> Complex64 {
        let m = self.order;
        let mut total = KahanSum::new();
        total.add(coefficients[0]);
        let mut power = vec![0.0f64; m + 1];
        power[0] = 1.0;
        for l in 1..=m.min(coefficients.len() - 1) {
            let mut next = vec![0.0f64; m + 1];
            for (i, &p) in power.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for j in 1..=m - i {
                    next[i + j] += p * self.phi[j - 1];
                }
            }
            power = next;
            let s: f64 = power.iter().sum();
            total.add(coefficients[l] * s);
        }
        total.value()
    }
}

pub fn plan_continuation(t: f64, t_star: f64, epsilon: f64, degree: usize) -> Result<ContinuationPlan> {
    ContinuationPlan::new(t, t_star, epsilon, degree)
}

#[derive(Clone, Debug)]
pub struct Continuation {
    pub estimate: Estimate,
    pub plan: ContinuationPlan,
    pub source: CoefficientSource,
    pub max_degree: usize,
}

/// `⟨A(t)⟩` at any real `t` within `ε‖A‖`.
pub fn continue_observable(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    t: f64,
    epsilon: f64,
) -> Result<Continuation> {
    continue_observable_with(h, a, state, t, epsilon, &ObservableOptions::default())
}

pub fn continue_observable_with(
    h: &LocalHamiltonian,
    a: &Observable,
    state: &ProductState,
    t: f64,
    epsilon: f64,
    options: &ObservableOptions,
) -> Result<Continuation> {
    let start = Instant::now();
    let setup = ObservableSetup::new(h, a, state)?;
    let th = setup.thresholds();
    let degree = setup.graph.effective_degree();
    let required = ContinuationPlan::required_order(t, th.t_star, epsilon, degree, DEFAULT_ETA);
    if epsilon > 0.0 && required > options.caps.max_continuation_order as f64 {
        return Err(Error::PlanInfeasible {
            required,
            cap: options.caps.max_continuation_order,
        });
    }
    let plan = ContinuationPlan::new(t, th.t_star, epsilon, degree)?;
    drop(setup);
    let series = observable_series(h, a, state, plan.order, options)?;
    let coefficients = series.coefficients(Complex64::new(t, 0.0), plan.order);
    let value = plan.compose(&coefficients);
    Ok(Continuation {
        estimate: Estimate {
            value,
            truncation_bound: epsilon * a.norm(),
            order: plan.order,
            within_radius: true,
            threshold: th.t_star,
            wall_time: start.elapsed(),
        },
        plan,
        source: series.source,
        max_degree: series.max_degree,
    })
}
