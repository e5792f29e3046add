//! Cluster expansion of the log Loschmidt echo.
//!
//! For a connected cluster `W` of size `m`,
//!
//! ```text
//! D_W log L(t) = (−it)^m Σ_{P ∈ 𝒫_c(W)} (−1)^{|P|−1} N_P(W) T_{G̃_P}(1, 0) Π_{V∈P} ⟨h^V⟩_s,
//! ```
//!
//! and `D_W log L = 0` whenever `W` is disconnected. The generalized echo
//! `L({t_l}) = tr(e^{−iH⁽¹⁾t_1} ⋯ e^{−iH⁽ᴷ⁾t_K} ρ)` uses the same formula on
//! labeled terms `(X, l)`, with `(−it)^m` replaced by `Π_l (−it_l)^{m_l}` and
//! `⟨h^V⟩_s` by the label-ordered product of per-label symmetrized products.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bounds::{self, Thresholds};
use crate::clusters::{self, Cluster};
use crate::graphs::{InteractionGraph, TutteCache};
use crate::linalg::{self, CMatrix, Complex64, KahanSum, I, ONE, ZERO};
use crate::model::{union_support, LocalHamiltonian, ProductState};
use crate::obs_dynamics::{CommutatorMethod, Estimate};
use crate::wordsums::{naive_permutation_average, permutation_average, WordSums};
use crate::{Caps, Error, Result};

/// `K` Hamiltonians on the same sites and their evolution times, applied
/// left to right: `L = tr(e^{−iH⁽¹⁾t_1} ⋯ e^{−iH⁽ᴷ⁾t_K} ρ)`.
#[derive(Clone, Debug)]
pub struct MultiEchoSpec {
    hamiltonians: Vec<LocalHamiltonian>,
    times: Vec<Complex64>,
}

impl MultiEchoSpec {
    pub fn new(hamiltonians: Vec<LocalHamiltonian>, times: Vec<Complex64>) -> Result<Self> {
        if hamiltonians.is_empty() {
            return Err(Error::IncompatibleHamiltonians("no Hamiltonians given".into()));
        }
        if hamiltonians.len() != times.len() {
            return Err(Error::IncompatibleHamiltonians(format!(
                "{} Hamiltonians but {} times",
                hamiltonians.len(),
                times.len()
            )));
        }
        let (n, d) = (hamiltonians[0].n(), hamiltonians[0].d());
        if let Some(h) = hamiltonians.iter().find(|h| h.n() != n || h.d() != d) {
            return Err(Error::IncompatibleHamiltonians(format!(
                "sites (n = {}, d = {}) differ from (n = {n}, d = {d})",
                h.n(),
                h.d()
            )));
        }
        if let Some(t) = times.iter().find(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::MalformedSpec(format!("time {t} is not finite")));
        }
        Ok(MultiEchoSpec {
            hamiltonians,
            times,
        })
    }

    pub fn single(h: LocalHamiltonian, t: Complex64) -> Self {
        MultiEchoSpec {
            hamiltonians: vec![h],
            times: vec![t],
        }
    }

    pub fn hamiltonians(&self) -> &[LocalHamiltonian] {
        &self.hamiltonians
    }

    pub fn times(&self) -> &[Complex64] {
        &self.times
    }

    pub fn k(&self) -> usize {
        self.hamiltonians.len()
    }

    pub fn n(&self) -> usize {
        self.hamiltonians[0].n()
    }

    pub fn d(&self) -> usize {
        self.hamiltonians[0].d()
    }
}

/// Labeled term list: one vertex per `(X, l)`.
pub(crate) struct EchoSystem {
    pub graph: InteractionGraph,
    pub coefficients: Vec<f64>,
    pub matrices: Vec<CMatrix>,
    pub labels: Vec<usize>,
    pub k: usize,
    pub d: usize,
    /// `|S|` of the union of all supports.
    pub n_terms: usize,
    /// `𝔡` of the interaction graph on the union of supports.
    pub max_degree: usize,
}

impl EchoSystem {
    pub fn single(h: &LocalHamiltonian) -> Self {
        let graph = InteractionGraph::build(h);
        let max_degree = graph.max_degree();
        EchoSystem {
            coefficients: h.terms().iter().map(|t| t.coefficient).collect(),
            matrices: h.terms().iter().map(|t| t.matrix.clone()).collect(),
            labels: vec![0; h.len()],
            k: 1,
            d: h.d(),
            n_terms: h.len(),
            max_degree,
            graph,
        }
    }

    pub fn labeled(hs: &[LocalHamiltonian]) -> Self {
        let mut supports = Vec::new();
        let mut coefficients = Vec::new();
        let mut matrices = Vec::new();
        let mut labels = Vec::new();
        for (l, h) in hs.iter().enumerate() {
            for t in h.terms() {
                supports.push(t.support.clone());
                coefficients.push(t.coefficient);
                matrices.push(t.matrix.clone());
                labels.push(l);
            }
        }
        let mut union: Vec<Vec<usize>> = supports.clone();
        union.sort();
        union.dedup();
        let union_graph = InteractionGraph::from_supports(union);
        let graph = InteractionGraph::from_supports(supports);
        let k = hs.len();
        let max_degree = union_graph.max_degree();
        debug_assert!(graph.max_degree() <= (k * (max_degree + 1)).saturating_sub(1));
        EchoSystem {
            graph,
            coefficients,
            matrices,
            labels,
            k,
            d: hs[0].d(),
            n_terms: union_graph.len(),
            max_degree,
        }
    }

    fn check_cluster(&self, w: &Cluster) -> Result<()> {
        if w.is_empty() {
            return Err(Error::SizeZero);
        }
        if let Some(x) = w.terms().find(|&x| x >= self.graph.len()) {
            return Err(Error::MalformedSpec(format!("term index {x} out of range")));
        }
        Ok(())
    }

    /// `Π_l (−it_l)^{m_l(W)}`.
    fn time_factor(&self, w: &Cluster, times: &[Complex64]) -> Complex64 {
        w.parts().iter().fold(ONE, |acc, &(x, k)| {
            acc * (-I * times[self.labels[x]]).powu(k as u32)
        })
    }

    /// Label-ordered symmetrized product on dense matrices over `supp(V)`.
    fn dense_expectation(&self, v: &Cluster, state: &ProductState, naive: bool) -> Result<Complex64> {
        let u = v.support(&self.graph);
        let dim = self.d.pow(u.len() as u32);
        let mut product = linalg::identity(dim);
        for l in 0..self.k {
            let units: Vec<CMatrix> = v
                .units()
                .into_iter()
                .filter(|&x| self.labels[x] == l)
                .map(|x| crate::ops::embed_operator(&self.matrices[x], self.graph.support(x), &u, self.d))
                .collect::<Result<_>>()?;
            if units.is_empty() {
                continue;
            }
            let avg = if naive {
                naive_permutation_average(&units, dim)
            } else {
                permutation_average(&units, dim)
            };
            product *= avg;
        }
        Ok(linalg::trace_product(&product, &state.reduced(&u)))
    }
}

fn check_state(n: usize, d: usize, state: &ProductState) -> Result<()> {
    if state.n() != n || state.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "state has n = {}, d = {}; Hamiltonian has n = {n}, d = {d}",
            state.n(),
            state.d()
        )));
    }
    Ok(())
}

/// `⟨h^V⟩_s = (1/|V|!) Σ_σ tr(h_σ(1) ⋯ h_σ(|V|) ρ)` over orderings of the units of `V`.
pub fn symmetrized_expectation(
    h: &LocalHamiltonian,
    v: &Cluster,
    state: &ProductState,
    method: CommutatorMethod,
) -> Result<Complex64> {
    check_state(h.n(), h.d(), state)?;
    let sys = EchoSystem::single(h);
    sys.check_cluster(v)?;
    let caps = Caps::default();
    let m = v.size();
    match method {
        CommutatorMethod::Naive => {
            if m > caps.max_naive_size {
                return Err(Error::SizeCap {
                    size: m,
                    cap: caps.max_naive_size,
                });
            }
            sys.dense_expectation(v, state, true)
        }
        CommutatorMethod::InclusionExclusion => {
            if m > caps.max_partition_size {
                return Err(Error::SizeCap {
                    size: m,
                    cap: caps.max_partition_size,
                });
            }
            sys.dense_expectation(v, state, false)
        }
        CommutatorMethod::WordSums => {
            let mut words = WordSums::new(state, &sys.graph, &sys.matrices, None);
            let comps = v.components(&sys.graph);
            words.ensure(&comps);
            Ok(comps
                .iter()
                .map(|c| words.overlap(c) * c.factorial() as f64)
                .product())
        }
    }
}

/// `Σ_{P∈𝒫_c(W)} (−1)^{|P|−1} N_P T_{G̃_P}(1,0) Π_V E(V)`, with `E(V)` read
/// from prepared word sums.
fn partition_sum(
    graph: &InteractionGraph,
    words: &WordSums<'_>,
    w: &Cluster,
    tutte: &mut TutteCache,
    caps: &Caps,
) -> Result<Complex64> {
    let parts = clusters::labeled_connected_partitions(w, graph, caps.max_partition_size)?;
    let mut acc = KahanSum::new();
    for (p, n_p) in parts {
        if p.len() > caps.max_tutte_vertices {
            return Err(Error::GraphTooLarge {
                vertices: p.len(),
                cap: caps.max_tutte_vertices,
            });
        }
        let t10 = if p.len() == 1 {
            1
        } else {
            tutte.t10(p.partition_graph_masks(graph))
        };
        if t10 == 0 {
            continue;
        }
        let mut prod = ONE;
        for v in p.parts() {
            prod *= words.overlap(v) * v.factorial() as f64;
        }
        let sign = if p.len() % 2 == 1 { 1.0 } else { -1.0 };
        acc.add(prod * (sign * n_p as f64 * t10 as f64));
    }
    Ok(acc.value())
}

/// `D_W log L(t)` for a cluster of terms of `h`.
pub fn cluster_derivative_logl(
    h: &LocalHamiltonian,
    w: &Cluster,
    state: &ProductState,
    t: Complex64,
) -> Result<Complex64> {
    check_state(h.n(), h.d(), state)?;
    let sys = EchoSystem::single(h);
    sys.check_cluster(w)?;
    if !w.is_connected(&sys.graph) {
        return Ok(ZERO);
    }
    let caps = Caps::default();
    if w.size() > caps.max_partition_size {
        return Err(Error::SizeCap {
            size: w.size(),
            cap: caps.max_partition_size,
        });
    }
    let mut words = WordSums::new(state, &sys.graph, &sys.matrices, None);
    words.ensure([w]);
    let s = partition_sum(&sys.graph, &words, w, &mut TutteCache::default(), &caps)?;
    Ok((-I * t).powu(w.size() as u32) * s)
}

/// `D_W log L` from the moment–cumulant formula over set partitions of the
/// units of `W`, each block's `D_B L` evaluated by explicit permutation sums.
/// Holds for connected and disconnected `W` alike.
pub fn cluster_derivative_logl_naive(
    h: &LocalHamiltonian,
    w: &Cluster,
    state: &ProductState,
    t: Complex64,
) -> Result<Complex64> {
    check_state(h.n(), h.d(), state)?;
    let sys = EchoSystem::single(h);
    sys.check_cluster(w)?;
    naive_cumulant(&sys, w, state, &[t])
}

/// Multi-echo version of [`cluster_derivative_logl_naive`]; cluster indices
/// run over the concatenated term lists of `spec`.
pub fn cluster_derivative_logl_multi_naive(
    spec: &MultiEchoSpec,
    w: &Cluster,
    state: &ProductState,
) -> Result<Complex64> {
    check_state(spec.n(), spec.d(), state)?;
    let sys = EchoSystem::labeled(spec.hamiltonians());
    sys.check_cluster(w)?;
    naive_cumulant(&sys, w, state, spec.times())
}

/// Multi-echo `D_W log L` from the partition formula.
pub fn cluster_derivative_logl_multi(
    spec: &MultiEchoSpec,
    w: &Cluster,
    state: &ProductState,
) -> Result<Complex64> {
    check_state(spec.n(), spec.d(), state)?;
    let sys = EchoSystem::labeled(spec.hamiltonians());
    sys.check_cluster(w)?;
    if !w.is_connected(&sys.graph) {
        return Ok(ZERO);
    }
    let caps = Caps::default();
    let mut words = WordSums::new(state, &sys.graph, &sys.matrices, Some(&sys.labels));
    words.ensure([w]);
    let s = partition_sum(&sys.graph, &words, w, &mut TutteCache::default(), &caps)?;
    Ok(sys.time_factor(w, spec.times()) * s)
}

fn naive_cumulant(
    sys: &EchoSystem,
    w: &Cluster,
    state: &ProductState,
    times: &[Complex64],
) -> Result<Complex64> {
    let caps = Caps::default();
    let m = w.size();
    if m > caps.max_naive_size {
        return Err(Error::SizeCap {
            size: m,
            cap: caps.max_naive_size,
        });
    }
    let units = w.units();
    // D_B L for every nonempty subset B of units.
    let full = (1u32 << m) - 1;
    let mut moments = vec![ZERO; full as usize + 1];
    for mask in 1..=full {
        let block: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| units[i]).collect();
        let b = Cluster::from_units(&block);
        moments[mask as usize] = sys.time_factor(&b, times) * sys.dense_expectation(&b, state, true)?;
    }
    fn rec(remaining: u32, blocks: usize, prod: Complex64, moments: &[Complex64], acc: &mut KahanSum) {
        if remaining == 0 {
            let sign = if blocks % 2 == 1 { 1.0 } else { -1.0 };
            acc.add(prod * (sign * linalg::factorial(blocks - 1)));
            return;
        }
        let anchor = 1u32 << remaining.trailing_zeros();
        let rest = remaining & !anchor;
        let mut sub = rest;
        loop {
            let block = anchor | sub;
            rec(remaining & !block, blocks + 1, prod * moments[block as usize], moments, acc);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut acc = KahanSum::new();
    rec(full, 0, ONE, &moments, &mut acc);
    Ok(acc.value())
}

/// `t`-independent Taylor data of `log L(t) = Σ_m c_m (−it)^m`.
#[derive(Clone, Debug)]
pub struct LogEchoSeries {
    /// `c_m = Σ_{W∈𝒢_m} λ^W S_W / W!`; `c_0 = 0`.
    pub coefficients: Vec<Complex64>,
    pub clusters_per_order: Vec<usize>,
    pub n_terms: usize,
    pub max_degree: usize,
    pub thresholds: Thresholds,
    /// `max_W |S_W| / (W! [2e(𝔡+1)]^m)` over evaluated clusters; at most 1.
    pub max_term_ratio: f64,
    /// Per-order `(W, S_W)`, if requested.
    pub cluster_terms: Vec<Vec<(Cluster, Complex64)>>,
}

impl LogEchoSeries {
    pub fn max_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Order-`m` totals `c_m (−it)^m` for `m = 0..=order`.
    pub fn order_totals(&self, t: Complex64, order: usize) -> Vec<Complex64> {
        let z = -I * t;
        let mut power = ONE;
        self.coefficients[..=order.min(self.max_order())]
            .iter()
            .map(|&c| {
                let v = if c == ZERO { ZERO } else { c * power };
                power *= z;
                v
            })
            .collect()
    }

    pub fn value(&self, t: Complex64, order: usize) -> Complex64 {
        self.order_totals(t, order).into_iter().collect::<KahanSum>().value()
    }

    pub fn estimate(&self, t: Complex64, order: usize) -> Estimate {
        let bound = bounds::loschmidt_truncation_bound(order, t.norm(), self.max_degree, self.n_terms).ok();
        Estimate {
            value: self.value(t, order),
            truncation_bound: bound.unwrap_or(f64::INFINITY),
            order,
            within_radius: bound.is_some(),
            threshold: self.thresholds.t_star_l,
            wall_time: Duration::ZERO,
        }
    }
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct LogEchoOptions {
    pub caps: Caps,
    pub keep_clusters: bool,
}


/// Per-order `Σ_{W∈𝒢_m} λ^W S_W / W!` and the term-ratio statistic; the
/// caller applies the time factors.
struct OrderData {
    totals: Vec<Vec<(usize, Complex64)>>,
    clusters_per_order: Vec<usize>,
    max_term_ratio: f64,
    cluster_terms: Vec<Vec<(Cluster, Complex64)>>,
}

/// Sweeps `𝒢_m` for `m ≤ max_order`. `group(W)` splits each order's sum by
/// a key (for multi-echoes, the label composition of `W`).
fn sweep(
    sys: &EchoSystem,
    state: &ProductState,
    max_order: usize,
    options: &LogEchoOptions,
    group: impl Fn(&Cluster) -> usize + Sync,
) -> Result<OrderData> {
    let labels = (sys.k > 1).then_some(sys.labels.as_slice());
    let mut words = WordSums::new(state, &sys.graph, &sys.matrices, labels);
    let ratio_base = 2.0 * std::f64::consts::E * (sys.max_degree as f64 + 1.0);
    let mut data = OrderData {
        totals: vec![Vec::new()],
        clusters_per_order: vec![0],
        max_term_ratio: 0.0,
        cluster_terms: vec![Vec::new()],
    };
    for m in 1..=max_order {
        if m > options.caps.max_partition_size {
            return Err(Error::SizeCap {
                size: m,
                cap: options.caps.max_partition_size,
            });
        }
        let list = clusters::enumerate_all_connected_clusters(&sys.graph, m)?;
        words.ensure(&list);
        let words_ref = &words;
        let values: Vec<Complex64> = list
            .par_iter()
            .map_init(TutteCache::default, |tutte, w| {
                partition_sum(&sys.graph, words_ref, w, tutte, &options.caps)
            })
            .collect::<Result<_>>()?;
        let mut groups: std::collections::BTreeMap<usize, KahanSum> = Default::default();
        for (w, &s) in list.iter().zip(&values) {
            let wf = w.factorial() as f64;
            groups
                .entry(group(w))
                .or_default()
                .add(s * (w.lambda_power(&sys.coefficients) / wf));
            if s != ZERO {
                let ratio = s.norm() / wf / ratio_base.powi(m as i32);
                data.max_term_ratio = data.max_term_ratio.max(ratio);
            }
        }
        data.totals
            .push(groups.into_iter().map(|(k, s)| (k, s.value())).collect());
        data.clusters_per_order.push(list.len());
        data.cluster_terms.push(if options.keep_clusters {
            list.into_iter().zip(values).collect()
        } else {
            Vec::new()
        });
    }
    Ok(data)
}

pub fn log_echo_series(
    h: &LocalHamiltonian,
    state: &ProductState,
    max_order: usize,
    options: &LogEchoOptions,
) -> Result<LogEchoSeries> {
    check_state(h.n(), h.d(), state)?;
    let sys = EchoSystem::single(h);
    let data = sweep(&sys, state, max_order, options, |_| 0)?;
    let coefficients = data
        .totals
        .iter()
        .map(|g| g.iter().map(|&(_, s)| s).sum())
        .collect();
    Ok(LogEchoSeries {
        coefficients,
        clusters_per_order: data.clusters_per_order,
        n_terms: sys.n_terms,
        max_degree: sys.max_degree,
        thresholds: bounds::thresholds(sys.max_degree),
        max_term_ratio: data.max_term_ratio,
        cluster_terms: data.cluster_terms,
    })
}

/// `Σ_{m≤M} Σ_{W∈𝒢_m} (λ^W/W!) D_W log L(t)` with its certificate.
pub fn expand_logl(h: &LocalHamiltonian, state: &ProductState, t: Complex64, order: usize) -> Result<Estimate> {
    let start = Instant::now();
    let series = log_echo_series(h, state, order, &LogEchoOptions::default())?;
    let mut est = series.estimate(t, order);
    est.wall_time = start.elapsed();
    Ok(est)
}

/// Truncated generalized-echo expansion with its data.
#[derive(Clone, Debug)]
pub struct MultiEchoSeries {
    /// Order-`m` totals, time factors included.
    pub order_totals: Vec<Complex64>,
    pub clusters_per_order: Vec<usize>,
    /// `K Σ_l |t_l| / t*_L`.
    pub tau: f64,
    pub n_terms: usize,
    pub max_degree: usize,
    /// Maximum degree of the labeled interaction graph.
    pub labeled_degree: usize,
    pub thresholds: Thresholds,
    pub max_term_ratio: f64,
}

impl MultiEchoSeries {
    pub fn value(&self) -> Complex64 {
        self.order_totals.iter().copied().collect::<KahanSum>().value()
    }

    pub fn estimate(&self) -> Estimate {
        let order = self.order_totals.len() - 1;
        let bound = bounds::multi_truncation_bound(order, self.tau, self.n_terms).ok();
        Estimate {
            value: self.value(),
            truncation_bound: bound.unwrap_or(f64::INFINITY),
            order,
            within_radius: bound.is_some(),
            threshold: self.thresholds.t_star_l,
            wall_time: Duration::ZERO,
        }
    }
}

pub fn multi_echo_series(
    spec: &MultiEchoSpec,
    state: &ProductState,
    max_order: usize,
    options: &LogEchoOptions,
) -> Result<MultiEchoSeries> {
    check_state(spec.n(), spec.d(), state)?;
    let sys = EchoSystem::labeled(spec.hamiltonians());
    let k = sys.k;
    // Group by label multiplicities (m_1, …, m_K), encoded in base (max_order + 1).
    let base = max_order + 1;
    let labels = &sys.labels;
    let data = sweep(&sys, state, max_order, options, |w| {
        let mut counts = vec![0usize; k];
        for &(x, c) in w.parts() {
            counts[labels[x]] += c;
        }
        counts.iter().fold(0, |acc, &c| acc * base + c)
    })?;
    let times = spec.times();
    let order_totals = data
        .totals
        .iter()
        .map(|groups| {
            groups
                .iter()
                .map(|&(key, s)| {
                    let mut rem = key;
                    let mut factor = ONE;
                    for l in (0..k).rev() {
                        let c = rem % base;
                        rem /= base;
                        factor *= (-I * times[l]).powu(c as u32);
                    }
                    if s == ZERO { ZERO } else { s * factor }
                })
                .collect::<KahanSum>()
                .value()
        })
        .collect();
    let th = bounds::thresholds(sys.max_degree);
    let tau = k as f64 * times.iter().map(|t| t.norm()).sum::<f64>() / th.t_star_l;
    Ok(MultiEchoSeries {
        order_totals,
        clusters_per_order: data.clusters_per_order,
        tau,
        n_terms: sys.n_terms,
        max_degree: sys.max_degree,
        labeled_degree: sys.graph.max_degree(),
        thresholds: th,
        max_term_ratio: data.max_term_ratio,
    })
}

pub fn expand_logl_multi(spec: &MultiEchoSpec, state: &ProductState, order: usize) -> Result<Estimate> {
    let start = Instant::now();
    let series = multi_echo_series(spec, state, order, &LogEchoOptions::default())?;
    let mut est = series.estimate();
    est.wall_time = start.elapsed();
    Ok(est)
}

/// `log L(t)/n` split into real and imaginary parts, with the per-site bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteRate {
    pub re: f64,
    pub im: f64,
    pub truncation_bound: f64,
    pub within_radius: bool,
}

pub fn per_site_rate(h: &LocalHamiltonian, state: &ProductState, t: f64, order: usize) -> Result<SiteRate> {
    let est = expand_logl(h, state, Complex64::new(t, 0.0), order)?;
    let n = h.n() as f64;
    Ok(SiteRate {
        re: est.value.re / n,
        im: est.value.im / n,
        truncation_bound: est.truncation_bound / n,
        within_radius: est.within_radius,
    })
}

/// `per_site_rate` on a grid of times, reusing one series.
pub fn per_site_rates(
    h: &LocalHamiltonian,
    state: &ProductState,
    times: &[f64],
    order: usize,
) -> Result<Vec<SiteRate>> {
    let series = log_echo_series(h, state, order, &LogEchoOptions::default())?;
    let n = h.n() as f64;
    Ok(times
        .iter()
        .map(|&t| {
            let est = series.estimate(Complex64::new(t, 0.0), order);
            SiteRate {
                re: est.value.re / n,
                im: est.value.im / n,
                truncation_bound: est.truncation_bound / n,
                within_radius: est.within_radius,
            }
        })
        .collect())
}

/// Union of the sites touched by `W`.
pub fn cluster_sites(h: &LocalHamiltonian, w: &Cluster) -> Vec<usize> {
    w.terms()
        .fold(Vec::new(), |acc, x| union_support(&acc, &h.terms()[x].support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, pauli_x, pauli_z};
    use crate::model::Term;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn two_terms_one_site() -> LocalHamiltonian {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Supports must differ, so the second term carries an identity on site 1.
        let hy = (pauli_x() + pauli_z()).scale(s).kronecker(&linalg::identity(2));
        LocalHamiltonian::new(
            2,
            2,
            vec![
                Term {
                    support: vec![0],
                    coefficient: 1.0,
                    matrix: pauli_x(),
                },
                Term {
                    support: vec![0, 1],
                    coefficient: 1.0,
                    matrix: hy,
                },
            ],
        )
        .unwrap()
    }

    const METHODS: [CommutatorMethod; 3] = [
        CommutatorMethod::Naive,
        CommutatorMethod::InclusionExclusion,
        CommutatorMethod::WordSums,
    ];

    #[test]
    fn symmetrized_examples() {
        let h = fixtures::single_qubit(1.0);
        let zero = ProductState::basis(2, &[0]).unwrap();
        for method in METHODS {
            let v = symmetrized_expectation(&h, &Cluster::single(0), &zero, method).unwrap();
            assert!(v.norm() < 1e-15);
            let v = symmetrized_expectation(&h, &Cluster::new([(0, 2)]), &fixtures::plus_y_state(), method)
                .unwrap();
            assert!((v - ONE).norm() < 1e-13);
        }
        let h = two_terms_one_site();
        let s = ProductState::basis(2, &[0, 0]).unwrap();
        for method in METHODS {
            let v = symmetrized_expectation(&h, &Cluster::new([(0, 1), (1, 1)]), &s, method).unwrap();
            assert!((v - real(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-13, "{method:?}: {v}");
        }
    }

    #[test]
    fn derivative_examples() {
        let h = fixtures::single_qubit(1.0);
        let zero = ProductState::basis(2, &[0]).unwrap();
        let t = real(0.37);
        let d2 = cluster_derivative_logl(&h, &Cluster::new([(0, 2)]), &zero, t).unwrap();
        assert!((d2 - real(-0.37 * 0.37)).norm() < 1e-14);
        let d1 = cluster_derivative_logl(&h, &Cluster::single(0), &zero, t).unwrap();
        assert!(d1.norm() < 1e-15);
        let naive = cluster_derivative_logl_naive(&h, &Cluster::new([(0, 2)]), &zero, t).unwrap();
        assert!((naive - d2).norm() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = fixtures::random_two_local(4, &fixtures::chain_edges(4), &mut rng);
        let s = fixtures::random_mixed_product(4, 2, &mut rng);
        let d = cluster_derivative_logl(&h, &Cluster::single(1), &s, t).unwrap();
        let e = crate::model::product_expectation(
            &crate::model::DenseOperator::new(2, vec![1, 2], h.terms()[1].matrix.clone()).unwrap(),
            &s,
        )
        .unwrap();
        assert!((d - (-I * t) * e).norm() < 1e-14);
        let far = Cluster::new([(0, 1), (2, 1)]);
        assert_eq!(cluster_derivative_logl(&h, &far, &s, t).unwrap(), ZERO);
        assert!(cluster_derivative_logl_naive(&h, &far, &s, t).unwrap().norm() < 1e-14);
    }

    #[test]
    fn partition_formula_matches_cumulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = fixtures::random_two_local(4, &fixtures::expander_edges(4), &mut rng);
        let s = fixtures::random_mixed_product(4, 2, &mut rng);
        let g = InteractionGraph::build(&h);
        let t = Complex64::new(0.3, 0.1);
        for m in 1..=4 {
            for w in clusters::enumerate_all_connected_clusters(&g, m).unwrap().iter().step_by(7) {
                let a = cluster_derivative_logl(&h, w, &s, t).unwrap();
                let b = cluster_derivative_logl_naive(&h, w, &s, t).unwrap();
                assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()), "{w:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_qubit_log_cos() {
        let h = fixtures::single_qubit(1.0);
        let zero = ProductState::basis(2, &[0]).unwrap();
        let est = expand_logl(&h, &zero, real(0.1), 8).unwrap();
        assert!((est.value - real((0.1f64).cos().ln())).norm() < 1e-9);
        assert!((est.value.re - (-0.00500836)).abs() < 1e-8);
        let zero_t = expand_logl(&h, &zero, ZERO, 8).unwrap();
        assert_eq!(zero_t.value, ZERO);
        assert_eq!(zero_t.truncation_bound, 0.0);
        assert_eq!(expand_logl(&h, &zero, real(0.01), 0).unwrap().value, ZERO);
    }

    #[test]
    fn free_spins_rate_is_size_independent() {
        for n in [2, 3, 4] {
            let h = fixtures::free_spins(n, 1.0);
            let s = ProductState::basis(2, &vec![0; n]).unwrap();
            let r = per_site_rate(&h, &s, 0.02, 8).unwrap();
            assert!((r.re - (0.02f64).cos().ln()).abs() < 1e-12);
            assert!(r.im.abs() < 1e-15);
        }
    }

    #[test]
    fn conjugation_symmetry_and_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = fixtures::random_two_local(4, &fixtures::chain_edges(4), &mut rng);
        let s = fixtures::random_pure_product(4, 2, &mut rng);
        let series = log_echo_series(&h, &s, 5, &LogEchoOptions::default()).unwrap();
        let t = 0.003;
        let plus = series.value(real(t), 5);
        let minus = series.value(real(-t), 5);
        assert!((plus - minus.conj()).norm() < 1e-12);
        for (m, total) in series.order_totals(real(t), 5).iter().enumerate() {
            if m % 2 == 1 {
                assert!(total.re.abs() <= 1e-9 * (1.0 + total.norm()));
            } else {
                assert!(total.im.abs() <= 1e-9 * (1.0 + total.norm()));
            }
        }
        assert!(series.max_term_ratio <= 1.0);
    }

    #[test]
    fn single_label_multi_echo_reduces() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let h = fixtures::random_two_local(4, &fixtures::chain_edges(4), &mut rng);
        let s = fixtures::random_mixed_product(4, 2, &mut rng);
        let t = real(0.004);
        let a = expand_logl(&h, &s, t, 4).unwrap();
        let spec = MultiEchoSpec::new(vec![h.clone()], vec![t]).unwrap();
        let b = expand_logl_multi(&spec, &s, 4).unwrap();
        assert!((a.value - b.value).norm() < 1e-12);
        assert!((a.truncation_bound - b.truncation_bound).abs() < 1e-12);
    }

    #[test]
    fn labeled_partition_formula_matches_cumulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let h1 = fixtures::random_two_local(3, &fixtures::chain_edges(3), &mut rng);
        let h2 = fixtures::random_two_local(3, &fixtures::chain_edges(3), &mut rng);
        let spec = MultiEchoSpec::new(
            vec![h1, h2.clone(), h2],
            vec![real(0.2), Complex64::new(0.0, 0.1), real(-0.2)],
        )
        .unwrap();
        let s = fixtures::random_mixed_product(3, 2, &mut rng);
        let sys = EchoSystem::labeled(spec.hamiltonians());
        for m in 1..=4 {
            for w in clusters::enumerate_all_connected_clusters(&sys.graph, m).unwrap().iter().step_by(11) {
                let a = cluster_derivative_logl_multi(&spec, w, &s).unwrap();
                let b = cluster_derivative_logl_multi_naive(&spec, w, &s).unwrap();
                assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()), "{w:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn incompatible_hamiltonians_are_rejected() {
        let a = fixtures::single_qubit(1.0);
        let b = fixtures::free_spins(2, 1.0);
        assert!(matches!(
            MultiEchoSpec::new(vec![a.clone(), b], vec![ONE, ONE]),
            Err(Error::IncompatibleHamiltonians(_))
        ));
        assert!(MultiEchoSpec::new(vec![a], vec![ONE, ONE]).is_err());
    }
}
