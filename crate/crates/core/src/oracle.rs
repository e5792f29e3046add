//! Exact dense references for small systems.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::clusters::Cluster;
use crate::linalg::{self, CMatrix, Complex64, HermitianEigen, I};
use crate::loschmidt::MultiEchoSpec;
use crate::model::{LocalHamiltonian, Observable, ProductState};
use crate::{Caps, Error, Result};

/// `H` assembled on the full Hilbert space, with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct DenseSystem {
    n: usize,
    d: usize,
    hamiltonian: CMatrix,
    eigen: HermitianEigen,
}

fn check_dim(d: usize, sites: usize, cap: usize) -> Result<usize> {
    let dim = (d as f64).powi(sites as i32);
    if dim > cap as f64 {
        return Err(Error::SystemTooLarge { dim, cap });
    }
    Ok(dim as usize)
}

/// `Σ_X λ_X h_X` on the sites `target`, restricted to the terms in `terms`.
fn assemble(h: &LocalHamiltonian, terms: &[(usize, f64)], target: &[usize]) -> Result<CMatrix> {
    let dim = h.d().pow(target.len() as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for &(x, lambda) in terms {
        let t = &h.terms()[x];
        out += crate::ops::embed_operator(&t.matrix, &t.support, target, h.d())?.scale(lambda);
    }
    Ok(out)
}

impl DenseSystem {
    pub fn new(h: &LocalHamiltonian) -> Result<Self> {
        Self::with_caps(h, &Caps::default())
    }

    pub fn with_caps(h: &LocalHamiltonian, caps: &Caps) -> Result<Self> {
        check_dim(h.d(), h.n(), caps.max_dense_dim)?;
        let all: Vec<usize> = (0..h.n()).collect();
        let terms: Vec<(usize, f64)> = h.terms().iter().map(|t| t.coefficient).enumerate().collect();
        let hamiltonian = assemble(h, &terms, &all)?;
        let eigen = HermitianEigen::new(&hamiltonian);
        Ok(DenseSystem {
            n: h.n(),
            d: h.d(),
            hamiltonian,
            eigen,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// `e^{−iHt}`; `t = iν` gives `e^{νH}`.
    pub fn evolution(&self, t: Complex64) -> CMatrix {
        self.eigen.map(|e| (-I * t * e).exp())
    }

    /// `f(H)` for a real function of the spectrum.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.eigen.map(|e| Complex64::new(f(e), 0.0))
    }

    fn check_state(&self, state: &ProductState) -> Result<()> {
        if state.n() != self.n || state.d() != self.d {
            return Err(Error::DimensionMismatch("state and Hamiltonian differ in n or d".into()));
        }
        Ok(())
    }

    /// `tr(e^{iHt} A e^{−iHt} ρ)`.
    pub fn observable(&self, a: &Observable, state: &ProductState, t: f64) -> Result<Complex64> {
        self.check_state(state)?;
        let all: Vec<usize> = (0..self.n).collect();
        let a_full = crate::ops::embed_operator(a.matrix(), a.support(), &all, self.d)?;
        let rho_t = self.evolved_density(state, t)?;
        Ok(linalg::trace_product(&a_full, &rho_t))
    }

    /// `e^{−iHt} ρ e^{iHt}`.
    pub fn evolved_density(&self, state: &ProductState, t: f64) -> Result<CMatrix> {
        self.check_state(state)?;
        let u = self.evolution(Complex64::new(t, 0.0));
        Ok(&u * state.dense() * u.adjoint())
    }

    /// `|⟨Φ|e^{−iHt}|Φ⟩|` for a pure product state.
    pub fn fidelity(&self, state: &ProductState, t: f64) -> Result<f64> {
        self.check_state(state)?;
        let phi = state.dense_vector().ok_or(Error::MixedStateUnsupported)?;
        let u = self.evolution(Complex64::new(t, 0.0));
        Ok(phi.dotc(&(u * &phi)).norm())
    }
}

pub fn exact_observable(h: &LocalHamiltonian, a: &Observable, state: &ProductState, t: f64) -> Result<Complex64> {
    DenseSystem::new(h)?.observable(a, state, t)
}

/// `tr(e^{−iH⁽¹⁾t_1} ⋯ e^{−iH⁽ᴷ⁾t_K} ρ)`.
pub fn exact_loschmidt(spec: &MultiEchoSpec, state: &ProductState) -> Result<Complex64> {
    let systems = spec
        .hamiltonians()
        .iter()
        .map(DenseSystem::new)
        .collect::<Result<Vec<_>>>()?;
    systems[0].check_state(state)?;
    let mut product = linalg::identity(systems[0].dim());
    for (sys, &t) in systems.iter().zip(spec.times()) {
        product *= sys.evolution(t);
    }
    Ok(linalg::trace_product(&product, &state.dense()))
}

pub const DEFAULT_NODE_RADIUS: f64 = 0.1;

/// Extra polynomial degree fitted beyond `μ_X` per variable.
const EXTRA_DEGREE: usize = 8;

/// `∂^{μ_W} log tr(e^{−iH(λ)t} ρ) / ∂λ^{μ_W}` at `λ = 0`, from a least-squares
/// polynomial fit of `log L` on a tensor grid of Chebyshev nodes.
pub fn exact_cluster_derivative_logl(
    w: &Cluster,
    h: &LocalHamiltonian,
    state: &ProductState,
    t: Complex64,
) -> Result<Complex64> {
    exact_cluster_derivative_logl_with(w, h, state, t, DEFAULT_NODE_RADIUS)
}

pub fn exact_cluster_derivative_logl_with(
    w: &Cluster,
    h: &LocalHamiltonian,
    state: &ProductState,
    t: Complex64,
    radius: f64,
) -> Result<Complex64> {
    if w.size() > 4 {
        return Err(Error::SizeCap { size: w.size(), cap: 4 });
    }
    if w.is_empty() {
        return Err(Error::SizeZero);
    }
    if let Some(x) = w.terms().find(|&x| x >= h.len()) {
        return Err(Error::MalformedSpec(format!("term index {x} out of range")));
    }
    let sites = w
        .terms()
        .fold(Vec::new(), |acc, x| crate::model::union_support(&acc, &h.terms()[x].support));
    check_dim(h.d(), sites.len(), Caps::default().max_dense_dim)?;
    let rho = state.reduced(&sites);
    let vars: Vec<usize> = w.terms().collect();
    let degrees: Vec<usize> = w.parts().iter().map(|&(_, k)| k + EXTRA_DEGREE).collect();
    let nodes: Vec<Vec<f64>> = degrees
        .iter()
        .map(|&p| {
            let q = p + 4;
            (0..q)
                .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / q as f64).cos())
                .collect()
        })
        .collect();
    let shape: Vec<usize> = nodes.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();

    let index = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; shape.len()];
        for k in (0..shape.len()).rev() {
            idx[k] = flat % shape[k];
            flat /= shape[k];
        }
        idx
    };
    let values: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = index(flat);
            let terms: Vec<(usize, f64)> = vars
                .iter()
                .enumerate()
                .map(|(k, &x)| (x, radius * nodes[k][idx[k]]))
                .collect();
            let hm = assemble(h, &terms, &sites)?;
            let u = HermitianEigen::new(&hm).map(|e| (-I * t * e).exp());
            Ok(linalg::trace_product(&u, &rho).ln())
        })
        .collect::<Result<_>>()?;

    // Per-axis least-squares operators: coefficients = pinv(V) · samples.
    let pinvs: Vec<CMatrix> = nodes
        .iter()
        .zip(&degrees)
        .map(|(xs, &p)| {
            let v = DMatrix::<f64>::from_fn(xs.len(), p + 1, |i, j| xs[i].powi(j as i32));
            let pinv = v.clone().pseudo_inverse(1e-13).expect("pseudo-inverse");
            pinv.map(|x| Complex64::new(x, 0.0))
        })
        .collect();
    let vandermondes: Vec<CMatrix> = nodes
        .iter()
        .zip(&degrees)
        .map(|(xs, &p)| CMatrix::from_fn(xs.len(), p + 1, |i, j| Complex64::new(xs[i].powi(j as i32), 0.0)))
        .collect();

    let coeffs = apply_axes(&values, &shape, &pinvs);
    let coeff_shape: Vec<usize> = degrees.iter().map(|&p| p + 1).collect();
    let fitted = apply_axes(&coeffs, &coeff_shape, &vandermondes);
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let residual = values
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    if residual > 1e-8 {
        return Err(Error::IllConditionedFit { residual });
    }

    // Coefficient of Π s_x^{μ_x}, rescaled from s to λ = radius · s.
    let mut flat = 0;
    for (k, &(_, mu)) in w.parts().iter().enumerate() {
        flat = flat * coeff_shape[k] + mu;
    }
    let m = w.size();
    Ok(coeffs[flat] * (w.factorial() as f64 / radius.powi(m as i32)))
}

/// Contract a row-major tensor along every axis with `ops[k]` (rows × old length).
fn apply_axes(data: &[Complex64], shape: &[usize], ops: &[CMatrix]) -> Vec<Complex64> {
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    for (axis, op) in ops.iter().enumerate() {
        let outer: usize = cur_shape[..axis].iter().product();
        let inner: usize = cur_shape[axis + 1..].iter().product();
        let old = cur_shape[axis];
        let new = op.nrows();
        let mut next = vec![Complex64::new(0.0, 0.0); outer * new * inner];
        for o in 0..outer {
            for r in 0..new {
                for c in 0..old {
                    let f = op[(r, c)];
                    if f == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for i in 0..inner {
                        next[(o * new + r) * inner + i] += f * cur[(o * old + c) * inner + i];
                    }
                }
            }
        }
        cur = next;
        cur_shape[axis] = new;
    }
    cur
}

/// Outcome distribution of a projective measurement in the eigenbasis of `h2`.
/// Eigenvalues within `1e-8` are grouped.
pub fn exact_measurement_distribution(h2: &LocalHamiltonian, rho: &CMatrix) -> Result<Vec<(f64, f64)>> {
    let sys = DenseSystem::new(h2)?;
    if rho.nrows() != sys.dim() || rho.ncols() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}×{}, expected {}",
            rho.nrows(),
            rho.ncols(),
            sys.dim()
        )));
    }
    let eig = sys.eigen();
    let mut pairs: Vec<(f64, f64)> = (0..sys.dim())
        .map(|k| {
            let v = eig.vectors.column(k);
            let p = v.dotc(&(rho * v)).re;
            (eig.values[k], p)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for (e, p) in pairs {
        match out.last_mut() {
            Some((e0, p0, k)) if (e - *e0 / *k as f64).abs() <= 1e-8 => {
                *e0 += e;
                *p0 += p;
                *k += 1;
            }
            _ => out.push((e, p, 1)),
        }
    }
    Ok(out.into_iter().map(|(e, p, k)| (e / k as f64, p)).collect())
}

/// `Pr[|x − mean| ≥ δ]`.
pub fn tail_probability(distribution: &[(f64, f64)], mean: f64, delta: f64) -> f64 {
    distribution
        .iter()
        .filter(|(x, _)| (x - mean).abs() >= delta)
        .map(|(_, p)| p.max(0.0))
        .sum()
}

/// `e^{−δν} [tr(ρ e^{ν(H−m)}) + tr(ρ e^{−ν(H−m)})]` with `m = tr(ρH)`,
/// an upper bound on `Pr[|x − m| ≥ δ]`.
pub fn markov_tail_bound(h2: &LocalHamiltonian, rho: &CMatrix, nu: f64, delta: f64) -> Result<f64> {
    let sys = DenseSystem::new(h2)?;
    let mean = linalg::trace_product(sys.hamiltonian(), rho).re;
    let up = linalg::trace_product(&sys.function(|e| (nu * (e - mean)).exp()), rho).re;
    let down = linalg::trace_product(&sys.function(|e| (-nu * (e - mean)).exp()), rho).re;
    Ok((-delta * nu).exp() * (up + down))
}
