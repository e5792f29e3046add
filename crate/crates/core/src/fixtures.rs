//! Standard Hamiltonians and states used by tests, benchmarks and examples.
//!
//! All constructors return validated objects: every term matrix is rescaled to
//! unit spectral norm and the physical prefactor goes into the coefficient.

use rand::Rng;

use crate::linalg::{self, CMatrix, CVector, Complex64, ONE, ZERO};
use crate::model::{LocalHamiltonian, Observable, ProductState, Term};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
}

/// `m / ‖m‖` together with `‖m‖`.
pub fn normalized(m: &CMatrix) -> (CMatrix, f64) {
    let norm = linalg::spectral_norm(m).expect("square matrix");
    (m.unscale(norm), norm)
}

/// `H = λ σ_x` on one qubit.
pub fn single_qubit(lambda: f64) -> LocalHamiltonian {
    LocalHamiltonian::new(
        1,
        2,
        vec![Term {
            support: vec![0],
            coefficient: lambda,
            matrix: pauli_x(),
        }],
    )
    .expect("valid single-qubit Hamiltonian")
}

/// `Σ_v λ σ_x^{(v)}`: decoupled qubits.
pub fn free_spins(n: usize, lambda: f64) -> LocalHamiltonian {
    let terms = (0..n)
        .map(|v| Term {
            support: vec![v],
            coefficient: lambda,
            matrix: pauli_x(),
        })
        .collect();
    LocalHamiltonian::new(n, 2, terms).expect("valid free-spin Hamiltonian")
}

fn bond_hamiltonian(n: usize, edges: &[(usize, usize)], scale: f64, bond: &CMatrix) -> LocalHamiltonian {
    let terms = edges
        .iter()
        .map(|&(a, b)| {
            let (lo, hi) = (a.min(b), a.max(b));
            Term {
                support: vec![lo, hi],
                coefficient: scale,
                matrix: bond.clone(),
            }
        })
        .collect();
    LocalHamiltonian::new(n, 2, terms).expect("valid bond Hamiltonian")
}

pub fn chain_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n.saturating_sub(1)).map(|v| (v, v + 1)).collect()
}

/// A ring with extra chords `(v, v + n/2)` for even `v < n/2`.
pub fn expander_edges(n: usize) -> Vec<(usize, usize)> {
    let mut edges = chain_edges(n);
    if n > 2 {
        edges.push((0, n - 1));
    }
    let mut v = 0;
    while v < n / 2 {
        let w = v + n / 2;
        if w != v + 1 && !(v == 0 && w == n - 1) {
            edges.push((v, w));
        }
        v += 2;
    }
    edges
}

/// Edges of an `L × L` grid; site `(r, c)` is `r·L + c`.
pub fn square_lattice_edges(l: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..l {
        for col in 0..l {
            let v = r * l + col;
            if col + 1 < l {
                edges.push((v, v + 1));
            }
            if r + 1 < l {
                edges.push((v, v + l));
            }
        }
    }
    edges
}

/// Isotropic exchange `(XX + YY + ZZ)/3`, which has unit norm.
pub fn heisenberg_bond() -> CMatrix {
    let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
    (x.kronecker(&x) + y.kronecker(&y) + z.kronecker(&z)).unscale(3.0)
}

pub fn heisenberg_chain(n: usize, scale: f64) -> LocalHamiltonian {
    bond_hamiltonian(n, &chain_edges(n), scale, &heisenberg_bond())
}

/// Nearest-neighbour Heisenberg exchange on an `L × L` square lattice.
pub fn square_lattice(l: usize, scale: f64) -> LocalHamiltonian {
    bond_hamiltonian(l * l, &square_lattice_edges(l), scale, &heisenberg_bond())
}

/// Transverse-field Ising chain with the field split over the bonds:
/// each bond term is `ZZ + g (w_a X_a + w_b X_b)` normalized, with `w = 1/2`
/// on sites shared by two bonds, and every coefficient equal to `scale`.
pub fn ising_chain(n: usize, g: f64, scale: f64) -> LocalHamiltonian {
    assert!(n >= 2, "an Ising chain needs two sites");
    let (x, z) = (pauli_x(), pauli_z());
    let id = linalg::identity(2);
    let terms = (0..n - 1)
        .map(|v| {
            let wa = if v == 0 { 1.0 } else { 0.5 };
            let wb = if v + 1 == n - 1 { 1.0 } else { 0.5 };
            let m = z.kronecker(&z)
                + x.kronecker(&id).scale(g * wa)
                + id.kronecker(&x).scale(g * wb);
            let (h, _) = normalized(&m);
            Term {
                support: vec![v, v + 1],
                coefficient: scale,
                matrix: h,
            }
        })
        .collect();
    LocalHamiltonian::new(n, 2, terms).expect("valid Ising chain")
}

/// Transverse-field Ising chain with separate single-site field terms:
/// `j Σ Z_v Z_{v+1} + g Σ X_v`.
pub fn ising_chain_with_fields(n: usize, j: f64, g: f64) -> LocalHamiltonian {
    let (x, z) = (pauli_x(), pauli_z());
    let mut terms = Vec::new();
    for v in 0..n {
        terms.push(Term {
            support: vec![v],
            coefficient: g,
            matrix: x.clone(),
        });
        if v + 1 < n {
            terms.push(Term {
                support: vec![v, v + 1],
                coefficient: j,
                matrix: z.kronecker(&z),
            });
        }
    }
    LocalHamiltonian::new(n, 2, terms).expect("valid Ising chain")
}

pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&m + m.adjoint()).scale(0.5)
}

/// Random unit-norm Hermitian two-site terms on `edges`, coefficients uniform in `[-1, 1]`.
pub fn random_two_local<R: Rng>(n: usize, edges: &[(usize, usize)], rng: &mut R) -> LocalHamiltonian {
    let terms = edges
        .iter()
        .map(|&(a, b)| {
            let (h, _) = normalized(&random_hermitian(4, rng));
            Term {
                support: vec![a.min(b), a.max(b)],
                coefficient: rng.gen_range(-1.0..1.0),
                matrix: h,
            }
        })
        .collect();
    LocalHamiltonian::new(n, 2, terms).expect("valid random Hamiltonian")
}

pub fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = v.norm();
    v.unscale(norm)
}

pub fn random_pure_product<R: Rng>(n: usize, d: usize, rng: &mut R) -> ProductState {
    let vectors = (0..n).map(|_| random_unit_vector(d, rng)).collect();
    ProductState::from_vectors(d, vectors).expect("valid random state")
}

/// Random full-rank single-site density matrices.
pub fn random_mixed_product<R: Rng>(n: usize, d: usize, rng: &mut R) -> ProductState {
    let sites = (0..n)
        .map(|_| {
            let a = CMatrix::from_fn(d, d, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let m = &a * a.adjoint();
            let tr = linalg::trace(&m);
            m.map(|x| x / tr)
        })
        .collect();
    ProductState::from_density_matrices(d, sites).expect("valid random state")
}

pub fn random_observable<R: Rng>(support: Vec<usize>, d: usize, rng: &mut R) -> Observable {
    let dim = d.pow(support.len() as u32);
    Observable::new(d, support, random_hermitian(dim, rng)).expect("valid observable")
}

pub fn pauli_observable(site: usize, m: CMatrix) -> Observable {
    Observable::new(2, vec![site], m).expect("valid observable")
}

/// `(I + σ_y)/2`.
pub fn plus_y_state() -> ProductState {
    let rho = (linalg::identity(2) + pauli_y()).scale(0.5);
    ProductState::from_density_matrices(2, vec![rho]).expect("valid state")
}
