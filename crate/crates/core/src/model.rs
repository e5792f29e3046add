//! Hamiltonians, product states, observables and dense local operators.
//!
//! Matrices are dense and row-major in the usual sense; on a support
//! `{s_1 < s_2 < ...}` the tensor factors are ordered by ascending site, so
//! the first site is the most significant digit of a basis index.

use crate::linalg::{self, CMatrix, CVector, Complex64, HermitianEigen};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub support: Vec<usize>,
    pub coefficient: f64,
    pub matrix: CMatrix,
}

/// `H = Σ_X λ_X h_X` with `|λ_X| ≤ 1` and `‖h_X‖ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalHamiltonian {
    n: usize,
    d: usize,
    terms: Vec<Term>,
}

fn check_support(support: &[usize], n: usize, what: &str) -> Result<()> {
    if support.is_empty() {
        return Err(Error::MalformedSpec(format!("{what}: empty support")));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::MalformedSpec(format!(
            "{what}: support {support:?} is not strictly increasing"
        )));
    }
    if let Some(&s) = support.iter().find(|&&s| s >= n) {
        return Err(Error::MalformedSpec(format!(
            "{what}: site {s} out of range for n = {n}"
        )));
    }
    Ok(())
}

fn check_square(m: &CMatrix, dim: usize, what: &str) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected {dim}x{dim}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl LocalHamiltonian {
    pub fn new(n: usize, d: usize, terms: Vec<Term>) -> Result<Self> {
        if n == 0 {
            return Err(Error::MalformedSpec("n must be positive".into()));
        }
        if d < 2 {
            return Err(Error::MalformedSpec(format!("local dimension {d} < 2")));
        }
        let mut seen = std::collections::HashMap::new();
        for (index, term) in terms.iter().enumerate() {
            let what = format!("term {index}");
            check_support(&term.support, n, &what)?;
            check_square(&term.matrix, d.pow(term.support.len() as u32), &what)?;
            if !term.coefficient.is_finite() || term.coefficient.abs() > 1.0 {
                return Err(Error::CoefficientOutOfRange {
                    index,
                    value: term.coefficient,
                });
            }
            let deviation = linalg::hermitian_deviation(&term.matrix);
            if deviation > HERMITIAN_TOL {
                return Err(Error::NonHermitianTerm { index, deviation });
            }
            let norm = linalg::spectral_norm(&term.matrix)?;
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NormViolation { index, norm });
            }
            if let Some(&first) = seen.get(&term.support) {
                return Err(Error::DuplicateSupport {
                    first,
                    second: index,
                    support: term.support.clone(),
                });
            }
            seen.insert(term.support.clone(), index);
        }
        Ok(LocalHamiltonian { n, d, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest support size `k`.
    pub fn locality(&self) -> usize {
        self.terms.iter().map(|t| t.support.len()).max().unwrap_or(0)
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.terms.iter().map(|t| t.support.clone()).collect()
    }

    /// The same terms with every coefficient multiplied by `c` (`|c| ≤ 1`
    /// keeps the result valid).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coefficient: t.coefficient * c,
                ..t.clone()
            })
            .collect();
        LocalHamiltonian::new(self.n, self.d, terms)
    }
}

/// Tensor product of single-site density matrices.
///
/// Each site is also kept as a purification `|ψ_v⟩ ∈ C^d ⊗ C^{r_v}` with
/// `r_v` the rank of `ρ_v`; pure sites have `r_v = 1`.
#[derive(Clone, Debug)]
pub struct ProductState {
    d: usize,
    sites: Vec<CMatrix>,
    purified: Vec<CVector>,
    ranks: Vec<usize>,
}

impl ProductState {
    pub fn from_density_matrices(d: usize, sites: Vec<CMatrix>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidState("no sites".into()));
        }
        let mut purified = Vec::with_capacity(sites.len());
        let mut ranks = Vec::with_capacity(sites.len());
        for (v, rho) in sites.iter().enumerate() {
            check_square(rho, d, &format!("site {v}"))?;
            if linalg::hermitian_deviation(rho) > STATE_TOL {
                return Err(Error::InvalidState(format!("site {v}: not Hermitian")));
            }
            let tr = linalg::trace(rho);
            if (tr - linalg::ONE).norm() > STATE_TOL {
                return Err(Error::InvalidState(format!("site {v}: trace {tr}")));
            }
            let eig = HermitianEigen::new(rho);
            let min = eig.values.min();
            if min < -STATE_TOL {
                return Err(Error::InvalidState(format!(
                    "site {v}: negative eigenvalue {min:e}"
                )));
            }
            let kept: Vec<usize> = (0..d).filter(|&k| eig.values[k] > 1e-14).collect();
            let r = kept.len().max(1);
            let mut psi = CVector::zeros(d * r);
            for (slot, &k) in kept.iter().enumerate() {
                let w = eig.values[k].sqrt();
                for p in 0..d {
                    psi[p * r + slot] = eig.vectors[(p, k)] * w;
                }
            }
            purified.push(psi);
            ranks.push(r);
        }
        Ok(ProductState {
            d,
            sites,
            purified,
            ranks,
        })
    }

    pub fn from_vectors(d: usize, vectors: Vec<CVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidState("no sites".into()));
        }
        let mut sites = Vec::with_capacity(vectors.len());
        for (v, psi) in vectors.iter().enumerate() {
            if psi.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "site {v}: vector of length {}, expected {d}",
                    psi.len()
                )));
            }
            if (psi.norm_squared() - 1.0).abs() > STATE_TOL {
                return Err(Error::InvalidState(format!(
                    "site {v}: vector norm² {}",
                    psi.norm_squared()
                )));
            }
            sites.push(psi * psi.adjoint());
        }
        Ok(ProductState {
            d,
            ranks: vec![1; vectors.len()],
            purified: vectors,
            sites,
        })
    }

    /// `|b_0 b_1 ...⟩` in the computational basis.
    pub fn basis(d: usize, digits: &[usize]) -> Result<Self> {
        let vectors = digits
            .iter()
            .map(|&b| {
                let mut v = CVector::zeros(d);
                if b >= d {
                    return Err(Error::InvalidState(format!("basis digit {b} >= {d}")));
                }
                v[b] = linalg::ONE;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_vectors(d, vectors)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, v: usize) -> &CMatrix {
        &self.sites[v]
    }

    pub fn sites(&self) -> &[CMatrix] {
        &self.sites
    }

    pub fn is_pure(&self) -> bool {
        self.ranks.iter().all(|&r| r == 1)
    }

    pub(crate) fn purified(&self, v: usize) -> &CVector {
        &self.purified[v]
    }

    pub(crate) fn rank(&self, v: usize) -> usize {
        self.ranks[v]
    }

    /// `⊗_{v∈support} ρ_v`.
    pub fn reduced(&self, support: &[usize]) -> CMatrix {
        support
            .iter()
            .fold(linalg::identity(1), |acc, &v| acc.kronecker(&self.sites[v]))
    }

    /// The full `d^n`-dimensional density matrix.
    pub fn dense(&self) -> CMatrix {
        let all: Vec<usize> = (0..self.n()).collect();
        self.reduced(&all)
    }

    /// The full state vector, if every site is pure.
    pub fn dense_vector(&self) -> Option<CVector> {
        if !self.is_pure() {
            return None;
        }
        let mut out = CVector::from_element(1, linalg::ONE);
        for psi in &self.purified {
            out = out.kronecker(psi);
        }
        Some(out)
    }
}

/// A local observable with its spectral norm cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    support: Vec<usize>,
    matrix: CMatrix,
    norm: f64,
}

impl Observable {
    pub fn new(d: usize, support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        check_support(&support, usize::MAX, "observable")?;
        check_square(&matrix, d.pow(support.len() as u32), "observable")?;
        let norm = linalg::spectral_norm(&matrix)?;
        Ok(Observable {
            support,
            matrix,
            norm,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn scaled(&self, c: Complex64) -> Observable {
        Observable {
            support: self.support.clone(),
            matrix: self.matrix.map(|x| x * c),
            norm: self.norm * c.norm(),
        }
    }

    pub fn as_operator(&self, d: usize) -> DenseOperator {
        DenseOperator {
            d,
            support: self.support.clone(),
            matrix: self.matrix.clone(),
        }
    }
}

/// A dense operator on a sorted set of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub d: usize,
    pub support: Vec<usize>,
    pub matrix: CMatrix,
}

impl DenseOperator {
    pub fn new(d: usize, support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        check_support(&support, usize::MAX, "operator")?;
        check_square(&matrix, d.pow(support.len() as u32), "operator")?;
        Ok(DenseOperator { d, support, matrix })
    }

    pub fn identity(d: usize, support: Vec<usize>) -> Result<Self> {
        let dim = d.pow(support.len() as u32);
        Self::new(d, support, linalg::identity(dim))
    }

    /// This operator tensored with identities on `target ⊇ support`.
    pub fn extended(&self, target: &[usize]) -> Result<CMatrix> {
        crate::ops::embed_operator(&self.matrix, &self.support, target, self.d)
    }
}

/// Sorted union of two sorted site lists.
pub fn union_support(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

pub fn supports_overlap(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => return true,
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    false
}

/// Product `O_1 O_2 ⋯` of operators embedded on the union of their supports.
pub fn embed_product(ops: &[DenseOperator]) -> Result<DenseOperator> {
    let first = ops
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty operator list".into()))?;
    let d = first.d;
    if let Some(bad) = ops.iter().find(|o| o.d != d) {
        return Err(Error::DimensionMismatch(format!(
            "local dimensions {d} and {} differ",
            bad.d
        )));
    }
    let support = ops
        .iter()
        .fold(Vec::new(), |acc, o| union_support(&acc, &o.support));
    let mut product = first.extended(&support)?;
    for op in &ops[1..] {
        product *= op.extended(&support)?;
    }
    DenseOperator::new(d, support, product)
}

/// `tr(op · ⊗_{v∈supp(op)} ρ_v)`.
pub fn product_expectation(op: &DenseOperator, state: &ProductState) -> Result<Complex64> {
    if op.d != state.d() {
        return Err(Error::DimensionMismatch(format!(
            "operator has d = {}, state has d = {}",
            op.d,
            state.d()
        )));
    }
    if op.support.iter().any(|&v| v >= state.n()) {
        return Err(Error::DimensionMismatch(format!(
            "operator support {:?} outside {} sites",
            op.support,
            state.n()
        )));
    }
    Ok(linalg::trace_product(&op.matrix, &state.reduced(&op.support)))
}

pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    linalg::spectral_norm(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{pauli_x, pauli_y, pauli_z, single_qubit};
    use crate::linalg::{max_abs_diff, ONE, ZERO};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn op(support: Vec<usize>, m: CMatrix) -> DenseOperator {
        DenseOperator::new(2, support, m).unwrap()
    }

    #[test]
    fn loads_single_pauli_term() {
        let h = single_qubit(1.0);
        assert_eq!(h.len(), 1);
        let norm = spectral_norm(&h.terms()[0].matrix).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_terms() {
        let t = |support: Vec<usize>, coefficient: f64, matrix: CMatrix| Term {
            support,
            coefficient,
            matrix,
        };
        let err = LocalHamiltonian::new(1, 2, vec![t(vec![0], 1.5, pauli_x())]).unwrap_err();
        assert!(matches!(err, Error::CoefficientOutOfRange { .. }));

        let err =
            LocalHamiltonian::new(1, 2, vec![t(vec![0], 1.0, pauli_x().scale(2.0))]).unwrap_err();
        assert!(matches!(err, Error::NormViolation { .. }));

        let mut skew = pauli_x();
        skew[(0, 1)] = Complex64::new(0.0, 1.0);
        let err = LocalHamiltonian::new(1, 2, vec![t(vec![0], 1.0, skew)]).unwrap_err();
        assert!(matches!(err, Error::NonHermitianTerm { .. }));

        let err = LocalHamiltonian::new(
            2,
            2,
            vec![t(vec![0], 1.0, pauli_x()), t(vec![0], 0.5, pauli_z())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateSupport { first: 0, second: 1, .. }));

        let err = LocalHamiltonian::new(1, 2, vec![t(vec![1], 1.0, pauli_x())]).unwrap_err();
        assert!(matches!(err, Error::MalformedSpec(_)));

        let err = LocalHamiltonian::new(2, 2, vec![t(vec![0, 1], 1.0, pauli_x())]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn disjoint_supports_tensor() {
        let p = embed_product(&[op(vec![0], pauli_x()), op(vec![1], pauli_z())]).unwrap();
        assert_eq!(p.support, vec![0, 1]);
        assert!(max_abs_diff(&p.matrix, &pauli_x().kronecker(&pauli_z())) < 1e-15);
    }

    #[test]
    fn pauli_squares_to_identity() {
        let p = embed_product(&[op(vec![0], pauli_x()), op(vec![0], pauli_x())]).unwrap();
        assert!(max_abs_diff(&p.matrix, &linalg::identity(2)) < 1e-15);
    }

    #[test]
    fn overlapping_product_matches_direct_multiplication() {
        let xx = pauli_x().kronecker(&pauli_x());
        let p = embed_product(&[op(vec![0, 1], xx.clone()), op(vec![1], pauli_z())]).unwrap();
        let direct = &xx * linalg::identity(2).kronecker(&pauli_z());
        assert!(max_abs_diff(&p.matrix, &direct) < 1e-15);
    }

    #[test]
    fn embedding_respects_site_order() {
        // σ_z on site 2 inside {0, 2}: identity on the most significant digit.
        let p = embed_product(&[op(vec![0], pauli_x()), op(vec![2], pauli_z())]).unwrap();
        assert_eq!(p.support, vec![0, 2]);
        assert!(max_abs_diff(&p.matrix, &pauli_x().kronecker(&pauli_z())) < 1e-15);
        let q = embed_product(&[op(vec![2], pauli_z()), op(vec![0], pauli_x())]).unwrap();
        assert!(max_abs_diff(&q.matrix, &p.matrix) < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let zero = ProductState::basis(2, &[0]).unwrap();
        let z = op(vec![0], pauli_z());
        let x = op(vec![0], pauli_x());
        assert_eq!(product_expectation(&z, &zero).unwrap(), ONE);
        assert_eq!(product_expectation(&x, &zero).unwrap(), ZERO);
        let rho = (linalg::identity(2) + pauli_y()).scale(0.5);
        let plus_y = ProductState::from_density_matrices(2, vec![rho]).unwrap();
        let y = op(vec![0], pauli_y());
        assert!((product_expectation(&y, &plus_y).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_invalid_states() {
        let bad_trace = linalg::identity(2);
        assert!(ProductState::from_density_matrices(2, vec![bad_trace]).is_err());
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(ProductState::from_density_matrices(2, vec![negative]).is_err());
        let unnormalized = CVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(ProductState::from_vectors(2, vec![unnormalized]).is_err());
    }

    #[test]
    fn purification_reproduces_mixed_sites() {
        let rho = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.7), Complex64::new(0.1, -0.2), Complex64::new(0.1, 0.2), c(0.3)],
        );
        let s = ProductState::from_density_matrices(2, vec![rho.clone()]).unwrap();
        assert!(!s.is_pure());
        let r = s.rank(0);
        let psi = s.purified(0);
        let mut back = CMatrix::zeros(2, 2);
        for p in 0..2 {
            for q in 0..2 {
                for a in 0..r {
                    back[(p, q)] += psi[p * r + a] * psi[q * r + a].conj();
                }
            }
        }
        assert!(max_abs_diff(&back, &rho) < 1e-12);
    }

    #[test]
    fn pure_density_matrix_is_detected_as_pure() {
        let s = ProductState::basis(2, &[1, 0]).unwrap();
        let dense = ProductState::from_density_matrices(2, s.sites().to_vec()).unwrap();
        assert!(dense.is_pure());
    }

    #[test]
    fn support_set_helpers() {
        assert_eq!(union_support(&[0, 2, 5], &[1, 2, 6]), vec![0, 1, 2, 5, 6]);
        assert!(supports_overlap(&[0, 3], &[3, 4]));
        assert!(!supports_overlap(&[0, 2], &[1, 3]));
    }
}
