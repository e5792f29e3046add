//! Local operator application on tensor-product spaces.
//!
//! A space is described by a sorted site list and, per site, a factor
//! dimension `d·r` (physical digit major, ancilla digit minor). Operators
//! act on physical digits only.

use crate::linalg::{CMatrix, CVector, Complex64, ZERO};
use crate::model::ProductState;
use crate::{Error, Result};
use rayon::prelude::*;

/// Where the physical digits of a sub-support sit inside a larger space.
pub(crate) struct Embedding {
    /// `offsets[a]` is the index shift for physical configuration `a` of the sub-support.
    offsets: Vec<usize>,
    /// Indices with every physical digit of the sub-support equal to zero.
    bases: Vec<usize>,
}

impl Embedding {
    /// `ranks(v)` gives the ancilla dimension of site `v` (1 for operator spaces).
    pub fn new(
        sites: &[usize],
        sub: &[usize],
        d: usize,
        ranks: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let factor: Vec<usize> = sites.iter().map(|&v| d * ranks(v)).collect();
        let mut strides = vec![1usize; sites.len()];
        for k in (0..sites.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * factor[k + 1];
        }
        let total: usize = factor.iter().product();
        let mut digit_strides = Vec::with_capacity(sub.len());
        for &v in sub {
            let k = sites.binary_search(&v).map_err(|_| {
                Error::DimensionMismatch(format!("site {v} not in support {sites:?}"))
            })?;
            digit_strides.push(strides[k] * ranks(v));
        }
        let dx = d.pow(sub.len() as u32);
        let mut offsets = vec![0usize; dx];
        for (a, off) in offsets.iter_mut().enumerate() {
            let mut rem = a;
            for k in (0..sub.len()).rev() {
                *off += (rem % d) * digit_strides[k];
                rem /= d;
            }
        }
        let bases = (0..total)
            .filter(|&i| digit_strides.iter().all(|&s| (i / s) % d == 0))
            .collect();
        Ok(Embedding { offsets, bases })
    }

    /// `(h ⊗ I) v`.
    pub fn apply(&self, h: &CMatrix, v: &[Complex64], out: &mut [Complex64]) {
        let dx = self.offsets.len();
        let mut buf = vec![ZERO; dx];
        for &base in &self.bases {
            for (b, slot) in buf.iter_mut().enumerate() {
                *slot = v[base + self.offsets[b]];
            }
            for a in 0..dx {
                let mut acc = ZERO;
                for (b, x) in buf.iter().enumerate() {
                    acc += h[(a, b)] * x;
                }
                out[base + self.offsets[a]] = acc;
            }
        }
    }

    /// `out += c (h ⊗ I) v`, with `buf` of length `h.nrows()` as scratch.
    pub fn accumulate(&self, h: &CMatrix, c: f64, v: &[Complex64], out: &mut [Complex64], buf: &mut [Complex64]) {
        for &base in &self.bases {
            for (b, slot) in buf.iter_mut().enumerate() {
                *slot = v[base + self.offsets[b]];
            }
            for (a, &oa) in self.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (b, x) in buf.iter().enumerate() {
                    acc += h[(a, b)] * x;
                }
                out[base + oa] += acc * c;
            }
        }
    }
}

/// `Σ_k c_k (h_k ⊗ I) m`, one column per task. The per-column sum runs in
/// term order, so the result does not depend on the thread count.
pub(crate) fn sum_left_products(terms: &[(&Embedding, &CMatrix, f64)], m: &CMatrix) -> CMatrix {
    let dim = m.nrows();
    let mut out = CMatrix::zeros(dim, m.ncols());
    out.as_mut_slice()
        .par_chunks_mut(dim)
        .zip(m.as_slice().par_chunks(dim))
        .for_each(|(col_out, col)| {
            let mut buf = Vec::new();
            for &(emb, h, c) in terms {
                buf.resize(h.nrows(), ZERO);
                emb.accumulate(h, c, col, col_out, &mut buf);
            }
        });
    out
}

/// `op` on `support`, tensored with identities on `target ⊇ support`.
pub(crate) fn embed_operator(
    op: &CMatrix,
    support: &[usize],
    target: &[usize],
    d: usize,
) -> Result<CMatrix> {
    let emb = Embedding::new(target, support, d, |_| 1)?;
    let dim = d.pow(target.len() as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for &base in &emb.bases {
        for (a, &oa) in emb.offsets.iter().enumerate() {
            for (b, &ob) in emb.offsets.iter().enumerate() {
                out[(base + oa, base + ob)] = op[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Purified product-state vectors restricted to site subsets.
pub(crate) struct PurifiedSpace<'a> {
    pub state: &'a ProductState,
}

impl<'a> PurifiedSpace<'a> {
    pub fn new(state: &'a ProductState) -> Self {
        PurifiedSpace { state }
    }

    pub fn d(&self) -> usize {
        self.state.d()
    }

    pub fn embedding(&self, sites: &[usize], sub: &[usize]) -> Result<Embedding> {
        Embedding::new(sites, sub, self.state.d(), |v| self.state.rank(v))
    }

    pub fn dim(&self, sites: &[usize]) -> usize {
        sites
            .iter()
            .map(|&v| self.d() * self.state.rank(v))
            .product()
    }

    /// `a ⊗ b` for vectors on disjoint site sets, on the sorted union.
    pub fn merge(&self, a: &CVector, sa: &[usize], b: &CVector, sb: &[usize]) -> CVector {
        if sa.is_empty() {
            return b.clone();
        }
        if sb.is_empty() {
            return a.clone();
        }
        let all = crate::model::union_support(sa, sb);
        let factor: Vec<usize> = all.iter().map(|&v| self.d() * self.state.rank(v)).collect();
        let in_a: Vec<bool> = all.iter().map(|v| sa.binary_search(v).is_ok()).collect();
        let total: usize = factor.iter().product();
        let mut out = CVector::zeros(total);
        let mut digits = vec![0usize; all.len()];
        for slot in out.iter_mut() {
            let (mut ia, mut ib) = (0usize, 0usize);
            for k in 0..all.len() {
                if in_a[k] {
                    ia = ia * factor[k] + digits[k];
                } else {
                    ib = ib * factor[k] + digits[k];
                }
            }
            *slot = a[ia] * b[ib];
            for k in (0..all.len()).rev() {
                digits[k] += 1;
                if digits[k] < factor[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        out
    }

    /// `⊗_{v∈sites} |ψ_v⟩`.
    pub fn product(&self, sites: &[usize]) -> CVector {
        let mut out = CVector::from_element(1, crate::linalg::ONE);
        for &v in sites {
            out = out.kronecker(self.state.purified(v));
        }
        out
    }

    /// Extend a vector on `from` to `to ⊇ from` by inserting `|ψ_v⟩` factors.
    pub fn extend(&self, vec: &CVector, from: &[usize], to: &[usize]) -> CVector {
        if from.len() == to.len() {
            return vec.clone();
        }
        let mut cur = vec.clone();
        let mut cur_sites: Vec<usize> = from.to_vec();
        for &v in to {
            if cur_sites.binary_search(&v).is_ok() {
                continue;
            }
            let pos = cur_sites.partition_point(|&s| s < v);
            let inner: usize = cur_sites[pos..]
                .iter()
                .map(|&s| self.d() * self.state.rank(s))
                .product();
            let outer = cur.len() / inner;
            let psi = self.state.purified(v);
            let e = psi.len();
            let mut next = CVector::zeros(cur.len() * e);
            for o in 0..outer {
                for (j, pj) in psi.iter().enumerate() {
                    let dst = (o * e + j) * inner;
                    let src = o * inner;
                    for k in 0..inner {
                        next[dst + k] = pj * cur[src + k];
                    }
                }
            }
            cur = next;
            cur_sites.insert(pos, v);
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{pauli_x, pauli_y, pauli_z};
    use crate::linalg::{identity, max_abs_diff};
    use rand::SeedableRng;

    #[test]
    fn embed_matches_kronecker_in_site_order() {
        let z = pauli_z();
        let got = embed_operator(&z, &[3], &[1, 3, 4], 2).unwrap();
        let want = identity(2).kronecker(&z).kronecker(&identity(2));
        assert!(max_abs_diff(&got, &want) < 1e-15);

        let xy = pauli_x().kronecker(&pauli_y());
        let got = embed_operator(&xy, &[0, 2], &[0, 1, 2], 2).unwrap();
        let want = embed_operator(&pauli_x(), &[0], &[0, 1, 2], 2).unwrap()
            * embed_operator(&pauli_y(), &[2], &[0, 1, 2], 2).unwrap();
        assert!(max_abs_diff(&got, &want) < 1e-15);
    }

    #[test]
    fn left_and_right_application_match_dense_products() {
        let sites = [0, 1, 2];
        let emb = Embedding::new(&sites, &[1], 2, |_| 1).unwrap();
        let m = CMatrix::from_fn(8, 8, |i, j| Complex64::new(i as f64, j as f64 * 0.5));
        let full = embed_operator(&pauli_y(), &[1], &sites, 2).unwrap();
        let y = pauli_y();
        let left = sum_left_products(&[(&emb, &y, 0.5)], &m);
        assert!(max_abs_diff(&left, &(&full * &m).scale(0.5)) < 1e-12);
        let yt = y.transpose();
        let right = sum_left_products(&[(&emb, &yt, 1.0)], &m.transpose()).transpose();
        assert!(max_abs_diff(&right, &(&m * &full)) < 1e-12);
    }

    #[test]
    fn extend_inserts_product_factors_in_order() {
        let state = ProductState::basis(2, &[0, 1, 0, 1]).unwrap();
        let space = PurifiedSpace::new(&state);
        let v = space.product(&[1, 3]);
        let ext = space.extend(&v, &[1, 3], &[0, 1, 2, 3]);
        let full = space.product(&[0, 1, 2, 3]);
        assert!((ext - full).norm() < 1e-15);
    }

    #[test]
    fn merge_interleaves_sites() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let state = crate::fixtures::random_mixed_product(4, 2, &mut rng);
        let space = PurifiedSpace::new(&state);
        let a = space.product(&[0, 2]);
        let b = space.product(&[1, 3]);
        let merged = space.merge(&a, &[0, 2], &b, &[1, 3]);
        assert!((merged - space.product(&[0, 1, 2, 3])).norm() < 1e-14);
    }
}
