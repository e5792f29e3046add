//! JSON documents for Hamiltonians, product states and observables.
//!
//! Complex data is stored as separate real and imaginary arrays:
//!
//! ```json
//! {"n": 2, "d": 2, "terms": [
//!   {"support": [0, 1], "coefficient": 0.5,
//!    "matrix": {"re": [[1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,1]]}}
//! ]}
//! ```
//!
//! `im` may be omitted when zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, CVector, Complex64};
use crate::model::{LocalHamiltonian, Observable, ProductState, Term};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorDoc {
    Real(Vec<f64>),
    Complex {
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub support: Vec<usize>,
    #[serde(default = "one")]
    pub coefficient: f64,
    pub matrix: MatrixDoc,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDoc {
    pub n: usize,
    pub d: usize,
    pub terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteDoc {
    Vector(VectorDoc),
    Matrix(MatrixDoc),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub sites: Vec<SiteDoc>,
}

pub type ObservableDoc = TermDoc;

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::MalformedSpec("ragged real part".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::MalformedSpec("imaginary part shape differs from real part".into()));
            }
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            Complex64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |m| m[i][j]))
        }))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let re = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
        let any_im = m.iter().any(|z| z.im != 0.0);
        let im = any_im.then(|| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect());
        MatrixDoc { re, im }
    }
}

impl VectorDoc {
    pub fn to_vector(&self) -> Result<CVector> {
        match self {
            VectorDoc::Real(re) => Ok(CVector::from_iterator(re.len(), re.iter().map(|&x| Complex64::new(x, 0.0)))),
            VectorDoc::Complex { re, im } => {
                if let Some(im) = im {
                    if im.len() != re.len() {
                        return Err(Error::MalformedSpec("imaginary part length differs".into()));
                    }
                }
                Ok(CVector::from_iterator(
                    re.len(),
                    re.iter()
                        .enumerate()
                        .map(|(i, &x)| Complex64::new(x, im.as_ref().map_or(0.0, |v| v[i]))),
                ))
            }
        }
    }
}

impl HamiltonianDoc {
    pub fn build(&self) -> Result<LocalHamiltonian> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(Term {
                    support: t.support.clone(),
                    coefficient: t.coefficient,
                    matrix: t.matrix.to_matrix()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LocalHamiltonian::new(self.n, self.d, terms)
    }

    pub fn from_hamiltonian(h: &LocalHamiltonian) -> Self {
        HamiltonianDoc {
            n: h.n(),
            d: h.d(),
            terms: h
                .terms()
                .iter()
                .map(|t| TermDoc {
                    support: t.support.clone(),
                    coefficient: t.coefficient,
                    matrix: MatrixDoc::from_matrix(&t.matrix),
                })
                .collect(),
        }
    }
}

impl StateDoc {
    /// `d` is taken from the first site; every site must agree.
    pub fn build(&self) -> Result<ProductState> {
        if self.sites.is_empty() {
            return Err(Error::InvalidState("no sites".into()));
        }
        let all_vectors = self.sites.iter().all(|s| matches!(s, SiteDoc::Vector(_)));
        if all_vectors {
            let vectors = self
                .sites
                .iter()
                .map(|s| match s {
                    SiteDoc::Vector(v) => v.to_vector(),
                    SiteDoc::Matrix(_) => unreachable!(),
                })
                .collect::<Result<Vec<_>>>()?;
            let d = vectors[0].len();
            return ProductState::from_vectors(d, vectors);
        }
        let mats = self
            .sites
            .iter()
            .map(|s| match s {
                SiteDoc::Vector(v) => {
                    let v = v.to_vector()?;
                    Ok(&v * v.adjoint())
                }
                SiteDoc::Matrix(m) => m.to_matrix(),
            })
            .collect::<Result<Vec<_>>>()?;
        let d = mats[0].nrows();
        ProductState::from_density_matrices(d, mats)
    }
}

pub fn build_observable(doc: &ObservableDoc, d: usize) -> Result<Observable> {
    let m = doc.matrix.to_matrix()?;
    Observable::new(d, doc.support.clone(), m.scale(doc.coefficient))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::MalformedSpec(format!("{what}: {e}")))
}

pub fn parse_hamiltonian(text: &str) -> Result<LocalHamiltonian> {
    parse::<HamiltonianDoc>(text, "hamiltonian")?.build()
}

pub fn parse_state(text: &str) -> Result<ProductState> {
    parse::<StateDoc>(text, "state")?.build()
}

pub fn parse_observable(text: &str, d: usize) -> Result<Observable> {
    build_observable(&parse::<ObservableDoc>(text, "observable")?, d)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::MalformedSpec(format!("{}: {e}", path.display())))
}

pub fn load_hamiltonian(path: &Path) -> Result<LocalHamiltonian> {
    parse_hamiltonian(&read(path)?)
}

pub fn load_state(path: &Path) -> Result<ProductState> {
    parse_state(&read(path)?)
}

pub fn load_observable(path: &Path, d: usize) -> Result<Observable> {
    parse_observable(&read(path)?, d)
}
