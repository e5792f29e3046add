//! Closed-form certificates: convergence thresholds, truncation bounds,
//! energy concentration and speed-limit bounds.

use std::f64::consts::{E, PI};

use crate::model::{embed_product, product_expectation, supports_overlap, LocalHamiltonian, ProductState};
use crate::{Error, Result};

/// Convergence times of the observable and log-echo expansions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// `1/(2e𝔡)`.
    pub t_star: f64,
    /// `1/(2e²𝔡(𝔡+1))`.
    pub t_star_l: f64,
    /// `max(𝔡, 1)`.
    pub d_eff: usize,
}

pub fn thresholds(degree: usize) -> Thresholds {
    let d = degree.max(1) as f64;
    Thresholds {
        t_star: 1.0 / (2.0 * E * d),
        t_star_l: 1.0 / (2.0 * E * E * d * (d + 1.0)),
        d_eff: degree.max(1),
    }
}

fn geometric_tail(ratio: f64, order: usize) -> Result<f64> {
    if !(ratio < 1.0) {
        return Err(Error::OutsideRadius { ratio });
    }
    if ratio == 0.0 {
        return Ok(0.0);
    }
    Ok(ratio.powi(order as i32 + 1) / (1.0 - ratio))
}

/// `e𝔡‖A‖ (|t|/t*)^{M+1} / (1 − |t|/t*)`.
pub fn obs_truncation_bound(order: usize, t: f64, degree: usize, norm: f64) -> Result<f64> {
    let th = thresholds(degree);
    let tail = geometric_tail(t.abs() / th.t_star, order)?;
    Ok(E * th.d_eff as f64 * norm * tail)
}

/// `|S| (|t|/t*_L)^{M+1} / (1 − |t|/t*_L)`.
pub fn loschmidt_truncation_bound(order: usize, t: f64, degree: usize, n_terms: usize) -> Result<f64> {
    let th = thresholds(degree);
    Ok(n_terms as f64 * geometric_tail(t.abs() / th.t_star_l, order)?)
}

/// `|S| τ^{M+1} / (1 − τ)`.
pub fn multi_truncation_bound(order: usize, tau: f64, n_terms: usize) -> Result<f64> {
    Ok(n_terms as f64 * geometric_tail(tau, order)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConcentrationVariant {
    /// Measuring `H` on the product state itself.
    Product,
    /// Measuring `H⁽²⁾` on `e^{−itH⁽¹⁾} ρ e^{itH⁽¹⁾}`, `|t| ≤ t*_L/7`.
    Evolved,
}

impl ConcentrationVariant {
    pub fn name(self) -> &'static str {
        match self {
            ConcentrationVariant::Product => "product",
            ConcentrationVariant::Evolved => "evolved",
        }
    }
}

/// `Pr[|x − ⟨H⟩| ≥ δ] ≤ bound`, obtained from `2 e^{−δν} tr(ρ e^{ν(H−⟨H⟩)})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub delta: f64,
    pub nu: f64,
    /// `min(1, raw_bound)`.
    pub bound: f64,
    pub raw_bound: f64,
    pub clamped: bool,
    pub variant: ConcentrationVariant,
    pub n_terms: usize,
    pub max_degree: usize,
    pub t: f64,
}

/// Tilt constant of the evolved variant.
pub const EVOLVED_ETA: f64 = 1.0 / (90.0 * 343.0);

pub fn concentration_bound(
    delta: f64,
    n_terms: usize,
    degree: usize,
    variant: ConcentrationVariant,
    t: f64,
) -> Result<ConcentrationReport> {
    let s = n_terms as f64;
    if !(delta > 0.0 && delta <= s) {
        return Err(Error::DeltaOutOfRange { delta, max: s });
    }
    let tl = thresholds(degree).t_star_l;
    let (nu, exponent) = match variant {
        ConcentrationVariant::Product => (delta * tl * tl / (4.0 * s), (delta * tl).powi(2) / (8.0 * s)),
        ConcentrationVariant::Evolved => {
            if !(t.abs() <= tl / 7.0) {
                return Err(Error::TimeTooLarge { t, max: tl / 7.0 });
            }
            (
                EVOLVED_ETA * delta * tl * tl / s,
                (delta * tl).powi(2) / (250.0 * 250.0 * s),
            )
        }
    };
    let raw = 2.0 * (-exponent).exp();
    Ok(ConcentrationReport {
        delta,
        nu,
        bound: raw.min(1.0),
        raw_bound: raw,
        clamped: raw > 1.0,
        variant,
        n_terms,
        max_degree: degree,
        t: match variant {
            ConcentrationVariant::Product => 0.0,
            ConcentrationVariant::Evolved => t,
        },
    })
}

/// `⟨H⟩` and `ΔH² = ⟨H²⟩ − ⟨H⟩²` in a product state. Only overlapping pairs
/// of terms have nonzero covariance.
pub fn energy_moments(h: &LocalHamiltonian, state: &ProductState) -> Result<(f64, f64)> {
    if state.n() != h.n() || state.d() != h.d() {
        return Err(Error::DimensionMismatch("state and Hamiltonian differ in n or d".into()));
    }
    let ops: Vec<_> = h
        .terms()
        .iter()
        .map(|t| crate::model::DenseOperator::new(h.d(), t.support.clone(), t.matrix.clone()))
        .collect::<Result<_>>()?;
    let means: Vec<f64> = ops
        .iter()
        .map(|op| product_expectation(op, state).map(|z| z.re))
        .collect::<Result<_>>()?;
    let mean: f64 = h.terms().iter().zip(&means).map(|(t, m)| t.coefficient * m).sum();
    let mut variance = 0.0;
    for (x, tx) in h.terms().iter().enumerate() {
        for (y, ty) in h.terms().iter().enumerate() {
            if !supports_overlap(&tx.support, &ty.support) {
                continue;
            }
            let prod = embed_product(&[ops[x].clone(), ops[y].clone()])?;
            let second = product_expectation(&prod, state)?.re;
            variance += tx.coefficient * ty.coefficient * (second - means[x] * means[y]);
        }
    }
    Ok((mean, variance.max(0.0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QslReport {
    /// Lower bound on `|⟨Φ|e^{−iHt}|Φ⟩|`.
    pub lower_bound: f64,
    /// No orthogonal state is reached before this time.
    pub t_qsl_floor: f64,
    /// `(π/2) max{1/ΔH, 1/⟨H⟩}` over the positive denominators; `+∞` if none.
    pub mt_ml_bound: f64,
    pub mean_energy: f64,
    pub energy_variance: f64,
    pub n_terms: usize,
    pub max_degree: usize,
}

/// Fidelity lower bound from the order-2 truncation of the log-echo expansion:
/// `exp[−|S| r⁴/(1 − r²)] · exp(−ΔH² t²/2)` with `r = |t|/t*_L`.
pub fn qsl_report(h: &LocalHamiltonian, state: &ProductState, t: f64, degree: usize) -> Result<QslReport> {
    if !state.is_pure() {
        return Err(Error::MixedStateUnsupported);
    }
    let th = thresholds(degree);
    let r = t.abs() / th.t_star_l;
    if !(r < 1.0) {
        return Err(Error::OutsideRadius { ratio: r });
    }
    let (mean, variance) = energy_moments(h, state)?;
    let s = h.len() as f64;
    let lower_bound = (-s * r.powi(4) / (1.0 - r * r)).exp() * (-variance * t * t / 2.0).exp();
    let candidates = [variance.sqrt(), mean];
    let mt_ml_bound = candidates
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| PI / (2.0 * x))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
        .unwrap_or(f64::INFINITY);
    Ok(QslReport {
        lower_bound,
        t_qsl_floor: th.t_star_l,
        mt_ml_bound,
        mean_energy: mean,
        energy_variance: variance,
        n_terms: h.len(),
        max_degree: degree,
    })
}
