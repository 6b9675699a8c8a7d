//! Penalty functionals and reference aggregation rates.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::dictionary::GramData;
use crate::error::{Error, Result};

/// Coordinates with `|λ_j| <= SNAP_REL * max_k |λ_k|` are set to exactly zero.
pub const SNAP_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    BicType,
    L1,
}

/// Constant in front of the ℓ₁ weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Factor {
    /// `2√2`, the weights of the κ-based bound.
    TwoSqrtTwo,
    /// `4√2`, the weights of the mutual-coherence bound.
    FourSqrtTwo,
}

impl L1Factor {
    pub fn value(self) -> f64 {
        match self {
            L1Factor::TwoSqrtTwo => 2.0 * SQRT_2,
            L1Factor::FourSqrtTwo => 4.0 * SQRT_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    #[serde(default = "default_a")]
    pub a: f64,
    pub sigma_sq: f64,
    #[serde(default = "default_l1_factor")]
    pub l1_factor: L1Factor,
}

fn default_a() -> f64 {
    1.0
}

fn default_l1_factor() -> L1Factor {
    L1Factor::TwoSqrtTwo
}

impl PenaltyConfig {
    pub fn bic(a: f64, sigma_sq: f64) -> Result<Self> {
        Self { kind: PenaltyKind::BicType, a, sigma_sq, l1_factor: L1Factor::TwoSqrtTwo }.validated()
    }

    pub fn l1(sigma_sq: f64, l1_factor: L1Factor) -> Result<Self> {
        Self { kind: PenaltyKind::L1, a: default_a(), sigma_sq, l1_factor }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Domain(format!("penalty parameter a must be > 0, got {}", self.a)));
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::Domain(format!("sigma_sq must be > 0, got {}", self.sigma_sq)));
        }
        Ok(self)
    }

    /// Same configuration with a different noise variance.
    pub fn with_sigma_sq(self, sigma_sq: f64) -> Result<Self> {
        Self { sigma_sq, ..self }.validated()
    }
}

/// Coefficient vector with its exact-zero support `J(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    coeffs: Vec<f64>,
    support: Vec<usize>,
}

impl WeightVector {
    /// Takes the coefficients as given; the support is every nonzero entry.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        let support = coeffs.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, _)| j).collect();
        Self { coeffs, support }
    }

    /// Applies the snap-to-zero rule before recording the support.
    pub fn snapped(mut coeffs: Vec<f64>) -> Self {
        snap_to_zero(&mut coeffs);
        Self::from_coeffs(coeffs)
    }

    pub fn zeros(m: usize) -> Self {
        Self { coeffs: vec![0.0; m], support: Vec::new() }
    }

    pub fn vertex(m: usize, j: usize) -> Self {
        let mut c = vec![0.0; m];
        c[j] = 1.0;
        Self::from_coeffs(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `M(λ)`.
    pub fn m_of_lambda(&self) -> usize {
        self.support.len()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

pub fn snap_to_zero(coeffs: &mut [f64]) {
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let cut = SNAP_REL * max;
    for c in coeffs.iter_mut() {
        if c.abs() <= cut {
            *c = 0.0;
        }
    }
}

/// `L(λ) = 2·log(e·M / (M(λ) ∨ 1))`.
pub fn l_of_lambda(m_lambda: usize, m_dict: usize) -> Result<f64> {
    if m_lambda > m_dict {
        return Err(Error::Domain(format!("M(lambda) = {m_lambda} exceeds dictionary size {m_dict}")));
    }
    Ok(2.0 * (1.0 + (m_dict as f64 / m_lambda.max(1) as f64).ln()))
}

/// BIC-type penalty as a function of the support size alone.
pub fn pen_bic_size(m_lambda: usize, m_dict: usize, cfg: &PenaltyConfig, n: usize) -> Result<f64> {
    if m_lambda == 0 {
        return Ok(0.0);
    }
    let l = l_of_lambda(m_lambda, m_dict)?;
    let a = cfg.a;
    let bracket = 1.0 + (2.0 + a) / (1.0 + a) * l.sqrt() + (1.0 + a) / a * l;
    Ok(2.0 * cfg.sigma_sq / n as f64 * bracket * m_lambda as f64)
}

pub fn pen_bic(lambda: &WeightVector, cfg: &PenaltyConfig, n: usize) -> f64 {
    // M(λ) <= len by construction, so the domain check cannot fail
    pen_bic_size(lambda.m_of_lambda(), lambda.len(), cfg, n).expect("support size within dictionary")
}

/// `r_n = c·σ·√((log M + log n)/n)`.
pub fn l1_base_rate(cfg: &PenaltyConfig, n: usize, m_dict: usize) -> f64 {
    let nf = n as f64;
    cfg.l1_factor.value() * cfg.sigma_sq.sqrt() * (((m_dict as f64).ln() + nf.ln()) / nf).sqrt()
}

/// Per-coordinate weights `r_{n,j} = r_n·‖f_j‖_n`; zero columns get weight 0.
pub fn l1_weights(gd: &GramData, cfg: &PenaltyConfig, n: usize) -> Vec<f64> {
    let r_n = l1_base_rate(cfg, n, gd.m_dict());
    gd.col_norms_sq.iter().map(|s| r_n * s.sqrt()).collect()
}

/// `Σ_j w_j |λ_j|`.
pub fn pen_l1(coeffs: &[f64], weights: &[f64]) -> f64 {
    coeffs.iter().zip(weights).map(|(c, w)| w * c.abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregationKind {
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "S")]
    S,
}

impl AggregationKind {
    pub fn label(self) -> &'static str {
        match self {
            AggregationKind::Ms => "MS",
            AggregationKind::C => "C",
            AggregationKind::L => "L",
            AggregationKind::S => "S",
        }
    }
}

/// Optimal aggregation rate `ψ_{n,M}` for each aggregation problem. `d` is only
/// read for subset selection.
pub fn rate_psi(kind: AggregationKind, n: usize, m_dict: usize, d: Option<usize>) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let nf = n as f64;
    let mf = m_dict as f64;
    Ok(match kind {
        AggregationKind::L => mf / nf,
        AggregationKind::Ms => mf.ln() / nf,
        AggregationKind::S => {
            let d = match d {
                Some(d) if (1..=m_dict).contains(&d) => d as f64,
                other => {
                    return Err(Error::Domain(format!("subset size D must satisfy 1 <= D <= {m_dict}, got {other:?}")))
                }
            };
            d * (1.0 + mf / d).ln() / nf
        }
        AggregationKind::C => {
            if mf <= nf.sqrt() {
                mf / nf
            } else {
                ((1.0 + mf / nf.sqrt()).ln() / nf).sqrt()
            }
        }
    })
}

/// Convex-aggregation remainder of the BIC corollary, with `log(eM/√n)` in the
/// large-`M` branch.
pub fn psi_c_corollary(n: usize, m_dict: usize) -> f64 {
    let nf = n as f64;
    let mf = m_dict as f64;
    if mf <= nf.sqrt() {
        mf / nf
    } else {
        ((1.0 + (mf / nf.sqrt()).ln()) / nf).sqrt()
    }
}
