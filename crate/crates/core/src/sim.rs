//! Monte Carlo harness: data from `Y_i = f(X_i) + W_i`, risk estimation, both
//! sides of the oracle inequalities, the variance plug-in and rate sweeps.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bic::{exhaustive_search, solve_bic_exhaustive, solve_bic_greedy, SearchMode, Solution};
use crate::dictionary::{gram, kappa, Dictionary};
use crate::error::{Error, Result};
use crate::lasso::{solve_l1_cd, CdSettings};
use crate::oracle::approximation_error;
use crate::penalty::{
    l1_weights, l_of_lambda, rate_psi, AggregationKind, L1Factor, PenaltyConfig, PenaltyKind, WeightVector,
};

/// Default `ε` for the ℓ₁ bound; minimizes `4 + ε + 4/ε`.
pub const DEFAULT_EPS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("noise sigma must be > 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    /// Noise model for replicate `r`: same `σ`, seed `seed ⊕ r`.
    pub fn replicate(&self, r: u64) -> Self {
        Self { sigma: self.sigma, seed: self.seed ^ r }
    }
}

fn draw_responses(f_vals: &[f64], noise: &NoiseModel) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    f_vals
        .iter()
        .map(|f| {
            let w: f64 = StandardNormal.sample(&mut rng);
            f + noise.sigma * w
        })
        .collect()
}

fn warn_if_unbounded(dict: &Dictionary, f_vals: &[f64]) {
    let max = f_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > dict.bound_l() {
        log::warn!("target reaches {max}, above the dictionary bound L = {}", dict.bound_l());
    }
}

/// `Y_i = f(X_i) + σ·ξ_i` with `ξ_i` i.i.d. standard normal from a seeded ChaCha8 stream.
pub fn generate_responses(dict: &Dictionary, f_vals: &[f64], noise: &NoiseModel) -> Result<Vec<f64>> {
    dict.check_len(f_vals)?;
    warn_if_unbounded(dict, f_vals);
    Ok(draw_responses(f_vals, noise))
}

/// An aggregation procedure that maps responses to a coefficient vector.
pub trait Aggregator: Sync {
    fn penalty(&self) -> &PenaltyConfig;
    fn fit(&self, dict: &Dictionary, y: &[f64]) -> Result<Solution>;
}

/// BIC-type aggregate. `max_support = None` searches all support sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct BicAggregator {
    pub cfg: PenaltyConfig,
    pub mode: SearchMode,
    pub max_support: Option<usize>,
}

impl BicAggregator {
    pub fn new(cfg: PenaltyConfig, mode: SearchMode, max_support: Option<usize>) -> Result<Self> {
        if cfg.kind != PenaltyKind::BicType {
            return Err(Error::Configuration("BIC aggregator requires a bic_type penalty".into()));
        }
        Ok(Self { cfg: cfg.validated()?, mode, max_support })
    }
}

impl Aggregator for BicAggregator {
    fn penalty(&self) -> &PenaltyConfig {
        &self.cfg
    }

    fn fit(&self, dict: &Dictionary, y: &[f64]) -> Result<Solution> {
        let cap = self.max_support.unwrap_or(dict.m_dict()).min(dict.m_dict());
        match self.mode {
            SearchMode::Exhaustive => solve_bic_exhaustive(dict, y, &self.cfg, cap),
            SearchMode::Greedy => solve_bic_greedy(dict, y, &self.cfg, cap),
        }
    }
}

/// Weighted-ℓ₁ aggregate with weights `r_n‖f_j‖_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Aggregator {
    pub cfg: PenaltyConfig,
    pub settings: CdSettings,
}

impl L1Aggregator {
    pub fn new(cfg: PenaltyConfig, settings: CdSettings) -> Result<Self> {
        if cfg.kind != PenaltyKind::L1 {
            return Err(Error::Configuration("l1 aggregator requires an l1 penalty".into()));
        }
        Ok(Self { cfg: cfg.validated()?, settings })
    }
}

impl Aggregator for L1Aggregator {
    fn penalty(&self) -> &PenaltyConfig {
        &self.cfg
    }

    fn fit(&self, dict: &Dictionary, y: &[f64]) -> Result<Solution> {
        let weights = l1_weights(&gram(dict), &self.cfg, dict.n());
        solve_l1_cd(dict, y, &weights, &self.settings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicates: usize,
    /// Penalty the aggregate was run with.
    pub penalty: PenaltyConfig,
}

/// Mean and standard error of `‖f̃ − f‖²_n` over independent replicates.
pub fn mc_risk(
    dict: &Dictionary,
    f_vals: &[f64],
    noise: &NoiseModel,
    solver: &dyn Aggregator,
    replicates: usize,
) -> Result<RiskEstimate> {
    if replicates < 2 {
        return Err(Error::Domain(format!("need at least 2 replicates, got {replicates}")));
    }
    dict.check_len(f_vals)?;
    warn_if_unbounded(dict, f_vals);
    let losses: Vec<f64> = (1..=replicates as u64)
        .into_par_iter()
        .map(|r| {
            let y = draw_responses(f_vals, &noise.replicate(r));
            solver
                .fit(dict, &y)
                .and_then(|sol| approximation_error(dict, f_vals, sol.lambda_hat.coeffs()))
                .map_err(|e| Error::Replicate { index: r, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&losses);
    Ok(RiskEstimate { mean, stderr, replicates, penalty: *solver.penalty() })
}

/// Sample mean and `s/√R`.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Right-hand side of the BIC oracle inequality:
/// `(1+a)·inf_λ[‖f_λ − f‖²_n + (σ²/n)(5 + ((2+3a)/a)·L(λ))·M(λ)] + (σ²/n)·6(1+a)²/(a(e−1))`.
pub fn rhs_bic(dict: &Dictionary, f_vals: &[f64], a: f64, sigma_sq: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be > 0, got {a}")));
    }
    let n = dict.n() as f64;
    let m_dict = dict.m_dict();
    let complexity = |w: &WeightVector| {
        let k = w.m_of_lambda();
        let l = l_of_lambda(k, m_dict).expect("support within dictionary");
        sigma_sq / n * (5.0 + (2.0 + 3.0 * a) / a * l) * k as f64
    };
    let (best, _) = exhaustive_search(dict, f_vals, m_dict, &complexity)?;
    Ok((1.0 + a) * best.objective + bic_remainder(n, a, sigma_sq))
}

pub(crate) fn bic_remainder(n: f64, a: f64, sigma_sq: f64) -> f64 {
    sigma_sq / n * 6.0 * (1.0 + a).powi(2) / (a * (E - 1.0))
}

/// Right-hand side of the κ-based ℓ₁ oracle inequality:
/// `inf_λ{(1+ε)‖f_λ − f‖²_n + 8(4+ε+4/ε)·σ²(log M + log n)/(κn)·M(λ)}`
/// plus the two tail terms `(4L²+12σ²)/(n√(π(log M + log n)))` and
/// `6σ²√((n+2)/n)·exp(−n/16)`.
pub fn rhs_l1(dict: &Dictionary, f_vals: &[f64], eps: f64, sigma_sq: f64, kappa: f64, bound_l: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Assumption(format!("kappa must be > 0 for the l1 bound, got {kappa}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be > 0, got {eps}")));
    }
    let n = dict.n() as f64;
    let log_mn = (dict.m_dict() as f64).ln() + n.ln();
    let per_coef = 8.0 * (4.0 + eps + 4.0 / eps) * sigma_sq * log_mn / (kappa * n);
    // minimize ‖f_λ − f‖² + per_coef/(1+ε)·M(λ), then scale back by (1+ε)
    let scaled = per_coef / (1.0 + eps);
    let complexity = |w: &WeightVector| scaled * w.m_of_lambda() as f64;
    let (best, _) = exhaustive_search(dict, f_vals, dict.m_dict(), &complexity)?;
    Ok((1.0 + eps) * best.objective + l1_tails(n, log_mn, sigma_sq, bound_l))
}

pub(crate) fn l1_tails(n: f64, log_mn: f64, sigma_sq: f64, bound_l: f64) -> f64 {
    (4.0 * bound_l * bound_l + 12.0 * sigma_sq) / (n * (PI * log_mn).sqrt())
        + 6.0 * sigma_sq * ((n + 2.0) / n).sqrt() * (-n / 16.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// BIC-type penalty bound.
    Bic,
    /// κ-based weighted-ℓ₁ bound.
    L1,
}

impl Theorem {
    pub fn label(self) -> &'static str {
        match self {
            Theorem::Bic => "bic",
            Theorem::L1 => "l1",
        }
    }
}

/// A computed right-hand side and the configuration it was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub theorem: Theorem,
    pub value: f64,
    pub sigma_sq: f64,
    /// BIC parameter `a`; ignored for the ℓ₁ bound.
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IneqReport {
    pub theorem: Theorem,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub slack: f64,
    pub replicates: usize,
    /// `lhs − 2·lhs_stderr > rhs`.
    pub violated: bool,
}

pub fn check_inequality(lhs: &RiskEstimate, rhs: &Bound) -> Result<IneqReport> {
    let p = &lhs.penalty;
    let matched = match rhs.theorem {
        Theorem::Bic => p.kind == PenaltyKind::BicType && p.a == rhs.a && p.sigma_sq == rhs.sigma_sq,
        Theorem::L1 => p.kind == PenaltyKind::L1 && p.l1_factor == L1Factor::TwoSqrtTwo && p.sigma_sq == rhs.sigma_sq,
    };
    if !matched {
        return Err(Error::Configuration(format!(
            "aggregate run with {p:?} does not match the {} bound (sigma_sq = {}, a = {})",
            rhs.theorem.label(),
            rhs.sigma_sq,
            rhs.a
        )));
    }
    if lhs.replicates < 2 {
        return Err(Error::Domain("an inequality check needs at least 2 replicates".into()));
    }
    Ok(IneqReport {
        theorem: rhs.theorem,
        lhs: lhs.mean,
        lhs_stderr: lhs.stderr,
        rhs: rhs.value,
        slack: rhs.value - lhs.mean,
        replicates: lhs.replicates,
        violated: lhs.mean - 2.0 * lhs.stderr > rhs.value,
    })
}

/// Monte Carlo risk of the BIC aggregate against its oracle bound.
pub fn check_bic_inequality(
    dict: &Dictionary,
    f_vals: &[f64],
    noise: &NoiseModel,
    solver: &BicAggregator,
    replicates: usize,
) -> Result<IneqReport> {
    let est = mc_risk(dict, f_vals, noise, solver, replicates)?;
    let value = rhs_bic(dict, f_vals, solver.cfg.a, solver.cfg.sigma_sq)?;
    check_inequality(&est, &Bound { theorem: Theorem::Bic, value, sigma_sq: solver.cfg.sigma_sq, a: solver.cfg.a })
}

/// Monte Carlo risk of the ℓ₁ aggregate against its κ-based bound, with κ
/// computed from the dictionary.
pub fn check_l1_inequality(
    dict: &Dictionary,
    f_vals: &[f64],
    noise: &NoiseModel,
    solver: &L1Aggregator,
    replicates: usize,
    eps: f64,
) -> Result<IneqReport> {
    let k = kappa(&gram(dict))?;
    let est = mc_risk(dict, f_vals, noise, solver, replicates)?;
    let value = rhs_l1(dict, f_vals, eps, solver.cfg.sigma_sq, k, dict.bound_l())?;
    check_inequality(&est, &Bound { theorem: Theorem::L1, value, sigma_sq: solver.cfg.sigma_sq, a: solver.cfg.a })
}

/// Unbiased sample variance of independent training responses.
pub fn estimate_sigma_sq(training_responses: &[f64]) -> Result<f64> {
    if training_responses.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: training_responses.len() });
    }
    let k = training_responses.len() as f64;
    let mean = training_responses.iter().sum::<f64>() / k;
    Ok(training_responses.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0))
}

/// Penalty with `σ²` replaced by `2σ̂²` from the training responses.
pub fn plug_in_penalty(cfg: &PenaltyConfig, training_responses: &[f64]) -> Result<PenaltyConfig> {
    let s2 = estimate_sigma_sq(training_responses)?;
    if !(s2 > 0.0) {
        return Err(Error::Domain("estimated variance is zero; plug-in penalty undefined".into()));
    }
    cfg.with_sigma_sq(2.0 * s2)
}

/// Draws `len` pure-noise training responses from `noise`.
pub fn pure_noise(len: usize, noise: &NoiseModel) -> Vec<f64> {
    draw_responses(&vec![0.0; len], noise)
}

/// Orthonormal cosine dictionary on `n` equispaced points: the constant column
/// followed by `√2·cos(πj(i + ½)/n)` for `j = 1..M`.
pub fn cosine_dictionary(n: usize, m_dict: usize) -> Result<Dictionary> {
    if m_dict > n {
        return Err(Error::Domain(format!("cosine dictionary needs M <= n, got M = {m_dict}, n = {n}")));
    }
    let cols: Vec<Vec<f64>> = (0..m_dict)
        .map(|j| {
            (0..n)
                .map(|i| {
                    if j == 0 {
                        1.0
                    } else {
                        2f64.sqrt() * (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos()
                    }
                })
                .collect()
        })
        .collect();
    Dictionary::new(
        nalgebra::DMatrix::from_fn(n, m_dict, |i, j| cols[j][i]),
        if m_dict > 1 { 2f64.sqrt() } else { 1.0 },
    )
}

/// A target whose oracle risk for `kind` is zero.
pub fn zero_risk_target(kind: AggregationKind, dict: &Dictionary, d: Option<usize>) -> Result<Vec<f64>> {
    let m = dict.m_dict();
    let mut coeffs = vec![0.0; m];
    match kind {
        AggregationKind::Ms => coeffs[0] = 1.0,
        AggregationKind::C => {
            coeffs[0] = 0.5;
            coeffs[1] = 0.5;
        }
        AggregationKind::L => coeffs.iter_mut().for_each(|c| *c = 1.0),
        AggregationKind::S => {
            let d = d.filter(|d| (1..=m).contains(d)).ok_or_else(|| {
                Error::Domain(format!("subset size D must satisfy 1 <= D <= {m}, got {d:?}"))
            })?;
            coeffs[..d].iter_mut().for_each(|c| *c = 1.0);
        }
    }
    dict.combine(&coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub kind: AggregationKind,
    pub n: usize,
    pub m_dict: usize,
    pub d: Option<usize>,
    pub risk: f64,
    pub risk_stderr: f64,
    pub psi: f64,
    pub ratio: f64,
}

/// Builds a dictionary for a grid point.
pub type InstanceBuilder<'a> = dyn Fn(usize, usize) -> Result<Dictionary> + Sync + 'a;

/// Risk of `solver` on zero-oracle-risk instances over the `(n, M)` grid.
#[allow(clippy::too_many_arguments)]
pub fn rate_sweep(
    kind: AggregationKind,
    n_grid: &[usize],
    m_grid: &[usize],
    d: Option<usize>,
    builder: &InstanceBuilder<'_>,
    solver: &dyn Aggregator,
    noise: &NoiseModel,
    replicates: usize,
) -> Result<Vec<SweepRow>> {
    if n_grid.is_empty() || m_grid.is_empty() {
        return Err(Error::Configuration("rate sweep grids must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(n_grid.len() * m_grid.len());
    for &n in n_grid {
        for &m in m_grid {
            let dict = builder(n, m)?;
            let f = zero_risk_target(kind, &dict, d)?;
            let est = mc_risk(&dict, &f, noise, solver, replicates)?;
            let psi = rate_psi(kind, n, m, d)?;
            rows.push(SweepRow {
                kind,
                n,
                m_dict: m,
                d,
                risk: est.mean,
                risk_stderr: est.stderr,
                psi,
                ratio: est.mean / psi,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("slope needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("x values are all equal".into()));
    }
    Ok(sxy / sxx)
}
