//! Penalized least squares under the BIC-type penalty.
//!
//! The penalty is constant over all coefficient vectors with the same number of
//! nonzero entries, so the minimization splits into an ordinary least-squares
//! fit per support followed by a comparison across supports. The exhaustive
//! search scores every support up to a size cap; the greedy search grows one
//! support by forward selection.
//!
//! Ties are broken deterministically: lower objective, then smaller `M(λ)`, then
//! the lexicographically smaller support.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{empirical_norm_sq, Dictionary};
use crate::error::{Error, Result};
use crate::penalty::{pen_bic, PenaltyConfig, PenaltyKind, WeightVector};

/// Upper limit on the number of supports an exhaustive search may score.
pub const SUPPORT_BUDGET: u128 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    Search { supports_visited: u64, mode: SearchMode },
    CoordinateDescent { sweeps: usize, max_violation: f64, violations: Vec<f64> },
}

/// A minimizer together with the pieces of its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub lambda_hat: WeightVector,
    pub objective: f64,
    pub rss_over_n: f64,
    pub penalty_value: f64,
    pub diagnostics: Diagnostics,
}

/// `Ŝ(λ) = (1/n) Σ_i (y_i − f_λ(X_i))²`.
pub fn residual_sum(dict: &Dictionary, y: &[f64], lambda: &WeightVector) -> Result<f64> {
    dict.check_len(y)?;
    let fitted = dict.combine(lambda.coeffs())?;
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    Ok(empirical_norm_sq(&resid))
}

/// Minimum-norm least squares of `y` on the columns in `support`.
///
/// Returns the coefficients in support order and `Ŝ` of the fitted vector.
pub fn ols_on_support(dict: &Dictionary, y: &[f64], support: &[usize]) -> Result<(Vec<f64>, f64)> {
    dict.check_len(y)?;
    if let Some(&j) = support.iter().find(|&&j| j >= dict.m_dict()) {
        return Err(Error::Domain(format!("column index {j} out of range 0..{}", dict.m_dict())));
    }
    let coeffs = min_norm_lstsq(dict, y, support);
    let mut full = vec![0.0; dict.m_dict()];
    for (&j, &c) in support.iter().zip(&coeffs) {
        full[j] += c;
    }
    let rss = residual_sum(dict, y, &WeightVector::from_coeffs(full))?;
    Ok((coeffs, rss))
}

fn min_norm_lstsq(dict: &Dictionary, y: &[f64], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    if k == 0 {
        return Vec::new();
    }
    let n = dict.n();
    let x = DMatrix::from_fn(n, k, |i, c| dict.values()[(i, support[c])]);
    let svd = x.svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv == 0.0 {
        return vec![0.0; k];
    }
    let eps = max_sv * n.max(k) as f64 * f64::EPSILON;
    let rhs = DVector::from_column_slice(y);
    svd.solve(&rhs, eps).expect("SVD computed with U and V").iter().copied().collect()
}

/// A scored support.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    /// The support that was fit, before snapping.
    pub searched: Vec<usize>,
    pub lambda: WeightVector,
    pub rss: f64,
    pub penalty: f64,
    pub objective: f64,
}

pub(crate) type PenaltyFn<'a> = dyn Fn(&WeightVector) -> f64 + Sync + 'a;

pub(crate) fn evaluate_support(dict: &Dictionary, y: &[f64], support: &[usize], pen: &PenaltyFn<'_>) -> Candidate {
    let coeffs = min_norm_lstsq(dict, y, support);
    let mut full = vec![0.0; dict.m_dict()];
    for (&j, &c) in support.iter().zip(&coeffs) {
        full[j] = c;
    }
    let lambda = WeightVector::snapped(full);
    let rss = residual_sum(dict, y, &lambda).expect("dimensions validated by caller");
    let penalty = pen(&lambda);
    Candidate { searched: support.to_vec(), lambda, rss, penalty, objective: rss + penalty }
}

pub(crate) fn compare_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then(a.lambda.m_of_lambda().cmp(&b.lambda.m_of_lambda()))
        .then_with(|| a.lambda.support().cmp(b.lambda.support()))
        .then_with(|| a.searched.cmp(&b.searched))
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if compare_candidates(&b, &a) == Ordering::Less {
        b
    } else {
        a
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// `Σ_{m ≤ max_support} C(M, m)`.
pub fn support_count(m_dict: usize, max_support: usize) -> u128 {
    (0..=max_support.min(m_dict)).map(|k| binomial(m_dict, k)).fold(0u128, |a, b| a.saturating_add(b))
}

pub(crate) fn check_budget(m_dict: usize, max_support: usize) -> Result<u128> {
    let supports = support_count(m_dict, max_support);
    if supports > SUPPORT_BUDGET {
        return Err(Error::Budget { supports, limit: SUPPORT_BUDGET });
    }
    Ok(supports)
}

/// The `rank`-th `k`-subset of `0..m` in lexicographic order.
fn unrank_combination(m: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for pos in 0..k {
        let mut c = next;
        loop {
            let below = binomial(m - c - 1, k - pos - 1);
            if rank < below {
                break;
            }
            rank -= below;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    out
}

/// Scores every support of size `<= max_support` and returns the best one with
/// the number of supports visited.
pub(crate) fn exhaustive_search(
    dict: &Dictionary,
    y: &[f64],
    max_support: usize,
    pen: &PenaltyFn<'_>,
) -> Result<(Candidate, u64)> {
    dict.check_len(y)?;
    let m = dict.m_dict();
    if max_support > m {
        return Err(Error::Domain(format!("max_support {max_support} exceeds dictionary size {m}")));
    }
    let total = check_budget(m, max_support)?;
    let mut best = evaluate_support(dict, y, &[], pen);
    for k in 1..=max_support {
        let count = binomial(m, k) as u64;
        let size_best = (0..count)
            .into_par_iter()
            .map(|rank| evaluate_support(dict, y, &unrank_combination(m, k, rank as u128), pen))
            .reduce_with(better);
        if let Some(c) = size_best {
            best = better(best, c);
        }
    }
    Ok((best, total as u64))
}

fn check_bic(cfg: &PenaltyConfig) -> Result<()> {
    if cfg.kind != PenaltyKind::BicType {
        return Err(Error::Configuration("BIC solver requires a bic_type penalty".into()));
    }
    cfg.validated().map(|_| ())
}

fn into_solution(c: Candidate, supports_visited: u64, mode: SearchMode) -> Solution {
    Solution {
        lambda_hat: c.lambda,
        objective: c.objective,
        rss_over_n: c.rss,
        penalty_value: c.penalty,
        diagnostics: Diagnostics::Search { supports_visited, mode },
    }
}

/// Global minimizer of `Ŝ(λ) + pen(λ)` over supports of size `<= max_support`.
pub fn solve_bic_exhaustive(dict: &Dictionary, y: &[f64], cfg: &PenaltyConfig, max_support: usize) -> Result<Solution> {
    check_bic(cfg)?;
    let n = dict.n();
    let pen = |w: &WeightVector| pen_bic(w, cfg, n);
    let (best, visited) = exhaustive_search(dict, y, max_support, &pen)?;
    Ok(into_solution(best, visited, SearchMode::Exhaustive))
}

/// Forward stepwise selection on the penalized objective.
pub fn solve_bic_greedy(dict: &Dictionary, y: &[f64], cfg: &PenaltyConfig, max_support: usize) -> Result<Solution> {
    check_bic(cfg)?;
    dict.check_len(y)?;
    let m = dict.m_dict();
    let n = dict.n();
    let pen = |w: &WeightVector| pen_bic(w, cfg, n);
    let mut current = evaluate_support(dict, y, &[], &pen);
    let mut visited: u64 = 1;
    let mut support: Vec<usize> = Vec::new();
    while support.len() < max_support.min(m) {
        let step = (0..m)
            .filter(|j| !support.contains(j))
            .map(|j| {
                let mut s = support.clone();
                s.push(j);
                s.sort_unstable();
                evaluate_support(dict, y, &s, &pen)
            })
            .inspect(|_| visited += 1)
            .reduce(better);
        match step {
            Some(c) if c.objective < current.objective => {
                support = c.searched.clone();
                current = c;
            }
            _ => break,
        }
    }
    Ok(into_solution(current, visited, SearchMode::Greedy))
}
