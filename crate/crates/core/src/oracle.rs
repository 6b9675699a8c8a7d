//! Noiseless oracle risks `inf_{λ ∈ H} ‖f_λ − f‖²_n` for the four aggregation
//! classes, and randomized rounding of a convex combination onto the `1/m` grid.

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bic::{exhaustive_search, ols_on_support};
use crate::dictionary::{empirical_norm_sq, gram, Dictionary};
use crate::error::{Error, Result};
use crate::penalty::{AggregationKind, WeightVector};

/// Origin weights at or below this are treated as inactive when choosing an away atom.
const ORIGIN_ACTIVE: f64 = 1e-14;

/// Slack allowed when checking that a vector lies in the simplex.
const SIMPLEX_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub kind: AggregationKind,
    pub value: f64,
    pub argmin: WeightVector,
    /// Duality gap for the convex oracle; 0 for the exactly solved kinds.
    pub certificate: f64,
}

/// `‖f_λ − f‖²_n`.
pub fn approximation_error(dict: &Dictionary, f_vals: &[f64], coeffs: &[f64]) -> Result<f64> {
    dict.check_len(f_vals)?;
    let fitted = dict.combine(coeffs)?;
    let diff: Vec<f64> = fitted.iter().zip(f_vals).map(|(a, b)| a - b).collect();
    Ok(empirical_norm_sq(&diff))
}

/// Best single dictionary element; ties go to the smallest index.
pub fn ms_oracle(dict: &Dictionary, f_vals: &[f64]) -> Result<OracleResult> {
    dict.check_len(f_vals)?;
    let m = dict.m_dict();
    let mut best = (0, f64::INFINITY);
    for j in 0..m {
        let diff: Vec<f64> = dict.column(j).iter().zip(f_vals).map(|(a, b)| a - b).collect();
        let v = empirical_norm_sq(&diff);
        if v < best.1 {
            best = (j, v);
        }
    }
    Ok(OracleResult {
        kind: AggregationKind::Ms,
        value: best.1,
        argmin: WeightVector::vertex(m, best.0),
        certificate: 0.0,
    })
}

/// Best linear combination with at most `d` nonzero coefficients.
pub fn s_oracle(dict: &Dictionary, f_vals: &[f64], d: usize) -> Result<OracleResult> {
    if d < 1 || d > dict.m_dict() {
        return Err(Error::Domain(format!("subset size D must satisfy 1 <= D <= {}, got {d}", dict.m_dict())));
    }
    let zero = |_: &WeightVector| 0.0;
    let (best, _) = exhaustive_search(dict, f_vals, d, &zero)?;
    Ok(OracleResult { kind: AggregationKind::S, value: best.rss, argmin: best.lambda, certificate: 0.0 })
}

/// Best linear combination of all columns (minimum-norm least squares).
pub fn l_oracle(dict: &Dictionary, f_vals: &[f64]) -> Result<OracleResult> {
    let all: Vec<usize> = (0..dict.m_dict()).collect();
    let (coeffs, _) = ols_on_support(dict, f_vals, &all)?;
    let argmin = WeightVector::snapped(coeffs);
    let value = approximation_error(dict, f_vals, argmin.coeffs())?;
    Ok(OracleResult { kind: AggregationKind::L, value, argmin, certificate: 0.0 })
}

/// Iteration cap for the convex oracle.
pub const C_ORACLE_MAX_ITER: usize = 200_000;

/// Best combination in `{λ >= 0, Σ λ_j <= 1}`.
///
/// Away-step conditional gradient over the atoms `{0, e_1, …, e_M}`. Since the
/// atoms are the origin and the unit vectors, the barycentric weight of `e_j` is
/// `λ_j` itself and the origin carries `1 − Σ λ_j`. Each step uses exact line
/// search on the quadratic. Stops once the linear-minimization gap, an upper
/// bound on the suboptimality, drops to `gap_tol`.
pub fn c_oracle(dict: &Dictionary, f_vals: &[f64], gap_tol: f64) -> Result<OracleResult> {
    dict.check_len(f_vals)?;
    if !(gap_tol > 0.0) {
        return Err(Error::Domain(format!("gap_tol must be > 0, got {gap_tol}")));
    }
    let m = dict.m_dict();
    let psi = gram(dict).gram;
    let b = DVector::from_fn(m, |j, _| dict.inner_with(j, f_vals));

    // start from the best atom
    let mut lam = DVector::zeros(m);
    if let Some(j) = (0..m)
        .filter(|&j| psi[(j, j)] - 2.0 * b[j] < 0.0)
        .min_by(|&i, &j| (psi[(i, i)] - 2.0 * b[i]).total_cmp(&(psi[(j, j)] - 2.0 * b[j])))
    {
        lam[j] = 1.0;
    }

    let mut gap = f64::INFINITY;
    for _ in 0..C_ORACLE_MAX_ITER {
        let grad: DVector<f64> = 2.0 * (&psi * &lam - &b);
        let g_lam = grad.dot(&lam);

        // forward atom: origin (score 0) or the unit vector with the smallest gradient
        let (fw_idx, fw_score) = min_atom(&grad);
        gap = g_lam - fw_score;
        if gap <= gap_tol {
            break;
        }

        // away atom among the active ones: origin (score 0) or the largest active gradient
        let origin_weight = 1.0 - lam.sum();
        let mut away: Option<(Option<usize>, f64)> = (origin_weight > ORIGIN_ACTIVE).then_some((None, 0.0));
        for j in 0..m {
            if lam[j] > 0.0 && away.is_none_or(|(_, s)| grad[j] > s) {
                away = Some((Some(j), grad[j]));
            }
        }
        let (away_idx, away_score) = away.expect("some atom is active");
        let away_gap = away_score - g_lam;

        let alpha = match away_idx {
            Some(j) => lam[j],
            None => origin_weight,
        };
        // a single active atom leaves no away direction
        let is_away = gap < away_gap && alpha < 1.0;
        let (dir, step_max) = if is_away {
            let mut d = lam.clone();
            if let Some(j) = away_idx {
                d[j] -= 1.0;
            }
            (d, alpha / (1.0 - alpha))
        } else {
            let mut d = -lam.clone();
            if let Some(j) = fw_idx {
                d[j] += 1.0;
            }
            (d, 1.0)
        };

        let slope = grad.dot(&dir);
        let curv = dir.dot(&(&psi * &dir));
        let step = if curv > 0.0 { (-slope / (2.0 * curv)).clamp(0.0, step_max) } else { step_max };
        if step == 0.0 {
            break;
        }
        lam += step * &dir;
        if is_away && step == step_max {
            // drop step: the away atom leaves the active set exactly
            match away_idx {
                Some(j) => lam[j] = 0.0,
                None => lam /= lam.sum(),
            }
        }
        for v in lam.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let s = lam.sum();
        if s > 1.0 {
            lam /= s;
        }
    }
    if gap > gap_tol {
        return Err(Error::NonConvergence { iterations: C_ORACLE_MAX_ITER, worst: gap });
    }
    let argmin = WeightVector::from_coeffs(lam.iter().copied().collect());
    let value = approximation_error(dict, f_vals, argmin.coeffs())?;
    Ok(OracleResult { kind: AggregationKind::C, value, argmin, certificate: gap.max(0.0) })
}

fn min_atom(grad: &DVector<f64>) -> (Option<usize>, f64) {
    let mut best = (None, 0.0);
    for (j, &g) in grad.iter().enumerate() {
        if g < best.1 {
            best = (Some(j), g);
        }
    }
    best
}

fn check_simplex(lambda_star: &WeightVector) -> Result<f64> {
    let c = lambda_star.coeffs();
    if let Some(v) = c.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("simplex weights must be >= 0, got {v}")));
    }
    let s: f64 = c.iter().sum();
    if s > 1.0 + SIMPLEX_SLACK {
        return Err(Error::Domain(format!("simplex weights must sum to <= 1, got {s}")));
    }
    Ok(s.min(1.0))
}

/// Draws `m` i.i.d. indices from `π = (1 − Σλ*, λ*_1, …, λ*_M)` and returns the
/// empirical frequencies of the dictionary indices.
pub fn maurey_round(lambda_star: &WeightVector, m: usize, seed: u64) -> Result<WeightVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    maurey_round_with(lambda_star, m, &mut rng)
}

pub fn maurey_round_with<R: rand::Rng + ?Sized>(lambda_star: &WeightVector, m: usize, rng: &mut R) -> Result<WeightVector> {
    if m == 0 {
        return Err(Error::Domain("number of draws m must be positive".into()));
    }
    let total = check_simplex(lambda_star)?;
    let mut pi = Vec::with_capacity(lambda_star.len() + 1);
    pi.push((1.0 - total).max(0.0));
    pi.extend_from_slice(lambda_star.coeffs());
    let dist = WeightedIndex::new(&pi).map_err(|e| Error::Domain(format!("invalid rounding distribution: {e}")))?;
    let mut counts = vec![0usize; lambda_star.len()];
    for _ in 0..m {
        let k = dist.sample(rng);
        if k > 0 {
            counts[k - 1] += 1;
        }
    }
    Ok(WeightVector::from_coeffs(counts.into_iter().map(|c| c as f64 / m as f64).collect()))
}

/// Exact `E‖f̄_m − f‖²_n` for the rounding of [`maurey_round`]:
/// `‖f_{λ*} − f‖²_n + (1/m)·[(1/n) Σ_i Σ_j π_j f_j(X_i)² − ‖f_{λ*}‖²_n]`.
pub fn maurey_expected_risk(dict: &Dictionary, f_vals: &[f64], lambda_star: &WeightVector, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("number of draws m must be positive".into()));
    }
    check_simplex(lambda_star)?;
    let bias = approximation_error(dict, f_vals, lambda_star.coeffs())?;
    Ok(bias + maurey_variance(dict, lambda_star)? / m as f64)
}

/// Single-draw variance term `(1/n) Σ_i Σ_j π_j f_j(X_i)² − ‖f_{λ*}‖²_n`.
pub fn maurey_variance(dict: &Dictionary, lambda_star: &WeightVector) -> Result<f64> {
    let c = lambda_star.coeffs();
    dict.check_coeffs(c)?;
    let second: f64 = c.iter().enumerate().map(|(j, &p)| p * empirical_norm_sq(dict.column(j))).sum();
    let first = empirical_norm_sq(&dict.combine(c)?);
    Ok((second - first).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair() -> Dictionary {
        Dictionary::from_columns(&[vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 1.0, -1.0]]).unwrap()
    }

    fn triple() -> Dictionary {
        Dictionary::from_columns(&[
            vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            vec![0.5, 0.2, -0.3, 0.9, -0.8, 0.1],
        ])
        .unwrap()
    }

    #[test]
    fn ms_examples() {
        let d = triple();
        let r = ms_oracle(&d, d.column(2)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmin, WeightVector::vertex(3, 2));

        let p = pair();
        let f: Vec<f64> = p.column(0).iter().zip(p.column(1)).map(|(a, b)| a + b).collect();
        let r = ms_oracle(&p, &f).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.argmin, WeightVector::vertex(2, 0));

        let r = ms_oracle(&d, &[0.0; 6]).unwrap();
        let min = (0..3).map(|j| empirical_norm_sq(d.column(j))).fold(f64::INFINITY, f64::min);
        assert_eq!(r.value, min);
    }

    #[test]
    fn s_and_l_examples() {
        let d = triple();
        let f = [0.3, -1.0, 2.0, 0.5, 0.0, 1.0];
        let l = l_oracle(&d, &f).unwrap();
        let s = s_oracle(&d, &f, 3).unwrap();
        assert_abs_diff_eq!(s.value, l.value, epsilon = 1e-14);

        let p = pair();
        let f = [0.3, -1.0, 2.0, 0.5];
        let s1 = s_oracle(&p, &f, 1).unwrap();
        let max_sq = (0..2).map(|j| p.inner_with(j, &f).powi(2)).fold(0.0, f64::max);
        assert_abs_diff_eq!(s1.value, empirical_norm_sq(&f) - max_sq, epsilon = 1e-14);

        let in_span = d.combine(&[0.0, 2.0, -1.0]).unwrap();
        assert!(s_oracle(&d, &in_span, 2).unwrap().value < 1e-28);
        assert!(l_oracle(&d, &in_span).unwrap().value < 1e-28);
        assert!(s_oracle(&d, &f, 0).is_err());
    }

    #[test]
    fn l_oracle_orthogonal_and_rank_deficient() {
        let p = pair();
        let orth = [1.0, 1.0, -1.0, -1.0];
        assert_abs_diff_eq!(l_oracle(&p, &orth).unwrap().value, 1.0, epsilon = 1e-14);

        let d = Dictionary::from_columns(&[
            vec![1.0, 0.0, 2.0, 1.0],
            vec![0.0, 1.0, 1.0, -1.0],
            vec![1.0, 1.0, 3.0, 0.0],
        ])
        .unwrap();
        let f = [0.4, 2.0, -1.0, 0.5];
        let sub = Dictionary::from_columns(&[d.column(0).to_vec(), d.column(1).to_vec()]).unwrap();
        assert_abs_diff_eq!(l_oracle(&d, &f).unwrap().value, l_oracle(&sub, &f).unwrap().value, epsilon = 1e-12);
    }

    #[test]
    fn c_oracle_examples() {
        let p = pair();
        let f: Vec<f64> = p.column(0).iter().zip(p.column(1)).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        let r = c_oracle(&p, &f, 1e-8).unwrap();
        assert!(r.value <= 1e-8);
        assert_abs_diff_eq!(r.argmin.coeffs()[0], 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(r.argmin.coeffs()[1], 0.5, epsilon = 1e-4);

        let f2: Vec<f64> = p.column(0).iter().map(|v| 2.0 * v).collect();
        let r = c_oracle(&p, &f2, 1e-8).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
        assert!(r.certificate <= 1e-8);
    }

    #[test]
    fn c_oracle_zero_target_stays_at_origin() {
        let d = triple();
        let r = c_oracle(&d, &[0.0; 6], 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmin.m_of_lambda(), 0);
    }

    #[test]
    fn maurey_examples() {
        let v = WeightVector::vertex(3, 1);
        for seed in 0..5 {
            assert_eq!(maurey_round(&v, 7, seed).unwrap(), v);
        }
        assert_eq!(maurey_round(&WeightVector::zeros(3), 5, 1).unwrap(), WeightVector::zeros(3));
        let lam = WeightVector::from_coeffs(vec![0.2, 0.3, 0.1]);
        for seed in 0..20 {
            let r = maurey_round(&lam, 6, seed).unwrap();
            let mut total = 0.0;
            for c in r.coeffs() {
                let k = c * 6.0;
                assert_abs_diff_eq!(k, k.round(), epsilon = 1e-12);
                total += c;
            }
            assert!(total <= 1.0 + 1e-12);
        }
        assert!(maurey_round(&WeightVector::from_coeffs(vec![0.7, 0.6]), 3, 0).is_err());
        assert!(maurey_round(&WeightVector::from_coeffs(vec![-0.1, 0.6]), 3, 0).is_err());
    }

    #[test]
    fn maurey_expected_risk_examples() {
        let p = pair();
        let f: Vec<f64> = p.column(0).iter().zip(p.column(1)).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        let half = WeightVector::from_coeffs(vec![0.5, 0.5]);
        assert_abs_diff_eq!(maurey_expected_risk(&p, &f, &half, 1).unwrap(), 0.5, epsilon = 1e-15);

        let v = WeightVector::vertex(2, 1);
        let g = [0.3, 0.1, -0.2, 0.9];
        assert_abs_diff_eq!(
            maurey_expected_risk(&p, &g, &v, 3).unwrap(),
            approximation_error(&p, &g, v.coeffs()).unwrap(),
            epsilon = 1e-15
        );
        let l2 = p.bound_l().powi(2);
        assert!(maurey_expected_risk(&p, &f, &half, 1).unwrap() <= 0.0 + l2);
    }
}
