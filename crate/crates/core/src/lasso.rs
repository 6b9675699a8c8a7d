//! Weighted ℓ₁ penalized least squares by cyclic coordinate descent.
//!
//! Minimizes `Ŝ(λ) + Σ_j w_j |λ_j|`. Stopping is driven by the stationarity
//! residual of every coordinate, which certifies optimality for the convex
//! objective, rather than by the size of coefficient changes.

use crate::bic::{Diagnostics, Solution};
use crate::dictionary::{empirical_norm_sq, zero_columns, Dictionary, GramData};
use crate::dictionary::rho_of_support;
use crate::error::{Error, Result};
use crate::penalty::{pen_l1, WeightVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CdSettings {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Warm start; `None` starts from zero.
    pub initial: Option<WeightVector>,
}

impl Default for CdSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 100_000, initial: None }
    }
}

/// `sign(z)·max(|z| − t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

pub fn l1_objective(dict: &Dictionary, y: &[f64], weights: &[f64], coeffs: &[f64]) -> Result<f64> {
    let fitted = dict.combine(coeffs)?;
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    Ok(empirical_norm_sq(&resid) + pen_l1(coeffs, weights))
}

fn check_weights(dict: &Dictionary, weights: &[f64]) -> Result<()> {
    if weights.len() != dict.m_dict() {
        return Err(Error::Dimension { expected: dict.m_dict(), found: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain(format!("l1 weights must be finite and >= 0, got {w}")));
    }
    Ok(())
}

fn violations(dict: &Dictionary, resid: &[f64], weights: &[f64], coeffs: &[f64], frozen: &[bool]) -> Vec<f64> {
    (0..dict.m_dict())
        .map(|j| {
            if frozen[j] {
                return 0.0;
            }
            let g = 2.0 * dict.inner_with(j, resid);
            let w = weights[j];
            let c = coeffs[j];
            if c != 0.0 {
                (g - w * c.signum()).abs()
            } else {
                (g.abs() - w).max(0.0)
            }
        })
        .collect()
}

fn column_norms_sq(dict: &Dictionary) -> Vec<f64> {
    (0..dict.m_dict()).map(|j| empirical_norm_sq(dict.column(j))).collect()
}

fn frozen_mask(norms: &[f64]) -> Vec<bool> {
    let mut mask = vec![false; norms.len()];
    for j in zero_columns(norms) {
        mask[j] = true;
    }
    mask
}

/// Per-coordinate stationarity violations of `lambda`. Zero-norm columns report 0.
pub fn kkt_report(dict: &Dictionary, y: &[f64], weights: &[f64], lambda: &WeightVector) -> Result<Vec<f64>> {
    dict.check_len(y)?;
    check_weights(dict, weights)?;
    let fitted = dict.combine(lambda.coeffs())?;
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let frozen = frozen_mask(&column_norms_sq(dict));
    Ok(violations(dict, &resid, weights, lambda.coeffs(), &frozen))
}

pub fn solve_l1_cd(dict: &Dictionary, y: &[f64], weights: &[f64], settings: &CdSettings) -> Result<Solution> {
    dict.check_len(y)?;
    check_weights(dict, weights)?;
    if !(settings.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {}", settings.tol)));
    }
    let m = dict.m_dict();
    let norms = column_norms_sq(dict);
    let frozen = frozen_mask(&norms);

    let mut coeffs = match &settings.initial {
        Some(w) => {
            dict.check_coeffs(w.coeffs())?;
            w.coeffs().to_vec()
        }
        None => vec![0.0; m],
    };
    for j in 0..m {
        if frozen[j] {
            coeffs[j] = 0.0;
        }
    }

    let mut resid: Vec<f64> = {
        let fitted = dict.combine(&coeffs)?;
        y.iter().zip(&fitted).map(|(a, b)| a - b).collect()
    };
    let mut worst = f64::INFINITY;
    #[cfg(debug_assertions)]
    let mut last_obj = l1_objective(dict, y, weights, &coeffs)?;

    for sweep in 1..=settings.max_sweeps {
        for j in 0..m {
            if frozen[j] {
                continue;
            }
            let old = coeffs[j];
            // (1/n)⟨f_j, r_{−j}⟩ with r_{−j} = r + λ_j f_j
            let z = dict.inner_with(j, &resid) + norms[j] * old;
            let new = soft_threshold(z, weights[j] / 2.0) / norms[j];
            if new != old {
                let delta = new - old;
                for (r, v) in resid.iter_mut().zip(dict.column(j)) {
                    *r -= delta * v;
                }
                coeffs[j] = new;
            }
        }

        #[cfg(debug_assertions)]
        {
            let obj = l1_objective(dict, y, weights, &coeffs)?;
            debug_assert!(obj <= last_obj + 1e-12 * (1.0 + last_obj.abs()), "objective increased at sweep {sweep}");
            last_obj = obj;
        }

        // certify on the snapped vector with a freshly computed residual
        let candidate = WeightVector::snapped(coeffs.clone());
        let fitted = dict.combine(candidate.coeffs())?;
        let fresh: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let viol = violations(dict, &fresh, weights, candidate.coeffs(), &frozen);
        worst = viol.iter().cloned().fold(0.0, f64::max);
        if worst <= settings.tol {
            let rss = empirical_norm_sq(&fresh);
            let penalty = pen_l1(candidate.coeffs(), weights);
            return Ok(Solution {
                lambda_hat: candidate,
                objective: rss + penalty,
                rss_over_n: rss,
                penalty_value: penalty,
                diagnostics: Diagnostics::CoordinateDescent { sweeps: sweep, max_violation: worst, violations: viol },
            });
        }
        resid = fresh;
    }
    Err(Error::NonConvergence { iterations: settings.max_sweeps, worst })
}

/// `32·ρ(λ)·M(λ) <= 1`. Zero-norm columns in the support are ignored.
pub fn check_coherence_condition(gd: &GramData, lambda: &WeightVector) -> bool {
    let support: Vec<usize> = lambda.support().iter().copied().filter(|&j| !gd.is_zero_col(j)).collect();
    if support.is_empty() {
        return true;
    }
    let rho = rho_of_support(gd, &support).expect("support restricted to nonzero columns");
    32.0 * rho * lambda.m_of_lambda() as f64 <= 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::gram;
    use approx::assert_abs_diff_eq;

    fn pair() -> Dictionary {
        Dictionary::from_columns(&[vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 1.0, -1.0]]).unwrap()
    }

    fn small_design() -> (Dictionary, Vec<f64>) {
        let d = Dictionary::from_columns(&[
            vec![1.0, 0.5, -0.2, 0.3, 0.9, -0.4],
            vec![0.1, -0.4, 0.8, 0.2, -0.6, 0.3],
            vec![0.7, 0.7, 0.1, -0.5, 0.0, 0.2],
        ])
        .unwrap();
        (d, vec![1.2, 0.4, 0.3, -0.1, 0.5, -0.2])
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-0.75, 0.0), -0.75);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }

    #[test]
    fn unpenalized_limit_is_ols() {
        let (d, y) = small_design();
        let sol = solve_l1_cd(&d, &y, &[0.0; 3], &CdSettings::default()).unwrap();
        let (ols, _) = crate::bic::ols_on_support(&d, &y, &[0, 1, 2]).unwrap();
        for (a, b) in sol.lambda_hat.coeffs().iter().zip(&ols) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn orthonormal_closed_form() {
        let d = pair();
        let y: Vec<f64> = d.column(0).iter().map(|v| 2.0 * v).collect();
        let sol = solve_l1_cd(&d, &y, &[1.0, 1.0], &CdSettings::default()).unwrap();
        assert_abs_diff_eq!(sol.lambda_hat.coeffs()[0], 1.5, epsilon = 1e-12);
        assert_eq!(sol.lambda_hat.coeffs()[1], 0.0);
    }

    #[test]
    fn large_weights_give_zero() {
        let (d, y) = small_design();
        let w: Vec<f64> = (0..3).map(|j| 2.0 * d.inner_with(j, &y).abs() + 1e-9).collect();
        let sol = solve_l1_cd(&d, &y, &w, &CdSettings::default()).unwrap();
        assert_eq!(sol.lambda_hat.m_of_lambda(), 0);
        assert!(kkt_report(&d, &y, &w, &sol.lambda_hat).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kkt_report_examples() {
        let (d, y) = small_design();
        let w = [0.1, 0.1, 0.1];
        let sol = solve_l1_cd(&d, &y, &w, &CdSettings::default()).unwrap();
        let viol = kkt_report(&d, &y, &w, &sol.lambda_hat).unwrap();
        assert!(viol.iter().all(|&v| v <= 1e-8));

        let zero = WeightVector::zeros(3);
        let viol0 = kkt_report(&d, &y, &w, &zero).unwrap();
        for (j, v) in viol0.iter().enumerate() {
            let g = 2.0 * d.inner_with(j, &y);
            assert_abs_diff_eq!(*v, (g.abs() - w[j]).max(0.0), epsilon = 1e-15);
        }
        assert!(viol0.iter().any(|&v| v > 0.0));

        let base = l1_objective(&d, &y, &w, sol.lambda_hat.coeffs()).unwrap();
        let j = sol.lambda_hat.support()[0];
        let mut bumped = sol.lambda_hat.coeffs().to_vec();
        bumped[j] += 0.1;
        assert!(l1_objective(&d, &y, &w, &bumped).unwrap() > base);
    }

    #[test]
    fn zero_columns_are_frozen() {
        let d = Dictionary::from_columns(&[vec![1.0, 1.0, 1.0, 1.0], vec![0.0; 4], vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        let d2 = pair();
        let y = [2.0, 0.5, 1.0, 0.0];
        let init = WeightVector::from_coeffs(vec![0.3, 5.0, 0.1]);
        let sol = solve_l1_cd(&d, &y, &[0.2, 0.2, 0.2], &CdSettings { initial: Some(init), ..Default::default() }).unwrap();
        assert_eq!(sol.lambda_hat.coeffs()[1], 0.0);
        let sol2 = solve_l1_cd(&d2, &y, &[0.2, 0.2], &CdSettings::default()).unwrap();
        assert_abs_diff_eq!(sol.objective, sol2.objective, epsilon = 1e-14);
    }

    #[test]
    fn non_convergence_is_reported() {
        let d = Dictionary::from_columns(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.1]]).unwrap();
        let err = solve_l1_cd(&d, &[1.0, 0.0, 2.0], &[0.0, 0.0], &CdSettings { max_sweeps: 2, ..Default::default() });
        assert!(matches!(err, Err(Error::NonConvergence { iterations: 2, .. })));
    }

    #[test]
    fn coherence_condition_examples() {
        let orth = gram(&pair());
        assert!(check_coherence_condition(&orth, &WeightVector::zeros(2)));
        assert!(check_coherence_condition(&orth, &WeightVector::from_coeffs(vec![1.0, -2.0])));

        // two columns with correlation 0.1
        let s = (1.0f64 - 0.01).sqrt();
        let a = [1.0, 1.0, -1.0, -1.0];
        let b = [1.0, -1.0, 1.0, -1.0];
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.1 * x + s * y).collect();
        let gd = gram(&Dictionary::from_columns(&[a.to_vec(), c]).unwrap());
        assert!(!check_coherence_condition(&gd, &WeightVector::from_coeffs(vec![1.0, 1.0])));
    }
}
