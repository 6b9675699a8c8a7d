//! Independent reference implementations shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use std::cmp::Ordering;

use plsagg_core::bic::{ols_on_support, residual_sum};
use plsagg_core::penalty::pen_bic;
use plsagg_core::{Dictionary, PenaltyConfig, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Columns with i.i.d. uniform entries on [−1, 1].
pub fn uniform_dictionary(n: usize, m: usize, seed: u64) -> Dictionary {
    let mut r = rng(seed);
    let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    Dictionary::from_columns(&cols).unwrap()
}

/// Columns `0.6·z + 0.8·e_j` sharing one Gaussian factor `z`, so every pair has
/// population correlation 0.36.
pub fn correlated_dictionary(n: usize, m: usize, seed: u64) -> Dictionary {
    let mut r = rng(seed);
    let z: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            z.iter()
                .map(|zi| {
                    let e: f64 = r.sample(StandardNormal);
                    0.6 * zi + 0.8 * e
                })
                .collect()
        })
        .collect();
    Dictionary::from_columns(&cols).unwrap()
}

pub fn gaussian_vector(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect()
}

/// `Σ_j c_j f_j + noise`.
pub fn response(dict: &Dictionary, coeffs: &[f64], noise: &[f64]) -> Vec<f64> {
    (0..dict.n())
        .map(|i| coeffs.iter().enumerate().map(|(j, c)| c * dict.column(j)[i]).sum::<f64>() + noise[i])
        .collect()
}

pub fn norm_sq_n(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// `(1/n) XᵀX` and `(1/n) Xᵀy` from raw loops.
pub fn moments(dict: &Dictionary, y: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = dict.n() as f64;
    let m = dict.m_dict();
    let mut g = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = dict.column(i).iter().zip(dict.column(j)).map(|(a, c)| a * c).sum::<f64>() / n;
        }
        b[i] = dict.column(i).iter().zip(y).map(|(a, c)| a * c).sum::<f64>() / n;
    }
    (g, b)
}

/// Least squares on `support` via the normal equations and Gaussian
/// elimination with partial pivoting. Assumes the support columns are independent.
pub fn normal_equations_ols(dict: &Dictionary, y: &[f64], support: &[usize]) -> Vec<f64> {
    let (g, b) = moments(dict, y);
    let k = support.len();
    let mut a: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = support.iter().map(|&j| g[i][j]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        for r in col + 1..k {
            let factor = a[r][col] / a[col][col];
            for c in col..=k {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][k] - s) / a[r][r];
    }
    x
}

fn support_of_mask(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|j| mask >> j & 1 == 1).collect()
}

pub struct Enumerated {
    pub objective: f64,
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub visited: u64,
}

/// Scores all `2^M` supports in bitmask order, one at a time, with the
/// per-support fit `score(support) -> (snapped λ, objective)`, and keeps the
/// minimum under (objective, M(λ), snapped support, searched support).
pub fn enumerate_masks(m: usize, mut score: impl FnMut(&[usize]) -> (WeightVector, f64)) -> Enumerated {
    let mut best: Option<(f64, WeightVector, Vec<usize>)> = None;
    let mut visited = 0;
    for mask in 0u64..(1u64 << m) {
        let searched = support_of_mask(mask, m);
        let (w, obj) = score(&searched);
        visited += 1;
        let replace = match &best {
            None => true,
            Some((bo, bw, bs)) => {
                let ord = obj
                    .total_cmp(bo)
                    .then(w.m_of_lambda().cmp(&bw.m_of_lambda()))
                    .then_with(|| w.support().cmp(bw.support()))
                    .then_with(|| searched.cmp(bs));
                ord == Ordering::Less
            }
        };
        if replace {
            best = Some((obj, w, searched));
        }
    }
    let (objective, w, _) = best.unwrap();
    Enumerated { objective, support: w.support().to_vec(), coeffs: w.into_coeffs(), visited }
}

fn snapped_fit(dict: &Dictionary, y: &[f64], support: &[usize]) -> WeightVector {
    let (c, _) = ols_on_support(dict, y, support).unwrap();
    let mut full = vec![0.0; dict.m_dict()];
    for (&j, &v) in support.iter().zip(&c) {
        full[j] = v;
    }
    WeightVector::snapped(full)
}

/// Brute-force BIC minimizer over all `2^M` supports.
pub fn bitmask_bic(dict: &Dictionary, y: &[f64], cfg: &PenaltyConfig) -> Enumerated {
    let n = dict.n();
    enumerate_masks(dict.m_dict(), |s| {
        let w = snapped_fit(dict, y, s);
        let obj = residual_sum(dict, y, &w).unwrap() + pen_bic(&w, cfg, n);
        (w, obj)
    })
}

/// `L(k) = 2 log(eM/(k ∨ 1))` written out directly.
pub fn l_term(k: usize, m: usize) -> f64 {
    2.0 * (std::f64::consts::E * m as f64 / (k.max(1)) as f64).ln()
}

/// Brute-force BIC bound with the per-support fit by normal equations.
pub fn brute_rhs_bic(dict: &Dictionary, f: &[f64], a: f64, sigma_sq: f64) -> f64 {
    let n = dict.n() as f64;
    let m = dict.m_dict();
    let mut best = f64::INFINITY;
    for mask in 0u64..(1u64 << m) {
        let s = support_of_mask(mask, m);
        let c = normal_equations_ols(dict, f, &s);
        let mut coeffs = vec![0.0; m];
        for (&j, &v) in s.iter().zip(&c) {
            coeffs[j] = v;
        }
        let fitted = response(dict, &coeffs, &vec![0.0; dict.n()]);
        let err: Vec<f64> = fitted.iter().zip(f).map(|(p, q)| p - q).collect();
        let k = s.len();
        let v = norm_sq_n(&err) + sigma_sq / n * (5.0 + (2.0 + 3.0 * a) / a * l_term(k, m)) * k as f64;
        best = best.min(v);
    }
    (1.0 + a) * best + sigma_sq / n * 6.0 * (1.0 + a).powi(2) / (a * (std::f64::consts::E - 1.0))
}

/// Minimum of `‖f_λ − f‖²_n` over the simplex grid with spacing `1/steps`,
/// for `M ∈ {2, 3}`.
pub fn grid_c_oracle(dict: &Dictionary, f: &[f64], steps: usize) -> f64 {
    let (g, b) = moments(dict, f);
    let c0 = norm_sq_n(f);
    let m = dict.m_dict();
    let h = 1.0 / steps as f64;
    let q = |l: &[f64]| {
        let mut v = c0;
        for i in 0..m {
            v -= 2.0 * b[i] * l[i];
            for j in 0..m {
                v += l[i] * g[i][j] * l[j];
            }
        }
        v
    };
    let mut best = f64::INFINITY;
    match m {
        2 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    best = best.min(q(&[i as f64 * h, j as f64 * h]));
                }
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    for k in 0..=steps - i - j {
                        best = best.min(q(&[i as f64 * h, j as f64 * h, k as f64 * h]));
                    }
                }
            }
        }
        _ => panic!("grid search supports M = 2 or 3"),
    }
    best
}
