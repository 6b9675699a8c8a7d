//! The fixed design: dictionary values `f_j(X_i)` on `n` design points and the
//! empirical geometry derived from them (Gram matrix, κ, pairwise correlations).

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold below which a column's squared empirical norm counts as zero.
pub const ZERO_COLUMN_REL: f64 = 1e-24;

/// Header name that marks the first CSV column as the response.
pub const RESPONSE_HEADER: &str = "y";

/// `n × M` table of dictionary values with a uniform bound `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    values: DMatrix<f64>,
    bound_l: f64,
}

impl Dictionary {
    pub fn new(values: DMatrix<f64>, bound_l: f64) -> Result<Self> {
        let (n, m) = values.shape();
        if n < 1 {
            return Err(Error::InvalidDictionary("need at least one design point".into()));
        }
        if m < 2 {
            return Err(Error::InvalidDictionary(format!(
                "need at least two dictionary columns, got {m}"
            )));
        }
        if !bound_l.is_finite() || bound_l < 0.0 {
            return Err(Error::InvalidDictionary(format!("bound L must be finite and >= 0, got {bound_l}")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDictionary(format!("non-finite entry {v}")));
        }
        let max_abs = values.amax();
        if max_abs > bound_l {
            return Err(Error::InvalidDictionary(format!(
                "entry of magnitude {max_abs} exceeds bound L = {bound_l}"
            )));
        }
        Ok(Self { values, bound_l })
    }

    /// Builds a dictionary whose bound `L` is the largest absolute entry.
    pub fn with_tight_bound(values: DMatrix<f64>) -> Result<Self> {
        let bound = if values.is_empty() { 0.0 } else { values.amax() };
        Self::new(values, bound)
    }

    /// Builds from column vectors, each of length `n`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        for c in columns {
            if c.len() != n {
                return Err(Error::Dimension { expected: n, found: c.len() });
            }
        }
        let values = DMatrix::from_fn(n, m, |i, j| columns[j][i]);
        Self::with_tight_bound(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn m_dict(&self) -> usize {
        self.values.ncols()
    }

    pub fn bound_l(&self) -> f64 {
        self.bound_l
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    /// Evaluates `f_λ(X_i) = Σ_j λ_j f_j(X_i)` at every design point.
    pub fn combine(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs)?;
        let mut out = vec![0.0; self.n()];
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(self.column(j)) {
                    *o += c * v;
                }
            }
        }
        Ok(out)
    }

    /// `⟨f_j, g⟩_n = (1/n) Σ_i f_j(X_i) g_i`.
    pub fn inner_with(&self, j: usize, g: &[f64]) -> f64 {
        let s: f64 = self.column(j).iter().zip(g).map(|(a, b)| a * b).sum();
        s / self.n() as f64
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: v.len() });
        }
        Ok(())
    }

    pub(crate) fn check_coeffs(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.m_dict() {
            return Err(Error::Dimension { expected: self.m_dict(), found: c.len() });
        }
        Ok(())
    }
}

/// `‖g‖²_n = (1/n) Σ g_i²` with `n = g.len()`.
pub fn empirical_norm_sq(g: &[f64]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64
}

/// Same as [`empirical_norm_sq`] but checks the length against the design size.
pub fn empirical_norm_sq_checked(g: &[f64], n: usize) -> Result<f64> {
    if g.len() != n {
        return Err(Error::Dimension { expected: n, found: g.len() });
    }
    Ok(empirical_norm_sq(g))
}

/// Indices whose squared norm is negligible relative to the largest one.
pub fn zero_columns(col_norms_sq: &[f64]) -> Vec<usize> {
    let max = col_norms_sq.iter().cloned().fold(0.0, f64::max);
    col_norms_sq
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= ZERO_COLUMN_REL * max)
        .map(|(j, _)| j)
        .collect()
}

/// Empirical Gram matrix `Ψ_n` and its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramData {
    pub gram: DMatrix<f64>,
    pub col_norms_sq: Vec<f64>,
    /// Sorted indices of zero-norm columns.
    pub zero_cols: Vec<usize>,
}

impl GramData {
    pub fn m_dict(&self) -> usize {
        self.col_norms_sq.len()
    }

    pub fn is_zero_col(&self, j: usize) -> bool {
        self.zero_cols.binary_search(&j).is_ok()
    }

    fn nonzero_cols(&self) -> Vec<usize> {
        (0..self.m_dict()).filter(|&j| !self.is_zero_col(j)).collect()
    }
}

pub fn gram(dict: &Dictionary) -> GramData {
    let m = dict.m_dict();
    let n = dict.n() as f64;
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        let ci = dict.column(i);
        for j in 0..=i {
            let v = ci.iter().zip(dict.column(j)).map(|(a, b)| a * b).sum::<f64>() / n;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let mut col_norms_sq: Vec<f64> = (0..m).map(|j| g[(j, j)]).collect();
    let zero_cols = zero_columns(&col_norms_sq);
    for &z in &zero_cols {
        col_norms_sq[z] = 0.0;
        g.row_mut(z).fill(0.0);
        g.column_mut(z).fill(0.0);
    }
    GramData { gram: g, col_norms_sq, zero_cols }
}

/// Largest `κ` with `Ψ_n − κ·diag(Ψ_n)` positive semidefinite, i.e. the smallest
/// eigenvalue of the correlation matrix over the nonzero columns, clamped to `[0, 1]`.
pub fn kappa(gd: &GramData) -> Result<f64> {
    let idx = gd.nonzero_cols();
    if idx.is_empty() {
        return Err(Error::DegenerateDictionary);
    }
    let k = idx.len();
    let scale: Vec<f64> = idx.iter().map(|&j| gd.col_norms_sq[j].sqrt()).collect();
    let corr = DMatrix::from_fn(k, k, |a, b| {
        if a == b {
            1.0
        } else {
            gd.gram[(idx[a], idx[b])] / (scale[a] * scale[b])
        }
    });
    let eig = SymmetricEigen::new(corr);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    // numerical-rank cutoff: eigenvalues at rounding level count as zero
    let cutoff = 64.0 * k as f64 * f64::EPSILON;
    Ok(if min <= cutoff { 0.0 } else { min.min(1.0) })
}

/// `ρ_n(i, j) = ⟨f_i, f_j⟩_n / (‖f_i‖_n ‖f_j‖_n)`.
pub fn pairwise_correlation(gd: &GramData, i: usize, j: usize) -> Result<f64> {
    let m = gd.m_dict();
    for idx in [i, j] {
        if idx >= m {
            return Err(Error::Domain(format!("column index {idx} out of range 0..{m}")));
        }
    }
    if i == j {
        return Err(Error::Domain("correlation requires two distinct columns".into()));
    }
    for idx in [i, j] {
        if gd.is_zero_col(idx) {
            return Err(Error::UndefinedCorrelation(idx));
        }
    }
    let r = gd.gram[(i, j)] / (gd.col_norms_sq[i].sqrt() * gd.col_norms_sq[j].sqrt());
    Ok(r.clamp(-1.0, 1.0))
}

/// Local coherence `ρ(λ) = max_{i ∈ support} max_{j > i} |ρ_n(i, j)|`, with `j`
/// ranging over nonzero columns. Empty support gives 0.
pub fn rho_of_support(gd: &GramData, support: &[usize]) -> Result<f64> {
    let m = gd.m_dict();
    let mut best: f64 = 0.0;
    for &i in support {
        if i >= m {
            return Err(Error::Domain(format!("column index {i} out of range 0..{m}")));
        }
        if gd.is_zero_col(i) {
            return Err(Error::UndefinedCorrelation(i));
        }
        for j in (i + 1)..m {
            if gd.is_zero_col(j) {
                continue;
            }
            best = best.max(pairwise_correlation(gd, i, j)?.abs());
        }
    }
    Ok(best)
}

/// A dictionary loaded from CSV together with its optional response column.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dictionary: Dictionary,
    pub response: Option<Vec<f64>>,
    /// Names of the dictionary columns (response excluded).
    pub column_names: Vec<String>,
}

impl Dataset {
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    /// Parses a headed CSV. The first column is the response iff its header is `y`
    /// (case-insensitive); every other column is a dictionary column.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Parse("missing header row".into()));
        }
        let has_response = headers[0].eq_ignore_ascii_case(RESPONSE_HEADER);
        let first_dict = usize::from(has_response);
        let column_names = headers[first_dict..].to_vec();
        let m = column_names.len();

        let mut response = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); m];
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Parse(format!(
                    "row {}: expected {} fields, found {}",
                    row_idx + 1,
                    headers.len(),
                    record.len()
                )));
            }
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!("row {}, column '{}': not a number: '{field}'", row_idx + 1, headers[k]))
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("row {}, column '{}': non-finite value", row_idx + 1, headers[k])));
                }
                if has_response && k == 0 {
                    response.push(v);
                } else {
                    cols[k - first_dict].push(v);
                }
            }
        }
        if cols.first().is_none_or(|c| c.is_empty()) {
            return Err(Error::Parse("no data rows".into()));
        }
        let dictionary = Dictionary::from_columns(&cols)?;
        Ok(Self { dictionary, response: has_response.then_some(response), column_names })
    }

    /// Looks up a named column: the response (`y`) or a dictionary column.
    pub fn named_column(&self, name: &str) -> Option<Vec<f64>> {
        if name.eq_ignore_ascii_case(RESPONSE_HEADER) {
            return self.response.clone();
        }
        let j = self.column_names.iter().position(|c| c == name)?;
        Some(self.dictionary.column(j).to_vec())
    }
}
