//! Fixed-schema CSV tables for solver, oracle, inequality and sweep results.
//!
//! Reals are written with 17 significant digits so a table read back parses
//! to the same `f64` bits.

use crate::bic::{Diagnostics, Solution};
use crate::error::Result;
use crate::oracle::OracleResult;
use crate::sim::{IneqReport, SweepRow};

pub const SOLUTION_HEADER: [&str; 6] = ["index", "lambda", "objective", "rss_over_n", "penalty_value", "m_lambda"];
pub const ORACLE_HEADER: [&str; 4] = ["kind", "value", "index", "argmin"];
pub const INEQ_HEADER: [&str; 7] = ["theorem", "lhs", "lhs_stderr", "rhs", "slack", "replicates", "violated"];
pub const SWEEP_HEADER: [&str; 8] = ["kind", "n", "m", "d", "risk", "risk_stderr", "psi", "ratio"];

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

/// One row per coefficient; summary columns repeat on every row.
pub fn solution_table(sol: &Solution) -> Table {
    let mut t = Table::new(&SOLUTION_HEADER);
    let m = sol.lambda_hat.m_of_lambda().to_string();
    for (j, c) in sol.lambda_hat.coeffs().iter().enumerate() {
        t.push(vec![
            j.to_string(),
            fmt_real(*c),
            fmt_real(sol.objective),
            fmt_real(sol.rss_over_n),
            fmt_real(sol.penalty_value),
            m.clone(),
        ]);
    }
    t
}

/// Human-readable summary of solver diagnostics.
pub fn describe_diagnostics(d: &Diagnostics) -> String {
    match d {
        Diagnostics::Search { supports_visited, mode } => format!("{mode:?} search, {supports_visited} supports"),
        Diagnostics::CoordinateDescent { sweeps, max_violation, .. } => {
            format!("coordinate descent, {sweeps} sweeps, max KKT violation {max_violation:e}")
        }
    }
}

pub fn oracle_table(res: &OracleResult) -> Table {
    let mut t = Table::new(&ORACLE_HEADER);
    for (j, c) in res.argmin.coeffs().iter().enumerate() {
        t.push(vec![res.kind.label().to_string(), fmt_real(res.value), j.to_string(), fmt_real(*c)]);
    }
    t
}

pub fn ineq_table(rep: &IneqReport) -> Table {
    let mut t = Table::new(&INEQ_HEADER);
    t.push(vec![
        rep.theorem.label().to_string(),
        fmt_real(rep.lhs),
        fmt_real(rep.lhs_stderr),
        fmt_real(rep.rhs),
        fmt_real(rep.slack),
        rep.replicates.to_string(),
        rep.violated.to_string(),
    ]);
    t
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            r.kind.label().to_string(),
            r.n.to_string(),
            r.m_dict.to_string(),
            r.d.map(|d| d.to_string()).unwrap_or_default(),
            fmt_real(r.risk),
            fmt_real(r.risk_stderr),
            fmt_real(r.psi),
            fmt_real(r.ratio),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::AggregationKind;
    use crate::sim::Theorem;

    #[test]
    fn reals_round_trip_bitwise() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, std::f64::consts::PI] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn ineq_schema() {
        let rep = IneqReport {
            theorem: Theorem::Bic,
            lhs: 0.01,
            lhs_stderr: 0.001,
            rhs: 0.2,
            slack: 0.19,
            replicates: 200,
            violated: false,
        };
        let bytes = ineq_table(&rep).to_csv_bytes().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        for col in ["lhs", "lhs_stderr", "rhs", "slack", "replicates"] {
            assert!(header.split(',').any(|h| h == col));
        }
        assert!(text.ends_with('\n'));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn sweep_rows_leave_d_blank_when_absent() {
        let row = SweepRow {
            kind: AggregationKind::Ms,
            n: 10,
            m_dict: 4,
            d: None,
            risk: 0.5,
            risk_stderr: 0.1,
            psi: 0.25,
            ratio: 2.0,
        };
        let t = sweep_table(&[row]);
        assert_eq!(t.rows()[0][3], "");
        assert_eq!(t.rows()[0][0], "MS");
    }
}
