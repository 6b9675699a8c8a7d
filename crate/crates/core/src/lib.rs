//! Penalized least-squares aggregation over a fixed dictionary.
//!
//! Given responses `y` observed on `n` design points and `M` dictionary
//! functions, the aggregates minimize `‖y − f_λ‖²_n + pen(λ)` with either a
//! BIC-type penalty on the support size or a weighted ℓ₁ penalty. The crate
//! also computes the MS/C/L/S oracle risks, both sides of the oracle
//! inequalities, Maurey rounding, and Monte Carlo rate sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bic;
pub mod dictionary;
pub mod error;
pub mod lasso;
pub mod oracle;
pub mod penalty;
pub mod report;
pub mod sim;

pub use bic::{solve_bic_exhaustive, solve_bic_greedy, Diagnostics, SearchMode, Solution};
pub use dictionary::{gram, kappa, Dataset, Dictionary, GramData};
pub use error::{Error, Result};
pub use lasso::{solve_l1_cd, CdSettings};
pub use oracle::{c_oracle, l_oracle, maurey_round, ms_oracle, s_oracle, OracleResult};
pub use penalty::{AggregationKind, L1Factor, PenaltyConfig, PenaltyKind, WeightVector};
pub use report::Table;
pub use sim::{
    Aggregator, BicAggregator, Bound, IneqReport, L1Aggregator, NoiseModel, RiskEstimate, SweepRow, Theorem,
};
