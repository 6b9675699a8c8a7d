//! Command dispatch. Every reported number comes from `plsagg_core`.

use plsagg_core::report::{describe_diagnostics, ineq_table, oracle_table, solution_table, sweep_table};
use plsagg_core::sim::{
    check_bic_inequality, check_l1_inequality, cosine_dictionary, generate_responses, rate_sweep,
};
use plsagg_core::{
    c_oracle, l_oracle, ms_oracle, s_oracle, Aggregator, AggregationKind, BicAggregator, CdSettings, Dataset,
    Dictionary, L1Aggregator, PenaltyConfig, PenaltyKind, Table,
};

use crate::config::{Command, ExperimentConfig, TargetSpec};
use crate::error::CliError;

pub struct Outcome {
    pub table: Table,
    pub summary: String,
    /// Plot axis; present for rate sweeps.
    pub sweep_axis: Option<SweptAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptAxis {
    N,
    M,
}

impl SweptAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweptAxis::N => "n",
            SweptAxis::M => "M",
        }
    }
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let path = cfg.input_path.as_ref().ok_or_else(|| CliError::config("input_path is required"))?;
    Ok(Dataset::from_csv_path(path)?)
}

fn target_values(ds: &Dataset, spec: &TargetSpec) -> Result<Vec<f64>, CliError> {
    match spec {
        TargetSpec::Column(name) => ds
            .named_column(name)
            .ok_or_else(|| CliError::config(format!("target column {name:?} not found in input"))),
        TargetSpec::Coefficients(c) => Ok(ds.dictionary.combine(c)?),
    }
}

fn cd_settings(cfg: &ExperimentConfig) -> CdSettings {
    CdSettings { tol: cfg.solver.tol, max_sweeps: cfg.solver.max_sweeps, initial: None }
}

fn bic_solver(cfg: &ExperimentConfig, penalty: PenaltyConfig) -> Result<BicAggregator, CliError> {
    Ok(BicAggregator::new(penalty, cfg.solver.search, cfg.solver.max_support)?)
}

fn l1_solver(cfg: &ExperimentConfig, penalty: PenaltyConfig) -> Result<L1Aggregator, CliError> {
    Ok(L1Aggregator::new(penalty, cd_settings(cfg))?)
}

fn solver(cfg: &ExperimentConfig, penalty: PenaltyConfig) -> Result<Box<dyn Aggregator>, CliError> {
    Ok(match penalty.kind {
        PenaltyKind::BicType => Box::new(bic_solver(cfg, penalty)?),
        PenaltyKind::L1 => Box::new(l1_solver(cfg, penalty)?),
    })
}

fn penalty(cfg: &ExperimentConfig) -> Result<PenaltyConfig, CliError> {
    let p = cfg.penalty.ok_or_else(|| CliError::config("a [penalty] table is required"))?;
    Ok(p.validated()?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Aggregate => aggregate(cfg),
        Command::Oracle => oracle(cfg),
        Command::CheckIneq => check_ineq(cfg),
        Command::RateSweep => sweep(cfg),
    }
}

fn aggregate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ds = load_dataset(cfg)?;
    let dict = &ds.dictionary;
    let y = match (&ds.response, &cfg.target, &cfg.noise) {
        (Some(y), _, _) => y.clone(),
        (None, Some(t), Some(noise)) => generate_responses(dict, &target_values(&ds, t)?, noise)?,
        (None, _, _) => {
            return Err(CliError::config("input has no `y` column; give a target and [noise] to simulate responses"))
        }
    };
    let sol = solver(cfg, penalty(cfg)?)?.fit(dict, &y)?;
    let summary = format!(
        "aggregate: M(lambda)={} objective={:.6e} ({})",
        sol.lambda_hat.m_of_lambda(),
        sol.objective,
        describe_diagnostics(&sol.diagnostics)
    );
    Ok(Outcome { table: solution_table(&sol), summary, sweep_axis: None })
}

fn oracle(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ds = load_dataset(cfg)?;
    let dict = &ds.dictionary;
    let spec = cfg.target.as_ref().ok_or_else(|| CliError::config("a target is required"))?;
    let f = target_values(&ds, spec)?;
    let oc = cfg.oracle.as_ref().ok_or_else(|| CliError::config("an [oracle] table is required"))?;
    let res = match oc.kind {
        AggregationKind::Ms => ms_oracle(dict, &f)?,
        AggregationKind::C => c_oracle(dict, &f, oc.gap_tol)?,
        AggregationKind::L => l_oracle(dict, &f)?,
        AggregationKind::S => {
            let d = oc.d.ok_or_else(|| CliError::config("oracle kind S requires d"))?;
            s_oracle(dict, &f, d)?
        }
    };
    let summary = format!("oracle {}: value={:.6e}", res.kind.label(), res.value);
    Ok(Outcome { table: oracle_table(&res), summary, sweep_axis: None })
}

fn check_ineq(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ds = load_dataset(cfg)?;
    let dict = &ds.dictionary;
    let spec = cfg.target.as_ref().ok_or_else(|| CliError::config("a target is required"))?;
    let f = target_values(&ds, spec)?;
    let noise = cfg.noise.ok_or_else(|| CliError::config("a [noise] table is required"))?;
    let replicates = cfg.replicates.unwrap_or(0);
    let p = penalty(cfg)?;
    let rep = match p.kind {
        PenaltyKind::BicType => check_bic_inequality(dict, &f, &noise, &bic_solver(cfg, p)?, replicates)?,
        PenaltyKind::L1 => check_l1_inequality(dict, &f, &noise, &l1_solver(cfg, p)?, replicates, cfg.inequality.eps)?,
    };
    let summary = format!(
        "check-ineq {}: lhs={:.6e} stderr={:.6e} rhs={:.6e} {}",
        rep.theorem.label(),
        rep.lhs,
        rep.lhs_stderr,
        rep.rhs,
        if rep.violated { "VIOLATED" } else { "holds" }
    );
    Ok(Outcome { table: ineq_table(&rep), summary, sweep_axis: None })
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grids = cfg.grids.as_ref().ok_or_else(|| CliError::config("[grids] is required"))?;
    let noise = cfg.noise.ok_or_else(|| CliError::config("a [noise] table is required"))?;
    if cfg.input_path.is_some() {
        log::warn!("rate-sweep builds cosine dictionaries on the grid; input_path is ignored");
    }
    let solver = solver(cfg, penalty(cfg)?)?;
    let builder = |n: usize, m: usize| -> plsagg_core::Result<Dictionary> { cosine_dictionary(n, m) };
    let rows = rate_sweep(
        grids.kind,
        &grids.n,
        &grids.m,
        grids.d,
        &builder,
        solver.as_ref(),
        &noise,
        cfg.replicates.unwrap_or(0),
    )?;
    let axis = if grids.n.len() > 1 || grids.m.len() == 1 { SweptAxis::N } else { SweptAxis::M };
    let summary = format!("rate-sweep {}: {} grid points", grids.kind.label(), rows.len());
    Ok(Outcome { table: sweep_table(&rows), summary, sweep_axis: Some(axis) })
}
