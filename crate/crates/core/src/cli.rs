//! Batch experiment runner behind the `lsc` binary.
//!
//! Subcommands: `run` (one point, simulated), `sweep-m` and `sweep-kc`
//! (cost tables along one axis), `scan` (construction success over a grid),
//! and `audit` (converse counting argument). Exit codes: 0 success, 1 a
//! completed run that failed verification, 2 infeasible or invalid
//! parameters, 3 construction failure, 4 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bounds::{converse_audit, optimality_report, BoundsError, CostReport, Rate};
use crate::gf::DEFAULT_MODULUS;
use crate::params::{ParamError, ProblemParams};
use crate::scheme::{
    block_diagonal_demand, build_scheme, feasibility_constraint, BuildOptions, SchemeError,
};
use crate::sim::{
    generate_messages, run_experiment, simulate, SimError, SimReport, SimRow, StragglerPolicy,
};
use crate::util::{derive_seed, stream};

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "LSC_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Construction(String),
    #[error("{0}")]
    Failed(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) | CliError::Infeasible(_) => 2,
            CliError::Construction(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Invalid(_) => "InvalidParams",
            CliError::Infeasible(_) => "InfeasibleRegime",
            CliError::Construction(_) => "ConstructionFailed",
            CliError::Failed(_) => "VerificationFailed",
            CliError::Io(_) => "Io",
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
            .to_string()
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Param(p) => p.into(),
            SchemeError::InfeasibleRegime(_) | SchemeError::WrongRegime { .. } => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Construction(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::InfeasibleRegime(_) | BoundsError::AuditPrecondition(_) => {
                CliError::Infeasible(e.to_string())
            }
            BoundsError::AuditMismatch { .. } => CliError::Failed(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Param(p) => p.into(),
            SimError::Scheme(s) => s.into(),
            SimError::Bounds(b) => b.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StragglerMode {
    Exhaustive,
    Random,
}

#[derive(Parser, Debug)]
#[command(
    name = "lsc",
    version,
    about = "Straggler-tolerant linearly separable computation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build, simulate and verify one parameter point.
    Run(RunArgs),
    /// Cost table over m in 1..=Nr.
    SweepM(SweepArgs),
    /// Cost table over Kc in 1..=K.
    SweepKc(SweepArgs),
    /// Construction success over all (N, Nr, m, u) with K = k_factor * N.
    Scan(ScanArgs),
    /// Reconstruct the converse counting argument for one point.
    Audit(AuditArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Field modulus (must be prime).
    #[arg(long = "q", default_value_t = DEFAULT_MODULUS)]
    pub q: u64,
    /// Root seed; overridden by LSC_SEED.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "max-retries", default_value_t = 8)]
    pub max_retries: usize,
    /// Largest N for which every responder set is checked.
    #[arg(long = "subset-cap", default_value_t = 20)]
    pub subset_cap: usize,
    /// Largest sub-problem count in the large-Kc regime.
    #[arg(long = "max-subproblems", default_value_t = 64)]
    pub max_subproblems: usize,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl CommonArgs {
    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            max_retries: self.max_retries,
            subset_cap: self.subset_cap,
            max_subproblems: self.max_subproblems,
            ..BuildOptions::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long = "Nr")]
    pub nr: usize,
    #[arg(long = "Kc")]
    pub kc: usize,
    #[arg(long = "m")]
    pub m: usize,
    /// Symbols per message (defaults to the smallest valid length).
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long = "straggler-mode", value_enum, default_value_t = StragglerMode::Exhaustive)]
    pub straggler_mode: StragglerMode,
    /// Responder sets drawn in random mode.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long = "Nr")]
    pub nr: usize,
    /// Fixed Kc (sweep-m only).
    #[arg(long = "Kc")]
    pub kc: Option<usize>,
    /// Fixed m (sweep-kc only).
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Also build and simulate each point.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[arg(long = "n-min", default_value_t = 1)]
    pub n_min: usize,
    #[arg(long = "n-max", default_value_t = 8)]
    pub n_max: usize,
    /// Seeds per parameter point.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// K = k_factor * N, with a block-diagonal demand.
    #[arg(long = "k-factor", default_value_t = 1)]
    pub k_factor: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct AuditArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long = "Nr")]
    pub nr: usize,
    #[arg(long = "Kc")]
    pub kc: usize,
    #[arg(long = "m")]
    pub m: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// A finished command: its rendered output and whether it succeeded.
pub struct Outcome {
    pub text: String,
    pub error: Option<CliError>,
}

fn seed_of(common: &CommonArgs, env_seed: Option<&str>) -> Result<u64, CliError> {
    match env_seed {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        None => Ok(common.seed),
    }
}

fn point(
    k: usize,
    n: usize,
    nr: usize,
    kc: usize,
    m: usize,
    q: u64,
) -> Result<ProblemParams, CliError> {
    Ok(ProblemParams::padded(k, n, nr, kc, m)?.with_modulus(q)?)
}

#[derive(Serialize)]
struct RunOutput<'a> {
    sim: &'a SimReport,
    cost: &'a CostReport,
}

pub fn cmd_run(args: &RunArgs, seed: u64) -> Result<Outcome, CliError> {
    let mut params = point(args.k, args.n, args.nr, args.kc, args.m, args.common.q)?;
    let cost = optimality_report(&params);
    if cost.achievable.is_none() {
        return Err(CliError::Infeasible(format!(
            "{params} violates the feasibility constraint"
        )));
    }
    if let Some(l) = args.l {
        params = params.with_message_len(l);
    }
    let policy = match args.straggler_mode {
        StragglerMode::Exhaustive => StragglerPolicy::Exhaustive,
        StragglerMode::Random => StragglerPolicy::Random {
            samples: args.samples,
        },
    };
    let report = run_experiment(&params, seed, policy, &args.common.build_options())?;
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&RunOutput {
            sim: &report,
            cost: &cost,
        })
        .expect("report serializes"),
        Format::Csv => csv_text(&[SimRow::from(&report)])?,
    };
    let error = (!report.success).then(|| {
        CliError::Failed(format!(
            "{} decode failure(s); R_measured = {}, formula = {}",
            report.failures.len(),
            report.measured,
            report.formula
        ))
    });
    Ok(Outcome { text, error })
}

/// One row of a cost sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub datasets: usize,
    #[serde(rename = "N")]
    pub workers: usize,
    #[serde(rename = "Nr")]
    pub responders: usize,
    #[serde(rename = "Kc")]
    pub demands: usize,
    pub m: usize,
    pub q: u64,
    pub seed: u64,
    pub regime: String,
    pub feasible: bool,
    #[serde(rename = "R_ach")]
    pub achievable: Option<Rate>,
    #[serde(rename = "R_ach_dec")]
    pub achievable_dec: Option<f64>,
    #[serde(rename = "R_conv")]
    pub converse: Rate,
    #[serde(rename = "R_conv_dec")]
    pub converse_dec: f64,
    #[serde(rename = "R_base")]
    pub baseline: Rate,
    #[serde(rename = "R_base_dec")]
    pub baseline_dec: f64,
    pub ratio: Option<Rate>,
    pub verdict: String,
    #[serde(rename = "R_measured")]
    pub measured: Option<Rate>,
    pub success: Option<bool>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn from_report(r: &CostReport, seed: u64) -> Self {
        SweepRow {
            datasets: r.params.datasets(),
            workers: r.params.workers(),
            responders: r.params.responders(),
            demands: r.params.demands(),
            m: r.params.cost_factor(),
            q: r.params.modulus(),
            seed,
            regime: r.regime.to_string(),
            feasible: r.feasible,
            achievable: r.achievable.clone(),
            achievable_dec: r.achievable.as_ref().map(Rate::to_f64),
            converse: r.converse.clone(),
            converse_dec: r.converse.to_f64(),
            baseline: r.baseline.clone(),
            baseline_dec: r.baseline.to_f64(),
            ratio: r.ratio.clone(),
            verdict: r.verdict.to_string(),
            measured: None,
            success: None,
            error: None,
        }
    }
}

/// Which parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    CostFactor,
    Demands,
}

/// Cost rows along one axis, optionally with simulated measurements.
/// Rows come back in axis order.
pub fn sweep(args: &SweepArgs, axis: SweepAxis, seed: u64) -> Result<Vec<SweepRow>, CliError> {
    let points: Vec<(usize, usize)> = match axis {
        SweepAxis::CostFactor => {
            let kc = args
                .kc
                .ok_or_else(|| CliError::Invalid("sweep-m needs --Kc".into()))?;
            (1..=args.nr).map(|m| (kc, m)).collect()
        }
        SweepAxis::Demands => {
            let m = args
                .m
                .ok_or_else(|| CliError::Invalid("sweep-kc needs --m".into()))?;
            (1..=args.k).map(|kc| (kc, m)).collect()
        }
    };
    let params = points
        .iter()
        .map(|&(kc, m)| point(args.k, args.n, args.nr, kc, m, args.common.q))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = args.common.build_options();
    Ok(params
        .par_iter()
        .map(|p| {
            let report = optimality_report(p);
            let mut row = SweepRow::from_report(&report, seed);
            if args.simulate && report.achievable.is_some() {
                match run_experiment(p, seed, StragglerPolicy::Exhaustive, &opts) {
                    Ok(sim) => {
                        row.measured = Some(sim.measured);
                        row.success = Some(sim.success);
                    }
                    Err(e) => {
                        row.success = Some(false);
                        row.error = Some(e.to_string());
                    }
                }
            }
            row
        })
        .collect())
}

pub fn cmd_sweep(args: &SweepArgs, axis: SweepAxis, seed: u64) -> Result<Outcome, CliError> {
    let rows = sweep(args, axis, seed)?;
    let text = match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_text(&rows)?,
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
    };
    let error = rows
        .iter()
        .any(|r| r.success == Some(false))
        .then(|| CliError::Failed("at least one simulated point failed".into()));
    Ok(Outcome { text, error })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    /// The point violates the feasibility constraint.
    Skipped,
    Ok,
    ConstructionFailed,
    DecodeFailed,
}

/// One `(point, seed)` result of a feasibility scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(rename = "K")]
    pub datasets: usize,
    #[serde(rename = "N")]
    pub workers: usize,
    #[serde(rename = "Nr")]
    pub responders: usize,
    #[serde(rename = "Kc")]
    pub demands: usize,
    pub m: usize,
    pub u: usize,
    pub q: u64,
    pub seed: u64,
    pub constraint: bool,
    pub status: ScanStatus,
    pub sets_checked: usize,
    pub attempts: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScanSummary {
    pub runs: usize,
    pub skipped: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub failure_rate: f64,
}

impl ScanSummary {
    pub fn of(rows: &[ScanRow]) -> Self {
        let skipped = rows
            .iter()
            .filter(|r| r.status == ScanStatus::Skipped)
            .count();
        let succeeded = rows.iter().filter(|r| r.status == ScanStatus::Ok).count();
        let runs = rows.len() - skipped;
        let failed = runs - succeeded;
        ScanSummary {
            runs,
            skipped,
            succeeded,
            failed,
            failure_rate: if runs == 0 {
                0.0
            } else {
                failed as f64 / runs as f64
            },
        }
    }
}

/// Every `(N, Nr, m, u)` with `n_min <= N <= n_max`, `K = k_factor N`,
/// `Kc = (K/N) u`, in lexicographic order.
pub fn scan_points(
    n_min: usize,
    n_max: usize,
    k_factor: usize,
    q: u64,
) -> Result<Vec<ProblemParams>, CliError> {
    let mut out = Vec::new();
    for n in n_min.max(1)..=n_max {
        for nr in 1..=n {
            for m in 1..=nr {
                for u in 1..=nr - m + 1 {
                    out.push(
                        ProblemParams::new(k_factor * n, n, nr, k_factor * u, m)?
                            .with_modulus(q)?,
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Builds the general construction on a block-diagonal demand, then decodes
/// one random message set from every responder set.
pub fn scan_one(params: &ProblemParams, seed: u64, opts: &BuildOptions) -> ScanRow {
    let mut row = ScanRow {
        datasets: params.datasets(),
        workers: params.workers(),
        responders: params.responders(),
        demands: params.demands(),
        m: params.cost_factor(),
        u: params.demand_multiplicity(),
        q: params.modulus(),
        seed,
        constraint: feasibility_constraint(params),
        status: ScanStatus::Skipped,
        sets_checked: 0,
        attempts: 0,
    };
    if !row.constraint {
        return row;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scheme = block_diagonal_demand(params, &mut rng)
        .and_then(|demand| build_scheme(&demand, params, &mut rng, opts));
    let scheme = match scheme {
        Ok(s) => s,
        Err(_) => {
            row.status = ScanStatus::ConstructionFailed;
            row.attempts = opts.max_retries + 1;
            return row;
        }
    };
    row.attempts = scheme.constructions()[0].attempts();
    let sets = crate::scheme::SubsetPlan::for_workers(params.workers(), opts, seed)
        .responder_sets(params.workers(), params.responders());
    let messages = generate_messages(params, &mut stream(seed, &[30]));
    let outcome = messages.and_then(|msgs| simulate(&scheme, &msgs, &sets));
    row.sets_checked = sets.len();
    row.status = match outcome {
        Ok(o) if o.failures.is_empty() && scheme.locality_violations().is_empty() => ScanStatus::Ok,
        _ => ScanStatus::DecodeFailed,
    };
    row
}

pub fn scan(args: &ScanArgs, seed: u64) -> Result<(Vec<ScanRow>, ScanSummary), CliError> {
    if args.k_factor == 0 {
        return Err(CliError::Invalid("--k-factor must be at least 1".into()));
    }
    let points = scan_points(args.n_min, args.n_max, args.k_factor, args.common.q)?;
    let opts = args.common.build_options();
    let jobs: Vec<(ProblemParams, u64)> = points
        .iter()
        .flat_map(|p| (0..args.seeds as u64).map(move |s| (*p, derive_seed(seed, &[s]))))
        .collect();
    let rows: Vec<ScanRow> = jobs
        .par_iter()
        .map(|(p, s)| scan_one(p, *s, &opts))
        .collect();
    let summary = ScanSummary::of(&rows);
    Ok((rows, summary))
}

pub fn cmd_scan(args: &ScanArgs, seed: u64) -> Result<Outcome, CliError> {
    let (rows, summary) = scan(args, seed)?;
    let text = match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            eprintln!(
                "scan: {} runs, {} skipped, {} failed (rate {:.4})",
                summary.runs, summary.skipped, summary.failed, summary.failure_rate
            );
            csv_text(&rows)?
        }
        Format::Json => serde_json::to_string_pretty(&json!({ "rows": rows, "summary": summary }))
            .expect("scan serializes"),
    };
    Ok(Outcome { text, error: None })
}

#[derive(Serialize)]
struct AuditCsvRow {
    n: usize,
    stragglers: String,
    responders: String,
    rank: usize,
    inequality: String,
}

pub fn cmd_audit(args: &AuditArgs, seed: u64) -> Result<Outcome, CliError> {
    let params = point(args.k, args.n, args.nr, args.kc, args.m, args.common.q)?;
    let record = converse_audit(&params, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&record).expect("audit serializes"),
        Format::Csv => csv_text(
            &record
                .entries
                .iter()
                .map(|e| AuditCsvRow {
                    n: e.n,
                    stragglers: join(&e.stragglers),
                    responders: join(&e.responders),
                    rank: e.rank,
                    inequality: e.inequality(params.demands()),
                })
                .collect::<Vec<_>>(),
        )?,
    };
    Ok(Outcome { text, error: None })
}

fn csv_text<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Run(a) => &a.common,
        Command::SweepM(a) | Command::SweepKc(a) => &a.common,
        Command::Scan(a) => &a.common,
        Command::Audit(a) => &a.common,
    }
}

/// Runs one parsed command and writes its output.
pub fn execute(cli: &Cli, env_seed: Option<&str>) -> Result<(), CliError> {
    let common = common(&cli.command);
    let seed = seed_of(common, env_seed)?;
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a, seed)?,
        Command::SweepM(a) => cmd_sweep(a, SweepAxis::CostFactor, seed)?,
        Command::SweepKc(a) => cmd_sweep(a, SweepAxis::Demands, seed)?,
        Command::Scan(a) => cmd_scan(a, seed)?,
        Command::Audit(a) => cmd_audit(a, seed)?,
    };
    match &common.out {
        Some(path) => fs::write(path, &outcome.text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.text.as_bytes())?;
            if !outcome.text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Parses `args`, runs the command, prints errors as JSON, and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, env_seed) {
        Ok(()) => 0,
        Err(e) => {
            println!("{}", e.to_json());
            e.exit_code()
        }
    }
}
