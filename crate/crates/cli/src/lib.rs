//! The `qfi` command line: argument definitions, the JSON/CSV documents each
//! subcommand emits, and the exit-code contract.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qfi_core::bounds::{
    bound_report, multi_spectral_curve, optimal_povm_from_sld, sld_score, spectral_curve, BoundReport,
};
use qfi_core::channels::{ChannelSpec, ParametricChannel};
use qfi_core::estimation::{
    adaptive_experiment, adaptive_two_stage, cr_experiment, optimize_input_state, AdaptiveConfig, AdaptiveRun,
    EstimationRun, InputOptimum, Objective,
};
use qfi_core::linalg::{DiffConfig, DiffScheme};
use qfi_core::multi::{
    cramer_rao, fisher_matrix, loewner_report, multi_attainability_check, povm_multi_sld_condition_check,
    sld_matrix, sld_scores, sm_matrix, CramerRao, InfoMatrix, LoewnerReport, MultiAttainability, MultiSldCondition,
};
use qfi_core::quantum::{DensityMatrix, Povm, VERDICT_TOL};
use qfi_core::verify::{run_suite, Suite, SuiteReport};
use qfi_core::QfiError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const TOOL: &str = "qfi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seed of `qfi verify` when neither `--seed` nor QFI_SEED is given.
pub const DEFAULT_VERIFY_SEED: u64 = 2025;

#[derive(Debug, Parser)]
#[command(name = "qfi", version, about = "Fisher, SLD and SM information bounds for parametric quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every bound, condition and attainability verdict at one θ.
    Report(ReportArgs),
    /// One-parameter bounds over a grid of θ.
    Sweep(SweepArgs),
    /// Monte-Carlo maximum-likelihood experiment.
    Estimate(EstimateArgs),
    /// Search for the input state maximizing H or C_Υ.
    OptimizeInput(OptimizeArgs),
    /// Run the randomized property suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Numerics {
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
    /// Verdict tolerance for attainability and POVM conditions.
    #[arg(long, default_value_t = VERDICT_TOL)]
    pub tol: f64,
}

impl Numerics {
    fn diff(&self) -> Result<DiffConfig, CliError> {
        Ok(DiffConfig::new(self.fd_step, DiffScheme::Central4, false)?)
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Channel spec file.
    pub spec: PathBuf,
    /// Parameter point, comma separated for several parameters.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// computational, plus-minus, sigma-y, sld-eigenbasis, or a JSON file of elements.
    #[arg(long)]
    pub povm: Option<String>,
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub spec: PathBuf,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_grid: String,
    #[arg(long)]
    pub povm: Option<String>,
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub spec: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_true: f64,
    /// Copies N per replication.
    #[arg(long, visible_alias = "N")]
    pub shots: u64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, env = "QFI_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fixed measurement; ignored with --adaptive.
    #[arg(long, default_value = "sld-eigenbasis")]
    pub povm: String,
    /// Pilot stage then the SLD eigenbasis at the pilot estimate.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long, default_value_t = 500)]
    pub n_pilot: u64,
    #[arg(long, default_value = "computational")]
    pub pilot_povm: String,
    /// MLE search interval `a,b`; the channel domain by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub search: Option<Vec<f64>>,
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// SLD information H
    Sld,
    /// SM bound C_Υ
    Sm,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub spec: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, value_enum, default_value = "sld")]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, env = "QFI_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub numerics: Numerics,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, env = "QFI_SEED", default_value_t = DEFAULT_VERIFY_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: unreadable or malformed spec, θ outside the domain, bad flags.
    Invalid(String),
    /// Degeneracy, singular Fisher terms, broken identities.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<QfiError> for CliError {
    fn from(e: QfiError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

/// Standard output plus the exit code to leave with.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

pub fn load_spec(path: &Path) -> Result<(ChannelSpec, ParametricChannel), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let spec = ChannelSpec::parse(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let ch = spec.build()?;
    Ok((spec, ch))
}

/// Looks up a named POVM; `sld-eigenbasis` is built at θ from the channel.
pub fn named_povm(name: &str, ch: &ParametricChannel, theta: &[f64], diff: &DiffConfig) -> Result<Povm, CliError> {
    let d = ch.dim();
    let qubit = |p: Povm| {
        if d == 2 {
            Ok(p)
        } else {
            Err(invalid(format!("POVM `{name}` needs a qubit channel, got dimension {d}")))
        }
    };
    match name {
        "computational" => Ok(Povm::computational(d)),
        "plus-minus" => qubit(Povm::plus_minus()),
        "sigma-y" => qubit(Povm::sigma_y()),
        "sld-eigenbasis" => {
            if theta.len() != 1 {
                return Err(invalid("sld-eigenbasis is defined for one-parameter channels"));
            }
            let lambda = sld_score(&spectral_curve(ch, theta[0], diff)?)?;
            Ok(optimal_povm_from_sld(&lambda)?)
        }
        path if path.ends_with(".json") => {
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{path}: {e}")))?;
            let p: Povm = serde_json::from_str(&text).map_err(|e| invalid(format!("{path}: {e}")))?;
            if p.dim() != d {
                return Err(invalid(format!("{path}: POVM dimension {} vs channel dimension {d}", p.dim())));
            }
            Ok(p)
        }
        other => Err(invalid(format!(
            "unknown POVM `{other}` (computational, plus-minus, sigma-y, sld-eigenbasis or a .json file)"
        ))),
    }
}

fn check_theta(ch: &ParametricChannel, theta: &[f64]) -> Result<(), CliError> {
    if theta.len() != ch.param_count() {
        return Err(invalid(format!(
            "channel has {} parameter(s), got {} value(s) for theta",
            ch.param_count(),
            theta.len()
        )));
    }
    ch.check_domain(theta, 0.0)?;
    Ok(())
}

fn json<T: Serialize>(doc: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_text<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numeric(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Numeric(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiReport {
    pub fisher: Option<InfoMatrix>,
    pub fisher_dropped: Vec<usize>,
    pub sld: InfoMatrix,
    pub sm: InfoMatrix,
    pub loewner: LoewnerReport,
    pub attainability: MultiAttainability,
    /// Cramér-Rao floor from the SLD matrix for one copy.
    pub cramer_rao: CramerRao,
    pub sld_condition: Option<MultiSldCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub channel: ChannelSpec,
    pub theta: Vec<f64>,
    pub povm: Option<String>,
    pub fd_step: f64,
    pub tol: f64,
    pub one_parameter: Option<BoundReport>,
    pub multi_parameter: Option<MultiReport>,
    pub warnings: Vec<String>,
}

fn finite(what: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("{what} is not finite: {values:?}")))
    }
}

fn multi_report(
    ch: &ParametricChannel,
    theta: &[f64],
    povm: Option<&Povm>,
    diff: &DiffConfig,
    tol: f64,
    warnings: &mut Vec<String>,
) -> Result<MultiReport, CliError> {
    let msc = multi_spectral_curve(ch, theta, diff)?;
    let sld = sld_matrix(&msc)?;
    let sm = sm_matrix(ch, theta, diff)?;
    let (fisher, fisher_dropped) = match povm {
        Some(p) => {
            let f = fisher_matrix(ch, p, theta, diff)?;
            if !f.dropped.is_empty() {
                warnings.push(format!("outcomes {:?} dropped from the Fisher matrix", f.dropped));
            }
            (Some(f.matrix), f.dropped)
        }
        None => (None, Vec::new()),
    };
    for m in [Some(&sld), Some(&sm), fisher.as_ref()].into_iter().flatten() {
        finite("information matrix", &m.entries.concat())?;
    }
    let loewner = loewner_report(fisher.as_ref(), &sld, &sm, 1e-8)?;
    let attainability = multi_attainability_check(&msc, tol);
    let cr = cramer_rao(&sld, 1)?;
    if !cr.full_rank {
        warnings.push(format!(
            "SLD matrix has rank {} < {}; the Cramér-Rao floor uses its pseudo-inverse",
            cr.rank,
            theta.len()
        ));
    }
    let sld_condition = match povm {
        Some(p) => {
            let rho = DensityMatrix::new(msc.slice(0).state())?;
            Some(povm_multi_sld_condition_check(p, &sld_scores(&msc)?, &rho, tol)?)
        }
        None => None,
    };
    Ok(MultiReport {
        fisher,
        fisher_dropped,
        sld,
        sm,
        loewner,
        attainability,
        cramer_rao: cr,
        sld_condition,
    })
}

/// One row of a sweep table, also the CSV form of a one-parameter report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub fisher: Option<f64>,
    pub optimal_fisher: Option<f64>,
    pub sld_information: Option<f64>,
    pub c_upsilon: Option<f64>,
    pub gap: Option<f64>,
    pub attainability_residual: Option<f64>,
    pub attainable: Option<bool>,
    pub warning: Option<String>,
}

impl SweepRow {
    fn from_report(r: &BoundReport) -> Self {
        SweepRow {
            theta: r.theta,
            fisher: r.fisher,
            optimal_fisher: r.optimal_fisher,
            sld_information: Some(r.sld_information),
            c_upsilon: Some(r.c_upsilon),
            gap: Some(r.gap),
            attainability_residual: Some(r.attainable.residual),
            attainable: Some(r.attainable.attainable),
            warning: None,
        }
    }

    fn failed(theta: f64, e: &QfiError) -> Self {
        SweepRow {
            theta,
            fisher: None,
            optimal_fisher: None,
            sld_information: None,
            c_upsilon: None,
            gap: None,
            attainability_residual: None,
            attainable: None,
            warning: Some(e.to_string()),
        }
    }
}

pub fn cmd_report(args: &ReportArgs) -> Result<Output, CliError> {
    let (spec, ch) = load_spec(&args.spec)?;
    check_theta(&ch, &args.theta)?;
    let diff = args.numerics.diff()?;
    let povm = args
        .povm
        .as_deref()
        .map(|n| named_povm(n, &ch, &args.theta, &diff))
        .transpose()?;
    let mut warnings = Vec::new();
    let (one, multi) = if ch.param_count() == 1 {
        let r = bound_report(&ch, args.theta[0], povm.as_ref(), &diff, args.numerics.tol)?;
        finite("bound report", &[r.sld_information, r.c_upsilon, r.gap])?;
        (Some(r), None)
    } else {
        let m = multi_report(&ch, &args.theta, povm.as_ref(), &diff, args.numerics.tol, &mut warnings)?;
        (None, Some(m))
    };
    if args.format == Format::Csv {
        let r = one
            .as_ref()
            .ok_or_else(|| invalid("CSV reports are available for one-parameter channels; use JSON"))?;
        return Ok(Output::ok(csv_text(&[SweepRow::from_report(r)])?));
    }
    let doc = ReportDocument {
        tool: TOOL.into(),
        version: VERSION.into(),
        channel: spec,
        theta: args.theta.clone(),
        povm: args.povm.clone(),
        fd_step: args.numerics.fd_step,
        tol: args.numerics.tol,
        one_parameter: one,
        multi_parameter: multi,
        warnings,
    };
    Ok(Output::ok(json(&doc)?))
}

/// `start:stop:step` with the stop included, or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| invalid(format!("`{s}` in theta grid is not a number")))
    };
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid("theta grid range must be start:stop:step"));
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || !(b >= a) {
            return Err(invalid("theta grid range needs start <= stop and step > 0"));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(invalid("theta grid has more than a million points"));
        }
        // snap to the decimal precision the user wrote so 0.1 steps print as 0.3, not 0.30000000000000004
        let places = parts.iter().map(|p| decimals(p.trim())).collect::<Option<Vec<_>>>().and_then(|v| v.into_iter().max());
        (0..=n)
            .map(|i| {
                let x = a + i as f64 * h;
                match places {
                    Some(k) => format!("{x:.k$}").parse().unwrap_or(x),
                    None => x,
                }
            })
            .collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid("theta grid is empty or not finite"));
    }
    Ok(grid)
}

/// Digits after the decimal point of a plain decimal literal; `None` with an exponent.
fn decimals(text: &str) -> Option<usize> {
    if text.contains(['e', 'E']) {
        return None;
    }
    Some(text.split_once('.').map_or(0, |(_, f)| f.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub tool: String,
    pub version: String,
    pub channel: ChannelSpec,
    pub povm: Option<String>,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Output, CliError> {
    let (spec, ch) = load_spec(&args.spec)?;
    if ch.param_count() != 1 {
        return Err(invalid("sweep needs a one-parameter channel"));
    }
    let grid = parse_grid(&args.theta_grid)?;
    for &t in &grid {
        check_theta(&ch, &[t])?;
    }
    let diff = args.numerics.diff()?;
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let povm = match args.povm.as_deref().map(|n| named_povm(n, &ch, &[t], &diff)).transpose() {
            Ok(p) => p,
            Err(CliError::Numeric(m)) => {
                rows.push(SweepRow {
                    warning: Some(m),
                    ..SweepRow::failed(t, &QfiError::ImpossibleCounts)
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        match bound_report(&ch, t, povm.as_ref(), &diff, args.numerics.tol) {
            Ok(r) => {
                let mut row = SweepRow::from_report(&r);
                if !r.warnings.is_empty() {
                    row.warning = Some(r.warnings.join("; "));
                }
                rows.push(row)
            }
            Err(e) if e.is_numeric() || matches!(e, QfiError::OutOfDomain { .. }) => rows.push(SweepRow::failed(t, &e)),
            Err(e) => return Err(e.into()),
        }
    }
    match args.format {
        Format::Csv => Ok(Output::ok(csv_text(&rows)?)),
        Format::Json => Ok(Output::ok(json(&SweepDocument {
            tool: TOOL.into(),
            version: VERSION.into(),
            channel: spec,
            povm: args.povm.clone(),
            rows,
        })?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub tool: String,
    pub version: String,
    pub channel: ChannelSpec,
    pub seed: u64,
    pub adaptive: bool,
    /// The fixed measurement, or the pilot measurement of an adaptive run.
    pub povm: Povm,
    /// Replication 0 of an adaptive run, with its stage-2 POVM.
    pub first_replication: Option<AdaptiveRun>,
    pub run: EstimationRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub replication: usize,
    pub estimate: f64,
    pub pilot_estimate: Option<f64>,
    pub design_point: Option<f64>,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<Output, CliError> {
    let (spec, ch) = load_spec(&args.spec)?;
    check_theta(&ch, &[args.theta_true])?;
    let diff = args.numerics.diff()?;
    let search = match args.search.as_deref() {
        None => None,
        Some([a, b]) => Some((*a, *b)),
        Some(_) => return Err(invalid("--search takes two values a,b")),
    };
    let (povm, first, run) = if args.adaptive {
        let pilot = named_povm(&args.pilot_povm, &ch, &[args.theta_true], &diff)?;
        let cfg = AdaptiveConfig {
            n_pilot: args.n_pilot,
            pilot_povm: pilot.clone(),
            search,
        };
        let run = adaptive_experiment(&ch, args.theta_true, args.shots, &cfg, args.reps, args.seed, &diff)?;
        let first = adaptive_two_stage(&ch, args.theta_true, args.shots, &cfg, &diff, args.seed)?;
        (pilot, Some(first), run)
    } else {
        if search.is_some() {
            return Err(invalid("--search applies to --adaptive runs"));
        }
        let povm = named_povm(&args.povm, &ch, &[args.theta_true], &diff)?;
        let run = cr_experiment(&ch, args.theta_true, &povm, &args.povm, args.shots, args.reps, args.seed, &diff)?;
        (povm, None, run)
    };
    match args.format {
        Format::Csv => {
            let rows: Vec<EstimateRow> = run
                .estimates
                .iter()
                .enumerate()
                .map(|(i, &e)| EstimateRow {
                    replication: i,
                    estimate: e,
                    pilot_estimate: run.pilot.as_ref().map(|p| p.estimates[i]),
                    design_point: run.pilot.as_ref().map(|p| p.design_points[i]),
                })
                .collect();
            Ok(Output::ok(csv_text(&rows)?))
        }
        Format::Json => Ok(Output::ok(json(&EstimateDocument {
            tool: TOOL.into(),
            version: VERSION.into(),
            channel: spec,
            seed: args.seed,
            adaptive: args.adaptive,
            povm,
            first_replication: first,
            run,
        })?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeDocument {
    pub tool: String,
    pub version: String,
    pub channel: ChannelSpec,
    pub theta: f64,
    pub objective: Objective,
    pub restarts: usize,
    pub seed: u64,
    pub optimum: InputOptimum,
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<Output, CliError> {
    let (spec, ch) = load_spec(&args.spec)?;
    check_theta(&ch, &[args.theta])?;
    let objective = match args.objective {
        ObjectiveArg::Sld => Objective::Sld,
        ObjectiveArg::Sm => Objective::Sm,
    };
    let optimum = optimize_input_state(&ch, args.theta, objective, args.restarts, args.seed, &args.numerics.diff()?)?;
    Ok(Output::ok(json(&OptimizeDocument {
        tool: TOOL.into(),
        version: VERSION.into(),
        channel: spec,
        theta: args.theta,
        objective,
        restarts: args.restarts,
        seed: args.seed,
        optimum,
    })?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDocument {
    pub tool: String,
    pub version: String,
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub reports: Vec<SuiteReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub suite: String,
    pub passed: bool,
    pub cases: usize,
    pub checks: usize,
    pub failures: usize,
    pub skipped: usize,
    pub worst_property: Option<String>,
    pub worst_residual: Option<f64>,
    pub worst_tol: Option<f64>,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let suite: Suite = args.suite.parse()?;
    let diff = DiffConfig::new(args.fd_step, DiffScheme::Central4, false)?;
    let reports = run_suite(suite, args.seed, &diff)?;
    let passed = reports.iter().all(|r| r.passed());
    let text = match args.format {
        Format::Csv => {
            let rows: Vec<VerifyRow> = reports
                .iter()
                .map(|r| VerifyRow {
                    suite: r.name.clone(),
                    passed: r.passed(),
                    cases: r.cases,
                    checks: r.checks,
                    failures: r.failures.len(),
                    skipped: r.skipped.len(),
                    worst_property: r.worst.as_ref().map(|w| w.property.clone()),
                    worst_residual: r.worst.as_ref().map(|w| w.residual),
                    worst_tol: r.worst.as_ref().map(|w| w.tol),
                })
                .collect();
            csv_text(&rows)?
        }
        Format::Json => json(&VerifyDocument {
            tool: TOOL.into(),
            version: VERSION.into(),
            suite,
            seed: args.seed,
            passed,
            reports,
        })?,
    };
    Ok(Output {
        text,
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
    })
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Report(a) => cmd_report(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::OptimizeInput(a) => cmd_optimize(a),
        Command::Verify(a) => cmd_verify(a),
    }
}
