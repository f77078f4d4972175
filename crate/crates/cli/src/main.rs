//! `ardf-lab`: reproducible experiments on the additive rate-distortion
//! function. CSV for curves and tables, JSON for verification reports, and a
//! `<out>.manifest.json` sidecar next to every output file.

mod manifest;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ardf_core::ardf::{
    self, ardf_curve, ba_curve, distortion_grid, multiplicative_loss_sweep, BaOptions, BaOracle, DEFAULT_DMAX_FRACTION,
    DEFAULT_DMIN_FRACTION, DEFAULT_GRID_POINTS,
};
use ardf_core::ardf::ba::DEFAULT_LEVELS;
use ardf_core::numerics::geometric_grid;
use ardf_core::refinement::{self, build_schedule, compare, RefinementSchedule, ScheduleRule};
use ardf_core::source::{DEFAULT_SLICES, SideSlice};
use ardf_core::verify::{self, ClaimReport};
use ardf_core::{Component, Error as CoreError, MixtureSpec, SideInfoModel, SourceModel};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Quadrature { .. }
            | CoreError::Bracket { .. }
            | CoreError::NoConvergence { .. }
            | CoreError::Inconsistent { .. } => Self::Numeric(e.to_string()),
            CoreError::Io(io) => Self::Io(io),
            other => Self::Input(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Numeric(_) => 3,
            // unreadable inputs and unwritable outputs are the caller's to fix
            Self::Io(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser, Serialize)]
#[command(name = "ardf-lab", version, about = "Additive rate-distortion laboratory")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct GlobalArgs {
    /// Seed for every Monte Carlo path.
    #[arg(long, global = true, default_value_t = 20240101)]
    seed: u64,
    /// Relative tolerance on the distortion when inverting mmse(γ) = D.
    #[arg(long, global = true, default_value_t = ardf::DEFAULT_TOL)]
    tol: f64,
    /// γ grid for limits at zero: `from:to:points` (geometric) or a comma list.
    #[arg(long, global = true, default_value = "1e-1:1e-5:9")]
    gamma_grid: String,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// ARDF curve of a source, optionally with the Blahut-Arimoto oracle.
    Ardf(ArdfArgs),
    /// Check one of the low-SNR / estimation claims; exit 1 if any fails.
    Verify(VerifyArgs),
    /// Unconditional vs conditional successive refinement of a Gaussian source.
    Refine(RefineArgs),
    /// Multiplicative rate loss of the ARDF against the conditional RDF.
    MixtureLoss(MixtureLossArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Ardf(_) => "ardf",
            Self::Verify(_) => "verify",
            Self::Refine(_) => "refine",
            Self::MixtureLoss(_) => "mixture-loss",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SourceName {
    Gaussian,
    Uniform,
    TwoPoint,
    Mixture,
}

#[derive(Debug, Args, Serialize)]
struct SourceArgs {
    /// Built-in source family, or a path to a JSON source specification.
    #[arg(long, default_value = "gaussian")]
    source: String,
    /// JSON source specification (overrides --source).
    #[arg(long)]
    source_file: Option<PathBuf>,
    /// Source variance for the built-in families.
    #[arg(long, default_value_t = 1.0)]
    var: f64,
    /// Energy share λ of the low-variance component (mixture).
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Variance σ₁² of the high-variance component (mixture).
    #[arg(long, default_value_t = 5.0)]
    var1: f64,
}

#[derive(Debug, Args, Serialize)]
struct ArdfArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Smallest distortion, as a fraction of σ².
    #[arg(long, default_value_t = DEFAULT_DMIN_FRACTION)]
    dmin: f64,
    /// Largest distortion, as a fraction of σ².
    #[arg(long, default_value_t = DEFAULT_DMAX_FRACTION)]
    dmax: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    points: usize,
    /// Append a Blahut-Arimoto block for the discretized source.
    #[arg(long)]
    with_ba: bool,
    /// Discretization levels for the oracle.
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    ba_levels: usize,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Claim {
    Immse,
    Slope,
    Kfold,
    Condmi,
    Lintest,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SideModel {
    /// Jointly Gaussian (X, Z) with correlation --rho.
    GaussJoint,
    /// Component indicator of the two-component mixture.
    MixtureIndicator,
    /// Two equiprobable Gaussians with equal variance and means ±√(σ²/2).
    TwoMean,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(value_enum)]
    claim: Claim,
    #[command(flatten)]
    source: SourceArgs,
    /// Number of descriptions (kfold).
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Side-information model (condmi, lintest).
    #[arg(long, value_enum, default_value = "gauss-joint")]
    model: SideModel,
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = DEFAULT_SLICES)]
    slices: usize,
    /// Points of the I-MMSE grid, geometric on [0.01, 4].
    #[arg(long, default_value_t = 10)]
    immse_points: usize,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RefineArgs {
    #[arg(long, default_value_t = 1.0)]
    var: f64,
    #[arg(long, default_value_t = 0.1)]
    dfinal: f64,
    /// Descriptions per stage.
    #[arg(long = "L", default_value_t = 2)]
    descriptions: u32,
    /// Number of stages.
    #[arg(long = "M", default_value_t = 2)]
    stages: u32,
    /// geometric | equal_rate | explicit
    #[arg(long, default_value = "geometric")]
    rule: String,
    /// Stage targets D₁,…,D_M for the explicit rule.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<f64>,
    /// Emit one block per M instead of a single schedule.
    #[arg(long = "sweep-M", value_delimiter = ',')]
    sweep: Vec<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MixtureLossArgs {
    /// σ₁² values, in the order the ratio should increase.
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,20")]
    var1_grid: Vec<f64>,
    /// Distances ε below D_max, D = σ²(1 − ε).
    #[arg(long, value_delimiter = ',', default_value = "0.02")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    var: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli, started) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ardf-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli, started: Instant) -> CliResult<ExitCode> {
    let grid = parse_gamma_grid(&cli.global.gamma_grid)?;
    if !(cli.global.tol > 0.0 && cli.global.tol < 1.0) {
        return Err(CliError::Input(format!("--tol {} must lie in (0, 1)", cli.global.tol)));
    }
    let (out, all_pass) = match &cli.command {
        Command::Ardf(a) => (a.out.as_deref(), cmd_ardf(a, cli.global.tol)?),
        Command::Verify(v) => (v.out.as_deref(), cmd_verify(v, &grid)?),
        Command::Refine(r) => (r.out.as_deref(), cmd_refine(r)?),
        Command::MixtureLoss(m) => (m.out.as_deref(), cmd_mixture_loss(m, cli.global.tol)?),
    };
    if let Some(path) = out {
        RunManifest::new(cli, &grid, path, started.elapsed()).write_beside(path)?;
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn parse_gamma_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Input(format!("--gamma-grid '{text}' is neither from:to:points nor a comma list of positive numbers"));
    let grid: Vec<f64> = if let [from, to, n] = text.split(':').collect::<Vec<_>>()[..] {
        let (from, to): (f64, f64) = (from.trim().parse().map_err(|_| bad())?, to.trim().parse().map_err(|_| bad())?);
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if !(from > to && to > 0.0 && n >= 2) {
            return Err(bad());
        }
        geometric_grid(from, to, n)
    } else {
        text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if grid.len() < 2 || grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(bad());
    }
    Ok(grid)
}

/// Destination for an output: the file at `path`, or stdout.
fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Input(format!("cannot create output {}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn resolve_source(args: &SourceArgs) -> CliResult<SourceModel> {
    let file = args.source_file.clone().or_else(|| {
        let looks_like_path = args.source.ends_with(".json") || args.source.contains(std::path::MAIN_SEPARATOR);
        looks_like_path.then(|| PathBuf::from(&args.source))
    });
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("cannot read source file {}: {e}", path.display())))?;
        return Ok(SourceModel::from_json(&text)?);
    }
    let name = SourceName::from_str(&args.source, true)
        .map_err(|_| CliError::Input(format!("unknown source '{}' (gaussian, uniform, two-point, mixture or a .json file)", args.source)))?;
    if !(args.var > 0.0 && args.var.is_finite()) {
        return Err(CliError::Input(format!("--var {} must be positive and finite", args.var)));
    }
    Ok(match name {
        SourceName::Gaussian => SourceModel::gaussian(0.0, args.var)?,
        SourceName::Uniform => SourceModel::uniform_with_variance(args.var)?,
        SourceName::TwoPoint => SourceModel::two_point(args.var.sqrt())?,
        SourceName::Mixture => MixtureSpec::new(args.lambda, args.var, args.var1)?.source(),
    })
}

fn cmd_ardf(args: &ArdfArgs, tol: f64) -> CliResult<bool> {
    let source = resolve_source(&args.source)?;
    let ds = distortion_grid(source.variance(), args.dmin, args.dmax, args.points)?;
    let mut curves = vec![ardf_curve(&source, &ds, tol)?];
    if args.with_ba {
        let oracle = BaOracle::for_source(&source, args.ba_levels, &BaOptions::default())?;
        let label = format!("{} discretized to {} levels", source.describe(), args.ba_levels);
        curves.push(ba_curve(&oracle, label, &ds));
    }
    let mut w = sink(args.out.as_deref())?;
    ardf::write_curves_csv(&mut w, &curves)?;
    w.flush()?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    claim_set: Claim,
    subject: String,
    pass: bool,
    claims: &'a [ClaimReport],
}

fn side_model(args: &VerifyArgs) -> CliResult<(SideInfoModel, f64)> {
    let var = args.source.var;
    match args.model {
        SideModel::GaussJoint => Ok((SideInfoModel::jointly_gaussian(0.0, var, args.rho, args.slices)?, 0.0)),
        SideModel::MixtureIndicator => {
            let spec = MixtureSpec::new(args.source.lambda, var, args.source.var1)?;
            // two-component closed form P₀P₁(σ₁² − σ₀²)²
            let gap = spec.p0() * spec.p1() * (spec.var1() - spec.var0()).powi(2);
            Ok((spec.indicator_side_info(), gap))
        }
        SideModel::TwoMean => {
            let half = 0.5 * var;
            let a = half.sqrt();
            let slices = [-a, a]
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    Ok(SideSlice {
                        z: i as f64,
                        prob: 0.5,
                        conditional: SourceModel::gaussian(m, half)?,
                    })
                })
                .collect::<Result<Vec<_>, CoreError>>()?;
            let marginal = SourceModel::mixture(vec![Component::new(0.5, -a, half), Component::new(0.5, a, half)])?;
            Ok((SideInfoModel::new(slices, Some(marginal))?, 0.0))
        }
    }
}

fn cmd_verify(args: &VerifyArgs, grid: &[f64]) -> CliResult<bool> {
    let (subject, claims) = match args.claim {
        Claim::Immse => {
            let source = resolve_source(&args.source)?;
            if args.immse_points < 2 {
                return Err(CliError::Input("--immse-points must be at least 2".into()));
            }
            (source.describe(), verify::immse(&source, &geometric_grid(4.0, 0.01, args.immse_points))?)
        }
        Claim::Slope => {
            let source = resolve_source(&args.source)?;
            (source.describe(), vec![verify::slope(&source, grid)?])
        }
        Claim::Kfold => {
            let source = resolve_source(&args.source)?;
            (source.describe(), verify::kfold(&source, args.k, grid)?)
        }
        Claim::Condmi => {
            let (model, _) = side_model(args)?;
            (format!("{:?} side information", args.model), vec![verify::condmi(&model, grid)?])
        }
        Claim::Lintest => {
            let (model, gap) = side_model(args)?;
            (format!("{:?} side information", args.model), verify::lintest(&model, gap, grid)?)
        }
    };
    let pass = verify::all_pass(&claims);
    let report = VerifyReport {
        claim_set: args.claim,
        subject,
        pass,
        claims: &claims,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    println!("{text}");
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(pass)
}

fn cmd_refine(args: &RefineArgs) -> CliResult<bool> {
    let rule: ScheduleRule = args.rule.parse()?;
    let schedule = |m: u32| -> CliResult<RefinementSchedule> {
        Ok(match rule {
            ScheduleRule::Explicit => {
                if args.targets.is_empty() {
                    return Err(CliError::Input("--rule explicit needs --targets D1,...,DM".into()));
                }
                RefinementSchedule::explicit(args.var, args.targets.clone(), args.descriptions)?
            }
            _ => build_schedule(args.var, args.dfinal, args.descriptions, m, rule)?,
        })
    };
    let comparisons = if args.sweep.is_empty() {
        vec![compare(&schedule(args.stages)?)]
    } else {
        if rule == ScheduleRule::Explicit {
            return Err(CliError::Input("--sweep-M does not apply to explicit schedules".into()));
        }
        args.sweep.iter().map(|&m| schedule(m).map(|s| compare(&s))).collect::<CliResult<Vec<_>>>()?
    };
    let mut w = sink(args.out.as_deref())?;
    refinement::write_comparisons_csv(&mut w, &comparisons)?;
    w.flush()?;
    Ok(true)
}

fn cmd_mixture_loss(args: &MixtureLossArgs, tol: f64) -> CliResult<bool> {
    let table = multiplicative_loss_sweep(&args.var1_grid, args.lambda, args.var, &args.eps, tol)?;
    let mut w = sink(args.out.as_deref())?;
    writeln!(w, "var1,eps,D,R_ardf_bits,R_cond_bits,ratio,ratio_increasing")?;
    for r in &table.rows {
        let increasing = table.monotone.iter().find(|(e, _)| *e == r.eps).map(|m| m.1).unwrap_or(false);
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{increasing}",
            r.var1, r.eps, r.distortion, r.rate_ardf, r.rate_conditional, r.ratio
        )?;
    }
    w.flush()?;
    Ok(true)
}
