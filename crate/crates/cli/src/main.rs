//! Command-line driver for the verification harness.
//!
//! Subcommands:
//! - `verify <suite>` — run a named suite and exit 0/1 on pass/fail;
//! - `norm` — evaluate a function-space norm (optionally Morrey-aggregated);
//! - `maximal` — apply the Hardy–Littlewood maximal operator;
//! - `sparse build|verify|apply` — stopping-time sparse families;
//! - `op` — apply a singular operator or an iterated commutator.
//!
//! All files are JSON: grid functions as `{dim, origin, spacing, shape,
//! values}`, space and growth-weight descriptors as their serialized enums,
//! sparse families as `{lattice, eta, cubes}` records. The seed for `verify`
//! comes from `--seed`, else the `SPARSEDOM_SEED` environment variable, else
//! the config or preset.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsedom_core::lattice::DyadicLattice;
use sparsedom_core::maximal::{hl_maximal, CubeFamily, CubeFamilySpec};
use sparsedom_core::operators::{commutator_iterated, OperatorDescriptor, SphereSymbol};
use sparsedom_core::report::{write_report, ReportFormat};
use sparsedom_core::sparse::{build_sparse_from_stopping, sparse_operator, verify_sparseness, SparseFamilyRecord, SparsenessCheck};
use sparsedom_core::spaces::{morrey_norm, BallFamily, MorreyWeight, SpaceDescriptor};
use sparsedom_core::suites::{run_suite, SuiteConfig, SUITE_NAMES};
use sparsedom_core::{Grid, GridFunction};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SEED_ENV: &str = "SPARSEDOM_SEED";

#[derive(Parser)]
#[command(
    name = "sparsedom",
    version,
    about = "Verification harness for sparse domination and function-space inequalities on finite grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named verification suite; exits 0 when every check passes.
    Verify(VerifyArgs),
    /// Evaluate a space norm of a grid function; prints the value.
    Norm(NormArgs),
    /// Apply the Hardy–Littlewood maximal operator over a cube family.
    Maximal(MaximalArgs),
    /// Build, verify, or apply sparse cube families.
    #[command(subcommand)]
    Sparse(SparseCmd),
    /// Apply a singular operator or an iterated commutator.
    Op(OpArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name; run with an unknown name to list the available suites.
    suite: String,
    /// JSON run configuration; the positional suite name takes precedence
    /// over the file's `suite` field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the report (defaults to the config's output path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: structured-text (alias text, json) or comma-separated
    /// (alias csv).
    #[arg(long, default_value = "structured-text")]
    format: String,
}

#[derive(Args)]
struct NormArgs {
    /// Grid-function file.
    #[arg(long)]
    input: PathBuf,
    /// Space descriptor file.
    #[arg(long)]
    space: PathBuf,
    /// Growth-weight file; when given, the Morrey norm over a dyadic ball
    /// family is computed instead of the plain space norm.
    #[arg(long)]
    weight: Option<PathBuf>,
    /// Ball-center stride (cells) for the Morrey family.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Number of radius halvings for the Morrey family.
    #[arg(long, default_value_t = 4)]
    levels: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyMode {
    Shifted,
    Dense,
}

#[derive(Args)]
struct MaximalArgs {
    /// Grid-function file.
    #[arg(long)]
    input: PathBuf,
    /// Cube family: the shifted dyadic lattices or all grid-aligned cubes.
    #[arg(long, value_enum, default_value_t = FamilyMode::Shifted)]
    mode: FamilyMode,
    /// Side cap in cells for the dense family (defaults to the full side).
    #[arg(long)]
    max_side: Option<usize>,
    /// Output grid-function file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SparseCmd {
    /// Build a family by the stopping-time construction and write its record.
    Build(SparseBuildArgs),
    /// Check a family record against a sparseness parameter.
    Verify(SparseVerifyArgs),
    /// Apply the sparse averaging operator of a family record.
    Apply(SparseApplyArgs),
}

#[derive(Args)]
struct SparseBuildArgs {
    /// Grid-function file driving the stopping-time condition.
    #[arg(long)]
    input: PathBuf,
    /// Sparseness parameter in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Lattice: `base` or `triple:a[,b]` with shift classes in {0,1,2}.
    #[arg(long, default_value = "base")]
    lattice: String,
    /// Output family-record file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SparseVerifyArgs {
    /// Family-record file.
    #[arg(long)]
    family: PathBuf,
    /// Grid-function file fixing the grid the record refers to.
    #[arg(long)]
    input: PathBuf,
    /// Sparseness parameter to certify (defaults to the record's).
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args)]
struct SparseApplyArgs {
    /// Family-record file.
    #[arg(long)]
    family: PathBuf,
    /// Grid-function file to apply the operator to.
    #[arg(long)]
    input: PathBuf,
    /// Average exponent r of the sparse operator.
    #[arg(long, default_value_t = 1.0)]
    exponent: f64,
    /// Output grid-function file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    Hilbert,
    Rough,
    Bilinear,
}

#[derive(Args)]
struct OpArgs {
    /// Kernel: hilbert (1D), rough (2D homogeneous), bilinear (1D model).
    #[arg(long = "op", value_enum)]
    kind: OpKind,
    /// Input grid-function file.
    #[arg(long)]
    input: PathBuf,
    /// Second input for the bilinear kernel.
    #[arg(long)]
    input2: Option<PathBuf>,
    /// Sphere symbol for the rough kernel: sign1, sign-product, zero, or
    /// cosine:k.
    #[arg(long, default_value = "sign1")]
    omega: String,
    /// Symbol file: apply the iterated commutator with this symbol.
    #[arg(long)]
    symbol: Option<PathBuf>,
    /// Commutator order (with --symbol).
    #[arg(long, default_value_t = 1)]
    order: u32,
    /// Output grid-function file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Verify(args) => cmd_verify(args),
        Command::Norm(args) => cmd_norm(args),
        Command::Maximal(args) => cmd_maximal(args),
        Command::Sparse(SparseCmd::Build(args)) => cmd_sparse_build(args),
        Command::Sparse(SparseCmd::Verify(args)) => cmd_sparse_verify(args),
        Command::Sparse(SparseCmd::Apply(args)) => cmd_sparse_apply(args),
        Command::Op(args) => cmd_op(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => read_json::<SuiteConfig>(path)?,
        None => SuiteConfig::preset(&args.suite)
            .map_err(|_| anyhow::anyhow!("unknown suite `{}`; available: {}", args.suite, SUITE_NAMES.join(", ")))?,
    };
    cfg.suite = args.suite.clone();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    } else if let Ok(value) = std::env::var(SEED_ENV) {
        cfg.seed = value
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got `{value}`"))?;
    }
    let format: ReportFormat = args.format.parse()?;
    let report = run_suite(&cfg)
        .map_err(|e| anyhow::anyhow!("{e}; available suites: {}", SUITE_NAMES.join(", ")))?;
    println!(
        "suite {} seed {} dim {} resolution {} corpus {}",
        cfg.suite, cfg.seed, cfg.dim, cfg.resolution, cfg.corpus_size
    );
    println!("checks {} violations {}", report.checks.len(), report.violations());
    for f in &report.fitted {
        println!("fitted {} = {:.6} (stability {:.3}, {} samples)", f.name, f.value, f.stability, f.samples);
    }
    for (key, value) in &report.metadata {
        println!("note {key}: {value}");
    }
    if let Some(path) = args.out.as_ref().or(cfg.output.as_ref()) {
        write_report(&report, format, path)?;
        println!("report written to {}", path.display());
    }
    let pass = report.passed();
    println!("result {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_norm(args: NormArgs) -> Result<ExitCode> {
    let f: GridFunction = read_json(&args.input)?;
    let space: SpaceDescriptor = read_json(&args.space)?;
    let value = match &args.weight {
        None => space.norm(&f)?,
        Some(path) => {
            let u: MorreyWeight = read_json(path)?;
            let balls = BallFamily::dyadic(f.grid(), args.stride, 0..=args.levels)?;
            morrey_norm(&f, &space, &u, &balls)?.value
        }
    };
    println!("{value}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_maximal(args: MaximalArgs) -> Result<ExitCode> {
    let f: GridFunction = read_json(&args.input)?;
    let spec = match args.mode {
        FamilyMode::Shifted => CubeFamilySpec::DyadicShifted,
        FamilyMode::Dense => {
            CubeFamilySpec::Dense { max_side_cells: args.max_side.unwrap_or(f.grid().shape()[0]) }
        }
    };
    let family = CubeFamily::build(f.grid(), spec)?;
    write_json(&args.out, &hl_maximal(&f, &family)?)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_lattice(spec: &str, grid: &Grid) -> Result<DyadicLattice> {
    if spec == "base" {
        return Ok(DyadicLattice::base(grid)?);
    }
    if let Some(rest) = spec.strip_prefix("triple:") {
        let parts = rest
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("parsing shift classes in `{spec}`"))?;
        let class = match parts.as_slice() {
            [a] => [*a, 0],
            [a, b] => [*a, *b],
            _ => bail!("expected one or two shift classes in `{spec}`"),
        };
        return Ok(DyadicLattice::triple(grid, class)?);
    }
    bail!("unknown lattice `{spec}` (expected `base` or `triple:a[,b]`)")
}

fn cmd_sparse_build(args: SparseBuildArgs) -> Result<ExitCode> {
    let f: GridFunction = read_json(&args.input)?;
    let lattice = parse_lattice(&args.lattice, f.grid())?;
    let family = build_sparse_from_stopping(&f, &lattice, args.eta)?;
    write_json(&args.out, &family.record())?;
    println!("{} members at eta={}", family.len(), family.eta());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sparse_verify(args: SparseVerifyArgs) -> Result<ExitCode> {
    let f: GridFunction = read_json(&args.input)?;
    let record: SparseFamilyRecord = read_json(&args.family)?;
    let eta = args.eta.unwrap_or(record.eta);
    let family = record.resolve(f.grid())?;
    match verify_sparseness(&family, eta)? {
        SparsenessCheck::Certified { .. } => {
            println!("certified: {} members at eta={eta}", family.len());
            Ok(ExitCode::SUCCESS)
        }
        SparsenessCheck::Violation { cube, covered_cells, cube_cells } => {
            println!(
                "violation: cube at {:?} side {} has {covered_cells}/{cube_cells} cells covered by descendants",
                cube.lower(),
                cube.side()
            );
            Ok(ExitCode::FAILURE)
        }
    }
}

fn cmd_sparse_apply(args: SparseApplyArgs) -> Result<ExitCode> {
    let f: GridFunction = read_json(&args.input)?;
    let record: SparseFamilyRecord = read_json(&args.family)?;
    let family = record.resolve(f.grid())?.certify()?;
    write_json(&args.out, &sparse_operator(&f, &family, args.exponent)?)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_omega(spec: &str) -> Result<SphereSymbol> {
    match spec {
        "sign1" => Ok(SphereSymbol::SignFirst),
        "sign-product" => Ok(SphereSymbol::SignProduct),
        "zero" => Ok(SphereSymbol::Zero),
        other => {
            if let Some(k) = other.strip_prefix("cosine:") {
                let k = k.parse().with_context(|| format!("parsing cosine frequency in `{other}`"))?;
                Ok(SphereSymbol::Cosine { k })
            } else {
                bail!("unknown symbol `{other}` (expected sign1, sign-product, zero, or cosine:k)")
            }
        }
    }
}

fn cmd_op(args: OpArgs) -> Result<ExitCode> {
    let f: GridFunction = read_json(&args.input)?;
    let descriptor = match args.kind {
        OpKind::Hilbert => OperatorDescriptor::Hilbert,
        OpKind::Rough => OperatorDescriptor::RoughOmega { omega: parse_omega(&args.omega)? },
        OpKind::Bilinear => OperatorDescriptor::BilinearModel,
    };
    let result = match (&args.symbol, args.kind) {
        (Some(path), _) => {
            let b: GridFunction = read_json(path)?;
            commutator_iterated(&descriptor, &b, args.order, &f)?
        }
        (None, OpKind::Bilinear) => {
            let path = args.input2.as_ref().context("--input2 is required for the bilinear kernel")?;
            let f2: GridFunction = read_json(path)?;
            descriptor.apply(&[f, f2])?
        }
        (None, _) => descriptor.apply(&[f])?,
    };
    write_json(&args.out, &result)?;
    Ok(ExitCode::SUCCESS)
}
