//! Command-line front end: field decomposition, norms, simulation runs with
//! observers, bifurcation scans, and the self-verification suites.
//!
//! Exit codes: 0 success, 1 validation error (arguments, config, malformed
//! files), 2 numerical failure (blow-up, CFL, eigenvalue iteration), 3
//! verification-suite failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use paley::besov::{besov_norm, shell_lp_norms, BesovParams};
use paley::config::{execute_run, preset, RunConfig, RunError, PRESET_NAMES};
use paley::dyadic::{
    build_partition, project, reconstruction_residual, PartitionMode, PartitionProfile,
};
use paley::fourier::{sobolev_norm, SobolevOrder};
use paley::io;
use paley::quat::{families, find_crossing, max_real_part, BifurcationScan};
use paley::solver::SolverError;
use paley::verify;

#[derive(Parser)]
#[command(
    name = "paley",
    about = "Spectral analysis and incompressible flow simulation on the periodic torus",
    version
)]
struct Cli {
    /// Run configuration file (TOML); used by `simulate`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed override for seeded scenarios.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trajectory emission format (default: both).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Split a field into its dyadic frequency shells.
    Decompose(DecomposeArgs),
    /// Sobolev and Besov norms of a field for a list of (s, p, q) triples.
    Norms(NormsArgs),
    /// Time-integrate a configured flow and emit observer series.
    Simulate,
    /// Scan an operator family for imaginary-axis crossings.
    Bifurcate(BifurcateArgs),
    /// Run the self-verification suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input field (BFLD).
    #[arg(long)]
    input: PathBuf,
    /// Partition mode.
    #[arg(long, value_enum, default_value = "reconstruction")]
    mode: CliMode,
    /// Lower annulus bound.
    #[arg(long, default_value_t = 0.5)]
    c1: f64,
    /// Upper annulus bound.
    #[arg(long, default_value_t = 2.0)]
    c2: f64,
    /// Print the reconstruction residual after writing the shells.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Reconstruction,
    Energy,
}

#[derive(Args)]
struct NormsArgs {
    /// Input field (BFLD).
    #[arg(long)]
    input: PathBuf,
    /// Norm parameters as `s,p,q` (repeatable; `inf` allowed for p and q).
    #[arg(long = "norm", value_name = "S,P,Q", required = true)]
    norms: Vec<String>,
}

#[derive(Args)]
struct BifurcateArgs {
    /// Operator family: leftmult-shift | rotation-shift.
    #[arg(long)]
    family: String,
    #[arg(long)]
    mu_lo: f64,
    #[arg(long)]
    mu_hi: f64,
    #[arg(long, default_value_t = 33)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verification scale.
    #[arg(long, value_enum, default_value = "default")]
    level: CliLevel,
    /// Corrupt a partition multiplier to prove the invariant check fires.
    #[arg(long, hide = true)]
    inject_partition_fault: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliLevel {
    Quick,
    Default,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<paley::io::BfldError> for Failure {
    fn from(e: paley::io::BfldError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<paley::dyadic::PartitionError> for Failure {
    fn from(e: paley::dyadic::PartitionError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<paley::besov::BesovError> for Failure {
    fn from(e: paley::besov::BesovError) -> Self {
        Failure::validation(e.to_string())
    }
}

impl From<paley::quat::QuatError> for Failure {
    fn from(e: paley::quat::QuatError) -> Self {
        match e {
            paley::quat::QuatError::EigenIterationFailed
            | paley::quat::QuatError::NonFiniteMatrix => Failure::numerical(e.to_string()),
            other => Failure::validation(other.to_string()),
        }
    }
}

fn solver_failure(e: SolverError) -> Failure {
    match e {
        SolverError::BlowUp { .. } | SolverError::CflViolation { .. } => {
            Failure::numerical(e.to_string())
        }
        other => Failure::validation(other.to_string()),
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Solver(s) => solver_failure(s),
            other => Failure::validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Failure> {
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::validation(format!("cannot create {}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Decompose(args) => cmd_decompose(&cli, args),
        Command::Norms(args) => cmd_norms(&cli, args),
        Command::Simulate => cmd_simulate(&cli),
        Command::Bifurcate(args) => cmd_bifurcate(&cli, args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn shell_file_name(j: i32) -> String {
    if j < 0 {
        "shell_low.bfld".into()
    } else {
        format!("shell_{j}.bfld")
    }
}

fn cmd_decompose(cli: &Cli, args: &DecomposeArgs) -> Result<ExitCode, Failure> {
    let field = io::read_bfld(&args.input)?;
    let mode = match args.mode {
        CliMode::Reconstruction => PartitionMode::Reconstruction,
        CliMode::Energy => PartitionMode::Energy,
    };
    let profile = PartitionProfile::new(mode, args.c1, args.c2)?;
    let partition = build_partition(*field.grid(), profile)?;

    let mut rows = Vec::new();
    for j in partition.shells() {
        let block = project(&partition, &field, j)?;
        io::write_bfld(&cli.out.join(shell_file_name(j)), &block)?;
        rows.push(vec![j.to_string(), io::fmt_value(block.l2_norm())]);
    }
    io::write_csv(&cli.out.join("shell_norms.csv"), &["j", "l2_norm"], rows)?;

    if args.check {
        let residual = reconstruction_residual(&partition, &field)?;
        println!("reconstruction residual: {residual:.6e}");
    }
    println!(
        "wrote {} shells to {}",
        partition.num_shells(),
        cli.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_norm_triple(raw: &str) -> Result<(f64, f64, f64), Failure> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Failure::validation(format!(
            "--norm expects `s,p,q`, got '{raw}'"
        )));
    }
    let parse = |label: &str, text: &str| -> Result<f64, Failure> {
        if text.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        text.parse()
            .map_err(|e| Failure::validation(format!("bad {label} in '{raw}': {e}")))
    };
    Ok((
        parse("s", parts[0])?,
        parse("p", parts[1])?,
        parse("q", parts[2])?,
    ))
}

fn cmd_norms(cli: &Cli, args: &NormsArgs) -> Result<ExitCode, Failure> {
    let field = io::read_bfld(&args.input)?;
    let partition = build_partition(*field.grid(), PartitionProfile::energy())?;
    let mut rows = Vec::new();
    for raw in &args.norms {
        let (s, p, q) = parse_norm_triple(raw)?;
        let params = BesovParams::new(s, p, q)?;
        let order = SobolevOrder::new(s).map_err(|e| Failure::validation(e.to_string()))?;
        let sobolev = sobolev_norm(&field, order);
        let besov = besov_norm(&shell_lp_norms(&partition, &field, p)?, &params);
        let ratio = if sobolev == 0.0 { 1.0 } else { besov / sobolev };
        rows.push(vec![
            io::fmt_value(s),
            io::fmt_value(p),
            io::fmt_value(q),
            io::fmt_value(sobolev),
            io::fmt_value(besov),
            io::fmt_value(ratio),
        ]);
    }
    let path = cli.out.join("norms.csv");
    io::write_csv(&path, &["s", "p", "q", "sobolev", "besov", "ratio"], rows)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_run_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            // Accept a preset name in place of a file for convenience.
            if let Some(name) = path.to_str() {
                if PRESET_NAMES.contains(&name) {
                    preset(name).expect("known preset")
                } else {
                    RunConfig::from_path(path).map_err(|e| Failure::validation(e.to_string()))?
                }
            } else {
                RunConfig::from_path(path).map_err(|e| Failure::validation(e.to_string()))?
            }
        }
        None => {
            return Err(Failure::validation(
                "simulate needs --config FILE (or a preset name: taylor-green-2d, \
                 stokes-mode, forced-single-mode, random-div-free)",
            ))
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

#[derive(serde::Serialize)]
struct BoundSummary {
    name: String,
    satisfied: bool,
    worst_margin: f64,
}

#[derive(serde::Serialize)]
struct AprioriSummary {
    column: String,
    constant: f64,
    degenerate: bool,
    satisfied: bool,
}

#[derive(serde::Serialize)]
struct BoundsFile {
    v: &'static str,
    gronwall: Vec<BoundSummary>,
    besov_apriori: Vec<AprioriSummary>,
}

fn cmd_simulate(cli: &Cli) -> Result<ExitCode, Failure> {
    let config = load_run_config(cli)?;
    let output = execute_run(&config)?;

    let write_csv = !matches!(cli.format, Some(Format::Jsonl));
    let write_jsonl = !matches!(cli.format, Some(Format::Csv));
    if write_csv {
        io::write_text(
            &cli.out.join("trajectory.csv"),
            &io::trajectory_csv(&output.record),
        )?;
    }
    if write_jsonl {
        io::write_text(
            &cli.out.join("trajectory.jsonl"),
            &io::trajectory_jsonl(&output.record),
        )?;
    }

    for (c, comp) in output
        .record
        .final_state
        .physical_velocity()
        .iter()
        .enumerate()
    {
        io::write_bfld(&cli.out.join(format!("final_u{c}.bfld")), comp)?;
    }

    let bounds = BoundsFile {
        v: io::JSONL_SCHEMA,
        gronwall: output
            .gronwall
            .iter()
            .map(|r| BoundSummary {
                name: r.bound_name.clone(),
                satisfied: r.satisfied,
                worst_margin: r.worst_margin,
            })
            .collect(),
        besov_apriori: output
            .besov_apriori
            .iter()
            .map(|(column, r)| AprioriSummary {
                column: column.clone(),
                constant: r.constant,
                degenerate: r.degenerate,
                satisfied: r.report.satisfied,
            })
            .collect(),
    };
    io::write_text(
        &cli.out.join("bounds.json"),
        &serde_json::to_string_pretty(&bounds).expect("serializable"),
    )?;

    println!(
        "simulated to t = {} ({} samples) -> {}",
        io::fmt_value(output.record.final_state.time()),
        output.record.samples.len(),
        cli.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Serialize)]
struct CrossingsFile {
    v: &'static str,
    family: String,
    tol: f64,
    crossings: Vec<paley::quat::CrossingRecord>,
}

fn cmd_bifurcate(cli: &Cli, args: &BifurcateArgs) -> Result<ExitCode, Failure> {
    let family = families::by_name(&args.family).ok_or_else(|| {
        Failure::validation(format!(
            "unknown family '{}'; available: leftmult-shift, rotation-shift",
            args.family
        ))
    })?;
    let scan = BifurcationScan::new(
        "mu",
        move |mu| family(mu),
        (args.mu_lo, args.mu_hi),
        args.samples,
    )?;

    let mut rows = Vec::new();
    for mu in scan.sample_points() {
        let value = max_real_part(&(scan.family)(mu))?;
        rows.push(vec![io::fmt_value(mu), io::fmt_value(value)]);
    }
    io::write_csv(&cli.out.join("scan.csv"), &["mu", "max_real_part"], rows)?;

    let crossings = find_crossing(&scan, args.tol)?;
    let file = CrossingsFile {
        v: io::JSONL_SCHEMA,
        family: args.family.clone(),
        tol: args.tol,
        crossings: crossings.clone(),
    };
    io::write_text(
        &cli.out.join("crossings.json"),
        &serde_json::to_string_pretty(&file).expect("serializable"),
    )?;

    if crossings.is_empty() {
        println!("no crossings in [{}, {}]", args.mu_lo, args.mu_hi);
    } else {
        for c in &crossings {
            println!(
                "crossing at mu = {} (imaginary part {})",
                io::fmt_value(c.mu_star),
                io::fmt_value(c.imag_at_crossing)
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, Failure> {
    let level = match args.level {
        CliLevel::Quick => verify::Level::Quick,
        CliLevel::Default => verify::Level::Default,
    };
    let start = std::time::Instant::now();
    let suites = verify::run_all(verify::Options {
        level,
        inject_partition_fault: args.inject_partition_fault,
    });
    let mut all_passed = true;
    println!("{:<16} {:<44} {:<6} detail", "suite", "check", "status");
    for suite in &suites {
        for check in &suite.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            all_passed &= check.passed;
            println!(
                "{:<16} {:<44} {:<6} {}",
                suite.name, check.name, status, check.detail
            );
        }
    }
    let total: usize = suites.iter().map(|s| s.checks.len()).sum();
    println!(
        "{} checks in {:.1} s: {}",
        total,
        start.elapsed().as_secs_f64(),
        if all_passed { "all passed" } else { "FAILURES" }
    );
    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}
