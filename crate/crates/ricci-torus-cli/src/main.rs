//! Command-line driver.
//!
//! Exit codes: 0 when everything ran and every check passed, 1 for usage or
//! configuration problems, 2 for numerical failures during a run, 3 when the
//! experiment finished but an acceptance check failed (the report is still
//! written in that case).

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ricci_torus::skeleton::{build_initial_factor, build_skeleton, calibrate_width, Alignment, SkeletonMode};
use ricci_torus::{
    conformal_distance_matrix, Error, GridSpec, PointSet, StencilSpec, sample_points,
};
use ricci_torus_cli::{
    emit_plots, evaluate_checks, parse_report, read_snapshot, run_experiment, serialize_report,
    CheckResult,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ricci-torus", version, about = "Torus Ricci flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a calibrated initial conformal factor and snapshot it.
    Initial(InitialArgs),
    /// Run a full experiment from a JSON config.
    Run(RunArgs),
    /// Compute a distance matrix for a snapshotted conformal factor.
    Distance(DistanceArgs),
    /// Re-evaluate the checks recorded in an existing report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InitialArgs {
    /// Lattice order.
    #[arg(long)]
    i: u32,
    /// Grid resolution (power of two, at least 8).
    #[arg(long)]
    n: usize,
    /// Initial area deficit 2 - area(u0); defaults to 1/i.
    #[arg(long)]
    gap: Option<f64>,
    /// Snapshot path to write.
    #[arg(long, default_value = "u0.rt2f")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override i_list, comma-separated (e.g. 1,2,3).
    #[arg(long, value_delimiter = ',')]
    i: Option<Vec<u32>>,
    /// Override the grid resolution for every order.
    #[arg(long)]
    n: Option<usize>,
    /// Override the time scheme (imex or rk4).
    #[arg(long)]
    scheme: Option<String>,
    /// Override the graph-distance stencil radius.
    #[arg(long)]
    stencil_radius: Option<u32>,
    /// Override the final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Override the point-sampling seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DistanceArgs {
    /// Snapshot of a conformal factor, as written by initial or run.
    #[arg(long)]
    snapshot: PathBuf,
    /// Number of sample points.
    #[arg(long, default_value_t = 16)]
    count: usize,
    /// Stencil radius for the distance graph.
    #[arg(long, default_value_t = 2)]
    stencil_radius: u32,
    /// CSV path to write.
    #[arg(long, default_value = "distances.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Report written by a previous run.
    #[arg(long)]
    report: PathBuf,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::StiffnessFailure(_)
        | Error::StepRejected(_)
        | Error::NonPositiveField(_)
        | Error::InsufficientData(_) => 2,
        _ => 1,
    }
}

fn print_check(c: &CheckResult) {
    let cmp = match c.cmp {
        ricci_torus_cli::Cmp::Le => "<=",
        ricci_torus_cli::Cmp::Ge => ">=",
    };
    let scope = c.i.map(|i| format!(" [i={i}]")).unwrap_or_default();
    let verdict = if c.pass { "pass" } else { "FAIL" };
    println!("{verdict}  {}{scope}: {:.6e} {cmp} {:.6e}", c.name, c.lhs, c.rhs);
}

fn cmd_initial(args: &InitialArgs) -> Result<u8, Error> {
    let grid = GridSpec::new(args.n)?;
    let sk = build_skeleton(args.i, SkeletonMode::AllPairs)?.snapped_to(grid)?;
    let gap = args.gap.unwrap_or(1.0 / args.i as f64);
    let cal = calibrate_width(grid, &sk, gap, Alignment::Snap)?;
    let u0 = build_initial_factor(grid, &sk, cal.width, cal.width, Alignment::Snap)?;
    ricci_torus_cli::write_snapshot(&u0, 0.0, &args.out)?;
    println!(
        "wrote {} (i={}, n={}, width={:.6e}, area={:.12})",
        args.out.display(),
        args.i,
        args.n,
        cal.width,
        u0.integrate()
    );
    Ok(0)
}

fn cmd_run(args: &RunArgs) -> Result<u8, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    // Syntax first; semantic validation runs once, after CLI overrides.
    let mut cfg = ricci_torus_cli::config::parse_config_syntax(&text)?;
    if let Some(i) = &args.i {
        cfg.i_list = i.clone();
    }
    if let Some(n) = args.n {
        cfg.n = ricci_torus_cli::config::PerOrder::Single(n);
    }
    if let Some(s) = &args.scheme {
        cfg.scheme = match s.as_str() {
            "imex" => ricci_torus_cli::config::SchemeKind::Imex,
            "rk4" => ricci_torus_cli::config::SchemeKind::Rk4,
            other => return Err(Error::ConfigInvalid(format!("unknown scheme {other}"))),
        };
    }
    if let Some(r) = args.stencil_radius {
        cfg.stencil_radius = r;
    }
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    if let Some(seed) = args.seed {
        cfg.points.seed = seed;
    }
    cfg.validate()?;

    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let report = run_experiment(&cfg, &out_dir)?;
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("report.json"), serialize_report(&report))?;
    emit_plots(&report, &out_dir)?;

    for c in &report.checks {
        print_check(c);
    }
    println!(
        "report: {} ({} checks, {})",
        out_dir.join("report.json").display(),
        report.checks.len(),
        if report.pass { "all passed" } else { "FAILURES present" }
    );
    Ok(if report.pass { 0 } else { 3 })
}

fn cmd_distance(args: &DistanceArgs) -> Result<u8, Error> {
    let (u, t) = read_snapshot(&args.snapshot)?;
    let pts = sample_points(&PointSet::Halton { count: args.count })?;
    let st = StencilSpec::new(args.stencil_radius)?;
    let matrix = conformal_distance_matrix(&u, &pts, &st)?;
    std::fs::write(&args.out, matrix.to_csv())?;
    println!(
        "wrote {} ({} points, snapshot t = {t}, n = {})",
        args.out.display(),
        pts.len(),
        u.n()
    );
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Error> {
    let text = std::fs::read_to_string(&args.report)?;
    let report = parse_report(&text)?;
    let recomputed = evaluate_checks(&report.config, &report.runs);
    if recomputed != report.checks {
        println!("FAIL  stored checks do not match the report's own measurements");
        return Ok(3);
    }
    for c in &recomputed {
        print_check(c);
    }
    let pass = recomputed.iter().all(|c| c.pass) && report.pass;
    println!("verify: {} checks, {}", recomputed.len(), if pass { "all passed" } else { "FAILURES present" });
    Ok(if pass { 0 } else { 3 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Initial(a) => cmd_initial(a),
        Command::Run(a) => cmd_run(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
