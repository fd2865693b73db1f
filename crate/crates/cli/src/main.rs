//! `busby` — build example extensions, classify them by their stabilized
//! invariants, and run verification suites.
//!
//! Exit codes: 0 success, 1 property failure, 2 invariant-computation
//! error, 3 input error.

mod descriptor;
mod report;
mod suites;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use busby_core::extension::{ExtensionDescriptor, ExtensionKind};
use busby_core::mesh::annulus_tower;
use busby_core::{
    build_wk_extension, fredholm_index, stabilized_invariant, C64, CMat, Error, InvariantRecord,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use descriptor::{load, Loaded};
use report::Report;
use suites::{run_suite, SuiteContext};

#[derive(Debug)]
pub enum CliError {
    /// Bad parameters, unreadable or malformed inputs → exit 3.
    Input(String),
    /// Invariant computation failed (lift, stabilization, span, ...) → exit 2.
    Compute(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "busby", version, about = "Hilbert module extensions over meshes: build, classify, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the JSON descriptors of an example to a directory.
    Build(BuildArgs),
    /// Compute the stabilized invariant (or Fredholm index) of a descriptor.
    Classify(ClassifyArgs),
    /// Run a verification suite against a descriptor.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[command(subcommand)]
    example: BuildExample,
}

#[derive(Subcommand)]
enum BuildExample {
    /// The boundary-phase family W_k over a triangulated disk.
    DiskWk(DiskArgs),
    /// The split extension (W ≅ C(X), winding 0).
    Split(SplitArgs),
    /// A Toeplitz-symbol essential isometry.
    Operator(OperatorArgs),
}

#[derive(Args)]
struct DiskArgs {
    /// Winding of the boundary phase.
    #[arg(long, allow_hyphen_values = true)]
    k: i64,
    /// Boundary vertices of the disk mesh.
    #[arg(long, default_value_t = 64)]
    angular: usize,
    /// Radial subdivisions of the disk mesh.
    #[arg(long, default_value_t = 2)]
    radial: usize,
    /// Output directory for the descriptor files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value_t = 64)]
    angular: usize,
    #[arg(long, default_value_t = 2)]
    radial: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OperatorArgs {
    /// Power k of the symbol z^k.
    #[arg(long, allow_hyphen_values = true)]
    symbol_power: i64,
    /// Number of symbol samples.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Defect class of the operator.
    #[arg(long, value_enum, default_value_t = Defect::Finite)]
    defect: Defect,
    /// Size of a random finite-rank perturbation block (0 = none).
    #[arg(long, default_value_t = 0)]
    perturb_rank: usize,
    /// Seed for the random perturbation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Defect {
    Finite,
    Infinite,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Path to an extension or operator descriptor.
    descriptor: String,
    /// Number of tower levels for the corona approximation.
    #[arg(long, default_value_t = 3)]
    tower_depth: usize,
    /// Pretty-print the JSON report.
    #[arg(long)]
    pretty: bool,
    /// Write a winding-per-level CSV next to the report.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Include wall time in the report (breaks byte-identical reruns).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct VerifyArgs {
    descriptor: String,
    /// Which property suite to run.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Random trials per property.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// RNG seed for the randomized trials.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    tower_depth: usize,
    #[arg(long)]
    pretty: bool,
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Classify(args) => cmd_classify(args, started),
        Command::Verify(args) => cmd_verify(args, started),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Compute(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

/// The algebraic tolerance, overridable through HILBMOD_TOL.
fn tolerance() -> Result<f64, CliError> {
    match std::env::var("HILBMOD_TOL") {
        Ok(s) => s
            .parse::<f64>()
            .map_err(|_| CliError::Input(format!("HILBMOD_TOL={s:?} is not a number"))),
        Err(_) => Ok(busby_core::DEFAULT_TOL),
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode, CliError> {
    match args.example {
        BuildExample::DiskWk(d) => build_disk_example(d.k, d.angular, d.radial, &d.out, "disk-wk"),
        BuildExample::Split(s) => build_disk_example(0, s.angular, s.radial, &s.out, "split"),
        BuildExample::Operator(o) => build_operator_example(o),
    }
}

fn build_disk_example(
    k: i64,
    angular: usize,
    radial: usize,
    out: &PathBuf,
    kind: &str,
) -> Result<ExitCode, CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
    let disk = Arc::new(
        busby_core::mesh::build_disk_mesh(radial, angular).map_err(CliError::Compute)?,
    );
    let ext = build_wk_extension(k, &disk).map_err(CliError::Compute)?;
    let ExtensionKind::BoundaryPhase { v_bundle, winding, .. } = ext.kind() else {
        unreachable!("disk examples are boundary-phase")
    };
    let z_bundle = ext.z_bundle();

    write_file(&out.join("mesh.json"), &disk.to_json())?;
    write_file(
        &out.join("v_bundle.json"),
        &serde_json::to_string(&v_bundle.to_wire()).unwrap(),
    )?;
    write_file(
        &out.join("z_bundle.json"),
        &serde_json::to_string(&z_bundle.to_wire()).unwrap(),
    )?;
    // The Busby datum as an isometry field over the boundary cycle.
    let tower = Arc::new(annulus_tower(2, angular).map_err(CliError::Compute)?);
    let busby = ext.busby_invariant(&tower).map_err(CliError::Compute)?;
    write_file(
        &out.join("busby.json"),
        &serde_json::to_string(&busby.to_wire()).unwrap(),
    )?;

    let descriptor = ExtensionDescriptor {
        kind: kind.to_string(),
        mesh: Some("mesh.json".into()),
        v_bundle: Some("v_bundle.json".into()),
        z_bundle: Some("z_bundle.json".into()),
        omega: Some(winding.omega().iter().map(|z| [z.re, z.im]).collect()),
        k: Some(k),
        busby: Some("busby.json".into()),
        symbol: None,
        perturbation: None,
        infinite_defect: None,
    };
    write_file(
        &out.join("extension.json"),
        &serde_json::to_string_pretty(&descriptor).unwrap(),
    )?;
    eprintln!("wrote {}", out.join("extension.json").display());
    Ok(ExitCode::SUCCESS)
}

fn build_operator_example(o: OperatorArgs) -> Result<ExitCode, CliError> {
    std::fs::create_dir_all(&o.out)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", o.out.display())))?;
    let symbol: Vec<C64> = (0..o.samples)
        .map(|j| {
            C64::from_polar(
                1.0,
                o.symbol_power as f64 * 2.0 * std::f64::consts::PI * j as f64 / o.samples as f64,
            )
        })
        .collect();
    let perturbation = if o.perturb_rank > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
        CMat::from_fn(o.perturb_rank, o.perturb_rank, |_, _| {
            busby_core::gen::random_complex(&mut rng)
        })
    } else {
        CMat::zeros(0, 0)
    };
    // Validate before writing.
    busby_core::StructuredOperator::new(
        symbol.clone(),
        perturbation.clone(),
        matches!(o.defect, Defect::Infinite),
    )
    .map_err(CliError::Compute)?;
    let descriptor = ExtensionDescriptor {
        kind: "operator".into(),
        mesh: None,
        v_bundle: None,
        z_bundle: None,
        omega: None,
        k: None,
        busby: None,
        symbol: Some(symbol.iter().map(|z| [z.re, z.im]).collect()),
        perturbation: (o.perturb_rank > 0).then(|| {
            (0..o.perturb_rank)
                .map(|i| {
                    (0..o.perturb_rank)
                        .map(|j| [perturbation[(i, j)].re, perturbation[(i, j)].im])
                        .collect()
                })
                .collect()
        }),
        infinite_defect: Some(matches!(o.defect, Defect::Infinite)),
    };
    let path = o.out.join("operator.json");
    write_file(&path, &serde_json::to_string_pretty(&descriptor).unwrap())?;
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_classify(args: ClassifyArgs, started: Instant) -> Result<ExitCode, CliError> {
    let tol = tolerance()?;
    if args.tower_depth < 2 {
        return Err(CliError::Input("tower depth must be at least 2".into()));
    }
    let load_result = load(&args.descriptor)?;
    let mut report = Report::new(
        format!("classify {} --tower-depth {}", args.descriptor, args.tower_depth),
        load_result.digests,
    );
    report.tolerances.insert("algebraic".into(), tol);
    report
        .tolerances
        .insert("corona_stabilization".into(), busby_core::bundle::CORONA_EPS);
    report.tolerances.insert(
        "kernel_singular_value".into(),
        busby_core::invariants::KERNEL_SV_THRESHOLD,
    );

    let per_level: Option<Vec<InvariantRecord>>;
    let record = match &load_result.loaded {
        Loaded::Extension { ext, boundary_len, .. } => {
            let tower = Arc::new(
                annulus_tower(args.tower_depth, *boundary_len).map_err(CliError::Compute)?,
            );
            let levels =
                busby_core::invariants::per_level_records(ext, &tower).map_err(CliError::Compute)?;
            per_level = Some(levels);
            stabilized_invariant(ext, &tower).map_err(CliError::Compute)?
        }
        Loaded::Operator { op } => {
            per_level = None;
            fredholm_index(op).map_err(CliError::Compute)?.into()
        }
    };

    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("level,windings\n");
        if let Some(levels) = &per_level {
            for (t, rec) in levels.iter().enumerate() {
                csv.push_str(&format!("{t},{}\n", record_csv(rec)));
            }
        } else {
            csv.push_str(&format!("0,{}\n", record_csv(&record)));
        }
        write_file(csv_path, &csv)?;
    }

    report.record = Some(record);
    report.per_level = per_level;
    if args.timings {
        report.wall_time_ms = Some(started.elapsed().as_millis() as u64);
    }
    eprintln!("classified in {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    report.emit(args.pretty);
    Ok(ExitCode::SUCCESS)
}

fn record_csv(rec: &InvariantRecord) -> String {
    match rec {
        InvariantRecord::Finite { windings } => windings
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        InvariantRecord::Infinite => "infinite".to_string(),
    }
}

fn cmd_verify(args: VerifyArgs, started: Instant) -> Result<ExitCode, CliError> {
    let tol = tolerance()?;
    let load_result = load(&args.descriptor)?;
    let Loaded::Extension { ext, boundary_len, busby_wire } = &load_result.loaded else {
        return Err(CliError::Input(
            "verification suites apply to extension descriptors".into(),
        ));
    };
    let ctx = SuiteContext {
        ext,
        boundary_len: *boundary_len,
        busby_wire: busby_wire.as_ref(),
        trials: args.trials,
        seed: args.seed,
        tol,
        tower_depth: args.tower_depth,
    };
    let verdicts = run_suite(&args.suite, &ctx)?;
    let all_pass = verdicts.iter().all(|v| v.pass);

    let mut report = Report::new(
        format!(
            "verify {} --suite {} --trials {} --seed {}",
            args.descriptor, args.suite, args.trials, args.seed
        ),
        load_result.digests,
    );
    report.seed = Some(args.seed);
    report.tolerances.insert("algebraic".into(), tol);
    report
        .tolerances
        .insert("pullback_roundtrip".into(), 1e-6);
    report.verdicts = Some(verdicts);
    if args.timings {
        report.wall_time_ms = Some(started.elapsed().as_millis() as u64);
    }
    eprintln!("verified in {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    report.emit(args.pretty);
    std::io::stdout().flush().ok();
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
