use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rwo_cli::acceptance::{run_suite, SuiteOptions};
use rwo_cli::emit::emit;
use rwo_cli::error::{CliError, Result};
use rwo_cli::flags::ConfigFlags;
use rwo_cli::{run_experiment, ExperimentKind};
use rwo_core::env::{clusters, generate_field, read_snapshot, write_snapshot, Boundary, ObstacleField};
use rwo_core::spectral::{local_eigenvalue, principal_eigenpair, restricted_operator, DEFAULT_MAX_ITERS, DEFAULT_TOL};

/// Random walks among Bernoulli obstacles: experiments and acceptance suite.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Worker threads; overrides RWO_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FieldArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_delimiter = ',', default_value = "101,101")]
    sides: Vec<usize>,
    #[arg(long, default_value_t = 0.7)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum LwgfExperiment {
    Subadditivity,
    Concentration,
    Consistency,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an obstacle field and write it as a snapshot.
    Gen {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Principal eigenvalue of the origin's cluster, as JSON.
    Spectrum {
        #[command(flatten)]
        field: FieldArgs,
        /// Read the field from a snapshot instead of sampling it.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Also report the local eigenvalue in B_radius(origin).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Survival asymptotics.
    Survive(ConfigFlags),
    /// Log-weighted Green's function experiments.
    Lwgf {
        #[arg(long, value_enum, default_value = "concentration")]
        experiment: LwgfExperiment,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Shape of the selected island.
    Islands(ConfigFlags),
    /// Conditioned mass on the selected island.
    Localize(ConfigFlags),
    /// Box census and separating cuts.
    Renorm(ConfigFlags),
    /// The acceptance suite.
    All {
        #[arg(long, default_value = "acceptance-out")]
        output: PathBuf,
        /// Criteria to run, comma separated; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| std::env::var("RWO_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn sample(args: &FieldArgs) -> Result<ObstacleField> {
    Ok(generate_field(args.d, &args.sides, args.p, args.seed, Boundary::AbsorbingPad)?)
}

fn run(command: Command) -> Result<u8> {
    let kind_flags = match command {
        Command::Gen { field, output } => {
            let f = sample(&field)?;
            write_snapshot(&f, std::io::BufWriter::new(std::fs::File::create(output)?))?;
            return Ok(0);
        }
        Command::Spectrum { field, snapshot, radius } => {
            let f = match snapshot {
                Some(path) => read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))?,
                None => sample(&field)?,
            };
            spectrum(&f, radius)?;
            return Ok(0);
        }
        Command::All { output, only } => {
            let report = run_suite(&SuiteOptions { output: Some(output), only, ..SuiteOptions::default() })?;
            for line in report.lines() {
                println!("{line}");
            }
            return Ok(if report.all_passed() { 0 } else { 1 });
        }
        Command::Survive(f) => (ExperimentKind::SurvivalAsymptotics, f),
        Command::Lwgf { experiment, flags } => {
            let kind = match experiment {
                LwgfExperiment::Subadditivity => ExperimentKind::LwgfSubadditivity,
                LwgfExperiment::Concentration => ExperimentKind::LwgfConcentration,
                LwgfExperiment::Consistency => ExperimentKind::PhiConsistency,
            };
            (kind, flags)
        }
        Command::Islands(f) => (ExperimentKind::BallShape, f),
        Command::Localize(f) => (ExperimentKind::OneCity, f),
        Command::Renorm(f) => (ExperimentKind::RenormCensus, f),
    };
    let (kind, flags) = kind_flags;
    let cfg = flags.resolve(kind)?;
    let rec = run_experiment(&cfg)?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    let (csv, json) = emit(&rec, &dir)?;
    eprintln!(
        "{}: {} rows, {} failed replicates, {:.1} s -> {}, {}",
        cfg.kind.name(),
        rec.rows.len(),
        rec.failed_replicates,
        rec.wall_time_s,
        csv.display(),
        json.display()
    );
    Ok(if 2 * rec.failed_replicates > cfg.replicates { 3 } else { 0 })
}

fn spectrum(f: &ObstacleField, radius: Option<f64>) -> Result<()> {
    let o = f.origin();
    let cl = clusters(f);
    let label = cl.label(o).ok_or(CliError::Core(rwo_core::Error::ZeroSurvival))?;
    let op = restricted_operator(f, &cl.members(label))?;
    let res = principal_eigenpair(&op, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    let mut out = serde_json::json!({
        "cluster_size": op.len(),
        "lambda": res.lambda,
        "residual": res.residual,
        "iterations": res.iterations,
    });
    if let Some(r) = radius {
        out["local_lambda"] = local_eigenvalue(f, o, r)?.lambda.into();
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
