use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvxkob::cli_harness::*;
use cvxkob::linalg::{c, CVec};

#[derive(Parser)]
#[command(name = "cvxkob", version, about = "Run the experiment suites and emit their CSV data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite and write its report and CSV tables.
    Run(RunArgs),
    /// Validate a spec and print its canonical form.
    CheckSpec {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run a suite and write only the tables of one kind (orbit, curve, residuals, brackets).
    Emit {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List the registered suites.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment spec.
    #[arg(long, conflicts_with = "suite")]
    spec: Option<PathBuf>,
    /// Run a registered suite with its built-in spec.
    #[arg(long)]
    suite: Option<String>,
    /// Output directory; defaults to the spec's `outputs`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every default tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    /// First boundary frame point as comma-separated re,im pairs.
    #[arg(long, allow_hyphen_values = true)]
    preferred_first: Option<String>,
}

fn parse_point(s: &str) -> Result<CVec, HarnessError> {
    let bad = |m: &str| HarnessError::Validation { field: "preferred-first".into(), message: m.into() };
    let xs: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| bad(&e.to_string()))?;
    if xs.is_empty() || xs.len() % 2 != 0 {
        return Err(bad("expected an even number of reals (re,im pairs)"));
    }
    Ok(CVec::from_iterator(xs.len() / 2, xs.chunks(2).map(|p| c(p[0], p[1]))))
}

fn load(args: &RunArgs) -> Result<(ExperimentSpec, RunOptions, PathBuf), HarnessError> {
    let spec = match (&args.spec, &args.suite) {
        (Some(p), _) => parse_spec(p)?,
        (None, Some(name)) => default_spec(name).ok_or_else(|| HarnessError::Validation {
            field: "suite".into(),
            message: format!("unknown suite `{name}`; registered suites: {}", suite_names().join(", ")),
        })?,
        (None, None) => return Err(HarnessError::Validation { field: "spec".into(), message: "give --spec or --suite".into() }),
    };
    let preferred_first = args.preferred_first.as_deref().map(parse_point).transpose()?;
    let opts = RunOptions { seed: args.seed, tol_scale: args.tol_scale, preferred_first };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&spec.outputs));
    Ok((spec, opts, out))
}

fn execute(cmd: Command) -> Result<u8, HarnessError> {
    match cmd {
        Command::List => {
            for s in SUITES.iter() {
                println!("{:<20} {}", s.name, s.header);
            }
            Ok(0)
        }
        Command::CheckSpec { spec } => {
            let s = parse_spec(&spec)?;
            print!("{}", to_canonical_string(&s));
            Ok(0)
        }
        Command::Run(args) => {
            let (spec, opts, out) = load(&args)?;
            let report = run_suite(&spec, &opts)?;
            report.write_all(&out)?;
            print!("{}", report.to_text());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Emit { kind, run } => {
            let _: PlotKind = kind.parse()?;
            let (spec, opts, out) = load(&run)?;
            let report = run_suite(&spec, &opts)?;
            for p in emit_plot_data(&report, &kind, &out)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cvxkob: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
