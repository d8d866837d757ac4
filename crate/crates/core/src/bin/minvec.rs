use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use minvec::report::{self, Report, REPORT_FILE, TRACE_FILE};
use minvec::scenario::{self, Command, Scenario};

/// Minimal vectors, minimal functionals and invariant-subspace candidates
/// for powers of a matrix.
#[derive(Parser)]
#[command(name = "minvec", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one minimal-vector problem at the scenario's `power`.
    Solve(RunArgs),
    /// Run the iteration over powers 1..N with limit estimates and α records.
    Trace(RunArgs),
    /// Run the trace and build the Krylov subspace candidate from `w`.
    Subspace(RunArgs),
    /// Re-check a stored report and trace without solving again.
    Verify(VerifyArgs),
    /// Write the scenario's operator and its basic facts.
    Gallery(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, env = "MINVEC_OUT_DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    emit_plot: bool,
    /// Exit with status 4 when any invariant check fails.
    #[arg(long)]
    strict: bool,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "MINVEC_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Defaults to `<out>/report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Defaults to `<out>/trace.csv` when present.
    #[arg(long)]
    trace: Option<PathBuf>,
}

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

fn load(args: &RunArgs) -> Result<(Scenario, PathBuf), ExitCode> {
    let mut sc = Scenario::load(&args.scenario).map_err(|e| {
        eprintln!("error: cannot load scenario {}: {e}", args.scenario.display());
        ExitCode::from(EXIT_INPUT)
    })?;
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    let base = args.scenario.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((sc, base))
}

fn run(args: &RunArgs, command: Command) -> ExitCode {
    let (sc, base) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let rep = match scenario::run(&sc, command, &base) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_input() { EXIT_INPUT } else { EXIT_SOLVER });
        }
    };
    if let Err(e) = report::write_outputs(&rep, &args.out, args.emit_plot) {
        eprintln!("error: writing outputs to {}: {e}", args.out.display());
        return ExitCode::from(EXIT_SOLVER);
    }
    let failures = rep.failures();
    println!(
        "{}: {} checks, {} failed; outputs in {}",
        command.as_str(),
        rep.invariants.len(),
        failures.len(),
        args.out.display()
    );
    for c in &failures {
        eprintln!("invariant failed: {} (value {:e}, slack {:e}, tol {:e})", c.name, c.value, c.slack, c.tol);
    }
    if args.strict && !failures.is_empty() {
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn gallery(args: &RunArgs) -> ExitCode {
    let (sc, base) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let rep = match scenario::gallery_report(&sc, &base) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_input() { EXIT_INPUT } else { EXIT_SOLVER });
        }
    };
    let write = || -> minvec::Result<()> {
        std::fs::create_dir_all(&args.out)?;
        let mut buf = Vec::new();
        minvec::gallery::write_matrix_csv(&rep.matrix, &mut buf)?;
        std::fs::write(args.out.join("operator.csv"), buf)?;
        let mut json = serde_json::to_string_pretty(&rep)?;
        json.push('\n');
        std::fs::write(args.out.join("gallery.json"), json)?;
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("error: writing outputs to {}: {e}", args.out.display());
        return ExitCode::from(EXIT_SOLVER);
    }
    println!(
        "gallery: dim {}, norm {:e}, injective {}; outputs in {}",
        rep.matrix.nrows(),
        rep.operator_norm,
        rep.injectivity.injective,
        args.out.display()
    );
    ExitCode::SUCCESS
}

fn verify(args: &VerifyArgs) -> ExitCode {
    let report_path = args.report.clone().unwrap_or_else(|| args.out.join(REPORT_FILE));
    let trace_path = args.trace.clone().or_else(|| {
        let p = args.out.join(TRACE_FILE);
        p.exists().then_some(p)
    });
    let rep = match std::fs::read_to_string(&report_path).map_err(minvec::Error::from).and_then(|t| Report::from_json(&t)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot load report {}: {e}", report_path.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let trace_text = match trace_path.as_ref().map(std::fs::read_to_string).transpose() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read trace: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let outcome = match report::verify(&rep, trace_text.as_deref()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let failures = outcome.failures();
    println!("verify: {} checks, {} failed", outcome.checks.len(), failures.len());
    for c in &failures {
        eprintln!("check failed: {} (value {:e}, reference {:e}, slack {:e}, tol {:e})", c.name, c.value, c.reference, c.slack, c.tol);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Cmd::Solve(a) => run(a, Command::Solve),
        Cmd::Trace(a) => run(a, Command::Trace),
        Cmd::Subspace(a) => run(a, Command::Subspace),
        Cmd::Gallery(a) => gallery(a),
        Cmd::Verify(a) => verify(a),
    }
}
