use clap::Parser;
use noma_analyze::sweep::rows_exit_code;
use noma_analyze::{derived_quantities, load_scenario, run_sweep, write_csv, CliError, Mode, SweepOptions};
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

/// Closed-form and Monte Carlo sweeps for uplink NOMA over RF-FSO and RF/RF relays.
#[derive(Debug, Parser)]
#[command(name = "analyze", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,

    #[arg(long, value_enum, default_value = "both")]
    mode: Mode,

    /// Monte Carlo draws per sweep point; overrides [mc] iterations.
    #[arg(long = "mc-iters")]
    mc_iters: Option<u64>,

    /// Master seed; overrides [mc] seed.
    #[arg(long)]
    seed: Option<u64>,

    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Nudge coinciding interference terms apart instead of rejecting them.
    #[arg(long)]
    jitter_degenerate: bool,

    /// Worker threads.
    #[arg(long, env = "NOMA_THREADS")]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<i32, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::schema(format!("threads: {e}")))?;
    }
    let (file, config) = load_scenario(&args.scenario)?;
    for (name, value) in derived_quantities(&config) {
        eprintln!("{name} = {}", noma_analyze::sweep::format_number(value));
    }
    let opts = SweepOptions {
        mode: args.mode,
        iterations: args.mc_iters,
        seed: args.seed,
        jitter_degenerate: args.jitter_degenerate,
    };
    let rows = run_sweep(&file, &opts)?;
    match &args.out {
        Some(path) => write_csv(&rows, BufWriter::new(File::create(path)?))?,
        None => write_csv(&rows, io::stdout().lock())?,
    }
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("axis {}: {}: {}", r.axis, r.metric, r.error.as_ref().unwrap().message);
    }
    Ok(rows_exit_code(&rows))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
