use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use grushin_core::experiment::{self, Suite, DEFAULT_SEED};
use grushin_core::geometry::GrushinParams;
use grushin_core::Error;

const THREADS_VAR: &str = "GRUSHIN_LAB_THREADS";

#[derive(Parser)]
#[command(name = "grushin-lab", version, about = "Numerical experiments for the Grushin operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key = value config file
    Run { config: PathBuf },
    /// Run a built-in verification suite
    Verify {
        /// identities, kelvin, maximum_principle, ground_state, scaling or all
        suite: String,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Print a summary of a field file as JSON
    Inspect { file: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        2
    } else {
        1
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParams(format!("{THREADS_VAR} must be a positive integer (got '{raw}')")))?;
    // fails only if a pool was already built, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn execute(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Run { config } => {
            let cfg = experiment::ExperimentConfig::from_file(&config)?;
            let out = experiment::run(&cfg)?;
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            println!("{} {}", cfg.problem, if out.passed { "PASS" } else { "FAIL" });
            Ok(out.passed)
        }
        Command::Verify { suite, n, l, gamma, seed } => {
            let suite: Suite = suite.parse()?;
            let params = GrushinParams::new(n, l, gamma)?;
            let reports = experiment::verify(suite, params, seed)?;
            let mut ok = true;
            for r in &reports {
                print_json(r)?;
                ok &= r.passed;
            }
            for r in &reports {
                let name = serde_json::to_value(r.suite)?;
                println!("{} {}", name.as_str().unwrap_or("?"), if r.passed { "PASS" } else { "FAIL" });
            }
            Ok(ok)
        }
        Command::Inspect { file } => {
            print_json(&experiment::inspect(file)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
