use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cohdist_cli::commands::{self, Settings, DEFAULT_SDP_CAP};
use cohdist_cli::{resolve_cap, CliError};

/// Assisted coherence distillation: fidelities, rates, decompositions and figure curves.
#[derive(Debug, Parser)]
#[command(name = "cohdist", version)]
struct Cli {
    /// Largest matrix dimension to materialize (overrides COHDIST_CAP).
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Largest dimension for which semidefinite programs are solved.
    #[arg(long, global = true, default_value_t = DEFAULT_SDP_CAP)]
    sdp_cap: usize,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct StateArgs {
    /// JSON state file.
    state: PathBuf,
    /// Number of copies of the state to use.
    #[arg(long, default_value_t = 1)]
    copies: usize,
    /// Write the (expanded) state to this file.
    #[arg(long)]
    dump_state: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assisted fidelity of distillation for one or more target dimensions.
    Fidelity {
        #[command(flatten)]
        state: StateArgs,
        /// Target dimension; repeat for several rows.
        #[arg(long = "m", default_values_t = vec![2])]
        m: Vec<usize>,
    },
    /// One-shot, relaxed and zero-error rates.
    Rate {
        #[command(flatten)]
        state: StateArgs,
        /// Allowed infidelity.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Pure-state decomposition with the same diagonal as the state.
    Decompose {
        #[command(flatten)]
        state: StateArgs,
        /// Also write the decomposition as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assisted-fidelity curves for the qubit families, as CSV.
    Figure {
        /// JSON curve specification (one object or an array).
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quick numerical self-checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(String, bool), CliError> {
    let env = std::env::var("COHDIST_CAP").ok();
    let settings = Settings {
        cap: resolve_cap(cli.cap, env.as_deref())?,
        sdp_cap: cli.sdp_cap,
        json: cli.json,
    };
    let s = &settings;
    let text = match cli.command {
        Command::Fidelity { state, m } => commands::fidelity(
            &state.state,
            &m,
            state.copies,
            state.dump_state.as_deref(),
            s,
        )?,
        Command::Rate { state, eps } => commands::rate(
            &state.state,
            eps,
            state.copies,
            state.dump_state.as_deref(),
            s,
        )?,
        Command::Decompose { state, out } => commands::decompose(
            &state.state,
            state.copies,
            state.dump_state.as_deref(),
            out.as_deref(),
            s,
        )?,
        Command::Figure { spec, out } => commands::figure(&spec, &out)?,
        Command::Selftest { seed } => return commands::selftest(seed),
    };
    Ok((text, true))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("cohdist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
