use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rankbid_cli::commands::DEFAULT_CURVE_POINTS;
use rankbid_cli::{cmd_equilibrium, cmd_exploit, cmd_netvalue, cmd_simulate, cmd_voter, CliError, Options, Scenario};

/// Rank-scoring contest experiments: network values, equilibrium offer
/// curves, Monte Carlo contests, voter-model duality and sequential exploits.
#[derive(Parser)]
#[command(name = "rankbid", version, about)]
struct Cli {
    /// Directory for CSV output
    #[arg(long, global = true, default_value = ".")]
    output: PathBuf,
    /// Exit with status 2 when a statistical check fails
    #[arg(long, global = true)]
    self_check: bool,
    /// Reject graph files with missing self-loops instead of adding them
    #[arg(long, global = true)]
    strict_graph: bool,
    /// Points per equilibrium curve
    #[arg(long, global = true, default_value_t = DEFAULT_CURVE_POINTS)]
    curve_points: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Intrinsic and network value of every customer
    Netvalue { scenario: PathBuf },
    /// Equilibrium CDF and quantile curves for one customer
    Equilibrium {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        customer: usize,
    },
    /// Monte Carlo contest under symmetric equilibrium play
    Simulate { scenario: PathBuf },
    /// Empirical voter-model adoption against walk probabilities
    Voter {
        scenario: PathBuf,
        /// Also dump every customer's top choice per round
        #[arg(long)]
        trajectory: bool,
    },
    /// Best response to a revealed opponent allocation
    Exploit {
        scenario: PathBuf,
        /// CSV with header `customer,offer`
        #[arg(long)]
        opponent: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        drop_fraction: f64,
        /// Minimum margin over each kept opponent offer
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let opts = Options {
        output: cli.output,
        strict_graph: cli.strict_graph,
        self_check: cli.self_check,
        curve_points: cli.curve_points,
    };
    Ok(match cli.command {
        Command::Netvalue { scenario } => cmd_netvalue(&Scenario::load(&scenario)?, &opts)?.to_string(),
        Command::Equilibrium { scenario, customer } => {
            cmd_equilibrium(&Scenario::load(&scenario)?, customer, &opts)?.to_string()
        }
        Command::Simulate { scenario } => cmd_simulate(&Scenario::load(&scenario)?, &opts)?.to_string(),
        Command::Voter { scenario, trajectory } => {
            cmd_voter(&Scenario::load(&scenario)?, trajectory, &opts)?.to_string()
        }
        Command::Exploit { scenario, opponent, drop_fraction, epsilon } => {
            cmd_exploit(&Scenario::load(&scenario)?, &opponent, drop_fraction, epsilon, &opts)?.to_string()
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
