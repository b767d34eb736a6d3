//! `catability` command-line front end.

mod commands;
mod config;
mod error;
mod output;
mod state;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    ApproxArgs, CatabilityArgs, McArgs, MultiheadArgs, Outcome, ProtocolArgs, SpectrumArgs,
    SweepArgs, TableAction, WignerArgs,
};
use config::{GlobalArgs, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "catability",
    version,
    about = "Catability of cat-like states of light"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Catability and normalized infidelity of a state, fixed-amplitude or global.
    Catability(CatabilityArgs),
    /// Global metrics along a grid of loss transmissivities.
    SweepLoss(SweepArgs),
    /// Monte Carlo ensembles of the direct-measurement estimator.
    Mc(McArgs),
    /// Lowest eigenpairs of the witness operator.
    Spectrum(SpectrumArgs),
    /// Wigner function of a state on a grid.
    Wigner(WignerArgs),
    /// Gaussian benchmark tables.
    Table {
        #[command(subcommand)]
        action: TableAction,
    },
    /// N-headed catability and infidelity along a loss grid.
    Multihead(MultiheadArgs),
    /// Witness-optimal squeezed photonic approximations.
    OptimizeApprox(ApproxArgs),
    /// Simulated two-step measurement protocol.
    Protocol(ProtocolArgs),
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let builds_tables = matches!(
        cli.command,
        Command::Table {
            action: TableAction::Build(_)
        }
    );
    let cfg = RunConfig::resolve(&cli.global, builds_tables)?;
    match &cli.command {
        Command::Catability(a) => commands::cmd_catability(&cfg, a),
        Command::SweepLoss(a) => commands::cmd_sweep_loss(&cfg, a),
        Command::Mc(a) => commands::cmd_mc(&cfg, a),
        Command::Spectrum(a) => commands::cmd_spectrum(&cfg, a),
        Command::Wigner(a) => commands::cmd_wigner(&cfg, a),
        Command::Table { action } => commands::cmd_table(&cfg, action),
        Command::Multihead(a) => commands::cmd_multihead(&cfg, a),
        Command::OptimizeApprox(a) => commands::cmd_optimize_approx(&cfg, a),
        Command::Protocol(a) => commands::cmd_protocol(&cfg, a),
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::validation(e.render().to_string().trim().to_string());
            return fail(&err);
        }
    };
    match run(cli) {
        Ok(outcome) if outcome.converged => ExitCode::SUCCESS,
        Ok(outcome) => fail(&CliError::not_converged(format!(
            "a Gaussian optimization did not converge; best-effort output written to {:?}",
            outcome.written
        ))),
        Err(e) => fail(&e),
    }
}
