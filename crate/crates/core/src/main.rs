use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qudit_teleport::cli::{
    cmd_basis_check, cmd_compare, cmd_fef, cmd_fidelity, cmd_gen, cmd_simulate, cmd_twirl_check,
    CliResult, GenKind, GenRequest, GlobalOptions, ProtocolChoice, RunReport,
};

/// Bell-measurement teleportation of qudits over mixed resources.
#[derive(Parser)]
#[command(name = "qtele", version)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override the command's pass threshold.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Print the report as JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Standard,
    Optimal,
    File,
}

#[derive(clap::Args)]
struct ProtocolOpts {
    #[arg(long, value_enum, default_value_t = ProtocolArg::Standard)]
    protocol: ProtocolArg,
    /// Correction unitaries for `--protocol file`.
    #[arg(long)]
    protocol_file: Option<PathBuf>,
    /// FEF restarts when the protocol is `optimal`.
    #[arg(long, default_value_t = 24)]
    restarts: usize,
}

impl ProtocolOpts {
    fn choice(&self) -> CliResult<ProtocolChoice> {
        use qudit_teleport::cli::CliError;
        match (self.protocol, &self.protocol_file) {
            (ProtocolArg::Standard, None) => Ok(ProtocolChoice::Standard),
            (ProtocolArg::Optimal, None) => Ok(ProtocolChoice::Optimal),
            (ProtocolArg::File, Some(p)) => Ok(ProtocolChoice::File(p.clone())),
            (ProtocolArg::File, None) => Err(CliError::Usage(
                "--protocol file needs --protocol-file".into(),
            )),
            (_, Some(_)) => Err(CliError::Usage(
                "--protocol-file is only valid with --protocol file".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the Weyl operator and Bell basis identities.
    BasisCheck {
        #[arg(long)]
        n: usize,
    },
    /// Generate a state file.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fully entangled fraction of a resource.
    Fef {
        state: PathBuf,
        #[arg(long, default_value_t = 24)]
        restarts: usize,
        /// Rescale the state to unit norm or trace before validating.
        #[arg(long)]
        renormalize: bool,
    },
    /// Transmission fidelity of a protocol on a resource.
    Fidelity {
        state: PathBuf,
        #[command(flatten)]
        protocol: ProtocolOpts,
        /// Monte Carlo inputs; 0 skips the estimate.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        renormalize: bool,
    },
    /// Simulate the protocol on an input state.
    Simulate {
        resource: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        protocol: ProtocolOpts,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        renormalize: bool,
    },
    /// Standard vs optimal protocol on a resource.
    Compare {
        state: PathBuf,
        #[arg(long, default_value_t = 24)]
        restarts: usize,
        #[arg(long)]
        renormalize: bool,
    },
    /// Monte Carlo check of the U ⊗ U twirl.
    TwirlCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn run(cli: &Cli, global: &GlobalOptions) -> CliResult<RunReport> {
    match &cli.command {
        Command::BasisCheck { n } => cmd_basis_check(*n, global),
        Command::Gen {
            kind,
            n,
            rank,
            p,
            theta,
            out,
        } => cmd_gen(
            &GenRequest {
                kind: *kind,
                n: *n,
                rank: *rank,
                p: *p,
                theta: *theta,
                out: out.clone(),
            },
            global,
        ),
        Command::Fef {
            state,
            restarts,
            renormalize,
        } => cmd_fef(state, *restarts, *renormalize, global),
        Command::Fidelity {
            state,
            protocol,
            samples,
            renormalize,
        } => cmd_fidelity(
            state,
            &protocol.choice()?,
            *samples,
            protocol.restarts,
            *renormalize,
            global,
        ),
        Command::Simulate {
            resource,
            input,
            protocol,
            samples,
            renormalize,
        } => cmd_simulate(
            resource,
            input,
            &protocol.choice()?,
            *samples,
            protocol.restarts,
            *renormalize,
            global,
        ),
        Command::Compare {
            state,
            restarts,
            renormalize,
        } => cmd_compare(state, *restarts, *renormalize, global),
        Command::TwirlCheck { n, samples } => cmd_twirl_check(*n, *samples, global),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let global = GlobalOptions {
        command: args.join(" "),
        seed: cli.seed,
        tol: cli.tol,
    };
    match run(&cli, &global) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_table());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
