use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crow_entangle::cli::{self, parse_k0_list, parse_presets, Command, TABLE_K0};

#[derive(Parser)]
#[command(name = "crowsim", version, about = "CROW pair-generation and entanglement simulator")]
struct Args {
    /// Flat `key = value` configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Complex band structure, Q factor and group velocity.
    Dispersion {
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Schmidt decomposition of the pair amplitude.
    Decompose {
        #[arg(long)]
        dump_phi: bool,
        #[arg(long)]
        modes: bool,
    },
    /// Photon number and correlation variance in two cavities over time.
    Evolve,
    /// Metrics table over pump configurations and k0 values.
    Sweep {
        /// Comma-separated subset of A,B,C.
        #[arg(long, default_value = "A,B,C")]
        configs: String,
        /// Comma-separated k0 D / pi values.
        #[arg(long)]
        k0: Option<String>,
    },
    /// Independent cross-checks and the anomalous-sign calibration.
    Oracle,
}

fn to_command(sub: Sub) -> crow_entangle::Result<Command> {
    Ok(match sub {
        Sub::Dispersion { points } => Command::Dispersion { points },
        Sub::Decompose { dump_phi, modes } => Command::Decompose { dump_phi, modes },
        Sub::Evolve => Command::Evolve,
        Sub::Sweep { configs, k0 } => Command::Sweep {
            configs: parse_presets(&configs)?,
            k0_over_pi: match k0 {
                Some(s) => parse_k0_list(&s)?,
                None => TABLE_K0.to_vec(),
            },
        },
        Sub::Oracle => Command::Oracle,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let res = to_command(args.command)
        .and_then(|cmd| cli::run(&cmd, args.config.as_deref(), args.out.as_deref()));
    match &res {
        Ok(o) => {
            println!("{}", o.summary);
            for a in &o.artifacts {
                println!("wrote {}", o.out_dir.join(&a.name).display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(cli::exit_code(&res) as u8)
}
