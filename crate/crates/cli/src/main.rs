use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use freeharm_cli::{execute, Command};

/// p-harmonic maps with a sphere-constrained free boundary.
#[derive(Parser)]
#[command(name = "freeharm", version)]
struct Args {
    #[arg(value_enum, required_unless_present = "schema")]
    command: Option<Command>,
    /// Run configuration file; defaults are used when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set mesh.h=1/32`. Repeatable.
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides output.dir).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Print the configuration schema and exit.
    #[arg(long)]
    schema: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.schema {
        print!("{}", freeharm_cli::config::SCHEMA);
        return ExitCode::SUCCESS;
    }
    let command = args.command.expect("required by clap");
    match execute(command, args.config.as_deref(), &args.set, args.out.as_deref()) {
        Ok(s) => {
            println!("{}: wrote {} files to {}", command.name(), s.written.len(), s.dir.display());
            for f in &s.written {
                println!("  {f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("freeharm {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
