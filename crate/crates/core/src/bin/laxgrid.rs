use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use laxgrid::cli::oracle::{run_suite, SUITES};
use laxgrid::cli::{error_json, execute, exit_code, ExperimentConfig, Overrides};
use laxgrid::Error;

#[derive(Parser)]
#[command(name = "laxgrid", version, about = "Dyadic permutation approximation of measure-preserving maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Map spec, e.g. `torus_linear:2,1,1,1`.
        #[arg(long)]
        map: Option<String>,
        /// `1,2,3` or the inclusive range `1-4`.
        #[arg(long)]
        orders: Option<String>,
        /// plain, cyclic or bicyclic.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a brute-force oracle suite, or `all`.
    Oracle { suite: String },
}

fn fail(e: &Error) -> ExitCode {
    println!("{}", error_json(e));
    ExitCode::from(exit_code(e) as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return fail(&Error::ConfigError(e.kind().to_string()));
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Run { config, map, orders, mode, out } => {
            let overrides = Overrides { map, orders, mode, out };
            let loaded = ExperimentConfig::from_file(&config).and_then(|mut c| {
                c.apply(&overrides)?;
                c.validate()?;
                Ok(c)
            });
            let cfg = match loaded {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match execute(&cfg) {
                Ok((_, files)) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Oracle { suite } => {
            let names: Vec<&str> = if suite == "all" {
                SUITES.iter().map(|(n, _)| *n).collect()
            } else {
                vec![suite.as_str()]
            };
            let mut ok = true;
            for name in names {
                match run_suite(name) {
                    Some(outcome) => {
                        println!("{}", outcome.summary());
                        ok &= outcome.passed();
                    }
                    None => {
                        let known: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
                        return fail(&Error::ConfigError(format!("unknown suite `{name}`; known: {}", known.join(", "))));
                    }
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
