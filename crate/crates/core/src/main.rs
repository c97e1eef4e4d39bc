use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lclab::config::{parse_config_for, ExperimentKind};
use lclab::runner::{exit_code, run_experiment, RunOptions, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "lclab", version, about = "Large-coupling limit laboratory")]
struct Cli {
    /// rate1d, rate2d, green, symbols, bounds, nbound, compose, weyl, birman, threshold or report-all
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write A_lambda, B and the mass matrix in coordinate form.
    #[arg(long)]
    dump_matrices: bool,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("configuration error\n{msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(kind) = ExperimentKind::from_name(&cli.experiment) else {
        return config_error(format!("unknown experiment `{}`", cli.experiment));
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return config_error(format!("{}: {e}", cli.config.display())),
    };
    let mut cfg = match parse_config_for(&text, Some(kind)) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out_dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let opts = RunOptions {
        out_dir,
        dump_matrices: cli.dump_matrices,
        print: true,
    };
    let result = run_experiment(&cfg, &opts);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
