use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thermocode::experiment::{
    run_grid, sweep, verify, write_records, write_sweep, Axis, ExperimentConfig, Format, Quantity,
};
use thermocode::Result;

#[derive(Parser)]
#[command(
    name = "thermocode",
    version,
    about = "Encode classical messages into thermal quantum systems and check the resulting bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one record per grid instance.
    Encode(Common),
    /// Check every law on the grid and write a JSON report; exits 1 on any failure.
    Verify(Common),
    /// Tabulate a quantity along one grid axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// c_max, holevo, mutual_info or p_succ
        #[arg(long)]
        quantity: Option<Quantity>,
        /// beta, n or copies
        #[arg(long)]
        axis: Option<Axis>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; the built-in grid is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads.
    #[arg(long, value_name = "K")]
    parallel: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    thermocode::Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
                })?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        Ok(match self.seed {
            Some(s) => config.with_seed(s),
            None => config,
        })
    }

    fn out_path(&self, config: &ExperimentConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| config.output.as_ref().and_then(|o| o.path.clone()))
    }

    fn format(&self, config: &ExperimentConfig) -> Format {
        self.format.or_else(|| config.output.as_ref().map(|o| o.format)).unwrap_or_default()
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                thermocode::Error::InvalidInput(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Encode(common) => {
            let config = common.load()?;
            let records = run_grid(&config.instances()?, common.parallel)?;
            write_records(&records, common.format(&config), sink(common.out_path(&config).as_deref())?)?;
            Ok(true)
        }
        Command::Verify(common) => {
            let config = common.load()?;
            let report = verify(&config, common.parallel)?;
            let mut out = sink(common.out_path(&config).as_deref())?;
            writeln!(out, "{}", report.to_json())
                .and_then(|_| out.flush())
                .map_err(|e| thermocode::Error::InvalidInput(format!("write failed: {e}")))?;
            for (name, law) in report.laws.iter().filter(|(_, l)| !l.pass) {
                eprintln!(
                    "FAIL {name}: {} of {} instances, max residual {:e}",
                    law.failures, law.checked, law.max_residual
                );
            }
            Ok(report.pass)
        }
        Command::Sweep { common, quantity, axis } => {
            let config = common.load()?;
            let from_config = config.sweep;
            let quantity = quantity.or(from_config.map(|s| s.quantity)).ok_or_else(|| {
                thermocode::Error::InvalidInput(
                    "sweep needs --quantity or a `sweep` entry in the config".into(),
                )
            })?;
            let axis = axis.or(from_config.map(|s| s.axis)).ok_or_else(|| {
                thermocode::Error::InvalidInput("sweep needs --axis or a `sweep` entry in the config".into())
            })?;
            let result = sweep(&config, quantity, axis, common.parallel)?;
            write_sweep(&result, common.format(&config), sink(common.out_path(&config).as_deref())?)?;
            if result.monotone == Some(false) {
                eprintln!("FAIL {quantity} is not increasing along {axis}");
            }
            Ok(result.monotone != Some(false))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
