use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use triflow::artifacts::{read_state, simulate, write_state};
use triflow::diagnostics::{energies, linearized_rate, CSV_HEADER};
use triflow::flow::{initial_state, rescale};
use triflow::{fmt_f64, FlowConfig, FlowError, StopReason};

/// Simulator for the geometric triharmonic heat flow of closed surfaces.
#[derive(Debug, Parser)]
#[command(name = "triflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a configuration and write diagnostics, snapshots and run.meta.
    Simulate {
        /// `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out.dir` from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the decay rates of the flow linearised at a sphere.
    Spectrum {
        /// Radius of the sphere.
        #[arg(long, default_value_t = 1.0)]
        rho_inf: f64,
        /// Largest degree listed.
        #[arg(long)]
        lmax: usize,
    },
    /// Print the diagnostics row of one state.
    Diagnose(DiagnoseArgs),
    /// Apply `p ↦ (p − x)/r`, `t ↦ t/r⁶` to a state file.
    Rescale {
        /// Coefficient `.csv` or mesh `.obj`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: f64,
        /// Centre as `x,y,z`.
        #[arg(long, value_parser = parse_point, default_value = "0,0,0", allow_hyphen_values = true)]
        x: [f64; 3],
        /// Output file; the extension must match the input kind.
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct DiagnoseArgs {
    /// Coefficient `.csv` or mesh `.obj` state.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Configuration whose initial shape is diagnosed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ball radius for the concentration column.
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    /// Quadrature oversampling for coefficient files.
    #[arg(long, default_value_t = 2.0)]
    oversampling: f64,
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got '{s}'"));
    }
    let mut p = [0.0_f64; 3];
    for (v, t) in p.iter_mut().zip(&parts) {
        *v = t.parse().map_err(|_| format!("'{t}' is not a number"))?;
        if !v.is_finite() {
            return Err(format!("'{t}' is not finite"));
        }
    }
    Ok(p)
}

fn load_config(path: &PathBuf) -> triflow::Result<FlowConfig> {
    let text = fs::read_to_string(path).map_err(|e| FlowError::Io {
        path: path.clone(),
        source: e,
    })?;
    FlowConfig::parse(&text, &path.display().to_string())
}

fn execute(command: Command, out: &mut impl Write) -> triflow::Result<ExitCode> {
    let io_err = |e: io::Error| FlowError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match command {
        Command::Simulate { config, out: dir } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = dir {
                cfg.out_dir = dir;
            }
            let (outcome, files) = simulate(&cfg)?;
            writeln!(out, "stop_reason = {}", outcome.stop_reason).map_err(io_err)?;
            writeln!(out, "steps = {}", outcome.steps).map_err(io_err)?;
            writeln!(out, "diagnostics = {}", files.diagnostics.display()).map_err(io_err)?;
            writeln!(out, "final_state = {}", files.final_state.display()).map_err(io_err)?;
            writeln!(out, "meta = {}", files.meta.display()).map_err(io_err)?;
            if let Some(e) = &outcome.error {
                eprintln!("simulation stopped: {e}");
            }
            Ok(if outcome.stop_reason == StopReason::Singular {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Spectrum { rho_inf, lmax } => {
            writeln!(out, "l,rate").map_err(io_err)?;
            for l in 0..=lmax {
                writeln!(out, "{l},{}", fmt_f64(linearized_rate(l, rho_inf)?)).map_err(io_err)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose(args) => {
            let state = match (&args.input, &args.config) {
                (Some(path), _) => read_state(path, args.oversampling)?,
                (None, Some(path)) => initial_state(&load_config(path)?)?,
                (None, None) => unreachable!("clap requires one source"),
            };
            let record = energies(&state, args.radius)?;
            writeln!(out, "{CSV_HEADER}").map_err(io_err)?;
            writeln!(out, "{}", record.to_csv_row()).map_err(io_err)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rescale { input, r, x, output } => {
            let same_kind = input.extension() == output.extension();
            if !same_kind {
                return Err(FlowError::Argument(format!(
                    "{} and {} must have the same extension",
                    input.display(),
                    output.display()
                )));
            }
            let state = read_state(&input, 2.0)?;
            write_state(&rescale(&state, r, x)?, &output)?;
            writeln!(out, "wrote {}", output.display()).map_err(io_err)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
