use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{
    cmd_check, cmd_fit_delays, cmd_optimize, cmd_report, cmd_simulate, CheckOptions, CliError,
    OptimizeOptions, EXIT_USAGE,
};
use crate::delay_model::{mse, FitConfig};
use crate::ir::print_design;
use crate::simulator::write_trace;

#[derive(Debug, Parser)]
#[command(
    name = "piperetime",
    version,
    about = "Timing-aware register relocation for pipelined designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relocate registers to cut register capacity without slowing the design.
    Optimize {
        input: PathBuf,
        /// Where to write the optimized design (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Force this target delay instead of searching.
        #[arg(long = "target-ps")]
        target_ps: Option<f64>,
        /// Minimize capacity only.
        #[arg(long = "no-timing-constraints")]
        no_timing_constraints: bool,
        #[arg(long = "delay-model")]
        delay_model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include per-phase wall-clock times in the report.
        #[arg(long)]
        timings: bool,
        /// Check the result against the input by random simulation.
        #[arg(long)]
        verify: bool,
    },
    /// Print size, register and timing figures of a design.
    Report {
        input: PathBuf,
        #[arg(long = "delay-model")]
        delay_model: Option<PathBuf>,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a design on a CSV stimulus and write the output trace.
    Simulate {
        input: PathBuf,
        stimulus: PathBuf,
        /// Trace file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two designs on random stimuli.
    Check {
        original: PathBuf,
        optimized: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 1000)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit a delay model to `kind,operands,width,delay_ps` samples.
    FitDelays {
        samples: PathBuf,
        /// Model file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long = "learning-rate", default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1.0)]
        subsample: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |source| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    match cmd {
        Command::Optimize {
            input,
            out: out_path,
            report,
            target_ps,
            no_timing_constraints,
            delay_model,
            seed,
            timings,
            verify,
        } => {
            let opts = OptimizeOptions {
                target_delay_ps: target_ps,
                delay_model_path: delay_model,
                disable_timing_constraints: no_timing_constraints,
                seed,
            };
            let (design, rep) = cmd_optimize(
                &input,
                out_path.as_deref(),
                report.as_deref(),
                &opts,
                timings,
            )?;
            if out_path.is_none() {
                out.write_all(print_design(&design).as_bytes())
                    .map_err(stdout_err)?;
            }
            let _ = err.write_all(rep.to_text().as_bytes());
            if verify {
                let original = super::read_design(&input)?;
                super::check_designs(
                    &original,
                    &design,
                    &CheckOptions {
                        seed,
                        ..CheckOptions::default()
                    },
                )?;
                let _ = writeln!(err, "  verified       equivalent on random stimuli");
            }
        }
        Command::Report {
            input,
            delay_model,
            json,
        } => {
            let rep = cmd_report(&input, delay_model.as_deref())?;
            let text = if json { rep.to_json() } else { rep.to_text() };
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        Command::Simulate {
            input,
            stimulus,
            out: out_path,
        } => {
            let trace = cmd_simulate(&input, &stimulus, out_path.as_deref())?;
            if out_path.is_none() {
                write_trace(&mut *out, &trace)?;
            }
        }
        Command::Check {
            original,
            optimized,
            runs,
            cycles,
            seed,
        } => {
            let warmup = cmd_check(&original, &optimized, &CheckOptions { runs, cycles, seed })?;
            let _ = writeln!(
                out,
                "equivalent: {runs} runs of {cycles} cycles, warm-up {warmup}"
            );
        }
        Command::FitDelays {
            samples,
            out: out_path,
            trees,
            depth,
            learning_rate,
            subsample,
            seed,
        } => {
            let cfg = FitConfig {
                trees,
                max_depth: depth,
                learning_rate,
                subsample,
                seed,
                ..FitConfig::default()
            };
            let model = cmd_fit_delays(&samples, out_path.as_deref(), &cfg)?;
            if out_path.is_none() {
                writeln!(out, "{}", model.to_json()).map_err(stdout_err)?;
            }
            let file = std::fs::File::open(&samples).map_err(|source| CliError::Io {
                path: samples.clone(),
                source,
            })?;
            let data = crate::delay_model::read_samples(std::io::BufReader::new(file))?;
            let _ = writeln!(
                err,
                "training mse {:.4} over {} samples",
                mse(&model, &data)?,
                data.len()
            );
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the binary. Log verbosity comes from `PIPERETIME_LOG`.
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PIPERETIME_LOG", "warn"))
        .init();
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::ExitCode::from(u8::try_from(code).unwrap_or(1))
}
