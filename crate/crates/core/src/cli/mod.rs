//! Command implementations behind the `piperetime` binary, usable directly
//! from library code.

mod args;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delay_model::{annotate, fit, read_samples, DelayError, DelayModel, FitConfig};
use crate::ir::{parse_design, print_design, Design, ParseError};
use crate::lowering::{pipeline_optimize, PipelineError};
use crate::simulator::{
    check_equivalence, read_stimulus, simulate, write_trace, CsvError, EquivalenceResult, SimError,
    Stimulus, Trace,
};
use crate::timing::critical_path;
use crate::wgraph::{build_wgraph, BuildError};

pub use args::{main, run, Cli, Command};

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_VALIDATE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_EQUIVALENCE: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizeOptions {
    /// Use this target instead of searching for the tightest one.
    pub target_delay_ps: Option<f64>,
    pub delay_model_path: Option<PathBuf>,
    /// Relocate for capacity only, ignoring timing.
    pub disable_timing_constraints: bool,
    /// Seed for the optional post-optimization equivalence run.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub register_count: u64,
    pub capacity_bits: u64,
    pub predicted_critical_path_ps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub design_name: String,
    pub nodes: usize,
    pub edges: usize,
    pub before: Metrics,
    pub after: Metrics,
    pub timing_constraints: bool,
    pub target_delay_ps: Option<f64>,
    pub constraint_count: usize,
    /// Capacity change in bits over all relocation rounds.
    pub solver_objective: i64,
    pub relocation_rounds: usize,
    pub delays_emitted: usize,
    pub bubbles_elided: usize,
    /// Wall-clock time per phase; left out of serialized reports unless
    /// asked for, since it varies between runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_runtimes_ms: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn without_timings(mut self) -> Self {
        self.phase_runtimes_ms = None;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (b, a) = (&self.before, &self.after);
        let _ = writeln!(s, "design {}", self.design_name);
        let _ = writeln!(
            s,
            "  graph          {} nodes, {} edges",
            self.nodes, self.edges
        );
        let _ = writeln!(
            s,
            "  registers      {} -> {}",
            b.register_count, a.register_count
        );
        let _ = writeln!(
            s,
            "  capacity       {} -> {} bits ({:+})",
            b.capacity_bits, a.capacity_bits, self.solver_objective
        );
        let _ = writeln!(
            s,
            "  critical path  {} -> {} ps",
            b.predicted_critical_path_ps, a.predicted_critical_path_ps
        );
        match self.target_delay_ps {
            Some(t) if self.timing_constraints => {
                let _ = writeln!(
                    s,
                    "  target         {t} ps, {} timing constraints",
                    self.constraint_count
                );
            }
            _ if self.relocation_rounds == 0 => {
                let _ = writeln!(s, "  target         none");
            }
            _ => {
                let _ = writeln!(s, "  target         none (timing constraints disabled)");
            }
        }
        if let Some(times) = &self.phase_runtimes_ms {
            for (phase, ms) in times {
                let _ = writeln!(s, "  {phase:<14} {ms:.3} ms");
            }
        }
        s
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Pipeline(#[from] PipelineError),
    #[error("delay model: {0}")]
    Delay(#[from] DelayError),
    #[error("{0}")]
    Simulation(#[from] SimError),
    #[error("{0}")]
    Csv(#[from] CsvError),
    #[error("designs differ: output {name} (column {output}) at cycle {cycle}: {left} vs {right} (run {run}, seed {seed})")]
    NotEquivalent {
        run: usize,
        seed: u64,
        output: usize,
        name: String,
        cycle: usize,
        left: String,
        right: String,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Parse {
                source: ParseError::Syntax { .. },
                ..
            } => EXIT_PARSE,
            CliError::Parse {
                source: ParseError::Invalid(_),
                ..
            } => EXIT_VALIDATE,
            CliError::Pipeline(PipelineError::Build(BuildError::Invalid(_))) => EXIT_VALIDATE,
            CliError::Pipeline(PipelineError::Options(_)) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Pipeline(_) => EXIT_SOLVER,
            CliError::Delay(DelayError::Io(_)) => EXIT_IO,
            CliError::Delay(DelayError::UnknownKind { .. }) => EXIT_SOLVER,
            CliError::Delay(_) | CliError::Csv(_) => EXIT_PARSE,
            CliError::Simulation(SimError::Invalid(_)) => EXIT_VALIDATE,
            CliError::Simulation(_) => EXIT_USAGE,
            CliError::NotEquivalent { .. } => EXIT_EQUIVALENCE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn read_design(path: &Path) -> Result<Design, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_design(&text).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn load_model(path: Option<&Path>) -> Result<DelayModel, CliError> {
    match path {
        None => Ok(DelayModel::default()),
        Some(p) => DelayModel::load(p).map_err(|e| match e {
            DelayError::Io(source) => CliError::Io {
                path: p.to_owned(),
                source,
            },
            other => CliError::Delay(other),
        }),
    }
}

/// Optimizes `input`, writing the design to `output` and the JSON report to
/// `report_path` when given. Returns the optimized design and the report.
pub fn cmd_optimize(
    input: &Path,
    output: Option<&Path>,
    report_path: Option<&Path>,
    opts: &OptimizeOptions,
    with_timings: bool,
) -> Result<(Design, Report), CliError> {
    let d = read_design(input)?;
    let model = load_model(opts.delay_model_path.as_deref())?;
    let (out, report) = pipeline_optimize(&d, &model, opts)?;
    let report = if with_timings {
        report
    } else {
        report.without_timings()
    };
    if let Some(p) = output {
        write_file(p, &print_design(&out))?;
    }
    if let Some(p) = report_path {
        write_file(p, &report.to_json())?;
    }
    Ok((out, report))
}

/// Size, register and timing figures of a design, without changing it.
pub fn analyze(d: &Design, model: &DelayModel) -> Result<Report, CliError> {
    let g = build_wgraph(d).map_err(PipelineError::from)?;
    let g = annotate(&g, model)?;
    let (register_count, capacity_bits) = g.capacity();
    let cp = critical_path(&g).map_err(PipelineError::from)?;
    let m = Metrics {
        register_count,
        capacity_bits,
        predicted_critical_path_ps: cp.delay_ps,
    };
    Ok(Report {
        design_name: d.name.clone(),
        nodes: g.nodes.len(),
        edges: g.edges.len(),
        before: m.clone(),
        after: m,
        timing_constraints: false,
        target_delay_ps: None,
        constraint_count: 0,
        solver_objective: 0,
        relocation_rounds: 0,
        delays_emitted: 0,
        bubbles_elided: 0,
        phase_runtimes_ms: None,
    })
}

pub fn cmd_report(input: &Path, delay_model: Option<&Path>) -> Result<Report, CliError> {
    let d = read_design(input)?;
    analyze(&d, &load_model(delay_model)?)
}

pub fn cmd_simulate(
    input: &Path,
    stimulus: &Path,
    output: Option<&Path>,
) -> Result<Trace, CliError> {
    let d = read_design(input)?;
    let file = File::open(stimulus).map_err(io_err(stimulus))?;
    let s = read_stimulus(BufReader::new(file))?;
    let t = simulate(&d, &s)?;
    if let Some(p) = output {
        let file = File::create(p).map_err(io_err(p))?;
        write_trace(file, &t)?;
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub runs: usize,
    pub cycles: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            runs: 10,
            cycles: 1000,
            seed: 0,
        }
    }
}

/// Randomized equivalence of two designs with matching interfaces. Runs use
/// seeds `seed, seed + 1, …`; warm-up is the larger register count.
pub fn check_designs(a: &Design, b: &Design, opts: &CheckOptions) -> Result<usize, CliError> {
    let warmup = a.register_count().max(b.register_count()) as usize;
    for run in 0..opts.runs {
        let seed = opts.seed.wrapping_add(run as u64);
        let s = Stimulus::random(a, opts.cycles.max(warmup + 1), seed);
        if let EquivalenceResult::Mismatch {
            output,
            name,
            cycle,
            left,
            right,
        } = check_equivalence(a, b, &s, warmup)?
        {
            return Err(CliError::NotEquivalent {
                run,
                seed,
                output,
                name: name.to_string(),
                cycle,
                left: left.to_string(),
                right: right.to_string(),
            });
        }
    }
    Ok(warmup)
}

pub fn cmd_check(
    original: &Path,
    optimized: &Path,
    opts: &CheckOptions,
) -> Result<usize, CliError> {
    check_designs(&read_design(original)?, &read_design(optimized)?, opts)
}

pub fn cmd_fit_delays(
    samples: &Path,
    output: Option<&Path>,
    cfg: &FitConfig,
) -> Result<DelayModel, CliError> {
    let file = File::open(samples).map_err(io_err(samples))?;
    let data = read_samples(BufReader::new(file))?;
    let model = fit(&data, cfg)?;
    if let Some(p) = output {
        write_file(p, &(model.to_json() + "\n"))?;
    }
    Ok(model)
}
