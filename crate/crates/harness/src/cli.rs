//! Command-line surface of the `galton` binary.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use galton_core::readout::{decode, DecodeFlag, DecodedEvent, LineConfig};
use galton_core::source::WavelengthModel;
use galton_core::stats::{fit_exponential, fit_poisson, fit_t2, BinHistogram, FitOptions};
use galton_core::walk::{propagate, Coupler, MeshTopology, Side};
use serde::Serialize;

use crate::config::{ConfigIssue, ExperimentConfig, ExperimentKind};
use crate::error::HarnessError;
use crate::experiments::{self, wavelength_sweep};
use crate::input;
use crate::output::{self, to_json, Table};

#[derive(Debug, Parser)]
#[command(name = "galton", version, about = "Photonic Galton board simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Port {
    Left,
    Right,
}

impl From<Port> for Side {
    fn from(p: Port) -> Side {
        match p {
            Port::Left => Side::Left,
            Port::Right => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Interference,
    Counting,
    Intervals,
    Persistence,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::Interference => ExperimentKind::Interference,
            Experiment::Counting => ExperimentKind::Counting,
            Experiment::Intervals => ExperimentKind::Intervals,
            Experiment::Persistence => ExperimentKind::Persistence,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Output distribution of the coupler mesh.
    SimulateWalk {
        #[arg(long, default_value_t = 8)]
        stages: usize,
        #[arg(long, conflicts_with = "wavelength_nm")]
        t_squared: Option<f64>,
        /// Defaults to 1550 nm when no t² is given.
        #[arg(long)]
        wavelength_nm: Option<f64>,
        #[arg(long, value_enum, default_value_t = Port::Left)]
        port: Port,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment end to end.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        /// JSON config; its `experiment` field must match.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json and the CSV streams.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Interference only: comma-separated wavelengths (nm) to sweep.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
        /// Stdout gets the report (json) or the histogram (csv).
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Fit t² to an output-bin histogram (`count` column or JSON array).
    FitT2 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        stages: usize,
        #[arg(long, value_enum, default_value_t = Port::Left)]
        port: Port,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Fit a Poisson law to per-window photon counts.
    FitPoisson {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Fit an exponential law to inter-arrival times (ns).
    FitExponential {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Decode a bus trace (trace.csv layout); exits 3 if any pulse pair
    /// maps outside the pixel range.
    DecodeTrace {
        #[arg(long)]
        input: PathBuf,
        /// Experiment config whose `line` section describes the bus.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a command produced: text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
    /// Message for stderr.
    pub note: Option<String>,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            code: 0,
            note: None,
        }
    }
}

pub fn execute(cli: Cli) -> Result<Outcome, HarnessError> {
    match cli.command {
        Command::SimulateWalk {
            stages,
            t_squared,
            wavelength_nm,
            port,
            format,
            out,
        } => simulate_walk(stages, t_squared, wavelength_nm, port.into(), format, out.as_deref()),
        Command::Run {
            experiment,
            config,
            seed,
            out,
            sweep,
            format,
        } => run(experiment.into(), config.as_deref(), seed, out, &sweep, format),
        Command::FitT2 {
            input,
            stages,
            port,
            resamples,
            seed,
            format,
        } => {
            let counts = input::read_counts(&input, &["count"])?;
            let fit = fit_t2(&BinHistogram::new(counts), stages, port.into(), &options(resamples, seed))?;
            Ok(Outcome::ok(fit_output(&fit, &fit.fit, format)))
        }
        Command::FitPoisson {
            input,
            resamples,
            seed,
            format,
        } => {
            let counts = input::read_counts(&input, &["count", "photons"])?;
            let fit = fit_poisson(&counts, &options(resamples, seed))?;
            Ok(Outcome::ok(fit_output(&fit, &fit.fit, format)))
        }
        Command::FitExponential {
            input,
            resamples,
            seed,
            format,
        } => {
            let intervals = input::read_values(&input, &["interval_ns"])?;
            let fit = fit_exponential(&intervals, &options(resamples, seed))?;
            Ok(Outcome::ok(fit_output(&fit, &fit.fit, format)))
        }
        Command::DecodeTrace {
            input,
            config,
            format,
            out,
        } => decode_trace(&input, config.as_deref(), format, out.as_deref()),
    }
}

fn options(resamples: usize, seed: u64) -> FitOptions {
    FitOptions {
        bootstrap_resamples: resamples,
        seed,
    }
}

fn fit_output<T: Serialize>(full: &T, fit: &galton_core::stats::FitResult, format: Format) -> String {
    match format {
        Format::Json => to_json(full),
        Format::Csv => {
            let mut t = Table::new(vec!["estimate", "ci_low", "ci_high", "residual", "n_samples", "seed"]);
            t.push(vec![
                fit.estimate.to_string(),
                fit.ci_low.to_string(),
                fit.ci_high.to_string(),
                fit.residual.to_string(),
                fit.n_samples.to_string(),
                fit.seed.to_string(),
            ]);
            t.to_csv_string()
        }
    }
}

#[derive(Serialize)]
struct WalkOutput {
    stages: usize,
    t_squared: f64,
    wavelength_nm: Option<f64>,
    extrapolated: Option<bool>,
    input_port: Side,
    probabilities: Vec<f64>,
}

fn simulate_walk(
    stages: usize,
    t_squared: Option<f64>,
    wavelength_nm: Option<f64>,
    port: Side,
    format: Format,
    out: Option<&Path>,
) -> Result<Outcome, HarnessError> {
    let (t2, wavelength_nm, extrapolated) = match t_squared {
        Some(t2) => (t2, None, None),
        None => {
            let lambda = wavelength_nm.unwrap_or(1550.0);
            let p = WavelengthModel::measured().t2_of_wavelength(lambda)?;
            (p.t_squared, Some(lambda), Some(p.extrapolated))
        }
    };
    let mesh = MeshTopology::new(stages)?;
    let dist = propagate(&mesh, &Coupler::from_t_squared(t2)?, port);
    let text = match format {
        Format::Json => to_json(&WalkOutput {
            stages,
            t_squared: t2,
            wavelength_nm,
            extrapolated,
            input_port: port,
            probabilities: dist.probabilities.clone(),
        }),
        Format::Csv => {
            let mut t = Table::new(vec!["bin", "probability", "amplitude_re", "amplitude_im"]);
            for (i, (p, a)) in dist.probabilities.iter().zip(&dist.amplitudes).enumerate() {
                t.push(vec![i.to_string(), p.to_string(), a.re.to_string(), a.im.to_string()]);
            }
            t.to_csv_string()
        }
    };
    if let Some(dir) = out {
        let name = if format == Format::Json { "walk.json" } else { "walk.csv" };
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join(name);
        std::fs::write(&path, &text).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(Outcome::ok(text))
}

/// Config for `run`: the file if given, else the experiment defaults; then
/// command-line overrides.
pub fn resolve_config(
    kind: ExperimentKind,
    path: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(kind),
    };
    if config.experiment != kind {
        return Err(HarnessError::Config(vec![ConfigIssue::new(
            "experiment",
            format!("config describes {}, command asked for {kind}", config.experiment),
        )]));
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if out.is_some() {
        config.output_dir = out;
    }
    Ok(config)
}

fn run(
    kind: ExperimentKind,
    path: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    sweep: &[f64],
    format: Format,
) -> Result<Outcome, HarnessError> {
    let config = resolve_config(kind, path, seed, out)?;
    if !sweep.is_empty() {
        if kind != ExperimentKind::Interference {
            return Err(HarnessError::Config(vec![ConfigIssue::new(
                "sweep",
                "only interference runs can sweep wavelength",
            )]));
        }
        config.validate()?;
        let report = wavelength_sweep(&config, sweep)?;
        let text = to_json(&report);
        if let Some(dir) = &config.output_dir {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            let p = dir.join("sweep.json");
            std::fs::write(&p, &text).map_err(|e| HarnessError::io(&p, e))?;
        }
        return Ok(Outcome::ok(text));
    }
    let run = experiments::run(&config)?;
    if let Some(dir) = &config.output_dir {
        output::write_run(&run, dir)?;
    }
    Ok(Outcome::ok(match format {
        Format::Json => output::report_json(&run.report),
        Format::Csv => output::histogram_table(&run).to_csv_string(),
    }))
}

#[derive(Serialize)]
struct DecodedRow {
    window_index: u64,
    #[serde(flatten)]
    event: DecodedEvent,
}

fn decode_trace(path: &Path, config: Option<&Path>, format: Format, out: Option<&Path>) -> Result<Outcome, HarnessError> {
    let line: LineConfig = match config {
        Some(p) => {
            let c = ExperimentConfig::load(p)?;
            c.validate()?;
            c.line.to_core()
        }
        None => LineConfig::default(),
    };
    let mut rows = Vec::new();
    for (index, events) in input::read_trace(path)? {
        for event in decode(&events, &line)? {
            rows.push(DecodedRow {
                window_index: index,
                event,
            });
        }
    }
    let out_of_range = rows.iter().filter(|r| r.event.flag == DecodeFlag::OutOfRange).count();
    let text = match format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut t = Table::new(output::DECODED_HEADER.to_vec());
            for r in &rows {
                t.push(output::decoded_row(r.window_index, &r.event));
            }
            t.to_csv_string()
        }
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let name = if format == Format::Json { "decoded.json" } else { "decoded.csv" };
        let p = dir.join(name);
        std::fs::write(&p, &text).map_err(|e| HarnessError::io(&p, e))?;
    }
    if out_of_range > 0 {
        return Ok(Outcome {
            stdout: text,
            code: 3,
            note: Some(format!("{out_of_range} pulses decode outside the pixel range")),
        });
    }
    Ok(Outcome::ok(text))
}
