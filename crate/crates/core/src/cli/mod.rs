//! The `bfcr` command-line front end.
//!
//! Exit codes: 0 when a command completed (an anomalous verdict is still a
//! completed run), 2 for usage, input or configuration errors.

mod config;
mod report;

pub use config::{RunConfig, CONFIG_ENV, KEYS};
pub use report::{EdgeReportJson, InternalReportJson};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::anomaly::{detect_edge_first, detect_edge_last, detect_internal, DetectionConfig};
use crate::bracing::{BraceShape, BracingSet};
use crate::error::{BfcrError, Result};
use crate::series::Series;
use crate::trend::Bfcr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bfcr",
    version,
    about = "Spectral trend lines and trend-based anomaly detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Precompute a bracing set and write it to a file.
    GenBracing {
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write `index,value,trend` rows for an input series.
    Trend {
        #[command(flatten)]
        io: InputOutput,
        #[command(flatten)]
        settings: Settings,
    },
    /// Internal anomaly detection; writes a JSON report.
    Detect {
        #[command(flatten)]
        io: InputOutput,
        #[command(flatten)]
        settings: Settings,
        /// Drop leading data from a different volatility regime first.
        #[arg(long)]
        truncate_volatility: bool,
    },
    /// Edge anomaly detection on the first or last sample; writes a JSON report.
    DetectEdge {
        #[command(flatten)]
        io: InputOutput,
        #[command(flatten)]
        settings: Settings,
        /// Check the first sample.
        #[arg(long, conflicts_with = "last")]
        first: bool,
        /// Check the last sample (default).
        #[arg(long)]
        last: bool,
        /// Exclude internal outliers from the edge population.
        #[arg(long, overrides_with = "no_screen_internal")]
        screen_internal: bool,
        /// Use the unscreened edge population.
        #[arg(long)]
        no_screen_internal: bool,
        /// Skip the check on low-noise edges.
        #[arg(long)]
        guards: bool,
        #[arg(long)]
        truncate_volatility: bool,
    },
    /// Long-form `segment,index,value` CSV for plotting.
    Plotdata {
        #[command(flatten)]
        io: InputOutput,
        #[command(flatten)]
        settings: Settings,
        #[arg(long)]
        truncate_volatility: bool,
    },
}

#[derive(Debug, Args)]
pub struct InputOutput {
    /// Input CSV (one column, or index,value).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Zero-based column to read.
    #[arg(long)]
    pub column: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Settings {
    /// Config file of `dotted.key = value` lines (defaults to $BFCR_CONFIG).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Precomputed bracing set; its parameters replace the fc.* settings.
    #[arg(long)]
    pub bracing: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set vol.trim_fraction=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub c_fc: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long)]
    pub e: Option<usize>,
    #[arg(long)]
    pub n_over: Option<usize>,
    /// Brace shape: flat or hann.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub cutoff_fraction: Option<f64>,
    #[arg(long)]
    pub power: Option<u32>,
    #[arg(long)]
    pub k_sigma: Option<f64>,
    #[arg(long)]
    pub min_points: Option<usize>,
}

impl Settings {
    /// Defaults, then config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let file = self
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        if let Some(path) = file {
            cfg.apply_file(&path)?;
        }
        for assignment in &self.overrides {
            cfg.set_assignment(assignment)?;
        }
        let fc = &mut cfg.trend.fc;
        if let Some(v) = self.d {
            fc.d = v;
        }
        if let Some(v) = self.c_fc {
            fc.c_fc = v;
        }
        if let Some(v) = self.z {
            fc.z = v;
        }
        if let Some(v) = self.e {
            fc.e = v;
        }
        if let Some(v) = self.n_over {
            fc.n_over = v;
        }
        if let Some(v) = &self.shape {
            cfg.trend.brace = v.parse()?;
        }
        if let Some(v) = self.cutoff_fraction {
            cfg.trend.filter.cutoff_fraction = v;
        }
        if let Some(v) = self.power {
            cfg.trend.filter.power = v;
        }
        if let Some(v) = self.k_sigma {
            cfg.detect.k_sigma = v;
        }
        if let Some(v) = self.min_points {
            cfg.detect.min_points = v;
        }
        if let Some(path) = &self.bracing {
            // parameters come from the file; validate them through the loader
            let set = BracingSet::load(path)?;
            cfg.trend.fc = *set.params();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model(&self, cfg: &RunConfig) -> Result<Bfcr> {
        match &self.bracing {
            Some(path) => Bfcr::with_bracing(cfg.trend, BracingSet::load(path)?),
            None => Bfcr::new(cfg.trend),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::GenBracing { output, settings } => {
            let cfg = settings.resolve()?;
            let shape = BraceShape::new(cfg.trend.brace, cfg.trend.fc.d)?;
            BracingSet::build(cfg.trend.fc, Some(shape))?.save(output)
        }
        Command::Trend { io, settings } => {
            let cfg = settings.resolve()?;
            let series = read_series(io)?;
            let model = settings.model(&cfg)?;
            write_output(io.output.as_deref(), &trend_csv(&series, &model)?)
        }
        Command::Detect {
            io,
            settings,
            truncate_volatility,
        } => {
            let cfg = settings.resolve()?;
            let series = read_series(io)?;
            let model = settings.model(&cfg)?;
            let detect = internal_config(&cfg, *truncate_volatility);
            let report = detect_internal(&series, &detect, &model)?;
            write_json(io.output.as_deref(), &InternalReportJson::from(&report))
        }
        Command::DetectEdge {
            io,
            settings,
            first,
            last: _,
            screen_internal,
            no_screen_internal,
            guards,
            truncate_volatility,
        } => {
            let cfg = settings.resolve()?;
            let series = read_series(io)?;
            let model = settings.model(&cfg)?;
            let mut detect = internal_config(&cfg, *truncate_volatility);
            if *screen_internal {
                detect.screen_internal = true;
            } else if *no_screen_internal {
                detect.screen_internal = false;
            }
            if *guards {
                detect.guards = Some(cfg.guards);
            }
            let (report, which) = if *first {
                (detect_edge_first(&series, &detect, &model)?, "first")
            } else {
                (detect_edge_last(&series, &detect, &model)?, "last")
            };
            write_json(io.output.as_deref(), &EdgeReportJson::new(&report, which))
        }
        Command::Plotdata {
            io,
            settings,
            truncate_volatility,
        } => {
            let cfg = settings.resolve()?;
            let series = read_series(io)?;
            let model = settings.model(&cfg)?;
            let detect = internal_config(&cfg, *truncate_volatility);
            write_output(io.output.as_deref(), &plot_csv(&series, &model, &detect)?)
        }
    }
}

fn internal_config(cfg: &RunConfig, truncate_volatility: bool) -> DetectionConfig {
    DetectionConfig {
        volatility: truncate_volatility.then_some(cfg.vol),
        ..cfg.detect
    }
}

fn read_series(io: &InputOutput) -> Result<Series> {
    let text = fs::read_to_string(&io.input)?;
    Series::parse_csv(&text, io.column)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| BfcrError::NumericalFailure(format!("cannot encode report: {e}")))?;
    text.push('\n');
    write_output(path, &text)
}

/// `index,value,trend` rows.
pub fn trend_csv(series: &Series, model: &Bfcr) -> Result<String> {
    let trend = model.trend(series)?;
    let mut out = String::from("index,value,trend\n");
    for (i, (x, t)) in series.values().iter().zip(trend.values()).enumerate() {
        let _ = writeln!(out, "{i},{x},{t}");
    }
    Ok(out)
}

/// `segment,index,value` rows. Brace and continuation indices continue the
/// data's index line (the left brace has negative indices). Flagged rows are
/// the internal-detection flags; they are omitted for series shorter than
/// the detection minimum.
pub fn plot_csv(series: &Series, model: &Bfcr, detect: &DetectionConfig) -> Result<String> {
    let trend = model.trend(series)?;
    let ext = model.bracing().extend(series)?;
    let n = series.len() as i64;
    let d = ext.left_brace().len() as i64;

    let mut out = String::from("segment,index,value\n");
    let mut rows = |segment: &str, start: i64, values: &[f64]| {
        for (k, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{segment},{},{v}", start + k as i64);
        }
    };
    rows("data", 0, series.values());
    rows("trend", 0, trend.values());
    rows("brace_left", -d, ext.left_brace());
    rows("brace_right", n, ext.right_brace());
    rows("continuation", n + d, ext.continuation());

    if series.len() >= detect.min_points {
        let report = detect_internal(series, detect, model)?;
        for f in &report.flagged {
            let _ = writeln!(out, "flagged,{},{}", f.index, series.values()[f.index]);
        }
    }
    Ok(out)
}
