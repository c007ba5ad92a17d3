// SPDX-License-Identifier: MIT OR Apache-2.0

//! Batch command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.
//!
//! `--h` is a bandwidth in rescaled time. Ten years of monthly data in a
//! series of T = 1968 months is `--h 0.061` (120/1968).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::detector::{DetectionConfig, Detector, Direction, SigmaEstimator};
use crate::error::{Error, Result};
use crate::features::{FeatureFamily, FeatureKind};
use crate::gpsim::{simulation_grid, GaussianDriver, QuantileCurve};
use crate::lrv::{hac_sigma, Centering, HacKernel};
use crate::montecarlo::{run_study, Design, ModelSpec};
use crate::report::{write_file, write_histogram, write_json, write_quantiles, write_surface};
use crate::series::{build_prefix_sums, load_series_file, CsvFormat, RescaledGrid, SeriesSample};
use crate::tvmeasure::{dsup_profile, SupMethod};

#[derive(Debug, Parser)]
#[command(name = "gradcp", version, about = "Gradual change-point estimation")]
struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the change point of a series; writes detection.json,
    /// surface.csv and quantiles.csv.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        det: DetectorArgs,
    },
    /// Run a Monte Carlo study; writes summary.json and histogram.csv.
    Simulate {
        #[arg(long)]
        model: Design,
        #[arg(long = "T", value_name = "N")]
        len: usize,
        /// Number of replicates.
        #[arg(long = "N", value_name = "N")]
        replicates: usize,
        /// Amplitude of an added period-12 seasonal.
        #[arg(long)]
        seasonal_amplitude: Option<f64>,
        #[command(flatten)]
        det: DetectorArgs,
    },
    /// Simulate the quantile curve for a configuration; writes quantiles.csv.
    /// The estimated-covariance path needs --input, the pivotal path only --T.
    Quantiles {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "T", value_name = "N")]
        len: Option<usize>,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        #[command(flatten)]
        det: DetectorArgs,
    },
    /// Write the unscaled time-variation surface to surface.csv.
    Surface {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        det: DetectorArgs,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV file, one row per time point.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CenteringArg {
    Nw,
    Global,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Brute,
    Hull,
}

#[derive(Debug, Args)]
struct DetectorArgs {
    /// mean | variance | acf:<p> | cov
    #[arg(long)]
    feature: Option<FeatureKind>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Detect on the reversed series and report a stability span [u, 1].
    #[arg(long)]
    reverse: bool,
    /// Scale the mean statistic by the long-run sd and use the pivotal limit.
    #[arg(long, conflicts_with = "estimated")]
    scaled: bool,
    /// Same as --scaled.
    #[arg(long, conflicts_with = "estimated")]
    pivotal: bool,
    /// Use the estimated covariance even for the mean.
    #[arg(long)]
    estimated: bool,
    /// Smoothing bandwidth in rescaled time.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    hac_bandwidth: Option<f64>,
    /// bartlett | flattop
    #[arg(long)]
    kernel: Option<HacKernel>,
    #[arg(long, value_enum)]
    centering: Option<CenteringArg>,
    /// Long-run sd estimator of the scaled statistic: residual | diff
    #[arg(long)]
    sigma: Option<SigmaEstimator>,
    /// Number of Gaussian-process draws.
    #[arg(long)]
    sims: Option<usize>,
    /// Master seed; the GRADCP_SEED environment variable takes precedence.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Maximum number of simulation grid points.
    #[arg(long)]
    grid_max: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl DetectorArgs {
    fn apply(&self, mut cfg: DetectionConfig) -> DetectionConfig {
        if let Some(f) = self.feature {
            if f != cfg.feature {
                cfg = DetectionConfig {
                    lrv: cfg.lrv,
                    gp: cfg.gp,
                    ..DetectionConfig::for_feature(f)
                };
            }
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if self.reverse {
            cfg.direction = Direction::Reverse;
        }
        if self.scaled || self.pivotal {
            cfg.scaled = true;
        }
        if self.estimated {
            cfg.scaled = false;
        }
        if let Some(h) = self.h {
            cfg.lrv.h = h;
            if let Some(Centering::Nw { h: ch, .. }) = cfg.lrv.centering.as_mut() {
                *ch = h;
            }
        }
        if let Some(b) = self.hac_bandwidth {
            cfg.lrv.kernel.bandwidth = b;
        }
        if let Some(k) = self.kernel {
            cfg.lrv.kernel.kind = k;
        }
        if let Some(c) = self.centering {
            cfg.lrv.centering = Some(match c {
                CenteringArg::Nw => Centering::Nw {
                    h: cfg.lrv.h,
                    kernel: cfg.lrv.smoother,
                },
                CenteringArg::Global => Centering::Global,
                CenteringArg::None => Centering::None,
            });
        }
        if let Some(s) = self.sigma {
            cfg.lrv.sigma = s;
        }
        if let Some(n) = self.sims {
            cfg.gp.n_draws = n;
        }
        if let Some(s) = self.seed {
            cfg.gp.seed = s;
        }
        if let Some(m) = self.method {
            cfg.method = match m {
                MethodArg::Auto => SupMethod::Auto,
                MethodArg::Brute => SupMethod::Brute,
                MethodArg::Hull => SupMethod::Hull,
            };
        }
        if let Some(g) = self.grid_max {
            cfg.gp.max_grid = g;
        }
        cfg
    }
}

#[derive(Serialize)]
struct Echo<'a> {
    input: Option<&'a Path>,
    config: &'a DetectionConfig,
}

#[derive(Serialize)]
struct DetectionReport<'a, R: Serialize> {
    #[serde(flatten)]
    result: &'a R,
    input: Option<&'a Path>,
    config: &'a DetectionConfig,
}

fn load(path: &Path, delimiter: char) -> Result<SeriesSample> {
    if !delimiter.is_ascii() {
        return Err(Error::InvalidParameter(format!(
            "delimiter must be a single ASCII character, got {delimiter:?}"
        )));
    }
    load_series_file(
        path,
        CsvFormat {
            delimiter: delimiter as u8,
            ..CsvFormat::default()
        },
    )
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Detect { input, det } => {
            let cfg = det.apply(DetectionConfig::for_feature(
                det.feature.unwrap_or(FeatureKind::Mean),
            ));
            let sample = load(&input.input, input.delimiter)?;
            let res = Detector::new(cfg.clone())?.detect(&sample)?;
            log::info!("u_hat = {}", res.u_hat);
            ensure_dir(&det.out)?;
            let echo = Echo {
                input: Some(&input.input),
                config: &cfg,
            };
            write_file(&det.out.join("detection.json"), |w| {
                write_json(
                    w,
                    &DetectionReport {
                        result: &res,
                        input: Some(&input.input),
                        config: &cfg,
                    },
                )
            })?;
            write_file(&det.out.join("surface.csv"), |w| {
                write_surface(w, &res.surface, &echo)
            })?;
            write_file(&det.out.join("quantiles.csv"), |w| {
                write_quantiles(w, &res.quantiles, &echo)
            })?;
        }
        Command::Simulate {
            model,
            len,
            replicates,
            seasonal_amplitude,
            det,
        } => {
            let cfg = det.apply(model.default_config());
            let spec = ModelSpec {
                seasonal_amplitude,
                ..ModelSpec::new(model, len, cfg.gp.seed)
            };
            let summary = run_study(&spec, replicates, &cfg, cfg.gp.seed)?;
            log::info!(
                "median {} iqr {} failures {}",
                summary.median,
                summary.iqr,
                summary.failures
            );
            ensure_dir(&det.out)?;
            write_file(&det.out.join("summary.json"), |w| write_json(w, &summary))?;
            write_file(&det.out.join("histogram.csv"), |w| {
                write_histogram(w, &summary.histogram, &(&spec, &cfg))
            })?;
        }
        Command::Quantiles {
            input,
            len,
            delimiter,
            det,
        } => {
            let cfg = det.apply(DetectionConfig::for_feature(
                det.feature.unwrap_or(FeatureKind::Mean),
            ));
            let curve = quantiles_for(&cfg, input.as_deref(), len, delimiter)?;
            ensure_dir(&det.out)?;
            write_file(&det.out.join("quantiles.csv"), |w| {
                write_quantiles(
                    w,
                    &curve,
                    &Echo {
                        input: input.as_deref(),
                        config: &cfg,
                    },
                )
            })?;
        }
        Command::Surface { input, det } => {
            let cfg = det.apply(DetectionConfig::for_feature(
                det.feature.unwrap_or(FeatureKind::Mean),
            ));
            let sample = load(&input.input, input.delimiter)?;
            let sample = match cfg.direction {
                Direction::Forward => sample,
                Direction::Reverse => sample.reversed(),
            };
            let (family, data) = family_and_data(&cfg, &sample)?;
            let prefix = build_prefix_sums(&data, &family)?;
            let surface = dsup_profile(&prefix, &RescaledGrid::natural(data.len()), cfg.method)?;
            ensure_dir(&det.out)?;
            write_file(&det.out.join("surface.csv"), |w| {
                write_surface(
                    w,
                    &surface,
                    &Echo {
                        input: Some(&input.input),
                        config: &cfg,
                    },
                )
            })?;
        }
    }
    Ok(())
}

fn family_and_data(cfg: &DetectionConfig, sample: &SeriesSample) -> Result<(FeatureFamily, SeriesSample)> {
    Ok(match cfg.feature {
        FeatureKind::Autocovariance { lag } => (
            FeatureFamily::new(cfg.feature, 1)?,
            crate::features::embed_lags(sample, lag)?,
        ),
        kind => (FeatureFamily::new(kind, sample.dim())?, sample.clone()),
    })
}

fn quantiles_for(
    cfg: &DetectionConfig,
    input: Option<&Path>,
    len: Option<usize>,
    delimiter: char,
) -> Result<QuantileCurve> {
    if cfg.scaled {
        let t = match (len, input) {
            (Some(t), _) => t,
            (None, Some(p)) => load(p, delimiter)?.len(),
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "the pivotal curve needs --T or --input".into(),
                ))
            }
        };
        let grid = simulation_grid(t, cfg.gp.max_grid)?;
        return GaussianDriver::pivotal(grid, cfg.gp.n_draws, cfg.gp.seed).quantile_curve(cfg.alpha);
    }
    let path = input.ok_or_else(|| {
        Error::InvalidParameter("the estimated-covariance curve needs --input".into())
    })?;
    let sample = load(path, delimiter)?;
    let (family, data) = family_and_data(cfg, &sample)?;
    let lrv = hac_sigma(&data, &family, cfg.lrv.kernel, cfg.lrv.centering())?;
    let grid = simulation_grid(data.len(), cfg.gp.max_grid)?;
    GaussianDriver::estimated(std::sync::Arc::new(lrv), grid, cfg.gp.n_draws, cfg.gp.seed)?
        .quantile_curve(cfg.alpha)
}

impl Command {
    fn detector_args(&mut self) -> &mut DetectorArgs {
        match self {
            Command::Detect { det, .. }
            | Command::Simulate { det, .. }
            | Command::Quantiles { det, .. }
            | Command::Surface { det, .. } => det,
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::UnknownIdentifier(_) => 1,
        _ => 2,
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(raw) = std::env::var_os("GRADCP_SEED") {
        match raw.to_str().and_then(|s| s.trim().parse::<u64>().ok()) {
            Some(seed) => cli.command.detector_args().seed = Some(seed),
            None => {
                eprintln!("error: GRADCP_SEED must be an unsigned 64-bit integer, got {raw:?}");
                return 1;
            }
        }
    }
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
