// SPDX-License-Identifier: MIT OR Apache-2.0

//! Estimation of the point where a locally stationary series leaves a
//! stable regime.
//!
//! The building blocks:
//!
//! - [`series`]: samples, CSV loading, rescaled grids and prefix sums;
//! - [`features`]: the moment functions whose time-variation is tracked;
//! - [`tvmeasure`]: the CUSUM contrast surface `Dsup`/`Dmax`;
//! - [`lrv`]: HAC long-run (co)variances and kernel smoothing;
//! - [`gpsim`]: Gaussian-process simulation of the limit quantiles;
//! - [`detector`]: the two-step threshold estimate;
//! - [`montecarlo`]: simulation designs and replication studies;
//! - [`report`]: CSV and JSON output.
//!
//! ```
//! use gradcp::{detect, DetectionConfig, FeatureKind, SeriesSample};
//!
//! let x: Vec<f64> = (0..400)
//!     .map(|t| if t < 200 { 0.0 } else { 1.0 } + 0.2 * ((t * 7919) % 13) as f64 / 13.0)
//!     .collect();
//! let sample = SeriesSample::univariate(x).unwrap();
//! let mut cfg = DetectionConfig::for_feature(FeatureKind::Mean);
//! cfg.gp.n_draws = 200;
//! let res = detect(&sample, &cfg).unwrap();
//! assert!(res.u_hat > 0.4 && res.u_hat < 0.7);
//! ```

pub mod cli;
pub mod detector;
pub mod error;
pub mod features;
pub mod gpsim;
pub mod lrv;
pub mod montecarlo;
pub mod report;
pub mod series;
pub mod tvmeasure;

pub use detector::{
    detect, DetectionConfig, DetectionResult, Detector, Direction, GpSettings, LrvSettings,
    SigmaEstimator,
};
pub use error::{Error, Result};
pub use features::{FeatureFamily, FeatureKind, MomentEval, MomentFn};
pub use gpsim::{GaussianDriver, QuantileCurve};
pub use lrv::{Centering, HacKernel, KernelSpec, LongRunCovariance, SmoothingKernel};
pub use montecarlo::{run_study, Design, ModelSpec, StudySummary};
pub use series::{load_series, load_series_file, CsvFormat, RescaledGrid, SeriesSample};
pub use tvmeasure::{dsup_profile, SupMethod, TimeVariationSurface};
