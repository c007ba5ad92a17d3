// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-step estimation of the time point where a feature starts to vary.
//!
//! 1. simulate the quantile curve `q(u)` of `Hmax(u)`;
//! 2. preliminary threshold `q(1)` and estimate `u°` (mean of the indicator
//!    `sqrt(T) Dsup(u) <= tau` over the grid);
//! 3. refined threshold `q(max(u°, u_min))` and final estimate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{embed_lags, FeatureFamily, FeatureKind};
use crate::gpsim::{simulation_grid, GaussianDriver, QuantileCurve, DEFAULT_DRAWS, DEFAULT_MAX_GRID};
use crate::lrv::{diff_variance, hac_sigma, residual_lrv, Centering, KernelSpec, SmoothingKernel};
use crate::series::{build_prefix_sums, RescaledGrid, SeriesSample};
use crate::tvmeasure::{dsup_profile, scale_surface, SupMethod, TimeVariationSurface};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    /// Analyse the time-reversed series; the estimate marks the start of a
    /// terminal stability span `[u, 1]`.
    Reverse,
}

/// Estimator of the long-run error variance used by the scaled mean
/// statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaEstimator {
    /// HAC on Nadaraya-Watson residuals.
    #[default]
    Residual,
    /// First-difference estimator, for i.i.d. errors.
    Difference,
}

impl std::str::FromStr for SigmaEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(SigmaEstimator::Residual),
            "diff" | "difference" => Ok(SigmaEstimator::Difference),
            _ => Err(Error::UnknownIdentifier(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrvSettings {
    /// Smoothing bandwidth in rescaled time.
    pub h: f64,
    pub smoother: SmoothingKernel,
    pub kernel: KernelSpec,
    /// Centring of the moment sequences; `None` means Nadaraya-Watson with
    /// bandwidth `h`.
    pub centering: Option<Centering>,
    pub sigma: SigmaEstimator,
}

impl LrvSettings {
    pub fn centering(&self) -> Centering {
        self.centering.unwrap_or(Centering::Nw {
            h: self.h,
            kernel: self.smoother,
        })
    }
}

impl Default for LrvSettings {
    fn default() -> Self {
        Self {
            h: 0.2,
            smoother: SmoothingKernel::Epanechnikov,
            kernel: KernelSpec::bartlett(10.0),
            centering: None,
            sigma: SigmaEstimator::Residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GpSettings {
    pub n_draws: usize,
    pub seed: u64,
    /// Upper bound on the number of simulation grid points.
    pub max_grid: usize,
}

impl Default for GpSettings {
    fn default() -> Self {
        Self {
            n_draws: DEFAULT_DRAWS,
            seed: 0,
            max_grid: DEFAULT_MAX_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionConfig {
    pub alpha: f64,
    pub feature: FeatureKind,
    pub lrv: LrvSettings,
    pub gp: GpSettings,
    pub direction: Direction,
    /// Divide the mean statistic by the long-run standard deviation and use
    /// the pivotal limit.
    pub scaled: bool,
    /// Optional centring of the raw observations before moments are taken.
    pub precenter: Option<Centering>,
    pub method: SupMethod,
}

impl DetectionConfig {
    /// Defaults for `feature`: the mean is scaled and pivotal, every other
    /// feature uses an estimated covariance.
    pub fn for_feature(feature: FeatureKind) -> Self {
        Self {
            alpha: 0.1,
            feature,
            lrv: LrvSettings::default(),
            gp: GpSettings::default(),
            direction: Direction::Forward,
            scaled: feature == FeatureKind::Mean,
            precenter: None,
            method: SupMethod::Auto,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.scaled && self.feature != FeatureKind::Mean {
            return Err(Error::InvalidParameter(format!(
                "the scaled statistic needs the mean feature, got `{}`",
                self.feature
            )));
        }
        Ok(())
    }
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self::for_feature(FeatureKind::Mean)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionResult {
    /// Estimated change point in original rescaled time. For
    /// [`Direction::Reverse`] this is the start of the stability span.
    pub u_hat: f64,
    pub u_hat_prelim: f64,
    pub tau_prelim: f64,
    pub tau_refined: f64,
    pub direction: Direction,
    pub feature: FeatureKind,
    pub alpha: f64,
    /// Length of the analysed series.
    #[serde(rename = "T")]
    pub sample_len: usize,
    pub grid_size: usize,
    pub seed: u64,
    pub sigma_hat: Option<f64>,
    pub stability_span: Option<(f64, f64)>,
    /// Indicator `r(u_j)` in the analysed orientation and time scale.
    #[serde(skip)]
    pub r_profile: Vec<bool>,
    /// Surface as compared with the thresholds (scaled when applicable).
    #[serde(skip)]
    pub surface: TimeVariationSurface,
    #[serde(skip)]
    pub quantiles: Arc<QuantileCurve>,
}

/// `r(u_j) = 1(sqrt(T) Dsup(u_j) <= tau)`.
pub fn indicator_profile(surface: &TimeVariationSurface, tau: f64) -> Vec<bool> {
    let root_t = (surface.sample_len() as f64).sqrt();
    surface.dsup.iter().map(|&d| root_t * d <= tau).collect()
}

/// Mean of the indicator over the grid.
pub fn estimate_from_profile(r: &[bool]) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    r.iter().filter(|&&x| x).count() as f64 / r.len() as f64
}

/// Threshold `q(max(u_prelim, u_min))`.
pub fn refine_threshold(curve: &QuantileCurve, u_prelim: f64) -> f64 {
    curve.at(u_prelim.max(curve.u_min()))
}

type CurveKey = (usize, usize, u64);

/// A detector that caches pivotal quantile curves across calls.
#[derive(Debug)]
pub struct Detector {
    config: DetectionConfig,
    pivotal: Mutex<HashMap<CurveKey, Arc<QuantileCurve>>>,
}

impl Detector {
    pub fn new(config: DetectionConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            pivotal: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &DetectionConfig {
        &self.config
    }

    pub fn detect(&self, sample: &SeriesSample) -> Result<DetectionResult> {
        self.detect_seeded(sample, self.config.gp.seed)
    }

    /// Like [`Self::detect`], simulating estimated covariance drivers with
    /// `seed`. Pivotal curves do not depend on the data and always use the
    /// configured seed.
    pub fn detect_seeded(&self, sample: &SeriesSample, seed: u64) -> Result<DetectionResult> {
        let cfg = &self.config;
        let oriented = match cfg.direction {
            Direction::Forward => sample.clone(),
            Direction::Reverse => sample.reversed(),
        };
        let mut res = self.detect_forward(&oriented, seed)?;
        if cfg.direction == Direction::Reverse {
            res.u_hat = 1.0 - res.u_hat;
            res.u_hat_prelim = 1.0 - res.u_hat_prelim;
            res.stability_span = Some((res.u_hat, 1.0));
            res.direction = Direction::Reverse;
        }
        Ok(res)
    }

    fn detect_forward(&self, sample: &SeriesSample, seed: u64) -> Result<DetectionResult> {
        let cfg = &self.config;
        let original_len = sample.len();

        let centred;
        let sample = match cfg.precenter {
            Some(c) => {
                let cols = (0..sample.dim())
                    .map(|d| c.apply(&sample.column(d)))
                    .collect::<Result<Vec<_>>>()?;
                let rows = (0..sample.len())
                    .flat_map(|t| cols.iter().map(move |col| col[t]))
                    .collect();
                centred = SeriesSample::from_rows(rows, sample.dim())?;
                &centred
            }
            None => sample,
        };

        let (family, data, lag) = match cfg.feature {
            FeatureKind::Autocovariance { lag } => {
                let embedded = embed_lags(sample, lag)?;
                if embedded.len() < 2 {
                    return Err(Error::LagTooLarge {
                        p: lag,
                        t: original_len,
                    });
                }
                (FeatureFamily::new(cfg.feature, 1)?, embedded, lag)
            }
            kind => (FeatureFamily::new(kind, sample.dim())?, sample.clone(), 0),
        };
        let t = data.len();

        let prefix = build_prefix_sums(&data, &family)?;
        let grid = RescaledGrid::natural(t);
        let raw = dsup_profile(&prefix, &grid, cfg.method)?;

        let sim_grid = simulation_grid(t, cfg.gp.max_grid)?;
        let (surface, sigma_hat, curve) = if cfg.scaled {
            let sigma2 = match cfg.lrv.sigma {
                SigmaEstimator::Residual => {
                    residual_lrv(&data, cfg.lrv.h, cfg.lrv.smoother, cfg.lrv.kernel)?
                }
                SigmaEstimator::Difference => diff_variance(&data)?,
            };
            if !(sigma2.is_finite() && sigma2 > 0.0) {
                return Err(Error::NonPositiveVariance(sigma2));
            }
            let sigma = sigma2.sqrt();
            let curve = self.pivotal_curve(sim_grid)?;
            (scale_surface(&raw, sigma)?, Some(sigma), curve)
        } else {
            let lrv = hac_sigma(&data, &family, cfg.lrv.kernel, cfg.lrv.centering())?;
            let driver = GaussianDriver::estimated(Arc::new(lrv), sim_grid, cfg.gp.n_draws, seed)?;
            let curve = Arc::new(driver.quantile_curve(cfg.alpha)?);
            (raw, None, curve)
        };

        let tau_prelim = curve.at(1.0);
        let u_prelim = estimate_from_profile(&indicator_profile(&surface, tau_prelim));
        let tau_refined = refine_threshold(&curve, u_prelim);
        let r_profile = indicator_profile(&surface, tau_refined);
        let u_final = estimate_from_profile(&r_profile);

        // embedded row t' sits at original time (t' + p)/T
        let to_original = |u: f64| (u * t as f64 + lag as f64) / original_len as f64;

        Ok(DetectionResult {
            u_hat: to_original(u_final),
            u_hat_prelim: to_original(u_prelim),
            tau_prelim,
            tau_refined,
            direction: Direction::Forward,
            feature: cfg.feature,
            alpha: cfg.alpha,
            sample_len: original_len,
            grid_size: grid.len(),
            seed: curve.seed,
            sigma_hat,
            stability_span: None,
            r_profile,
            surface,
            quantiles: curve,
        })
    }

    fn pivotal_curve(&self, grid: RescaledGrid) -> Result<Arc<QuantileCurve>> {
        let gp = self.config.gp;
        let key = (grid.denominator(), grid.len(), gp.seed);
        if let Some(c) = self.pivotal.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let driver = GaussianDriver::pivotal(grid, gp.n_draws, gp.seed);
        let curve = Arc::new(driver.quantile_curve(self.config.alpha)?);
        self.pivotal.lock().unwrap().insert(key, curve.clone());
        Ok(curve)
    }
}

/// One-shot detection.
pub fn detect(sample: &SeriesSample, config: &DetectionConfig) -> Result<DetectionResult> {
    Detector::new(config.clone())?.detect(sample)
}
