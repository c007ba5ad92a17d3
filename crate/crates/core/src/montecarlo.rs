// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation designs and a reproducible replication harness.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::detector::{DetectionConfig, Detector, SigmaEstimator};
use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::lrv::{Centering, KernelSpec};
use crate::series::SeriesSample;

pub const AR_COEFFICIENT: f64 = 0.25;
pub const INNOVATION_SD: f64 = 0.5;
/// Error sd of the i.i.d. broken-line designs.
pub const IID_ERROR_SD: f64 = 0.2;
pub const SEASONAL_PERIOD: usize = 12;
pub const DEFAULT_BINS: usize = 40;

/// Mixing matrix with `A A' = [[1, 0.5], [0.5, 1]]`.
pub const MIXING: [[f64; 2]; 2] = [
    [0.866_025_403_784_438_6, -0.5],
    [0.866_025_403_784_438_6, 0.5],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Constant zero mean plus AR(1) errors.
    Mu0,
    Mu1,
    Mu2,
    Mu3,
    Mu4,
    Mu5,
    Sigma1,
    Sigma2,
    /// Bivariate `sigma_1(u) A eps`.
    BiSigma1,
    /// Bivariate `sigma_2(u) A eps`.
    BiSigma2,
    /// Constant zero mean, AR(1) errors and a period-12 seasonal.
    Seasonal,
}

impl Design {
    pub const ALL: [Design; 11] = [
        Design::Mu0,
        Design::Mu1,
        Design::Mu2,
        Design::Mu3,
        Design::Mu4,
        Design::Mu5,
        Design::Sigma1,
        Design::Sigma2,
        Design::BiSigma1,
        Design::BiSigma2,
        Design::Seasonal,
    ];

    /// Point where the tracked feature starts to vary; 1 when it never does.
    pub fn true_u0(self) -> f64 {
        match self {
            Design::Mu3 => 0.0,
            Design::Mu0 | Design::Seasonal => 1.0,
            _ => 0.5,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Design::BiSigma1 | Design::BiSigma2 => 2,
            _ => 1,
        }
    }

    /// Mean function of the location designs.
    pub fn mean_fn(self, u: f64) -> f64 {
        match self {
            Design::Mu1 => f64::from(u > 0.5),
            // linear ramp from 0 at 0.5 to 1 at 0.6, then flat
            Design::Mu2 | Design::Mu5 => (10.0 * (u - 0.5)).clamp(0.0, 1.0),
            Design::Mu3 if u < 0.2 => 10.0 * u,
            Design::Mu3 => 2.0 - 2.5 * (u - 0.2),
            Design::Mu4 => 2.0 * (u - 0.5).max(0.0),
            _ => 0.0,
        }
    }

    /// Volatility function of the scale designs.
    pub fn vol_fn(self, u: f64) -> f64 {
        match self {
            Design::Sigma1 | Design::BiSigma1 => {
                if u < 0.5 {
                    1.0
                } else {
                    2.0
                }
            }
            Design::Sigma2 | Design::BiSigma2 => 1.0 + (10.0 * (u - 0.5)).clamp(0.0, 1.0),
            _ => 1.0,
        }
    }

    /// Detection settings used for this design in the reference study.
    pub fn default_config(self) -> DetectionConfig {
        match self {
            Design::Mu0 | Design::Mu1 | Design::Mu2 | Design::Mu3 | Design::Seasonal => {
                DetectionConfig::for_feature(FeatureKind::Mean)
            }
            Design::Mu4 | Design::Mu5 => {
                let mut c = DetectionConfig::for_feature(FeatureKind::Mean);
                c.lrv.sigma = SigmaEstimator::Difference;
                c
            }
            Design::Sigma1 | Design::Sigma2 => moment_config(FeatureKind::Variance),
            Design::BiSigma1 | Design::BiSigma2 => moment_config(FeatureKind::CrossCovariance),
        }
    }
}

fn moment_config(kind: FeatureKind) -> DetectionConfig {
    let mut c = DetectionConfig::for_feature(kind);
    c.lrv.kernel = KernelSpec::bartlett(0.0);
    c.lrv.centering = Some(Centering::nw(0.2));
    c
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Mu0 => "mu0",
            Design::Mu1 => "mu1",
            Design::Mu2 => "mu2",
            Design::Mu3 => "mu3",
            Design::Mu4 => "mu4",
            Design::Mu5 => "mu5",
            Design::Sigma1 => "sigma1",
            Design::Sigma2 => "sigma2",
            Design::BiSigma1 => "Sigma1",
            Design::BiSigma2 => "Sigma2",
            Design::Seasonal => "seasonal",
        })
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.to_string() == s)
            .ok_or_else(|| Error::UnknownIdentifier(s.to_owned()))
    }
}

impl Serialize for Design {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A design, a sample length and a seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpec {
    pub design: Design,
    pub len: usize,
    pub seed: u64,
    /// Amplitude of a centred period-12 sinusoid added to location designs.
    /// [`Design::Seasonal`] uses 1 when unset.
    pub seasonal_amplitude: Option<f64>,
}

impl ModelSpec {
    pub fn new(design: Design, len: usize, seed: u64) -> Self {
        Self {
            design,
            len,
            seed,
            seasonal_amplitude: None,
        }
    }
}

/// Zero-sum seasonal pattern `a sin(2 pi t / 12)`, `t` 1-based.
pub fn seasonal_component(t: usize, amplitude: f64) -> f64 {
    amplitude * (2.0 * PI * (t % SEASONAL_PERIOD) as f64 / SEASONAL_PERIOD as f64).sin()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws one sample of `spec`.
pub fn generate(spec: &ModelSpec) -> Result<SeriesSample> {
    let n = spec.len;
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tf = n as f64;
    let design = spec.design;
    let values = match design {
        Design::Mu0 | Design::Mu1 | Design::Mu2 | Design::Mu3 | Design::Seasonal => {
            let amplitude = match (design, spec.seasonal_amplitude) {
                (_, Some(a)) => a,
                (Design::Seasonal, None) => 1.0,
                _ => 0.0,
            };
            let stationary_sd = INNOVATION_SD / (1.0 - AR_COEFFICIENT * AR_COEFFICIENT).sqrt();
            let mut eps = stationary_sd * normal(&mut rng);
            (1..=n)
                .map(|t| {
                    eps = AR_COEFFICIENT * eps + INNOVATION_SD * normal(&mut rng);
                    design.mean_fn(t as f64 / tf) + eps + seasonal_component(t, amplitude)
                })
                .collect()
        }
        Design::Mu4 | Design::Mu5 => {
            let amplitude = spec.seasonal_amplitude.unwrap_or(0.0);
            (1..=n)
                .map(|t| {
                    design.mean_fn(t as f64 / tf)
                        + IID_ERROR_SD * normal(&mut rng)
                        + seasonal_component(t, amplitude)
                })
                .collect()
        }
        Design::Sigma1 | Design::Sigma2 => (1..=n)
            .map(|t| design.vol_fn(t as f64 / tf) * normal(&mut rng))
            .collect(),
        Design::BiSigma1 | Design::BiSigma2 => {
            let mut v = Vec::with_capacity(2 * n);
            for t in 1..=n {
                let s = design.vol_fn(t as f64 / tf);
                let (e1, e2) = (normal(&mut rng), normal(&mut rng));
                v.push(s * (MIXING[0][0] * e1 + MIXING[0][1] * e2));
                v.push(s * (MIXING[1][0] * e1 + MIXING[1][1] * e2));
            }
            v
        }
    };
    SeriesSample::from_rows(values, design.dim())
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    mix(master.wrapping_add(mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins on `[0, 1]`; the last bin is closed on the right.
    pub fn unit_interval(values: &[f64], bins: usize) -> Self {
        let mut counts = vec![0; bins];
        for &v in values {
            let b = ((v * bins as f64).floor().max(0.0) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self {
            edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            counts,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (e[0], e[1], c))
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Serialize)]
pub struct StudySummary {
    pub model: ModelSpec,
    pub true_u0: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub failures: usize,
    pub estimates: Vec<f64>,
    pub prelim_estimates: Vec<f64>,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    pub mean: f64,
    /// Share of final estimates below the true change point.
    pub underestimation_fraction: f64,
    /// Share of preliminary estimates below the true change point.
    pub prelim_underestimation_fraction: f64,
    pub histogram: Histogram,
    pub config: DetectionConfig,
}

/// Runs `replicates` independent generate-and-detect rounds. `spec.seed` is
/// ignored; replicate `i` uses [`replicate_seed`]`(master_seed, i)` for both
/// the data and any estimated-covariance simulation.
pub fn run_study(
    spec: &ModelSpec,
    replicates: usize,
    config: &DetectionConfig,
    master_seed: u64,
) -> Result<StudySummary> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let detector = Detector::new(config.clone())?;
    let outcomes: Vec<Result<(f64, f64)>> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let seed = replicate_seed(master_seed, i);
            let sample = generate(&ModelSpec { seed, ..*spec })?;
            let r = detector.detect_seeded(&sample, seed)?;
            Ok((r.u_hat, r.u_hat_prelim))
        })
        .collect();

    let mut estimates = Vec::with_capacity(replicates);
    let mut prelim_estimates = Vec::with_capacity(replicates);
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok((u, p)) => {
                estimates.push(u);
                prelim_estimates.push(p);
            }
            Err(e) => {
                log::warn!("replicate failed: {e}");
                failures += 1;
            }
        }
    }

    let true_u0 = spec.design.true_u0();
    let below = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().filter(|&&u| u < true_u0).count() as f64 / xs.len() as f64
        }
    };
    let mut sorted = estimates.clone();
    sorted.sort_by(f64::total_cmp);
    let (q25, median, q75) = (
        sorted_quantile(&sorted, 0.25),
        sorted_quantile(&sorted, 0.5),
        sorted_quantile(&sorted, 0.75),
    );
    let mean = if sorted.is_empty() {
        f64::NAN
    } else {
        sorted.iter().sum::<f64>() / sorted.len() as f64
    };

    Ok(StudySummary {
        model: *spec,
        true_u0,
        replicates,
        master_seed,
        failures,
        underestimation_fraction: below(&estimates),
        prelim_underestimation_fraction: below(&prelim_estimates),
        histogram: Histogram::unit_interval(&estimates, DEFAULT_BINS),
        estimates,
        prelim_estimates,
        median,
        q25,
        q75,
        iqr: q75 - q25,
        mean,
        config: config.clone(),
    })
}
