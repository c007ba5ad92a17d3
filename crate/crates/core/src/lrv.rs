// SPDX-License-Identifier: MIT OR Apache-2.0

//! Long-run (co)variance estimation.
//!
//! HAC estimates are kernel-weighted sums of sample autocovariances of the
//! centred moment sequences `Z_t(f) = f(X_t) - E^[f(X_t)]`, accumulated up to
//! each `u = n/T`. Centring is done with a Nadaraya-Watson smoother, the
//! global mean, or not at all.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureFamily;
use crate::series::{RescaledGrid, SeriesSample};

/// Lag window for HAC estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HacKernel {
    /// `max(0, 1 - |x|)`
    Bartlett,
    /// 1 on `|x| <= 1/2`, linear down to 0 at `|x| = 1`.
    FlatTop,
}

impl HacKernel {
    pub fn weight(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            HacKernel::Bartlett => (1.0 - a).max(0.0),
            HacKernel::FlatTop if a <= 0.5 => 1.0,
            HacKernel::FlatTop if a < 1.0 => 2.0 * (1.0 - a),
            HacKernel::FlatTop => 0.0,
        }
    }
}

impl std::str::FromStr for HacKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bartlett" => Ok(HacKernel::Bartlett),
            "flattop" => Ok(HacKernel::FlatTop),
            _ => Err(Error::UnknownIdentifier(s.to_owned())),
        }
    }
}

/// HAC lag window and bandwidth `b`. `b = 0` keeps lag 0 only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub kind: HacKernel,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn bartlett(bandwidth: f64) -> Self {
        Self {
            kind: HacKernel::Bartlett,
            bandwidth,
        }
    }

    /// `K(l/b)`.
    pub fn lag_weight(&self, lag: usize) -> f64 {
        if self.bandwidth == 0.0 {
            if lag == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.kind.weight(lag as f64 / self.bandwidth)
        }
    }

    /// Largest lag with non-zero weight.
    pub fn max_lag(&self) -> usize {
        if self.bandwidth == 0.0 {
            0
        } else {
            // both kernels vanish from |x| = 1 on
            (self.bandwidth.ceil() as usize).saturating_sub(1)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "HAC bandwidth must be finite and >= 0, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    fn weights(&self, t: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let lag = self.max_lag();
        if lag >= t {
            return Err(Error::BandwidthTooLarge { lag, t });
        }
        Ok((0..=lag).map(|l| self.lag_weight(l)).collect())
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::bartlett(10.0)
    }
}

/// Density used by the Nadaraya-Watson smoother.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKernel {
    #[default]
    Epanechnikov,
    Uniform,
    Triangular,
    Gaussian,
}

impl SmoothingKernel {
    pub fn density(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            SmoothingKernel::Epanechnikov if a <= 1.0 => 0.75 * (1.0 - x * x),
            SmoothingKernel::Uniform if a <= 1.0 => 0.5,
            SmoothingKernel::Triangular if a <= 1.0 => 1.0 - a,
            SmoothingKernel::Gaussian => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            _ => 0.0,
        }
    }

    fn support(self) -> Option<f64> {
        match self {
            SmoothingKernel::Gaussian => None,
            _ => Some(1.0),
        }
    }
}

/// Self-normalized Nadaraya-Watson fit of `xs` against rescaled time `t/T`,
/// evaluated at every `t/T`.
pub fn nw_mean(xs: &[f64], h: f64, kernel: SmoothingKernel) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing bandwidth must be positive, got {h}"
        )));
    }
    let n = xs.len();
    if n == 0 {
        return Err(Error::TooShort(0));
    }
    let span = n as f64 * h;
    // reach in index units; anything further has zero weight
    let reach = match kernel.support() {
        Some(r) => ((r * span).floor() as usize).min(n - 1),
        None => n - 1,
    };
    // fitting deviations from a reference reproduces constants exactly
    let reference = xs[0];
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let lo = t.saturating_sub(reach);
        let hi = (t + reach).min(n - 1);
        let (mut num, mut den) = (0.0, 0.0);
        for (s, &x) in xs.iter().enumerate().take(hi + 1).skip(lo) {
            let w = kernel.density((t as f64 - s as f64) / span);
            num += w * (x - reference);
            den += w;
        }
        if den <= 0.0 {
            return Err(Error::ZeroWeights(t + 1));
        }
        out.push(reference + num / den);
    }
    Ok(out)
}

/// How the moment sequences are centred before autocovariances are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum Centering {
    Nw { h: f64, kernel: SmoothingKernel },
    Global,
    None,
}

impl Centering {
    pub fn nw(h: f64) -> Self {
        Centering::Nw {
            h,
            kernel: SmoothingKernel::default(),
        }
    }

    pub fn apply(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Centering::Nw { h, kernel } => {
                let m = nw_mean(xs, h, kernel)?;
                Ok(xs.iter().zip(m).map(|(x, m)| x - m).collect())
            }
            Centering::Global => {
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                Ok(xs.iter().map(|x| x - mean).collect())
            }
            Centering::None => Ok(xs.to_vec()),
        }
    }
}

/// Cumulative long-run covariance matrices `Sigma^(n/T)` for `n = 0..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRunCovariance {
    len: usize,
    labels: Vec<String>,
    kernel: KernelSpec,
    centering: Centering,
    /// `(T + 1) * k * k`, row-major per index.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl LongRunCovariance {
    pub fn sample_len(&self) -> usize {
        self.len
    }

    pub fn n_features(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn grid(&self) -> RescaledGrid {
        RescaledGrid::natural(self.len)
    }

    /// `sigma^2(n/T, f_a, f_b)`.
    pub fn entry(&self, n: usize, a: usize, b: usize) -> f64 {
        let k = self.n_features();
        self.cumulative[n * k * k + a * k + b]
    }

    pub fn matrix_at(&self, n: usize) -> DMatrix<f64> {
        let k = self.n_features();
        DMatrix::from_row_slice(k, k, &self.cumulative[n * k * k..(n + 1) * k * k])
    }

    /// A covariance that grows linearly, `Sigma^(n/T) = (n/T) * base`.
    pub fn homogeneous(len: usize, labels: Vec<String>, base: &DMatrix<f64>) -> Result<Self> {
        let k = labels.len();
        if base.nrows() != k || base.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: base.nrows(),
            });
        }
        let mut cumulative = Vec::with_capacity((len + 1) * k * k);
        for n in 0..=len {
            let u = n as f64 / len as f64;
            for a in 0..k {
                for b in 0..k {
                    cumulative.push(u * base[(a, b)]);
                }
            }
        }
        Ok(Self {
            len,
            labels,
            kernel: KernelSpec::bartlett(0.0),
            centering: Centering::None,
            cumulative,
        })
    }

    /// Wraps explicit cumulative matrices (row-major `k x k` per index).
    pub fn from_cumulative(labels: Vec<String>, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = labels.len();
        if matrices.len() < 2 {
            return Err(Error::TooShort(matrices.len().saturating_sub(1)));
        }
        let mut cumulative = Vec::with_capacity(matrices.len() * k * k);
        for m in &matrices {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: m.nrows(),
                });
            }
            for a in 0..k {
                for b in 0..k {
                    cumulative.push(0.5 * (m[(a, b)] + m[(b, a)]));
                }
            }
        }
        Ok(Self {
            len: matrices.len() - 1,
            labels,
            kernel: KernelSpec::bartlett(0.0),
            centering: Centering::None,
            cumulative,
        })
    }
}

/// HAC estimate of the cumulative long-run covariance of every feature pair.
///
/// `sigma^2(u, f, f')` sums `K(l/b) Z_t(f) Z_s(f') / T` over all pairs
/// `1 <= s, t <= floor(uT)` with `t - s = l`, so each `u` gives the full
/// HAC estimate of the truncated sample.
pub fn hac_sigma(
    sample: &SeriesSample,
    family: &FeatureFamily,
    kernel: KernelSpec,
    centering: Centering,
) -> Result<LongRunCovariance> {
    let raw = family.evaluate(sample)?;
    let z = raw
        .iter()
        .map(|xs| centering.apply(xs))
        .collect::<Result<Vec<_>>>()?;
    hac_from_centered(&z, family.labels(), kernel, centering)
}

pub(crate) fn hac_from_centered(
    z: &[Vec<f64>],
    labels: Vec<String>,
    kernel: KernelSpec,
    centering: Centering,
) -> Result<LongRunCovariance> {
    let k = z.len();
    let t = z[0].len();
    let w = kernel.weights(t)?;
    let tf = t as f64;

    let mut cumulative = vec![0.0; (t + 1) * k * k];
    for a in 0..k {
        for b in a..k {
            let (za, zb) = (&z[a], &z[b]);
            let mut acc = 0.0;
            for n in 0..t {
                // pairs whose later index is n
                let mut c = za[n] * zb[n];
                for (l, &wl) in w.iter().enumerate().skip(1) {
                    if l > n {
                        break;
                    }
                    c += wl * (za[n] * zb[n - l] + za[n - l] * zb[n]);
                }
                acc += c;
                let v = acc / tf;
                cumulative[(n + 1) * k * k + a * k + b] = v;
                cumulative[(n + 1) * k * k + b * k + a] = v;
            }
        }
    }
    Ok(LongRunCovariance {
        len: t,
        labels,
        kernel,
        centering,
        cumulative,
    })
}

/// Long-run variance of `X - mu_h(t/T)` with the HAC estimator at `u = 1`.
pub fn residual_lrv(
    sample: &SeriesSample,
    h: f64,
    smoother: SmoothingKernel,
    kernel: KernelSpec,
) -> Result<f64> {
    if sample.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sample.dim(),
        });
    }
    let xs = sample.values();
    let resid = Centering::Nw { h, kernel: smoother }.apply(xs)?;
    let lrv = hac_from_centered(
        std::slice::from_ref(&resid),
        vec!["resid".into()],
        kernel,
        Centering::None,
    )?;
    let sigma2 = lrv.entry(sample.len(), 0, 0);
    let scale = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
    if !sigma2.is_finite() || sigma2 <= f64::EPSILON * scale {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    Ok(sigma2)
}

/// `T^{-1} sum_{t>=2} (X_t - X_{t-1})^2 / 2`, the error variance under i.i.d.
/// noise and a smooth mean.
pub fn diff_variance(sample: &SeriesSample) -> Result<f64> {
    if sample.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sample.dim(),
        });
    }
    let xs = sample.values();
    let ss: f64 = xs.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(ss / (2.0 * xs.len() as f64))
}
