// SPDX-License-Identifier: MIT OR Apache-2.0

//! CUSUM-type measure of time-variation and its running suprema.
//!
//! For a partial-sum sequence `P(0..=n)` the core quantity is
//!
//! ```text
//! sup(j) = max_{1 <= i <= j} | P(i) - (i/j) P(j) |
//! ```
//!
//! which is the inner supremum over `v <= u` for `u = j/n`. With `P = S_f`
//! and a `1/T` factor this is the sample statistic; with `P` a simulated
//! driver path it is the limit process. Two evaluation paths exist: a
//! quadratic scan and an incremental convex-hull scan.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{PrefixSums, RescaledGrid};

/// Below this length [`SupMethod::Auto`] uses the quadratic scan.
pub const BRUTE_FORCE_MAX_LEN: usize = 1024;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SupMethod {
    Brute,
    Hull,
    #[default]
    Auto,
}

impl SupMethod {
    fn resolve(self, n: usize) -> SupMethod {
        match self {
            SupMethod::Auto if n <= BRUTE_FORCE_MAX_LEN => SupMethod::Brute,
            SupMethod::Auto => SupMethod::Hull,
            m => m,
        }
    }
}

/// Abscissae of a partial-sum sequence: `x[i] = i` on the natural grid, or
/// the integer grid indices of a sub-grid.
pub(crate) type Abscissae<'a> = &'a [f64];

pub(crate) fn natural_abscissae(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64).collect()
}

#[inline]
fn contrast(p: &[f64], x: Abscissae, i: usize, j: usize) -> f64 {
    (p[i] - (x[i] / x[j]) * p[j]).abs()
}

/// `(sup(j), argmax i)` for `j = 1..=n`, quadratic scan. Ties go to the
/// smallest `i`.
pub(crate) fn cusum_sup_brute(prefix: &[f64], x: Abscissae) -> Vec<(f64, usize)> {
    let n = prefix.len() - 1;
    (1..=n)
        .map(|j| {
            let mut best = (0.0, j);
            for i in 1..=j {
                let c = contrast(prefix, x, i, j);
                if c > best.0 || (c == best.0 && i < best.1) {
                    best = (c, i);
                }
            }
            best
        })
        .collect()
}

/// Incremental upper and lower hulls of the points `(i, P(i))`, `i` increasing.
///
/// Collinear points are kept so the leftmost optimum stays on the hull.
#[derive(Debug, Default)]
pub(crate) struct HullScanner {
    upper: Vec<usize>,
    lower: Vec<usize>,
}

impl HullScanner {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            upper: Vec::with_capacity(n),
            lower: Vec::with_capacity(n),
        }
    }

    pub(crate) fn clear(&mut self) {
        self.upper.clear();
        self.lower.clear();
    }

    #[inline]
    fn cross(p: &[f64], x: Abscissae, a: usize, b: usize, c: usize) -> f64 {
        (x[b] - x[a]) * (p[c] - p[a]) - (p[b] - p[a]) * (x[c] - x[a])
    }

    /// Adds point `j`; `j` must exceed every index already pushed.
    #[inline]
    pub(crate) fn push(&mut self, p: &[f64], x: Abscissae, j: usize) {
        while self.upper.len() >= 2 {
            let n = self.upper.len();
            if Self::cross(p, x, self.upper[n - 2], self.upper[n - 1], j) > 0.0 {
                self.upper.pop();
            } else {
                break;
            }
        }
        self.upper.push(j);
        while self.lower.len() >= 2 {
            let n = self.lower.len();
            if Self::cross(p, x, self.lower[n - 2], self.lower[n - 1], j) < 0.0 {
                self.lower.pop();
            } else {
                break;
            }
        }
        self.lower.push(j);
    }

    /// `(sup, argmax)` of `|P(i) - (i/j) P(j)|` over the pushed points,
    /// where `j` is the last point pushed.
    #[inline]
    pub(crate) fn query(&self, p: &[f64], x: Abscissae, j: usize) -> (f64, usize) {
        let slope = p[j] / x[j];
        // first vertex where P(i) - slope*i stops increasing
        let (mut lo, mut hi) = (0, self.upper.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let (a, b) = (self.upper[mid], self.upper[mid + 1]);
            if p[b] - p[a] > slope * (x[b] - x[a]) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let i_max = self.upper[lo];
        // first vertex where it stops decreasing
        let (mut lo, mut hi) = (0, self.lower.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let (a, b) = (self.lower[mid], self.lower[mid + 1]);
            if p[b] - p[a] < slope * (x[b] - x[a]) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let i_min = self.lower[lo];
        let (c_max, c_min) = (contrast(p, x, i_max, j), contrast(p, x, i_min, j));
        if c_max > c_min || (c_max == c_min && i_max <= i_min) {
            (c_max, i_max)
        } else {
            (c_min, i_min)
        }
    }
}

/// `(sup(j), argmax i)` for `j = 1..=n` in `O(n log n)`.
pub(crate) fn cusum_sup_hull(prefix: &[f64], x: Abscissae) -> Vec<(f64, usize)> {
    let n = prefix.len() - 1;
    let mut hull = HullScanner::with_capacity(n);
    (1..=n)
        .map(|j| {
            hull.push(prefix, x, j);
            hull.query(prefix, x, j)
        })
        .collect()
}

pub(crate) fn cusum_sup(prefix: &[f64], x: Abscissae, method: SupMethod) -> Vec<(f64, usize)> {
    match method.resolve(prefix.len() - 1) {
        SupMethod::Hull => cusum_sup_hull(prefix, x),
        _ => cusum_sup_brute(prefix, x),
    }
}

/// The contrast `S_f(i)/T - (i/j) S_f(j)/T`, i.e. the statistic at
/// `u = j/T`, `v = i/T`.
pub fn dhat(prefix: &PrefixSums, f: usize, j: usize, i: usize) -> Result<f64> {
    let t = prefix.len();
    if j == 0 || i > j || j > t {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= i <= j <= T with j > 0, got i = {i}, j = {j}, T = {t}"
        )));
    }
    let s = prefix.feature(f);
    let tf = t as f64;
    Ok(s[i] / tf - (i as f64 / j as f64) * s[j] / tf)
}

/// Location of a supremum: `v = index/T` and the feature attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Argmax {
    pub index: usize,
    pub feature: usize,
}

/// `Dsup` and its running maximum `Dmax` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVariationSurface {
    pub grid: RescaledGrid,
    pub labels: Vec<String>,
    pub dsup: Vec<f64>,
    pub dmax: Vec<f64>,
    pub argmax: Vec<Argmax>,
}

impl TimeVariationSurface {
    /// Sample length the surface was computed from.
    pub fn sample_len(&self) -> usize {
        self.grid.denominator()
    }

    pub fn len(&self) -> usize {
        self.dsup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dsup.is_empty()
    }
}

/// Evaluates `Dsup(u)` at every grid point, maximizing over all features and
/// all `v = i/T <= u`.
pub fn dsup_profile(
    prefix: &PrefixSums,
    grid: &RescaledGrid,
    method: SupMethod,
) -> Result<TimeVariationSurface> {
    let t = prefix.len();
    if grid.denominator() != t {
        return Err(Error::InvalidGrid(format!(
            "grid denominator {} differs from T = {t}",
            grid.denominator()
        )));
    }
    let x = natural_abscissae(t);
    let per_feature: Vec<Vec<(f64, usize)>> = (0..prefix.n_features())
        .into_par_iter()
        .map(|f| cusum_sup(prefix.feature(f), &x, method))
        .collect();

    let tf = t as f64;
    let mut dsup = Vec::with_capacity(grid.len());
    let mut argmax = Vec::with_capacity(grid.len());
    for &j in grid.indices() {
        let mut best = (0.0, Argmax { index: j, feature: 0 });
        for (f, sups) in per_feature.iter().enumerate() {
            let (v, i) = sups[j - 1];
            let v = v / tf;
            let better = v > best.0 || (v == best.0 && (i, f) < (best.1.index, best.1.feature));
            if f == 0 || better {
                best = (v, Argmax { index: i, feature: f });
            }
        }
        dsup.push(best.0);
        argmax.push(best.1);
    }
    let dmax = running_max(&dsup);
    Ok(TimeVariationSurface {
        grid: grid.clone(),
        labels: prefix.labels().to_vec(),
        dsup,
        dmax,
        argmax,
    })
}

pub(crate) fn running_max(xs: &[f64]) -> Vec<f64> {
    let mut acc = f64::NEG_INFINITY;
    xs.iter()
        .map(|&x| {
            acc = acc.max(x);
            acc
        })
        .collect()
}

/// Divides the surface by a long-run standard deviation.
pub fn scale_surface(surface: &TimeVariationSurface, sigma_hat: f64) -> Result<TimeVariationSurface> {
    if !(sigma_hat.is_finite() && sigma_hat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive and finite, got {sigma_hat}"
        )));
    }
    let mut out = surface.clone();
    out.dsup.iter_mut().for_each(|v| *v /= sigma_hat);
    out.dmax.iter_mut().for_each(|v| *v /= sigma_hat);
    Ok(out)
}
