// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation of the limit process and of the quantiles of its running
//! supremum.
//!
//! The limit of `sqrt(T) (Dhat - D)` is `H(u, v, f) = G(v, f) - (v/u) G(u, f)`
//! where `G` is a centred Gaussian process with independent increments and
//! `Cov(G(u, f), G(u, f')) = sigma^2(u, f, f')`. For the scaled mean
//! statistic `G` is a standard Brownian motion (pivotal case). Paths are
//! simulated on a sub-grid of `{j/T}` and turned into draws of
//! `Hmax(u) = sup_{w <= v <= u} |H(v, w, f)|`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lrv::LongRunCovariance;
use crate::series::RescaledGrid;
use crate::tvmeasure::HullScanner;

pub const DEFAULT_MAX_GRID: usize = 512;
pub const DEFAULT_DRAWS: usize = 2000;
pub const MIN_DRAWS: usize = 100;

/// Indices `ceil(k T / m)`, `k = 1..=m`, with `m = min(T, max_points)`.
///
/// This is the natural grid when `T <= max_points` and otherwise a nearly
/// equispaced subset of it ending at 1.
pub fn simulation_grid(t: usize, max_points: usize) -> Result<RescaledGrid> {
    if t == 0 || max_points == 0 {
        return Err(Error::InvalidGrid("empty simulation grid".into()));
    }
    let m = t.min(max_points);
    let indices = (1..=m).map(|k| (k * t).div_ceil(m)).collect();
    RescaledGrid::from_indices(t, indices)
}

#[derive(Debug, Clone)]
pub enum DriverKind {
    /// Standard Brownian motion, one pseudo-feature.
    Pivotal,
    /// Increment covariances taken from an estimated long-run covariance.
    Estimated(Arc<LongRunCovariance>),
}

/// Everything needed to simulate paths of `G` on a grid.
#[derive(Debug, Clone)]
pub struct GaussianDriver {
    kind: DriverKind,
    grid: RescaledGrid,
    n_draws: usize,
    seed: u64,
    n_features: usize,
    /// Per grid step, a `k x k` column-major square root of the increment
    /// covariance.
    factors: Vec<DMatrix<f64>>,
    repaired_steps: usize,
}

impl GaussianDriver {
    pub fn pivotal(grid: RescaledGrid, n_draws: usize, seed: u64) -> Self {
        let t = grid.denominator() as f64;
        let mut prev = 0;
        let factors = grid
            .indices()
            .iter()
            .map(|&n| {
                let sd = ((n - prev) as f64 / t).sqrt();
                prev = n;
                DMatrix::from_element(1, 1, sd)
            })
            .collect();
        Self {
            kind: DriverKind::Pivotal,
            grid,
            n_draws,
            seed,
            n_features: 1,
            factors,
            repaired_steps: 0,
        }
    }

    /// Driver whose increments over `(u_{k-1}, u_k]` have covariance
    /// `Sigma^(u_k) - Sigma^(u_{k-1})`, repaired to the nearest PSD matrix
    /// by eigenvalue clipping.
    pub fn estimated(
        lrv: Arc<LongRunCovariance>,
        grid: RescaledGrid,
        n_draws: usize,
        seed: u64,
    ) -> Result<Self> {
        if grid.denominator() != lrv.sample_len() {
            return Err(Error::InvalidGrid(format!(
                "simulation grid denominator {} is not refined by the covariance grid of length {}",
                grid.denominator(),
                lrv.sample_len()
            )));
        }
        let k = lrv.n_features();
        let mut factors = Vec::with_capacity(grid.len());
        let mut repaired_steps = 0;
        let mut prev = lrv.matrix_at(0);
        for (step, &n) in grid.indices().iter().enumerate() {
            let cur = lrv.matrix_at(n);
            let delta = &cur - &prev;
            let (root, repaired) = psd_sqrt(&delta).ok_or(Error::Factorization(step + 1))?;
            if repaired {
                repaired_steps += 1;
            }
            factors.push(root);
            prev = cur;
        }
        debug_assert!(factors.iter().all(|f| f.nrows() == k));
        if repaired_steps > 0 {
            log::warn!(
                "clipped negative eigenvalues of {repaired_steps} of {} increment covariances",
                grid.len()
            );
        }
        Ok(Self {
            kind: DriverKind::Estimated(lrv),
            grid,
            n_draws,
            seed,
            n_features: k,
            factors,
            repaired_steps,
        })
    }

    pub fn kind(&self) -> &DriverKind {
        &self.kind
    }

    pub fn is_pivotal(&self) -> bool {
        matches!(self.kind, DriverKind::Pivotal)
    }

    pub fn grid(&self) -> &RescaledGrid {
        &self.grid
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of grid steps whose increment covariance needed clipping
    /// beyond rounding noise.
    pub fn repaired_steps(&self) -> usize {
        self.repaired_steps
    }

    /// Draw `draw` of the driver path. Draws use independent ChaCha streams
    /// of the master seed, so any subset can be reproduced on its own.
    pub fn simulate_path(&self, draw: u64) -> DriverPath {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw);
        let k = self.n_features;
        let m = self.grid.len();
        let mut values = vec![vec![0.0; m + 1]; k];
        let mut z = vec![0.0; k];
        for (step, factor) in self.factors.iter().enumerate() {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for (a, path) in values.iter_mut().enumerate() {
                let inc: f64 = (0..k).map(|b| factor[(a, b)] * z[b]).sum();
                path[step + 1] = path[step] + inc;
            }
        }
        DriverPath {
            abscissae: std::iter::once(0.0)
                .chain(self.grid.indices().iter().map(|&n| n as f64))
                .collect(),
            grid: self.grid.clone(),
            values,
        }
    }

    /// `Hmax` on the grid for every draw.
    pub fn simulate_hmax(&self) -> Result<HmaxDraws> {
        if self.n_draws < MIN_DRAWS {
            return Err(Error::InsufficientDraws {
                min: MIN_DRAWS,
                got: self.n_draws,
            });
        }
        let m = self.grid.len();
        let draws: Vec<Vec<f64>> = (0..self.n_draws as u64)
            .into_par_iter()
            .map_init(
                || HullScanner::with_capacity(m + 1),
                |hull, d| hmax_with(&self.simulate_path(d), hull),
            )
            .collect();
        Ok(HmaxDraws {
            grid: self.grid.clone(),
            seed: self.seed,
            draws,
        })
    }

    pub fn quantile_curve(&self, alpha: f64) -> Result<QuantileCurve> {
        self.simulate_hmax()?.quantile_curve(alpha)
    }
}

/// Symmetric square root of the PSD part of `m`. The flag reports whether
/// an eigenvalue below `-1e-8 * trace` had to be clipped.
fn psd_sqrt(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, bool)> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    if m.nrows() == 1 {
        let v = m[(0, 0)];
        let repaired = v < -1e-8 * v.abs().max(f64::MIN_POSITIVE);
        return Some((DMatrix::from_element(1, 1, v.max(0.0).sqrt()), repaired));
    }
    let sym = (m + m.transpose()) * 0.5;
    let trace = sym.trace().abs();
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    let repaired = min < -1e-8 * trace;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&roots) * v.transpose();
    root.iter().all(|x| x.is_finite()).then_some((root, repaired))
}

/// One simulated path of `G`, including `G(0) = 0`.
#[derive(Debug, Clone)]
pub struct DriverPath {
    pub grid: RescaledGrid,
    abscissae: Vec<f64>,
    /// `values[f][k]` is `G(u_k, f)`, `u_0 = 0`.
    pub values: Vec<Vec<f64>>,
}

impl DriverPath {
    /// `H(u_j, v_i, f) = G(v_i, f) - (v_i/u_j) G(u_j, f)`, 1-based grid
    /// positions.
    pub fn h(&self, f: usize, j: usize, i: usize) -> f64 {
        let g = &self.values[f];
        g[i] - (self.abscissae[i] / self.abscissae[j]) * g[j]
    }

    /// `Hsup(u_j)` for every grid point.
    pub fn hsup(&self) -> Vec<f64> {
        let mut hull = HullScanner::with_capacity(self.abscissae.len());
        hsup_with(self, &mut hull)
    }

    /// `Hmax(u_j)`, the running maximum of [`Self::hsup`].
    pub fn hmax(&self) -> Vec<f64> {
        crate::tvmeasure::running_max(&self.hsup())
    }
}

fn hsup_with(path: &DriverPath, hull: &mut HullScanner) -> Vec<f64> {
    let m = path.grid.len();
    let mut out = vec![0.0; m];
    for g in &path.values {
        hull.clear();
        for j in 1..=m {
            hull.push(g, &path.abscissae, j);
            let (v, _) = hull.query(g, &path.abscissae, j);
            if v > out[j - 1] {
                out[j - 1] = v;
            }
        }
    }
    out
}

fn hmax_with(path: &DriverPath, hull: &mut HullScanner) -> Vec<f64> {
    crate::tvmeasure::running_max(&hsup_with(path, hull))
}

/// Simulated `Hmax` curves, one per draw.
#[derive(Debug, Clone)]
pub struct HmaxDraws {
    pub grid: RescaledGrid,
    pub seed: u64,
    pub draws: Vec<Vec<f64>>,
}

impl HmaxDraws {
    /// Empirical `(1 - alpha)`-quantile at each grid point (inverse ECDF),
    /// followed by a monotone pass.
    pub fn quantile_curve(&self, alpha: f64) -> Result<QuantileCurve> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let n = self.draws.len();
        if n < MIN_DRAWS {
            return Err(Error::InsufficientDraws {
                min: MIN_DRAWS,
                got: n,
            });
        }
        let rank = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n) - 1;
        let mut column = vec![0.0; n];
        let mut q = Vec::with_capacity(self.grid.len());
        for j in 0..self.grid.len() {
            for (c, d) in column.iter_mut().zip(&self.draws) {
                *c = d[j];
            }
            let (_, v, _) = column.select_nth_unstable_by(rank, f64::total_cmp);
            q.push(*v);
        }
        let q = crate::tvmeasure::running_max(&q);
        Ok(QuantileCurve {
            grid: self.grid.clone(),
            alpha,
            q,
            n_draws: n,
            seed: self.seed,
        })
    }
}

/// Estimated `(1 - alpha)`-quantiles of `Hmax(u)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileCurve {
    #[serde(skip)]
    pub grid: RescaledGrid,
    pub alpha: f64,
    pub q: Vec<f64>,
    pub n_draws: usize,
    pub seed: u64,
}

impl QuantileCurve {
    /// First grid point, the smallest `u` at which the curve is queried.
    pub fn u_min(&self) -> f64 {
        self.grid.point(0)
    }

    /// Linear interpolation between grid points; clamped outside
    /// `[u_min, 1]`.
    pub fn at(&self, u: f64) -> f64 {
        let pts: Vec<f64> = self.grid.points().collect();
        if u <= pts[0] {
            return self.q[0];
        }
        let last = pts.len() - 1;
        if u >= pts[last] {
            return self.q[last];
        }
        let k = pts.partition_point(|&p| p <= u);
        let (u0, u1) = (pts[k - 1], pts[k]);
        let w = (u - u0) / (u1 - u0);
        self.q[k - 1] + w * (self.q[k] - self.q[k - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tvmeasure::{cusum_sup_brute, running_max};

    #[test]
    fn simulation_grid_shapes() {
        let g = simulation_grid(300, 512).unwrap();
        assert_eq!(g, RescaledGrid::natural(300));
        let g = simulation_grid(1000, 512).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.denominator(), 1000);
        assert_eq!(*g.indices().last().unwrap(), 1000);
        let gaps: Vec<usize> = g.indices().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|&d| d == 1 || d == 2));
    }

    #[test]
    fn pivotal_endpoint_has_unit_variance() {
        let drv = GaussianDriver::pivotal(RescaledGrid::natural(64), 4000, 11);
        let ends: Vec<f64> = (0..4000).map(|d| *drv.simulate_path(d).values[0].last().unwrap()).collect();
        let var = ends.iter().map(|x| x * x).sum::<f64>() / 4000.0;
        // sd of the variance estimate is sqrt(2/4000) ~ 0.022
        assert!((var - 1.0).abs() < 0.09, "{var}");
    }

    #[test]
    fn homogeneous_estimated_driver_has_scaled_increments() {
        let base = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let lrv = LongRunCovariance::homogeneous(50, vec!["a".into(), "b".into()], &base).unwrap();
        let drv = GaussianDriver::estimated(Arc::new(lrv), RescaledGrid::natural(50), 100, 3).unwrap();
        assert_eq!(drv.repaired_steps(), 0);
        let f = &drv.factors[7];
        let cov = f * f.transpose();
        let expect = base * (1.0 / 50.0);
        assert!((cov - expect).abs().max() < 1e-12);
    }

    #[test]
    fn psd_repair_clips_negative_eigenvalue() {
        // increment [[1, 1.01], [1.01, 1]] has eigenvalues 2.01 and -0.01
        let m0 = DMatrix::zeros(2, 2);
        let m1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let m2 = DMatrix::from_row_slice(2, 2, &[2.0, 1.01, 1.01, 2.0]);
        let lrv = LongRunCovariance::from_cumulative(vec!["a".into(), "b".into()], vec![m0, m1, m2]).unwrap();
        let drv = GaussianDriver::estimated(Arc::new(lrv), RescaledGrid::natural(2), 100, 0).unwrap();
        assert_eq!(drv.repaired_steps(), 1);
        // oracle: eigen-decomposition by hand, v = (1, +-1)/sqrt 2
        let f = &drv.factors[1];
        let cov = f * f.transpose();
        let expect = DMatrix::from_row_slice(2, 2, &[1.005, 1.005, 1.005, 1.005]);
        assert!((cov - expect).abs().max() < 1e-12);
    }

    #[test]
    fn determinism() {
        let drv = GaussianDriver::pivotal(RescaledGrid::natural(30), 100, 99);
        let a = drv.simulate_hmax().unwrap();
        let b = drv.simulate_hmax().unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(drv.simulate_path(5).values, drv.simulate_path(5).values);
        assert_ne!(drv.simulate_path(5).values, drv.simulate_path(6).values);
    }

    #[test]
    fn hmax_matches_brute_force() {
        let grid = simulation_grid(700, 100).unwrap();
        let drv = GaussianDriver::pivotal(grid, 100, 1);
        for d in 0..20 {
            let path = drv.simulate_path(d);
            let brute = cusum_sup_brute(&path.values[0], &path.abscissae);
            let expect = running_max(&brute.iter().map(|b| b.0).collect::<Vec<_>>());
            for (a, b) in path.hmax().iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_paths() {
        let zero = DriverPath {
            grid: RescaledGrid::natural(4),
            abscissae: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            values: vec![vec![0.0; 5]],
        };
        assert_eq!(zero.hmax(), vec![0.0; 4]);
        let drv = GaussianDriver::pivotal(RescaledGrid::natural(1), 100, 2);
        assert_eq!(drv.simulate_path(0).hmax(), vec![0.0]);
    }

    #[test]
    fn quantile_curve_properties() {
        let drv = GaussianDriver::pivotal(RescaledGrid::natural(80), 400, 5);
        let draws = drv.simulate_hmax().unwrap();
        let q10 = draws.quantile_curve(0.1).unwrap();
        let q50 = draws.quantile_curve(0.5).unwrap();
        assert!(q10.q.windows(2).all(|w| w[0] <= w[1]));
        assert!(q10.q[1..].iter().all(|&v| v > 0.0));
        assert!(q10.q.iter().zip(&q50.q).all(|(a, b)| a >= b));
        // as alpha -> 1 the curve falls to the smallest draw
        let q_lo = draws.quantile_curve(1.0 - 1e-9).unwrap();
        let mins: Vec<f64> = (0..80)
            .map(|j| draws.draws.iter().map(|d| d[j]).fold(f64::INFINITY, f64::min))
            .collect();
        assert_eq!(q_lo.q, running_max(&mins));
        assert!(draws.quantile_curve(0.0).is_err());
        assert!(draws.quantile_curve(1.0).is_err());
        let few = GaussianDriver::pivotal(RescaledGrid::natural(10), 99, 0);
        assert!(matches!(few.quantile_curve(0.1), Err(Error::InsufficientDraws { .. })));
    }

    #[test]
    fn independent_seeds_agree() {
        let grid = simulation_grid(400, 200).unwrap();
        let a = GaussianDriver::pivotal(grid.clone(), 5000, 1).quantile_curve(0.1).unwrap();
        let b = GaussianDriver::pivotal(grid, 5000, 2).quantile_curve(0.1).unwrap();
        for u in [0.25, 0.5, 1.0] {
            assert!((a.at(u) - b.at(u)).abs() <= 0.05 * a.at(u), "u = {u}");
        }
    }

    #[test]
    fn quantile_interpolation() {
        let curve = QuantileCurve {
            grid: RescaledGrid::natural(4),
            alpha: 0.1,
            q: vec![0.0, 1.0, 2.0, 4.0],
            n_draws: 100,
            seed: 0,
        };
        assert_eq!(curve.at(1.0), 4.0);
        assert_eq!(curve.at(0.0), 0.0);
        assert_eq!(curve.at(0.625), 1.5);
        assert_eq!(curve.at(0.875), 3.0);
        assert_eq!(curve.u_min(), 0.25);
    }

    #[test]
    fn estimated_scale_equivariance() {
        let base = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let labels = vec!["a".to_string(), "b".to_string()];
        let grid = RescaledGrid::natural(40);
        let l1 = LongRunCovariance::homogeneous(40, labels.clone(), &base).unwrap();
        let l2 = LongRunCovariance::homogeneous(40, labels, &(base * 9.0)).unwrap();
        let d1 = GaussianDriver::estimated(Arc::new(l1), grid.clone(), 100, 8).unwrap();
        let d2 = GaussianDriver::estimated(Arc::new(l2), grid, 100, 8).unwrap();
        let h1 = d1.simulate_hmax().unwrap();
        let h2 = d2.simulate_hmax().unwrap();
        for (a, b) in h1.draws.iter().flatten().zip(h2.draws.iter().flatten()) {
            assert!((3.0 * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        let (q1, q2) = (h1.quantile_curve(0.1).unwrap(), h2.quantile_curve(0.1).unwrap());
        for (a, b) in q1.q.iter().zip(&q2.q) {
            assert!((3.0 * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}
