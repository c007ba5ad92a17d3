// SPDX-License-Identifier: MIT OR Apache-2.0

//! The convex-hull scan against the quadratic reference on one series.

use std::time::Instant;

use gradcp::series::build_prefix_sums;
use gradcp::{dsup_profile, FeatureFamily, FeatureKind, RescaledGrid, Result, SeriesSample, SupMethod};

pub fn run_example() -> Result<f64> {
    let n = 4000;
    let x: Vec<f64> = (0..n)
        .map(|t| ((t * 2654435761usize) % 1000) as f64 / 1000.0 + if t > 3000 { 0.3 } else { 0.0 })
        .collect();
    let sample = SeriesSample::univariate(x)?;
    let prefix = build_prefix_sums(&sample, &FeatureFamily::new(FeatureKind::Mean, 1)?)?;
    let grid = RescaledGrid::natural(n);

    let t0 = Instant::now();
    let hull = dsup_profile(&prefix, &grid, SupMethod::Hull)?;
    let t_hull = t0.elapsed();
    let t0 = Instant::now();
    let brute = dsup_profile(&prefix, &grid, SupMethod::Brute)?;
    let t_brute = t0.elapsed();

    let diff = hull
        .dsup
        .iter()
        .zip(&brute.dsup)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("hull {t_hull:?}, brute {t_brute:?}, max difference {diff:e}");
    println!("Dmax(1) = {:.5}", hull.dmax[n - 1]);
    Ok(diff)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
