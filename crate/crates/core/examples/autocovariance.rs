// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dependence that switches on mid-sample: white noise, then AR(1) with
//! coefficient 0.8. Variance and lag-1 autocovariance are tracked jointly.

use gradcp::{DetectionConfig, Detector, FeatureKind, KernelSpec, Result, SeriesSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn run_example() -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut prev = 0.0;
    let x: Vec<f64> = (0..800)
        .map(|t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            prev = if t < 400 { e } else { 0.8 * prev + e };
            prev
        })
        .collect();

    let mut cfg = DetectionConfig::for_feature("acf:1".parse()?);
    cfg.lrv.kernel = KernelSpec::bartlett(5.0);
    cfg.gp.n_draws = 500;
    let res = Detector::new(cfg)?.detect(&SeriesSample::univariate(x)?)?;
    assert_eq!(res.feature, FeatureKind::Autocovariance { lag: 1 });
    println!("dependence changes from u_hat = {:.3}", res.u_hat);
    Ok(res.u_hat)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
