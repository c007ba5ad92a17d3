// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monthly anomalies with a seasonal cycle and a warming trend that starts
//! after 60% of the record. The NW bandwidth covers ten years of months.

use gradcp::montecarlo::seasonal_component;
use gradcp::{DetectionConfig, Detector, FeatureKind, KernelSpec, Result, SeriesSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn run_example() -> Result<f64> {
    let months = 1968;
    let onset = 0.6;
    let mut rng = ChaCha8Rng::seed_from_u64(1850);
    let mut e = 0.0;
    let x: Vec<f64> = (1..=months)
        .map(|t| {
            let u = t as f64 / months as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            e = 0.5 * e + 0.1 * z;
            let trend = 2.0 * (u - onset).max(0.0);
            trend + e + seasonal_component(t, 0.3)
        })
        .collect();

    let mut cfg = DetectionConfig::for_feature(FeatureKind::Mean);
    cfg.lrv.h = 120.0 / months as f64;
    cfg.lrv.kernel = KernelSpec::bartlett(15.0);
    cfg.gp.n_draws = 500;
    let res = Detector::new(cfg)?.detect(&SeriesSample::univariate(x)?)?;
    let year = 1850.0 + res.u_hat * months as f64 / 12.0;
    println!("warming detected from u_hat = {:.3} (about {year:.0})", res.u_hat);
    Ok(res.u_hat)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
