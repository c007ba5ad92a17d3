// SPDX-License-Identifier: MIT OR Apache-2.0

//! Terminal stability span of a return-like series whose volatility calms
//! down at 40% of the sample and then stays flat.

use gradcp::{DetectionConfig, Detector, Direction, FeatureKind, KernelSpec, Result, SeriesSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn run_example() -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 600;
    let returns: Vec<f64> = (0..n)
        .map(|t| {
            let vol = if t < 240 { 2.5 } else { 1.0 };
            let e: f64 = StandardNormal.sample(&mut rng);
            0.01 * vol * e
        })
        .collect();
    let sample = SeriesSample::univariate(returns)?;

    let mut cfg = DetectionConfig::for_feature(FeatureKind::Variance);
    cfg.direction = Direction::Reverse;
    cfg.lrv.h = 0.1;
    // independent returns: lag-0 HAC only
    cfg.lrv.kernel = KernelSpec::bartlett(0.0);
    cfg.gp.n_draws = 500;
    let res = Detector::new(cfg)?.detect(&sample)?;
    let span = res.stability_span.expect("reverse runs report a span");
    println!("volatility stable on [{:.3}, {:.3}]", span.0, span.1);
    Ok(span)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
