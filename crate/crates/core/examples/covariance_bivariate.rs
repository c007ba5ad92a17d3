// SPDX-License-Identifier: MIT OR Apache-2.0

//! Onset of time-variation in the covariance matrix of a bivariate series.

use gradcp::montecarlo::{generate, Design, ModelSpec};
use gradcp::{Detector, Result};

pub fn run_example() -> Result<f64> {
    let sample = generate(&ModelSpec::new(Design::BiSigma2, 500, 3))?;
    let mut cfg = Design::BiSigma2.default_config();
    cfg.gp.n_draws = 500;
    let res = Detector::new(cfg)?.detect(&sample)?;
    let labels = &res.surface.labels;
    let last = res.surface.argmax.last().unwrap();
    println!(
        "u_hat = {:.3}; largest contrast at u = 1 from {}",
        res.u_hat, labels[last.feature]
    );
    Ok(res.u_hat)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
