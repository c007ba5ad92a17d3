// SPDX-License-Identifier: MIT OR Apache-2.0

//! Locate the onset of a mean shift in AR(1) noise.

use gradcp::montecarlo::{generate, Design, ModelSpec};
use gradcp::{Detector, Result};

pub fn run_example() -> Result<f64> {
    let sample = generate(&ModelSpec::new(Design::Mu1, 500, 11))?;
    let detector = Detector::new(Design::Mu1.default_config())?;
    let res = detector.detect(&sample)?;
    println!(
        "u_hat = {:.3} (preliminary {:.3}), sigma_hat = {:.3}, tau = {:.3}",
        res.u_hat,
        res.u_hat_prelim,
        res.sigma_hat.unwrap_or(f64::NAN),
        res.tau_refined
    );
    Ok(res.u_hat)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
