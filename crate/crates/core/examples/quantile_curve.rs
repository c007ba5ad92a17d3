// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulated quantiles of the pivotal limit at a few levels.

use gradcp::gpsim::simulation_grid;
use gradcp::{GaussianDriver, Result};

pub fn run_example() -> Result<Vec<f64>> {
    let driver = GaussianDriver::pivotal(simulation_grid(1000, 256)?, 1000, 9);
    let draws = driver.simulate_hmax()?;
    let mut at_one = Vec::new();
    for alpha in [0.2, 0.1, 0.05] {
        let curve = draws.quantile_curve(alpha)?;
        println!(
            "alpha {alpha:<4}  q(0.25) {:.3}  q(0.5) {:.3}  q(1) {:.3}",
            curve.at(0.25),
            curve.at(0.5),
            curve.at(1.0)
        );
        at_one.push(curve.at(1.0));
    }
    Ok(at_one)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
