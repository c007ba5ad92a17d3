// SPDX-License-Identifier: MIT OR Apache-2.0

//! Long-run variance of AR(1) errors three ways.

use gradcp::lrv::{diff_variance, hac_sigma, residual_lrv};
use gradcp::montecarlo::{generate, Design, ModelSpec};
use gradcp::{Centering, FeatureFamily, FeatureKind, KernelSpec, Result, SmoothingKernel};

pub fn run_example() -> Result<f64> {
    let x = generate(&ModelSpec::new(Design::Mu0, 5000, 1))?;
    let b10 = KernelSpec::bartlett(10.0);

    let resid = residual_lrv(&x, 0.2, SmoothingKernel::Epanechnikov, b10)?;
    let family = FeatureFamily::new(FeatureKind::Mean, 1)?;
    let lrv = hac_sigma(&x, &family, b10, Centering::Global)?;
    let half = lrv.entry(x.len() / 2, 0, 0);
    let diff = diff_variance(&x)?;

    println!("target 4/9 = {:.4}", 4.0 / 9.0);
    println!("NW residuals + Bartlett(10): {resid:.4}");
    println!("global mean, u = 1: {:.4}, u = 1/2: {half:.4}", lrv.entry(x.len(), 0, 0));
    println!("first differences (ignores dependence): {diff:.4}");
    Ok(resid)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
