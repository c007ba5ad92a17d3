// SPDX-License-Identifier: MIT OR Apache-2.0

//! A small replication study with a text histogram.

use gradcp::montecarlo::{run_study, Design, ModelSpec, StudySummary};
use gradcp::Result;

pub fn run_example() -> Result<StudySummary> {
    let design = Design::Mu2;
    let spec = ModelSpec::new(design, 500, 0);
    let summary = run_study(&spec, 50, &design.default_config(), 7)?;
    println!(
        "{design}: median {:.3}, IQR {:.3}, below u0 {:.2}",
        summary.median, summary.iqr, summary.underestimation_fraction
    );
    for (l, r, c) in summary.histogram.rows().filter(|r| r.2 > 0) {
        println!("[{l:.3}, {r:.3}) {}", "#".repeat(c));
    }
    Ok(summary)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(drop)
}
