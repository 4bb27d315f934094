// SPDX-License-Identifier: MIT OR Apache-2.0

//! Erases ten concepts at once, comparing stacked and sequential modes.
//!
//! `cargo run --example multi_concept`

use spectral_unlearn::editor::sd_v14_manifest;
use spectral_unlearn::oracle::{random_concepts, synthetic_bundle};
use spectral_unlearn::prelude::*;

fn main() -> Result<()> {
    let targets = synthetic_bundle(&sd_v14_manifest(), 7)?;
    let forget = random_concepts(768, 10, 4, "concept", 8)?;
    let retain = random_concepts(768, 5, 4, "keep", 9)?;

    for mode in [Mode::Stacked, Mode::Sequential] {
        let job = ErasureJob {
            forget: forget.clone(),
            retain: Some(retain.clone()),
            alpha: Alpha::Finite(100.0),
            mode,
            targets: targets.clone(),
        };
        let (edited, report) = run_job(&job)?;
        let w = edited.get(&edited.editable_names()[0]).unwrap();
        let leak: f64 = forget.iter().map(|e| (w * e.matrix()).norm()).sum::<f64>() / forget.len() as f64;
        println!(
            "{:>10}: {} operators, {:.2} s, mean forget key norm {leak:.4}",
            mode.to_string(),
            report.operators.len(),
            report.wall_clock_seconds
        );
    }
    Ok(())
}
