// SPDX-License-Identifier: MIT OR Apache-2.0

//! Edits a synthetic bundle shaped like the SD v1.4 cross-attention key and
//! value projections and reports the parameter fraction and wall clock.
//!
//! `cargo run --release --example sd14_budget`

use spectral_unlearn::editor::sd_v14_manifest;
use spectral_unlearn::oracle::{random_concepts, synthetic_bundle};
use spectral_unlearn::prelude::*;

fn main() -> Result<()> {
    let manifest = sd_v14_manifest();
    let targets = synthetic_bundle(&manifest, 1)?;
    let job = ErasureJob {
        forget: random_concepts(768, 1, 8, "concept", 2)?,
        retain: Some(random_concepts(768, 1, 8, "anchor", 3)?),
        alpha: Alpha::Finite(1000.0),
        mode: Mode::Stacked,
        targets,
    };
    let (_, report) = run_job(&job)?;
    let e = &report.edit;
    println!("{} matrices, {} of {} parameters ({:.4}%)", e.edited.len(), e.edited_params, e.total_params, e.percent());
    println!("weight edit {:.3} s, whole job {:.3} s", e.seconds, report.wall_clock_seconds);
    Ok(())
}
