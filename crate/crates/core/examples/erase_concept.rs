// SPDX-License-Identifier: MIT OR Apache-2.0

//! Erases one concept from a pair of key/value matrices while retaining a
//! second, then measures what the edited weights do to each concept.
//!
//! `cargo run --example erase_concept`

use spectral_unlearn::oracle::random_concepts;
use spectral_unlearn::prelude::*;

fn main() -> Result<()> {
    let d = 64;
    let forget = random_concepts(d, 1, 6, "van-gogh", 1)?;
    let retain = random_concepts(d, 1, 6, "monet", 2)?;

    let targets = WeightBundle::new(
        vec![
            WeightEntry { name: "attn2.to_k".into(), matrix: random_concepts(d, 1, 40, "k", 3)?[0].matrix().transpose() },
            WeightEntry { name: "attn2.to_v".into(), matrix: random_concepts(d, 1, 40, "v", 4)?[0].matrix().transpose() },
        ],
        vec!["attn2.to_k".into(), "attn2.to_v".into()],
        None,
    )?;

    let job = ErasureJob {
        forget: forget.clone(),
        retain: Some(retain.clone()),
        alpha: Alpha::Infinite,
        mode: Mode::Stacked,
        targets: targets.clone(),
    };
    let (edited, report) = run_job(&job)?;
    println!("edited {:?} in {:.4} s", report.edit.edited, report.edit.seconds);

    let w = targets.get("attn2.to_k").unwrap();
    let w_new = edited.get("attn2.to_k").unwrap();
    for (name, e) in [("forget", &forget[0]), ("retain", &retain[0])] {
        let before = (w * e.matrix()).norm();
        let after = (w_new * e.matrix()).norm();
        println!("{name:>6}: key response {before:.4} -> {after:.4} ({:.1}% kept)", 100.0 * after / before);
    }
    Ok(())
}
