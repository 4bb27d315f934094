// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sweeps α on synthetic forget/retain pairs with and without shared
//! directions and prints the three erasure metrics.
//!
//! `cargo run --example alpha_sweep`

use spectral_unlearn::oracle::{harness_seed, trend};
use spectral_unlearn::prelude::*;

fn main() -> Result<()> {
    let grid = Alpha::parse_list("1,2,5,10,100,1000,inf")?;
    for overlap in [0, 2] {
        let pair = make_concepts(32, 6, 6, overlap, harness_seed())?;
        println!("d = 32, k_f = k_r = 6, overlap = {overlap}");
        println!("{:>6} {:>12} {:>12} {:>12}", "alpha", "suppression", "retention", "shared");
        let metrics = sweep(&pair, &grid)?;
        for m in &metrics {
            println!(
                "{:>6} {:>12.4e} {:>12.4e} {:>12.4e}",
                m.alpha.to_string(),
                m.suppression_residual,
                m.retention_error,
                m.shared_error
            );
        }
        let t = trend(&metrics, 1e-12);
        println!(
            "suppression non-increasing: {}, retention non-decreasing: {}\n",
            t.suppression_non_increasing, t.retention_non_decreasing
        );
    }
    Ok(())
}
