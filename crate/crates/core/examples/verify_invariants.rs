// SPDX-License-Identifier: MIT OR Apache-2.0

//! Runs the property harness, then reruns it with a deliberately asymmetric
//! forget operator to show the symmetry check catching it.
//!
//! `cargo run --example verify_invariants`

use spectral_unlearn::oracle::harness_seed;
use spectral_unlearn::verify::{render, run_suite, Perturbation, VerifyOptions};

fn main() {
    let opts = VerifyOptions { seed: harness_seed(), perturbation: None };
    print!("{}", render(&run_suite(&opts)));

    println!("\nwith an asymmetric forget operator injected:");
    let perturbed = run_suite(&VerifyOptions { perturbation: Some(Perturbation::AsymmetricForget), ..opts });
    for o in perturbed.iter().filter(|o| !o.passed) {
        println!("FAIL {}.{}: {}", o.module, o.name, o.detail);
    }
}
