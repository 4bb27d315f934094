// SPDX-License-Identifier: MIT OR Apache-2.0

//! Tabulates the expansion filter `f` against the Tikhonov filter `g` on the
//! energies of a small spectrum, for several α.
//!
//! `cargo run --example spectral_filters`

use spectral_unlearn::prelude::*;
use spectral_unlearn::spectra::tikhonov_lambda;

fn main() -> Result<()> {
    let sigma = [4.0, 3.0, 1.0, 0.25];
    let r = spectral_energies(&sigma)?;
    println!("sigma = {sigma:?}");
    println!("r     = {:?}\n", r.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());

    for alpha in [Alpha::Finite(1.0), Alpha::Finite(2.0), Alpha::Finite(10.0), Alpha::Finite(1000.0), Alpha::Infinite] {
        print!("alpha {:>5}:", alpha.to_string());
        for &ri in &r {
            let f = expansion_f(ri, alpha)?;
            match alpha {
                Alpha::Finite(_) => print!("  f={f:.4} g={:.4}", tikhonov_g(ri, alpha)?),
                Alpha::Infinite => print!("  f={f:.4}"),
            }
        }
        println!();
    }

    // g is the Tikhonov filter σ² / (σ² + λ) with λ = Σσ² / α
    let lambda = tikhonov_lambda(&sigma, 2.0);
    let direct = sigma[0] * sigma[0] / (sigma[0] * sigma[0] + lambda);
    println!("\nlambda(alpha = 2) = {lambda}; g(r_0) = {:.12}, direct = {direct:.12}", tikhonov_g(r[0], Alpha::Finite(2.0))?);
    Ok(())
}
