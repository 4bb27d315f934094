// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shows that cross-attention through edited weights equals attention over
//! projected prompt embeddings through the original weights.
//!
//! `cargo run --example attention_equivalence`

use nalgebra::DVector;
use spectral_unlearn::oracle::random_concepts;
use spectral_unlearn::prelude::*;

fn main() -> Result<()> {
    let d = 48;
    let w_k = random_concepts(d, 1, 12, "k", 1)?[0].matrix().transpose();
    let w_v = random_concepts(d, 1, 10, "v", 2)?[0].matrix().transpose();
    let forget = random_concepts(d, 1, 5, "forget", 3)?;
    let retain = random_concepts(d, 1, 5, "retain", 4)?;
    let prompt = random_concepts(d, 1, 9, "prompt", 5)?.remove(0);
    let q = DVector::from_fn(12, |i, _| ((i as f64) * 0.7).sin());

    for alpha in Alpha::parse_list("1,10,inf")? {
        let p = erasure_operator(&thin_svd(&forget[0])?, Some(&thin_svd(&retain[0])?), alpha)?;
        let edited = attention_forward(&q, &(&w_k * p.matrix()), &(&w_v * p.matrix()), &prompt)?;
        let projected = EmbeddingMatrix::new(p.matrix() * prompt.matrix(), "projected")?;
        let reference = attention_forward(&q, &w_k, &w_v, &projected)?;
        println!("alpha {:>4}: |edited − projected| = {:.3e}", alpha.to_string(), (edited - reference).norm());
    }
    Ok(())
}
