// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form spectral concept erasure for cross-attention weights.
//!
//! The pipeline, bottom up:
//!
//! 1. [`spectra`]: thin SVD of a concept's token embeddings, normalized
//!    spectral energies and the expansion/Tikhonov filters.
//! 2. [`projector`]: energy-weighted forget/retain operators, the
//!    discriminative operator `P_f − P_f P_r` and `P_unlearn = I − P_dis`.
//! 3. [`editor`]: right-multiplying key/value weights by `P_unlearn`, single
//!    and multi-concept jobs, and a reference attention pass.
//! 4. [`oracle`]: synthetic concept pairs with known geometry and the
//!    suppression/retention metrics measured on them.
//! 5. [`io`]: NPY tensors, bundle directories, JSON jobs, CSV reports.
//! 6. [`verify`]: the property harness behind `spectral-unlearn verify`.
//!
//! ```
//! use nalgebra::DMatrix;
//! use spectral_unlearn::prelude::*;
//!
//! let forget = EmbeddingMatrix::new(DMatrix::from_fn(8, 3, |i, j| ((i * 3 + j) as f64).sin()), "cat")?;
//! let factors = thin_svd(&forget)?;
//! let p_unlearn = erasure_operator(&factors, None, Alpha::Infinite)?;
//! // every forget token is annihilated
//! let residual = p_unlearn.matrix() * forget.matrix();
//! assert!(residual.norm() < 1e-10 * forget.matrix().norm());
//! # Ok::<(), spectral_unlearn::Error>(())
//! ```

pub mod cli;
pub mod editor;
pub mod error;
pub mod io;
pub mod oracle;
pub mod projector;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::editor::{
        attention_forward, edit_weights, run_job, EditReport, ErasureJob, JobReport, Mode,
        WeightBundle, WeightEntry,
    };
    pub use crate::error::{Error, Result};
    pub use crate::oracle::{make_concepts, measure, sweep, ErasureMetrics, SyntheticConceptPair};
    pub use crate::projector::{
        build_projector, compose_discriminative, erasure_operator, unlearn_operator,
        ProjectionOperator, Role,
    };
    pub use crate::spectra::{
        expansion_f, spectral_energies, thin_svd, tikhonov_g, Alpha, EmbeddingMatrix,
        SpectralWeights, SvdFactors,
    };
}
