// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats: NPY tensors, weight bundle directories, JSON job
//! configuration and CSV/JSON reports.

pub mod bundle;
pub mod config;
pub mod npy;
pub mod report;

pub use bundle::{read_bundle, write_bundle, Manifest, ManifestEntry};
pub use config::{load_job, load_sweep, ConceptSource, JobConfig, ManifestSource, SweepConfig};
pub use npy::{read_matrix, read_tensor, write_matrix, write_tensor, Dtype, NpyTensor};
pub use report::{emit_report, write_metrics_csv, write_spectrum_csv, SpectrumRow};
