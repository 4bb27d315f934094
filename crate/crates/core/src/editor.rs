// SPDX-License-Identifier: MIT OR Apache-2.0

//! Absorbing the unlearning operator into cross-attention weights.
//!
//! Keys and values are computed as `k = W_k e` and `v = W_v e`, so replacing
//! `W` by `W · P_unlearn` is the same as feeding every embedding through
//! `P_unlearn` first. [`edit_weights`] performs that replacement on the
//! editable entries of a [`WeightBundle`]; [`run_job`] builds the operator
//! from concept embeddings and applies it, either once for all forget
//! concepts (stacked) or once per concept (sequential).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::bundle::Manifest;
use crate::projector::{erasure_operator, ProjectionOperator, Role};
use crate::spectra::{thin_svd, Alpha, EmbeddingMatrix, SvdFactors};

/// Manifest of the SD-v1.4 UNet cross-attention key/value projections.
pub const SD_V14_MANIFEST: &str = include_str!("../fixtures/sd-v1.4-manifest.txt");

pub fn sd_v14_manifest() -> Manifest {
    Manifest::parse(SD_V14_MANIFEST, "sd-v1.4-manifest.txt").expect("bundled manifest parses")
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightEntry {
    pub name: String,
    pub matrix: DMatrix<f64>,
}

/// Named weight matrices plus the subset that may be edited.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBundle {
    entries: Vec<WeightEntry>,
    editable: Vec<String>,
    total_param_count: u64,
}

impl WeightBundle {
    /// `total_param_count` is the size of the model the bundle was cut from;
    /// it defaults to the bundle's own size.
    pub fn new(
        entries: Vec<WeightEntry>,
        editable: Vec<String>,
        total_param_count: Option<u64>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidBundle(format!("duplicate entry `{}`", e.name)));
            }
        }
        let mut seen_editable = HashSet::new();
        for name in &editable {
            if !seen.contains(name.as_str()) {
                return Err(Error::InvalidBundle(format!(
                    "manifest names `{name}`, which is not in the bundle"
                )));
            }
            if !seen_editable.insert(name.as_str()) {
                return Err(Error::InvalidBundle(format!("`{name}` listed twice in manifest")));
            }
        }
        let own_size: u64 = entries.iter().map(|e| e.matrix.len() as u64).sum();
        let bundle = Self {
            entries,
            editable,
            total_param_count: total_param_count.unwrap_or(own_size),
        };
        if bundle.editable_param_count() > bundle.total_param_count {
            return Err(Error::InvalidBundle(format!(
                "editable parameters ({}) exceed the total count ({})",
                bundle.editable_param_count(),
                bundle.total_param_count
            )));
        }
        Ok(bundle)
    }

    pub fn entries(&self) -> &[WeightEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&DMatrix<f64>> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.matrix)
    }

    pub fn is_editable(&self, name: &str) -> bool {
        self.editable.iter().any(|n| n == name)
    }

    /// Editable entry names in manifest order.
    pub fn editable_names(&self) -> &[String] {
        &self.editable
    }

    pub fn total_param_count(&self) -> u64 {
        self.total_param_count
    }

    pub fn editable_param_count(&self) -> u64 {
        self.editable
            .iter()
            .filter_map(|n| self.get(n))
            .map(|m| m.len() as u64)
            .sum()
    }

    /// Column count shared by the editable entries, i.e. the embedding width.
    pub fn embedding_dim(&self) -> Result<usize> {
        let mut dims = self.editable.iter().filter_map(|n| self.get(n)).map(|m| m.ncols());
        let d = dims.next().ok_or(Error::EmptyManifest)?;
        if let Some(other) = dims.find(|&c| c != d) {
            return Err(Error::mismatch("editable entry column count", d, other));
        }
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditReport {
    pub edited: Vec<String>,
    pub edited_params: u64,
    pub total_params: u64,
    /// `edited_params / total_params`.
    pub edited_fraction: f64,
    pub seconds: f64,
}

impl EditReport {
    pub fn percent(&self) -> f64 {
        100.0 * self.edited_fraction
    }
}

/// Replaces every editable `W` by `W · P_unlearn`. Other entries are copied
/// untouched.
pub fn edit_weights(
    bundle: &WeightBundle,
    unlearn: &ProjectionOperator,
) -> Result<(WeightBundle, EditReport)> {
    if unlearn.role() != Role::Unlearn {
        return Err(Error::RoleError {
            expected: Role::Unlearn.to_string(),
            found: unlearn.role().to_string(),
        });
    }
    if bundle.editable.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let d = unlearn.dim();
    for name in &bundle.editable {
        let cols = bundle.get(name).map(|m| m.ncols()).unwrap_or_default();
        if cols != d {
            return Err(Error::mismatch(format!("columns of `{name}`"), d, cols));
        }
    }

    let start = Instant::now();
    let p = unlearn.matrix();
    let entries: Vec<WeightEntry> = bundle
        .entries
        .par_iter()
        .map(|e| {
            let matrix = if bundle.is_editable(&e.name) {
                &e.matrix * p
            } else {
                e.matrix.clone()
            };
            WeightEntry {
                name: e.name.clone(),
                matrix,
            }
        })
        .collect();
    let seconds = start.elapsed().as_secs_f64();

    let edited_params = bundle.editable_param_count();
    let report = EditReport {
        edited: bundle.editable.clone(),
        edited_params,
        total_params: bundle.total_param_count,
        edited_fraction: edited_params as f64 / bundle.total_param_count as f64,
        seconds,
    };
    let out = WeightBundle {
        entries,
        editable: bundle.editable.clone(),
        total_param_count: bundle.total_param_count,
    };
    Ok((out, report))
}

/// How several forget concepts are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Concatenate all forget embeddings and erase once.
    #[default]
    Stacked,
    /// Erase one concept at a time, each on top of the previous edit.
    Sequential,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Stacked => "stacked",
            Mode::Sequential => "sequential",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stacked" => Ok(Mode::Stacked),
            "sequential" => Ok(Mode::Sequential),
            other => Err(Error::ModeError(other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ErasureJob {
    pub forget: Vec<EmbeddingMatrix>,
    pub retain: Option<Vec<EmbeddingMatrix>>,
    pub alpha: Alpha,
    pub mode: Mode,
    pub targets: WeightBundle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptSpectrum {
    pub label: String,
    pub role: Role,
    pub rank: usize,
    pub sigma: Vec<f64>,
}

/// Rank of each forget/retain operator actually built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorRank {
    pub label: String,
    pub role: Role,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub alpha: Alpha,
    pub mode: Mode,
    pub forget_labels: Vec<String>,
    pub retain_labels: Vec<String>,
    pub operators: Vec<OperatorRank>,
    pub spectra: Vec<ConceptSpectrum>,
    pub edit: EditReport,
    /// Decompositions, operator construction and weight edits; no file IO.
    pub wall_clock_seconds: f64,
}

fn spectrum(f: &SvdFactors, role: Role) -> ConceptSpectrum {
    ConceptSpectrum {
        label: f.label.clone(),
        role,
        rank: f.rank(),
        sigma: f.sigma.iter().copied().collect(),
    }
}

pub fn run_job(job: &ErasureJob) -> Result<(WeightBundle, JobReport)> {
    let start = Instant::now();
    if job.forget.is_empty() {
        return Err(Error::DimensionError("erasure job has no forget concepts".into()));
    }
    let d = job.targets.embedding_dim()?;
    let retain = job.retain.as_deref().unwrap_or_default();
    for e in job.forget.iter().chain(retain) {
        if e.dim() != d {
            return Err(Error::mismatch(
                format!("embedding dimension of `{}`", e.label()),
                d,
                e.dim(),
            ));
        }
    }

    let forget_factors = job.forget.iter().map(thin_svd).collect::<Result<Vec<_>>>()?;
    let mut spectra: Vec<ConceptSpectrum> =
        forget_factors.iter().map(|f| spectrum(f, Role::Forget)).collect();
    let retain_factors = match job.retain.as_deref() {
        Some(r) if !r.is_empty() => {
            for f in r.iter().map(thin_svd) {
                spectra.push(spectrum(&f?, Role::Retain));
            }
            Some(thin_svd(&EmbeddingMatrix::hstack(r)?)?)
        }
        _ => None,
    };

    let mut operators = Vec::new();
    if let Some(r) = &retain_factors {
        operators.push(OperatorRank {
            label: r.label.clone(),
            role: Role::Retain,
            rank: r.rank(),
        });
    }

    let (bundle, edit) = match job.mode {
        Mode::Stacked => {
            let stacked = if forget_factors.len() == 1 {
                forget_factors[0].clone()
            } else {
                thin_svd(&EmbeddingMatrix::hstack(&job.forget)?)?
            };
            operators.push(OperatorRank {
                label: stacked.label.clone(),
                role: Role::Forget,
                rank: stacked.rank(),
            });
            let p = erasure_operator(&stacked, retain_factors.as_ref(), job.alpha)?;
            edit_weights(&job.targets, &p)?
        }
        Mode::Sequential => {
            let mut current = job.targets.clone();
            let mut total_seconds = 0.0;
            let mut last = None;
            for f in &forget_factors {
                operators.push(OperatorRank {
                    label: f.label.clone(),
                    role: Role::Forget,
                    rank: f.rank(),
                });
                let p = erasure_operator(f, retain_factors.as_ref(), job.alpha)?;
                let (next, report) = edit_weights(&current, &p)?;
                total_seconds += report.seconds;
                current = next;
                last = Some(report);
            }
            let mut report = last.expect("forget list is non-empty");
            report.seconds = total_seconds;
            (current, report)
        }
    };

    let report = JobReport {
        alpha: job.alpha,
        mode: job.mode,
        forget_labels: job.forget.iter().map(|e| e.label().to_string()).collect(),
        retain_labels: retain.iter().map(|e| e.label().to_string()).collect(),
        operators,
        spectra,
        edit,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((bundle, report))
}

/// Single-query cross-attention: `W_v E · softmax((W_k E)ᵀ q)`.
///
/// Reference implementation used to check that edited weights behave like
/// projected embeddings.
pub fn attention_forward(
    q: &DVector<f64>,
    w_k: &DMatrix<f64>,
    w_v: &DMatrix<f64>,
    e: &EmbeddingMatrix,
) -> Result<DVector<f64>> {
    let d = e.dim();
    if w_k.ncols() != d {
        return Err(Error::mismatch("key weight columns", d, w_k.ncols()));
    }
    if w_v.ncols() != d {
        return Err(Error::mismatch("value weight columns", d, w_v.ncols()));
    }
    if q.len() != w_k.nrows() {
        return Err(Error::mismatch("query length", w_k.nrows(), q.len()));
    }
    let keys = w_k * e.matrix();
    let values = w_v * e.matrix();
    let scores = keys.tr_mul(q);
    let max = scores.max();
    let mut probs = scores.map(|s| (s - max).exp());
    let total = probs.sum();
    probs /= total;
    Ok(values * probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projector::{build_projector, compose_discriminative, unlearn_operator};

    fn entry(name: &str, m: DMatrix<f64>) -> WeightEntry {
        WeightEntry {
            name: name.into(),
            matrix: m,
        }
    }

    fn small_bundle() -> WeightBundle {
        WeightBundle::new(
            vec![
                entry("k", DMatrix::from_fn(3, 4, |i, j| (i as f64 - j as f64) * 0.3)),
                entry("v", DMatrix::from_fn(2, 4, |i, j| ((i * 4 + j) as f64).cos())),
                entry("bias", DMatrix::from_element(3, 1, 0.1)),
            ],
            vec!["k".into(), "v".into()],
            Some(100),
        )
        .unwrap()
    }

    #[test]
    fn identity_edit_is_exact() {
        let b = small_bundle();
        let (out, report) = edit_weights(&b, &ProjectionOperator::identity(4)).unwrap();
        assert_eq!(out, b);
        assert_eq!(report.edited, vec!["k", "v"]);
        assert_eq!(report.edited_params, 20);
        assert!((report.edited_fraction - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bundle_validation() {
        let dup = WeightBundle::new(
            vec![entry("a", DMatrix::zeros(1, 1)), entry("a", DMatrix::zeros(1, 1))],
            vec![],
            None,
        );
        assert_eq!(dup.unwrap_err().name(), "InvalidBundle");
        let missing = WeightBundle::new(vec![entry("a", DMatrix::zeros(1, 1))], vec!["b".into()], None);
        assert_eq!(missing.unwrap_err().name(), "InvalidBundle");
        let too_small = WeightBundle::new(vec![entry("a", DMatrix::zeros(2, 2))], vec!["a".into()], Some(3));
        assert_eq!(too_small.unwrap_err().name(), "InvalidBundle");
    }

    #[test]
    fn edit_errors() {
        let b = small_bundle();
        assert_eq!(
            edit_weights(&b, &ProjectionOperator::identity(5)).unwrap_err().name(),
            "DimensionMismatch"
        );
        let none = WeightBundle::new(vec![entry("a", DMatrix::zeros(2, 4))], vec![], None).unwrap();
        assert_eq!(
            edit_weights(&none, &ProjectionOperator::identity(4)).unwrap_err().name(),
            "EmptyManifest"
        );
        let f = thin_svd(&EmbeddingMatrix::new(DMatrix::identity(4, 1), "c").unwrap()).unwrap();
        let pf = build_projector(&f, Alpha::Infinite, Role::Forget).unwrap();
        assert_eq!(edit_weights(&b, &pf).unwrap_err().name(), "RoleError");
    }

    #[test]
    fn non_editable_entries_untouched() {
        let b = small_bundle();
        let f = thin_svd(&EmbeddingMatrix::new(DMatrix::from_fn(4, 2, |i, j| (i + j) as f64), "c").unwrap())
            .unwrap();
        let pf = build_projector(&f, Alpha::Finite(2.0), Role::Forget).unwrap();
        let p = unlearn_operator(&compose_discriminative(&pf, None).unwrap()).unwrap();
        let (out, _) = edit_weights(&b, &p).unwrap();
        assert_eq!(out.get("bias"), b.get("bias"));
        assert_ne!(out.get("k"), b.get("k"));
        let expected = b.get("k").unwrap() * p.matrix();
        assert_eq!(out.get("k").unwrap(), &expected);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("stacked".parse::<Mode>().unwrap(), Mode::Stacked);
        assert_eq!("sequential".parse::<Mode>().unwrap(), Mode::Sequential);
        assert_eq!("parallel".parse::<Mode>().unwrap_err().name(), "ModeError");
    }

    #[test]
    fn single_token_attention() {
        let e = EmbeddingMatrix::new(DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]), "e").unwrap();
        let w_k = DMatrix::from_fn(2, 3, |i, j| (i + j) as f64);
        let w_v = DMatrix::from_fn(4, 3, |i, j| i as f64 - j as f64);
        let q = DVector::from_vec(vec![0.3, 7.0]);
        let out = attention_forward(&q, &w_k, &w_v, &e).unwrap();
        let expected = &w_v * e.matrix().column(0);
        assert!((out - expected).norm() < 1e-14);
        assert_eq!(
            attention_forward(&DVector::zeros(3), &w_k, &w_v, &e).unwrap_err().name(),
            "DimensionMismatch"
        );
    }

    #[test]
    fn job_rejects_wrong_dimension() {
        let job = ErasureJob {
            forget: vec![EmbeddingMatrix::new(DMatrix::identity(5, 1), "c").unwrap()],
            retain: None,
            alpha: Alpha::Infinite,
            mode: Mode::Stacked,
            targets: small_bundle(),
        };
        assert_eq!(run_job(&job).unwrap_err().name(), "DimensionMismatch");
    }

    #[test]
    fn sd_manifest_fixture() {
        let m = sd_v14_manifest();
        assert_eq!(m.entries.len(), 32);
        assert!(m.entries.iter().all(|e| e.shape.unwrap().1 == 768));
        assert_eq!(m.editable_params(), 19_169_280);
        assert_eq!(m.total_params, Some(859_520_964));
    }
}
