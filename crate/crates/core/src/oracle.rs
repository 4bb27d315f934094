// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic forget/retain concepts with known geometry, and the metrics
//! computed against them.
//!
//! A [`SyntheticConceptPair`] has orthonormal bases whose first `overlap`
//! columns are shared. Embedding samples are drawn inside each span with a
//! geometric singular value decay, rotated so that their singular directions
//! mix shared and unique columns. [`measure`] runs the full operator pipeline
//! and reports how much of a unique-forget direction survives, how much a
//! retain direction is disturbed, and how much a shared direction is.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::editor::{WeightBundle, WeightEntry};
use crate::error::{Error, Result};
use crate::io::bundle::Manifest;
use crate::projector::erasure_operator;
use crate::spectra::{thin_svd, Alpha, EmbeddingMatrix};

/// Probe vectors drawn per subspace in [`measure`].
pub const PROBES_PER_SUBSPACE: usize = 64;
/// Default seed for harness runs; `CURE_SEED` overrides it on the command line.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DECAY: f64 = 0.5;

/// Reads `CURE_SEED`, falling back to [`DEFAULT_SEED`].
pub fn harness_seed() -> u64 {
    std::env::var("CURE_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

/// Parameters of a synthetic pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptSpec {
    pub d: usize,
    pub k_f: usize,
    pub k_r: usize,
    pub overlap: usize,
    #[serde(default = "harness_seed")]
    pub seed: u64,
    /// Ratio between consecutive singular values of the samples.
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// Tokens per sample beyond the subspace rank.
    #[serde(default = "default_extra_tokens")]
    pub extra_tokens: usize,
}

fn default_decay() -> f64 {
    DEFAULT_DECAY
}

fn default_extra_tokens() -> usize {
    2
}

impl ConceptSpec {
    pub fn new(d: usize, k_f: usize, k_r: usize, overlap: usize, seed: u64) -> Self {
        Self {
            d,
            k_f,
            k_r,
            overlap,
            seed,
            decay: DEFAULT_DECAY,
            extra_tokens: default_extra_tokens(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConceptPair {
    pub spec: ConceptSpec,
    pub basis_f: DMatrix<f64>,
    pub basis_r: DMatrix<f64>,
    pub e_f: EmbeddingMatrix,
    pub e_r: EmbeddingMatrix,
}

impl SyntheticConceptPair {
    pub fn overlap(&self) -> usize {
        self.spec.overlap
    }

    pub fn seed(&self) -> u64 {
        self.spec.seed
    }

    fn unique_forget(&self) -> DMatrix<f64> {
        let m = self.spec.overlap;
        self.basis_f.columns(m, self.spec.k_f - m).into_owned()
    }

    fn shared(&self) -> DMatrix<f64> {
        self.basis_f.columns(0, self.spec.overlap).into_owned()
    }
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Filled column by column so the draw order is fixed.
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal `rows × cols` matrix from the QR factor of a Gaussian draw.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = gaussian(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    // Fix the sign ambiguity of Householder QR so the draw is unique.
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn sample_embeddings(
    rng: &mut ChaCha8Rng,
    basis: &DMatrix<f64>,
    decay: f64,
    extra_tokens: usize,
    label: &str,
) -> Result<EmbeddingMatrix> {
    let k = basis.ncols();
    let n = k + extra_tokens;
    let rotation = random_orthonormal(rng, k, k);
    let tokens = random_orthonormal(rng, n, k);
    let mut left = basis * rotation;
    let mut s = 1.0;
    for j in 0..k {
        left.column_mut(j).scale_mut(s);
        s *= decay;
    }
    EmbeddingMatrix::new(left * tokens.transpose(), label)
}

pub fn make_concepts(d: usize, k_f: usize, k_r: usize, overlap: usize, seed: u64) -> Result<SyntheticConceptPair> {
    make_concepts_with(ConceptSpec::new(d, k_f, k_r, overlap, seed))
}

pub fn make_concepts_with(spec: ConceptSpec) -> Result<SyntheticConceptPair> {
    let ConceptSpec {
        d,
        k_f,
        k_r,
        overlap,
        seed,
        decay,
        extra_tokens,
    } = spec;
    if k_f == 0 || k_r == 0 {
        return Err(Error::DimensionError("subspace ranks must be at least 1".into()));
    }
    if overlap > k_f.min(k_r) {
        return Err(Error::DimensionError(format!(
            "overlap {overlap} exceeds min(k_f, k_r) = {}",
            k_f.min(k_r)
        )));
    }
    let total = k_f + k_r - overlap;
    if total > d {
        return Err(Error::DimensionError(format!(
            "subspaces need {total} dimensions but d = {d}"
        )));
    }
    if !(decay > 0.0 && decay <= 1.0) {
        return Err(Error::DimensionError(format!("decay must lie in (0, 1], got {decay}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = random_orthonormal(&mut rng, d, total);
    let basis_f = all.columns(0, k_f).into_owned();
    let mut basis_r = DMatrix::zeros(d, k_r);
    basis_r.columns_mut(0, overlap).copy_from(&all.columns(0, overlap));
    basis_r
        .columns_mut(overlap, k_r - overlap)
        .copy_from(&all.columns(k_f, k_r - overlap));

    let e_f = sample_embeddings(&mut rng, &basis_f, decay, extra_tokens, "forget")?;
    let e_r = sample_embeddings(&mut rng, &basis_r, decay, extra_tokens, "retain")?;
    Ok(SyntheticConceptPair {
        spec,
        basis_f,
        basis_r,
        e_f,
        e_r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasureMetrics {
    pub alpha: Alpha,
    /// Mean `‖P e‖ / ‖e‖` over unit probes in the unique-forget subspace
    /// (the whole forget subspace when nothing is unique).
    pub suppression_residual: f64,
    /// Mean `‖P e − e‖ / ‖e‖` over unit probes in the retain subspace.
    pub retention_error: f64,
    /// Same as `retention_error` over the shared subspace; 0 without overlap.
    pub shared_error: f64,
}

fn probes(basis: &DMatrix<f64>, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..PROBES_PER_SUBSPACE)
        .map(|_| {
            let coeffs = gaussian(&mut rng, basis.ncols(), 1);
            let v = basis * coeffs.column(0);
            let norm = v.norm();
            v / norm
        })
        .collect()
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn measure(pair: &SyntheticConceptPair, alpha: Alpha) -> Result<ErasureMetrics> {
    let forget = thin_svd(&pair.e_f)?;
    let retain = thin_svd(&pair.e_r)?;
    let p = erasure_operator(&forget, Some(&retain), alpha)?;
    let op = p.matrix();

    let unique_f = pair.unique_forget();
    let forget_probes = if unique_f.ncols() > 0 {
        probes(&unique_f, pair.seed().wrapping_add(1))
    } else {
        probes(&pair.basis_f, pair.seed().wrapping_add(1))
    };
    let retain_probes = probes(&pair.basis_r, pair.seed().wrapping_add(2));
    let shared_probes = if pair.overlap() > 0 {
        probes(&pair.shared(), pair.seed().wrapping_add(3))
    } else {
        Vec::new()
    };

    let residual = |e: &DVector<f64>| (op * e).norm();
    let disturbance = |e: &DVector<f64>| (op * e - e).norm();
    Ok(ErasureMetrics {
        alpha,
        suppression_residual: mean(forget_probes.iter().map(residual)),
        retention_error: mean(retain_probes.iter().map(disturbance)),
        shared_error: mean(shared_probes.iter().map(disturbance)),
    })
}

pub fn sweep(pair: &SyntheticConceptPair, alphas: &[Alpha]) -> Result<Vec<ErasureMetrics>> {
    alphas.iter().map(|&a| measure(pair, a)).collect()
}

/// Verdict on the direction of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trend {
    pub suppression_non_increasing: bool,
    pub retention_non_decreasing: bool,
}

/// Checks the sweep's monotonicity with an absolute slack of `tol`.
pub fn trend(metrics: &[ErasureMetrics], tol: f64) -> Trend {
    let pairs = || metrics.windows(2).map(|w| (w[0], w[1]));
    Trend {
        suppression_non_increasing: pairs()
            .all(|(a, b)| b.suppression_residual <= a.suppression_residual + tol),
        retention_non_decreasing: pairs().all(|(a, b)| b.retention_error + tol >= a.retention_error),
    }
}

/// Gaussian weights shaped after a manifest, every entry editable. Used to
/// stand in for real checkpoints in examples and benchmarks.
pub fn synthetic_bundle(manifest: &Manifest, seed: u64) -> Result<WeightBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(manifest.entries.len());
    for m in &manifest.entries {
        let (rows, cols) = m.shape.ok_or_else(|| {
            Error::DimensionError(format!("manifest entry `{}` has no shape", m.name))
        })?;
        let scale = 1.0 / (cols as f64).sqrt();
        let matrix = gaussian(&mut rng, rows, cols) * scale;
        entries.push(WeightEntry {
            name: m.name.clone(),
            matrix,
        });
    }
    WeightBundle::new(entries, manifest.names(), manifest.total_params)
}

/// `count` concept embeddings of width `d` and `tokens` columns each, with
/// geometric singular value decay, labelled `{prefix}-{i}`.
pub fn random_concepts(
    d: usize,
    count: usize,
    tokens: usize,
    prefix: &str,
    seed: u64,
) -> Result<Vec<EmbeddingMatrix>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let basis = random_orthonormal(&mut rng, d, tokens);
            sample_embeddings(&mut rng, &basis, DEFAULT_DECAY, 0, &format!("{prefix}-{i}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormal(m: &DMatrix<f64>) -> bool {
        let k = m.ncols();
        (m.transpose() * m - DMatrix::<f64>::identity(k, k)).norm() < 1e-10
    }

    #[test]
    fn disjoint_bases_are_orthogonal() {
        let p = make_concepts(8, 2, 2, 0, 1).unwrap();
        assert!(orthonormal(&p.basis_f) && orthonormal(&p.basis_r));
        assert!((p.basis_f.transpose() * &p.basis_r).norm() < 1e-10);
    }

    #[test]
    fn full_overlap_shares_bases() {
        let p = make_concepts(8, 2, 2, 2, 1).unwrap();
        assert_eq!(p.basis_f, p.basis_r);
    }

    #[test]
    fn partial_overlap_structure() {
        let p = make_concepts(16, 4, 3, 2, 5).unwrap();
        assert_eq!(p.basis_f.columns(0, 2), p.basis_r.columns(0, 2));
        let cross = p.basis_f.columns(2, 2).transpose() * p.basis_r.columns(2, 1);
        assert!(cross.norm() < 1e-10);
        // samples live in their spans with the requested spectrum
        let f = thin_svd(&p.e_f).unwrap();
        assert_eq!(f.rank(), 4);
        for (i, s) in f.sigma.iter().enumerate() {
            assert!((s - 0.5f64.powi(i as i32)).abs() < 1e-12);
        }
        let outside = &p.e_f.matrix().clone() - &p.basis_f * (p.basis_f.transpose() * p.e_f.matrix());
        assert!(outside.norm() < 1e-12);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = make_concepts(16, 4, 4, 2, 7).unwrap();
        let b = make_concepts(16, 4, 4, 2, 7).unwrap();
        let bytes = |m: &DMatrix<f64>| m.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
        assert_eq!(bytes(&a.basis_f), bytes(&b.basis_f));
        assert_eq!(bytes(a.e_r.matrix()), bytes(b.e_r.matrix()));
        let c = make_concepts(16, 4, 4, 2, 8).unwrap();
        assert_ne!(bytes(&a.basis_f), bytes(&c.basis_f));
    }

    #[test]
    fn impossible_layouts_rejected() {
        assert_eq!(make_concepts(4, 3, 3, 1, 0).unwrap_err().name(), "DimensionError");
        assert_eq!(make_concepts(8, 2, 2, 3, 0).unwrap_err().name(), "DimensionError");
        assert_eq!(make_concepts(8, 0, 2, 0, 0).unwrap_err().name(), "DimensionError");
    }

    #[test]
    fn disjoint_infinite_alpha_is_exact() {
        let p = make_concepts(12, 3, 3, 0, 3).unwrap();
        let m = measure(&p, Alpha::Infinite).unwrap();
        assert!(m.suppression_residual <= 1e-10);
        assert!(m.retention_error <= 1e-10);
        assert_eq!(m.shared_error, 0.0);
    }

    #[test]
    fn full_overlap_leaves_forget_intact() {
        let p = make_concepts(12, 3, 3, 3, 3).unwrap();
        let m = measure(&p, Alpha::Infinite).unwrap();
        assert!(m.suppression_residual >= 1.0 - 1e-10);
    }

    #[test]
    fn suppression_falls_with_alpha() {
        let p = make_concepts(16, 4, 4, 2, 11).unwrap();
        let metrics = sweep(&p, &Alpha::DEFAULT_GRID).unwrap();
        assert!(trend(&metrics, 1e-12).suppression_non_increasing);
        assert!(metrics.last().unwrap().shared_error <= 1e-8);
    }

    #[test]
    fn synthetic_bundle_follows_manifest() {
        let m = Manifest::parse("total_params 1000\na 3 4\nb 5 4\n", "t").unwrap();
        let b = synthetic_bundle(&m, 1).unwrap();
        assert_eq!(b.get("b").unwrap().shape(), (5, 4));
        assert_eq!(b.total_param_count(), 1000);
        assert_eq!(b.editable_param_count(), 32);
    }
}
