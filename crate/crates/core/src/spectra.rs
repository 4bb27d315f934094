// SPDX-License-Identifier: MIT OR Apache-2.0

//! Embedding matrices, thin SVD and the spectral filter functions.
//!
//! A concept is represented by an `d × n` matrix whose columns are token
//! embeddings. Its thin SVD exposes the directions (`U`) along which the
//! concept is encoded and their singular values. Singular values are turned
//! into normalized energies `r_i = σ_i² / Σ σ_j²`, which are then reshaped by
//! one of two filters:
//!
//! - the expansion filter `f(r; α) = α r / ((α − 1) r + 1)`, which is the
//!   identity at `α = 1` and the hard selector `1{r > 0}` as `α → ∞`;
//! - the Tikhonov filter `g(r; α) = α r / (α r + 1)`, i.e. the classical
//!   ridge filter `σ² / (σ² + λ)` with `λ = Σ σ_j² / α`.
//!
//! `f` dominates `g` pointwise, with equality only at `r = 0`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Expansion strength: a finite real `≥ 1` or symbolic infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl Alpha {
    /// The grid used by α sweeps unless one is given explicitly.
    pub const DEFAULT_GRID: [Alpha; 7] = [
        Alpha::Finite(1.0),
        Alpha::Finite(2.0),
        Alpha::Finite(5.0),
        Alpha::Finite(10.0),
        Alpha::Finite(100.0),
        Alpha::Finite(1000.0),
        Alpha::Infinite,
    ];

    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            return Ok(Alpha::Infinite);
        }
        if !value.is_finite() || value < 1.0 {
            return Err(Error::DomainError(format!(
                "alpha must be a real >= 1 or \"inf\", got {value}"
            )));
        }
        Ok(Alpha::Finite(value))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Alpha::Infinite)
    }

    /// Numeric value, `f64::INFINITY` for the symbolic case.
    pub fn value(self) -> f64 {
        match self {
            Alpha::Finite(a) => a,
            Alpha::Infinite => f64::INFINITY,
        }
    }

    fn check(self) -> Result<Self> {
        match self {
            Alpha::Finite(a) => Alpha::new(a),
            Alpha::Infinite => Ok(self),
        }
    }

    /// Parses a comma separated list such as `1,2,5,inf`.
    pub fn parse_list(s: &str) -> Result<Vec<Alpha>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::Finite(2.0)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(Alpha::Infinite);
        }
        // Rust's float parser also accepts "inf"/"infinity"/"nan"; only the
        // literal token above is part of the grammar.
        if s.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
            return Err(Error::DomainError(format!("invalid alpha `{s}`")));
        }
        let value: f64 = s
            .parse()
            .map_err(|_| Error::DomainError(format!("invalid alpha `{s}`")))?;
        Alpha::new(value)
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Finite(a) => serializer.serialize_f64(*a),
            Alpha::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Token(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Alpha::new(v),
            Raw::Token(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A `d × n` matrix whose columns are the token embeddings of one concept set.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    data: DMatrix<f64>,
    label: String,
}

impl EmbeddingMatrix {
    pub fn new(data: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        check_finite(&data, &label)?;
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::DimensionError(format!(
                "embedding `{label}` has shape {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data, label })
    }

    /// Concatenates several concept sets column-wise. Labels are joined with `+`.
    pub fn hstack(parts: &[EmbeddingMatrix]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::DimensionError("cannot stack zero embedding sets".into()))?;
        let d = first.dim();
        let mut n = 0;
        for p in parts {
            if p.dim() != d {
                return Err(Error::mismatch(
                    format!("embedding dimension of `{}`", p.label),
                    d,
                    p.dim(),
                ));
            }
            n += p.tokens();
        }
        let mut data = DMatrix::zeros(d, n);
        let mut col = 0;
        for p in parts {
            data.columns_mut(col, p.tokens()).copy_from(&p.data);
            col += p.tokens();
        }
        let label = parts
            .iter()
            .map(|p| p.label.as_str())
            .collect::<Vec<_>>()
            .join("+");
        Ok(Self { data, label })
    }

    /// Embedding dimension `d`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Token count `n`.
    pub fn tokens(&self) -> usize {
        self.data.ncols()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.data * c, self.label.clone())
    }
}

/// Thin SVD `E = U diag(σ) Vᵀ` truncated to the numerical rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
    pub label: String,
}

impl SvdFactors {
    /// Effective rank: number of singular values above the truncation threshold.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Thin SVD of a concept's embedding matrix.
pub fn thin_svd(e: &EmbeddingMatrix) -> Result<SvdFactors> {
    thin_svd_matrix(e.matrix(), e.label())
}

/// Thin SVD of a raw matrix.
///
/// Components with `σ_i <= max(d, n) · ε · σ_1` are dropped from all three
/// factors. Each column of `U` is signed so that its largest-magnitude entry
/// is non-negative (first such entry on ties); `V` is flipped along with it.
pub fn thin_svd_matrix(m: &DMatrix<f64>, label: &str) -> Result<SvdFactors> {
    check_finite(m, label)?;
    let (d, n) = m.shape();
    if d == 0 || n == 0 {
        return Err(Error::DimensionError(format!(
            "`{label}` has shape {d}x{n}"
        )));
    }
    let (u_full, values, v_full) = jacobi_svd(m, label)?;

    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable, so equal singular values keep the solver's order.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sigma_max = values[order[0]];
    if !(sigma_max > 0.0) {
        return Err(Error::EmptySpectrum(format!("`{label}` is the zero matrix")));
    }
    let threshold = d.max(n) as f64 * f64::EPSILON * sigma_max;
    let kept: Vec<usize> = order.into_iter().filter(|&i| values[i] > threshold).collect();
    let k = kept.len();

    let mut u = DMatrix::zeros(d, k);
    let mut v = DMatrix::zeros(n, k);
    let mut sigma = DVector::zeros(k);
    for (j, &i) in kept.iter().enumerate() {
        let ucol = u_full.column(i);
        let pivot = ucol
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (idx, x)| {
                if x.abs() > best.1 {
                    (idx, x.abs())
                } else {
                    best
                }
            })
            .0;
        let sign = if ucol[pivot] < 0.0 { -1.0 } else { 1.0 };
        u.column_mut(j).copy_from(&(ucol * sign));
        v.column_mut(j).copy_from(&(v_full.column(i) * sign));
        sigma[j] = values[i];
    }
    Ok(SvdFactors {
        u,
        sigma,
        v,
        label: label.to_string(),
    })
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// SVD by one-sided Jacobi rotations, preconditioned with a column-pivoted
/// QR: with `A P = Q R`, Jacobi runs on `Rᵀ`, whose columns are already
/// close to orthogonal, so few sweeps are needed. Returns unsorted
/// `(U, σ, V)` with `min(d, n)` components.
///
/// Accurate on rank-deficient input, which concept embeddings usually are
/// (more tokens than directions).
fn jacobi_svd(m: &DMatrix<f64>, label: &str) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if m.nrows() < m.ncols() {
        let (u, s, v) = jacobi_svd(&m.transpose(), label)?;
        return Ok((v, s, u));
    }
    let n = m.ncols();
    let qr = m.clone().col_piv_qr();
    let q = qr.q();
    let mut perm = DMatrix::<f64>::identity(n, n);
    qr.p().permute_columns(&mut perm);
    let mut a = qr.r().transpose();
    let mut v = DMatrix::<f64>::identity(n, n);
    // Columns this small are rounding noise from rank deficiency; rotating
    // them against each other never settles.
    let negligible = (n as f64 * f64::EPSILON * a.norm()).powi(2);
    let tol = (n as f64).sqrt() * f64::EPSILON;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let (ap, ar) = column_pair(&mut a, p, r);
                let (alpha, beta, gamma) = gram_entries(ap, ar);
                if alpha <= negligible || beta <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(ap, ar, c, s);
                let (vp, vr) = column_pair(&mut v, p, r);
                rotate(vp, vr, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdFailed(format!("`{label}` after {JACOBI_MAX_SWEEPS} sweeps")));
    }

    let mut sigma = DVector::from_fn(n, |j, _| a.column(j).norm());
    let mut u_r = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        // skipped noise columns were never orthogonalized; they carry no direction
        if sigma[j] * sigma[j] <= negligible {
            sigma[j] = 0.0;
        } else {
            u_r.column_mut(j).copy_from(&(a.column(j) / sigma[j]));
        }
    }
    // Rᵀ = U_r Σ Vᵀ, so A = (Q V) Σ (P U_r)ᵀ.
    Ok((q * v, sigma, perm * u_r))
}

/// Disjoint mutable views of columns `p < r` of a column-major matrix.
fn column_pair(m: &mut DMatrix<f64>, p: usize, r: usize) -> (&mut [f64], &mut [f64]) {
    let rows = m.nrows();
    let (head, tail) = m.as_mut_slice().split_at_mut(r * rows);
    (&mut head[p * rows..(p + 1) * rows], &mut tail[..rows])
}

/// `(x·x, y·y, x·y)` in one pass, with split accumulators so the loop
/// vectorizes.
fn gram_entries(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    const LANES: usize = 4;
    let (mut xx, mut yy, mut xy) = ([0.0; LANES], [0.0; LANES], [0.0; LANES]);
    let (xc, yc) = (x.chunks_exact(LANES), y.chunks_exact(LANES));
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for k in 0..LANES {
            xx[k] += a[k] * a[k];
            yy[k] += b[k] * b[k];
            xy[k] += a[k] * b[k];
        }
    }
    let mut out = (xx.iter().sum::<f64>(), yy.iter().sum::<f64>(), xy.iter().sum::<f64>());
    for (a, b) in xr.iter().zip(yr) {
        out.0 += a * a;
        out.1 += b * b;
        out.2 += a * b;
    }
    out
}

/// Applies the plane rotation `[c s; -s c]` to a column pair.
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (p, q) = (*a, *b);
        *a = c * p - s * q;
        *b = s * p + c * q;
    }
}

/// Normalized spectral energies `r_i = σ_i² / Σ_j σ_j²`.
pub fn spectral_energies(sigma: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = sigma.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::DomainError(format!(
            "singular values must be finite and non-negative, got {bad}"
        )));
    }
    let max = sigma.iter().copied().fold(0.0f64, f64::max);
    if max == 0.0 {
        return Err(Error::EmptySpectrum("all singular values are zero".into()));
    }
    // Normalizing by the largest value first avoids overflow in σ² and makes
    // the result invariant to power-of-two rescaling.
    let sq: Vec<f64> = sigma.iter().map(|s| (s / max) * (s / max)).collect();
    let total: f64 = sq.iter().sum();
    Ok(sq.into_iter().map(|s| s / total).collect())
}

fn check_energy(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::DomainError(format!(
            "energy must lie in [0, 1], got {r}"
        )));
    }
    Ok(())
}

/// Spectral expansion filter `f(r; α) = α r / ((α − 1) r + 1)`.
///
/// `f(r; 1) = r` exactly and `f(r; ∞) = 1{r > 0}`.
pub fn expansion_f(r: f64, alpha: Alpha) -> Result<f64> {
    check_energy(r)?;
    match alpha.check()? {
        Alpha::Infinite => Ok(if r > 0.0 { 1.0 } else { 0.0 }),
        Alpha::Finite(a) => Ok((a * r / ((a - 1.0) * r + 1.0)).min(1.0)),
    }
}

/// Tikhonov filter in energy form, `g(r; α) = α r / (α r + 1)`. Finite α only.
pub fn tikhonov_g(r: f64, alpha: Alpha) -> Result<f64> {
    check_energy(r)?;
    match alpha.check()? {
        Alpha::Infinite => Err(Error::DomainError(
            "the Tikhonov filter is defined for finite alpha only".into(),
        )),
        Alpha::Finite(a) => Ok(a * r / (a * r + 1.0)),
    }
}

/// Ridge parameter `λ = Σ σ_j² / α` under which the classical filter
/// `σ_i² / (σ_i² + λ)` coincides with [`tikhonov_g`].
pub fn tikhonov_lambda(sigma: &[f64], alpha: f64) -> f64 {
    sigma.iter().map(|s| s * s).sum::<f64>() / alpha
}

/// Normalized energies together with the expanded diagonal `Λ = diag(f(r_i; α))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralWeights {
    pub r: Vec<f64>,
    pub lambda_diag: Vec<f64>,
    pub alpha: Alpha,
}

impl SpectralWeights {
    pub fn new(sigma: &[f64], alpha: Alpha) -> Result<Self> {
        let r = spectral_energies(sigma)?;
        let lambda_diag = r
            .iter()
            .map(|&ri| expansion_f(ri, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            r,
            lambda_diag,
            alpha,
        })
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    // nalgebra storage is column-major
    if let Some(idx) = m.iter().position(|x| !x.is_finite()) {
        let rows = m.nrows().max(1);
        return Err(Error::NonFiniteInput {
            what: what.to_string(),
            row: idx % rows,
            col: idx / rows,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(m: DMatrix<f64>) -> EmbeddingMatrix {
        EmbeddingMatrix::new(m, "t").unwrap()
    }

    #[test]
    fn identity_svd() {
        let f = thin_svd(&emb(DMatrix::identity(3, 3))).unwrap();
        assert_eq!(f.rank(), 3);
        for s in f.sigma.iter() {
            assert!((s - 1.0).abs() < 1e-14);
        }
        let q = &f.u * f.v.transpose();
        let dev = (q.transpose() * &q - DMatrix::<f64>::identity(3, 3)).norm();
        assert!(dev < 1e-12);
    }

    #[test]
    fn rank_one_svd_recovers_direction() {
        let u = DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]);
        let v = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let f = thin_svd(&emb(&u * v.transpose() * 5.0)).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.sigma[0] - 5.0).abs() < 1e-12);
        let dot = f.u.column(0).dot(&u);
        assert!((dot.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_convention_makes_largest_entry_non_negative() {
        let m = DMatrix::from_row_slice(3, 2, &[-3.0, 0.1, 0.2, 2.0, -0.1, 0.3]);
        let f = thin_svd(&emb(m.clone())).unwrap();
        for col in f.u.column_iter() {
            let max = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(max >= 0.0);
        }
        assert!((f.reconstruct() - m).norm() < 1e-12);
        let neg = thin_svd(&emb(-DMatrix::from_row_slice(3, 2, &[-3.0, 0.1, 0.2, 2.0, -0.1, 0.3]))).unwrap();
        assert_eq!(f.u, neg.u);
    }

    #[test]
    fn zero_matrix_is_empty_spectrum() {
        let err = thin_svd(&emb(DMatrix::zeros(4, 2))).unwrap_err();
        assert_eq!(err.name(), "EmptySpectrum");
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(1, 0)] = f64::NAN;
        let err = EmbeddingMatrix::new(m.clone(), "bad").unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput { row: 1, col: 0, .. }));
        assert_eq!(thin_svd_matrix(&m, "bad").unwrap_err().name(), "NonFiniteInput");
    }

    #[test]
    fn rank_deficient_input_is_truncated() {
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let b = DVector::from_vec(vec![0.0, 1.0, 0.0, -1.0]);
        let mut m = DMatrix::zeros(4, 3);
        m.set_column(0, &a);
        m.set_column(1, &b);
        m.set_column(2, &(&a * 2.0 - &b));
        let f = thin_svd(&emb(m.clone())).unwrap();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.u.shape(), (4, 2));
        assert_eq!(f.v.shape(), (3, 2));
        assert!((f.reconstruct() - m).norm() < 1e-12);
    }

    #[test]
    fn wide_input() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 1.0]);
        let f = thin_svd(&emb(m.clone())).unwrap();
        assert_eq!(f.rank(), 2);
        assert!((f.reconstruct() - m).norm() < 1e-12);
    }

    #[test]
    fn energies_examples() {
        assert_eq!(spectral_energies(&[1.0]).unwrap(), vec![1.0]);
        let r = spectral_energies(&[4.0, 3.0]).unwrap();
        assert!((r[0] - 0.64).abs() < 1e-15);
        assert!((r[1] - 0.36).abs() < 1e-15);
        assert_eq!(spectral_energies(&[0.0, 0.0]).unwrap_err().name(), "EmptySpectrum");
        assert_eq!(spectral_energies(&[-1.0]).unwrap_err().name(), "DomainError");
    }

    #[test]
    fn expansion_examples() {
        for a in [1.0, 2.0, 5.0, 1000.0] {
            assert_eq!(expansion_f(1.0, Alpha::new(a).unwrap()).unwrap(), 1.0);
        }
        for r in [0.0, 0.3, 1.0] {
            assert_eq!(expansion_f(r, Alpha::Finite(1.0)).unwrap(), r);
        }
        assert!((expansion_f(0.25, Alpha::Finite(5.0)).unwrap() - 0.625).abs() < 1e-15);
        assert_eq!(expansion_f(0.5, Alpha::Infinite).unwrap(), 1.0);
        assert_eq!(expansion_f(0.0, Alpha::Infinite).unwrap(), 0.0);
    }

    #[test]
    fn tikhonov_examples() {
        let g = tikhonov_g(0.25, Alpha::Finite(5.0)).unwrap();
        assert!((g - 1.25 / 2.25).abs() < 1e-15);
        assert!((g - 0.555556).abs() < 1e-6);
        assert_eq!(tikhonov_g(0.0, Alpha::Finite(3.0)).unwrap(), 0.0);
        assert_eq!(tikhonov_g(0.5, Alpha::Infinite).unwrap_err().name(), "DomainError");

        let sigma = [4.0, 3.0];
        let lambda = tikhonov_lambda(&sigma, 2.0);
        assert_eq!(lambda, 12.5);
        let r = spectral_energies(&sigma).unwrap();
        for (ri, s) in r.iter().zip(sigma) {
            let classical = s * s / (s * s + 12.5);
            assert!((tikhonov_g(*ri, Alpha::Finite(2.0)).unwrap() - classical).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_domain_errors() {
        assert_eq!(expansion_f(1.5, Alpha::Finite(2.0)).unwrap_err().name(), "DomainError");
        assert_eq!(expansion_f(-0.1, Alpha::Finite(2.0)).unwrap_err().name(), "DomainError");
        assert_eq!(expansion_f(f64::NAN, Alpha::Finite(2.0)).unwrap_err().name(), "DomainError");
        assert_eq!(expansion_f(0.5, Alpha::Finite(0.5)).unwrap_err().name(), "DomainError");
        assert_eq!(tikhonov_g(0.5, Alpha::Finite(0.99)).unwrap_err().name(), "DomainError");
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("inf".parse::<Alpha>().unwrap(), Alpha::Infinite);
        assert_eq!("2".parse::<Alpha>().unwrap(), Alpha::Finite(2.0));
        assert_eq!("1e3".parse::<Alpha>().unwrap(), Alpha::Finite(1000.0));
        assert!("0.5".parse::<Alpha>().is_err());
        assert!("infinity".parse::<Alpha>().is_err());
        assert!("nan".parse::<Alpha>().is_err());
        assert_eq!(
            Alpha::parse_list("1,2,5,10,100,1000,inf").unwrap(),
            Alpha::DEFAULT_GRID.to_vec()
        );
        let json: Vec<Alpha> = serde_json::from_str(r#"[1, 2.5, "inf"]"#).unwrap();
        assert_eq!(json, vec![Alpha::Finite(1.0), Alpha::Finite(2.5), Alpha::Infinite]);
        assert_eq!(serde_json::to_string(&json).unwrap(), r#"[1.0,2.5,"inf"]"#);
        assert!(serde_json::from_str::<Alpha>("0.2").is_err());
    }

    #[test]
    fn hstack_concatenates_columns() {
        let a = EmbeddingMatrix::new(DMatrix::from_element(3, 2, 1.0), "a").unwrap();
        let b = EmbeddingMatrix::new(DMatrix::from_element(3, 1, 2.0), "b").unwrap();
        let s = EmbeddingMatrix::hstack(&[a, b]).unwrap();
        assert_eq!(s.tokens(), 3);
        assert_eq!(s.label(), "a+b");
        assert_eq!(s.matrix()[(0, 2)], 2.0);
        let c = EmbeddingMatrix::new(DMatrix::from_element(4, 1, 2.0), "c").unwrap();
        assert_eq!(
            EmbeddingMatrix::hstack(&[s, c]).unwrap_err().name(),
            "DimensionMismatch"
        );
    }

    #[test]
    fn weights_carry_alpha() {
        let w = SpectralWeights::new(&[4.0, 3.0], Alpha::Finite(1.0)).unwrap();
        assert_eq!(w.r, w.lambda_diag);
        let w = SpectralWeights::new(&[4.0, 3.0], Alpha::Infinite).unwrap();
        assert_eq!(w.lambda_diag, vec![1.0, 1.0]);
    }
}
