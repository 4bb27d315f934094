// SPDX-License-Identifier: MIT OR Apache-2.0

//! Forget/retain alignment operators and the unlearning operator.
//!
//! `P_f = U_f Λ_f U_fᵀ` and `P_r = U_r Λ_r U_rᵀ` with `Λ = diag(f(r_i; α))`.
//! The discriminative operator `P_dis = P_f − P_f P_r` keeps the part of the
//! forget subspace not shared with the retain subspace, and
//! `P_unlearn = I − P_dis` removes it.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{Alpha, SpectralWeights, SvdFactors};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Forget,
    Retain,
    Discriminative,
    Unlearn,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Forget => "forget",
            Role::Retain => "retain",
            Role::Discriminative => "discriminative",
            Role::Unlearn => "unlearn",
        })
    }
}

/// A dense `d × d` operator tagged with the role it plays in the erasure.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionOperator {
    matrix: DMatrix<f64>,
    role: Role,
    alpha: Alpha,
    source_labels: Vec<String>,
}

impl ProjectionOperator {
    /// Wraps an arbitrary square matrix. Used for identity edits and for
    /// operators computed outside this module.
    pub fn from_matrix(
        matrix: DMatrix<f64>,
        role: Role,
        alpha: Alpha,
        source_labels: Vec<String>,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::mismatch(
                "projection operator columns",
                matrix.nrows(),
                matrix.ncols(),
            ));
        }
        crate::spectra::check_finite(&matrix, "projection operator")?;
        Ok(Self {
            matrix,
            role,
            alpha,
            source_labels,
        })
    }

    /// The identity operator with the `unlearn` role (a no-op edit).
    pub fn identity(d: usize) -> Self {
        Self {
            matrix: DMatrix::identity(d, d),
            role: Role::Unlearn,
            alpha: Alpha::Finite(1.0),
            source_labels: Vec::new(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn source_labels(&self) -> &[String] {
        &self.source_labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, e: &DVector<f64>) -> Result<DVector<f64>> {
        if e.len() != self.dim() {
            return Err(Error::mismatch("operator application", self.dim(), e.len()));
        }
        Ok(&self.matrix * e)
    }

    fn expect_role(&self, expected: &[Role]) -> Result<()> {
        if expected.contains(&self.role) {
            Ok(())
        } else {
            Err(Error::RoleError {
                expected: expected
                    .iter()
                    .map(Role::to_string)
                    .collect::<Vec<_>>()
                    .join(" or "),
                found: self.role.to_string(),
            })
        }
    }
}

/// Builds `U diag(f(r_i; α)) Uᵀ`, symmetrized, tagged `forget` or `retain`.
pub fn build_projector(factors: &SvdFactors, alpha: Alpha, role: Role) -> Result<ProjectionOperator> {
    if !matches!(role, Role::Forget | Role::Retain) {
        return Err(Error::RoleError {
            expected: "forget or retain".into(),
            found: role.to_string(),
        });
    }
    let weights = SpectralWeights::new(factors.sigma.as_slice(), alpha)?;
    let mut scaled = factors.u.clone();
    for (j, w) in weights.lambda_diag.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    let p = scaled * factors.u.transpose();
    let matrix = (&p + p.transpose()) * 0.5;
    Ok(ProjectionOperator {
        matrix,
        role,
        alpha,
        source_labels: vec![factors.label.clone()],
    })
}

/// `P_dis = P_f − P_f P_r`, or `P_f` itself when there is no retain set.
///
/// The result is not symmetrized.
pub fn compose_discriminative(
    forget: &ProjectionOperator,
    retain: Option<&ProjectionOperator>,
) -> Result<ProjectionOperator> {
    forget.expect_role(&[Role::Forget])?;
    let mut labels = forget.source_labels.clone();
    let matrix = match retain {
        None => forget.matrix.clone(),
        Some(retain) => {
            retain.expect_role(&[Role::Retain])?;
            if retain.dim() != forget.dim() {
                return Err(Error::mismatch(
                    "retain operator dimension",
                    forget.dim(),
                    retain.dim(),
                ));
            }
            labels.extend(retain.source_labels.iter().cloned());
            let mut m = forget.matrix.clone();
            m.gemm(-1.0, &forget.matrix, &retain.matrix, 1.0);
            m
        }
    };
    Ok(ProjectionOperator {
        matrix,
        role: Role::Discriminative,
        alpha: forget.alpha,
        source_labels: labels,
    })
}

/// `P_unlearn = I − P_dis`.
pub fn unlearn_operator(dis: &ProjectionOperator) -> Result<ProjectionOperator> {
    dis.expect_role(&[Role::Discriminative])?;
    let d = dis.dim();
    let matrix = DMatrix::identity(d, d) - &dis.matrix;
    Ok(ProjectionOperator {
        matrix,
        role: Role::Unlearn,
        alpha: dis.alpha,
        source_labels: dis.source_labels.clone(),
    })
}

/// Full operator pipeline from forget (and optional retain) factors.
pub fn erasure_operator(
    forget: &SvdFactors,
    retain: Option<&SvdFactors>,
    alpha: Alpha,
) -> Result<ProjectionOperator> {
    let pf = build_projector(forget, alpha, Role::Forget)?;
    let pr = retain
        .map(|r| build_projector(r, alpha, Role::Retain))
        .transpose()?;
    let dis = compose_discriminative(&pf, pr.as_ref())?;
    unlearn_operator(&dis)
}
