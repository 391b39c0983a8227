//! Gaussian covariance structures: the Toeplitz AR(1) family and explicit
//! SPD matrices, plus the closed-form eigenvalue bound for the Toeplitz case.
//!
//! Models are immutable after construction and freely shareable across
//! threads. Toeplitz models are never materialized on the sampling path;
//! [`CovarianceModel::materialize`] exists for tests and small-dimension
//! oracle comparisons.

use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, SquareMat, DENSE_DIM_CAP};

/// The covariance family of a model.
#[derive(Debug, Clone)]
pub enum CovarianceKind {
    /// `Sigma[i][j] = c^|i-j|` with `0 <= c < 1`.
    Toeplitz { c: f64 },
    /// An explicit symmetric positive-definite matrix.
    Explicit(SquareMat),
}

/// A d-dimensional centered Gaussian covariance.
///
/// A Toeplitz model may carry a coordinate permutation: the permuted model
/// has entries `Sigma[perm(i)][perm(j)]` and is sampled by permuting the
/// coordinates of a base AR(1) vector, which is distributionally identical
/// and keeps sampling O(d). Permutations on explicit models are folded into
/// the matrix eagerly.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    d: usize,
    kind: CovarianceKind,
    permutation: Option<Vec<usize>>,
}

impl CovarianceModel {
    /// The AR(1) Toeplitz model `Sigma[i][j] = c^|i-j|`.
    pub fn toeplitz(d: usize, c: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !(0.0..1.0).contains(&c) {
            return Err(Error::domain(format!(
                "Toeplitz correlation must satisfy 0 <= c < 1, got {c}"
            )));
        }
        Ok(CovarianceModel {
            d,
            kind: CovarianceKind::Toeplitz { c },
            permutation: None,
        })
    }

    /// An explicit SPD model. The matrix must be symmetric and pass a
    /// Cholesky factorization with strictly positive pivots.
    pub fn explicit(matrix: SquareMat) -> Result<Self> {
        let d = matrix.dim();
        if d < 1 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        for i in 0..d {
            for j in 0..i {
                let a = matrix.at(i, j);
                let b = matrix.at(j, i);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::domain(format!(
                        "explicit covariance is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        cholesky_lower(&matrix)?;
        Ok(CovarianceModel {
            d,
            kind: CovarianceKind::Explicit(matrix),
            permutation: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &CovarianceKind {
        &self.kind
    }

    /// The recorded coordinate permutation, if any (Toeplitz models only).
    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    /// Entry (i, j) of the model, permutation included. 0-indexed.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (pi, pj) = match &self.permutation {
            Some(p) => (p[i], p[j]),
            None => (i, j),
        };
        match &self.kind {
            CovarianceKind::Toeplitz { c } => c.powi((pi as i64 - pj as i64).unsigned_abs() as i32),
            CovarianceKind::Explicit(m) => m.at(pi, pj),
        }
    }

    /// Dense matrix of the model. Capped at [`DENSE_DIM_CAP`].
    pub fn materialize(&self) -> Result<SquareMat> {
        if self.d > DENSE_DIM_CAP {
            return Err(Error::SizeCap {
                d: self.d,
                cap: DENSE_DIM_CAP,
            });
        }
        Ok(SquareMat::from_fn(self.d, |i, j| self.entry(i, j)))
    }

    /// Model with coordinates permuted: `Sigma'[i][j] = Sigma[perm(i)][perm(j)]`.
    ///
    /// For Toeplitz models the permutation is recorded and applied at
    /// sampling time; explicit models get a new materialized matrix.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        validate_permutation(perm, self.d)?;
        match &self.kind {
            CovarianceKind::Toeplitz { .. } => {
                // Compose with any existing permutation: entry lookups go
                // through the new permutation first.
                let composed = match &self.permutation {
                    Some(existing) => perm.iter().map(|&i| existing[i]).collect(),
                    None => perm.to_vec(),
                };
                Ok(CovarianceModel {
                    d: self.d,
                    kind: self.kind.clone(),
                    permutation: Some(composed),
                })
            }
            CovarianceKind::Explicit(m) => {
                let permuted = SquareMat::from_fn(self.d, |i, j| m.at(perm[i], perm[j]));
                Ok(CovarianceModel {
                    d: self.d,
                    kind: CovarianceKind::Explicit(permuted),
                    permutation: None,
                })
            }
        }
    }
}

/// The Toeplitz eigenvalue bound `(1+c)/(1-c)`: every eigenvalue of
/// `Sigma_c` lies below it, at any dimension.
pub fn one_norm_eigen_bound(c: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::domain(format!(
            "eigenvalue bound requires 0 <= c < 1, got {c}"
        )));
    }
    Ok((1.0 + c) / (1.0 - c))
}

fn validate_permutation(perm: &[usize], d: usize) -> Result<()> {
    if perm.len() != d {
        return Err(Error::domain(format!(
            "permutation has length {}, expected {d}",
            perm.len()
        )));
    }
    let mut seen = vec![false; d];
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::domain(format!(
                "not a permutation of 0..{d}: index {p} repeated or out of range"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}
