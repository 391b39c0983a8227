//! Block-norm confidence regions for high-dimensional centered Gaussians.
//!
//! The library compares two region families for `X ~ N(0, Sigma)`: the
//! hypercube `{ ||x||_inf <= c_inf }` and the block region
//! `{ max_k ||x_{J_k}||_p <= c_p }` built from `d/s` disjoint coordinate
//! blocks of size `s`. Radii are `(1 - alpha)` quantiles of the matching
//! max statistics, estimated by seeded streaming Monte Carlo; volumes are
//! compared in log space, where the block region's advantage (or not) is
//! linear in the dimension.
//!
//! Modules, bottom up:
//!
//! - [`numerics`]: `ln_gamma`, dense Cholesky, power iteration.
//! - [`covariance`]: the AR(1) Toeplitz family, explicit SPD matrices,
//!   coordinate permutations, the `(1+c)/(1-c)` eigenvalue bound.
//! - [`sampling`]: seeded, batch-parallel Gaussian streams with per-vector
//!   sub-seeding so results never depend on thread count or batch size.
//! - [`regions`]: partitions, block norms, membership, log-volumes.
//! - [`quantiles`]: order-statistic radius estimation and the closed-form
//!   concentration threshold that dominates it for `p >= 2`.
//! - [`bounds`]: the Gamma-growth diagnostics behind the decay argument.
//! - [`experiment`]: the grid runner, CSV schema, and slope fits behind
//!   the `regionvol` CLI.

// Comparisons are written in NaN-rejecting form (`!(x > 0.0)`) on purpose,
// and the dense-matrix kernels index in the conventional i/j style.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod covariance;
pub mod error;
pub mod experiment;
pub mod numerics;
pub mod quantiles;
pub mod regions;
pub mod sampling;

pub use error::{Error, Result};
