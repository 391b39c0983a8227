//! Closed-form quantities behind the volume-decay argument, used as oracles
//! and diagnostics: the expectation bound on a block norm, the per-dimension
//! ratio bound, and the smallest block size that pushes the ratio bound
//! below one.
//!
//! The two absorbed proof constants are not computable from first
//! principles here, so their ratio enters as an explicit diagnostic input
//! (`c_over_c`) instead of a pretend derivation.

use crate::error::{Error, Result};
use crate::numerics::ln_gamma;

/// Cap for the [`minimal_sparsity`] linear scan.
pub const SPARSITY_SCAN_CAP: u64 = 1_000_000;

/// Diagnostic regime for the ratio bound: a norm order `p >= 2`, a block
/// size, and the constant ratio.
#[derive(Debug, Clone, Copy)]
pub struct TheoremRegime {
    pub p: f64,
    pub s: usize,
    pub c_over_c: f64,
}

impl TheoremRegime {
    pub fn new(p: f64, s: usize, c_over_c: f64) -> Result<Self> {
        if p < 2.0 {
            return Err(Error::domain(format!("regime requires p >= 2, got {p}")));
        }
        if s < 1 {
            return Err(Error::domain("regime requires s >= 1"));
        }
        if !(c_over_c > 0.0) {
            return Err(Error::domain(format!(
                "constant ratio must be positive, got {c_over_c}"
            )));
        }
        Ok(TheoremRegime { p, s, c_over_c })
    }

    /// The ratio bound evaluated at this regime's parameters.
    pub fn ratio_root_bound(&self) -> Result<f64> {
        ratio_root_bound(self.s, self.p, self.c_over_c)
    }

    /// Whether the dimension is large enough for the absorbed constant to
    /// be free of `s` (`log d > s`). Diagnostic only; never an error.
    pub fn constant_regime_applies(&self, d: usize) -> bool {
        (d as f64).ln() > self.s as f64
    }
}

/// Upper bound on the expected block norm: `s^(1/p) * sqrt(lambda_max)`,
/// valid for `p >= 2`.
pub fn expectation_upper_bound(s: usize, p: f64, lambda_max: f64) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::domain(format!(
            "the expectation bound only holds for p >= 2, got {p}"
        )));
    }
    if s < 1 {
        return Err(Error::domain("s must be at least 1"));
    }
    if !(lambda_max > 0.0) {
        return Err(Error::domain(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    Ok((s as f64).powf(1.0 / p) * lambda_max.sqrt())
}

/// Per-dimension volume-ratio bound
/// `G(1/p + 1) * s^(1/p - 1/2) * c_over_c / G(s/p + 1)^(1/s)`,
/// evaluated in log space so large `s` cannot overflow.
pub fn ratio_root_bound(s: usize, p: f64, c_over_c: f64) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::domain(format!(
            "the ratio bound only holds for p >= 2, got {p}"
        )));
    }
    if s < 1 {
        return Err(Error::domain("s must be at least 1"));
    }
    if !(c_over_c > 0.0) {
        return Err(Error::domain(format!(
            "constant ratio must be positive, got {c_over_c}"
        )));
    }
    let s_f = s as f64;
    let log_bound = ln_gamma(1.0 / p + 1.0)? + (1.0 / p - 0.5) * s_f.ln() + c_over_c.ln()
        - ln_gamma(s_f / p + 1.0)? / s_f;
    Ok(log_bound.exp())
}

/// Smallest integer `s` with `ratio_root_bound(s, p, c_over_c) < 1`, by
/// linear scan. The Gamma growth guarantees existence; the scan is still
/// capped so extreme diagnostic regimes fail loudly instead of spinning.
pub fn minimal_sparsity(p: f64, c_over_c: f64) -> Result<u64> {
    for s in 1..=SPARSITY_SCAN_CAP {
        if ratio_root_bound(s as usize, p, c_over_c)? < 1.0 {
            return Ok(s);
        }
    }
    Err(Error::ScanExhausted {
        cap: SPARSITY_SCAN_CAP,
    })
}
