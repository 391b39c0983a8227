//! Empirical quantile estimation of the max-block-norm statistic, producing
//! the region radii, plus the closed-form concentration threshold that
//! dominates them for p >= 2.
//!
//! The estimator is the plain ascending order statistic with index
//! `k = ceil((1 - alpha) * n)`, no interpolation: at least a `(1 - alpha)`
//! fraction of the sample sits at or below the returned value, so re-testing
//! the same batch against the radius always covers by construction. Ties
//! resolve through the index itself.

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::regions::{max_block_norm, BlockPartition, NormOrder};
use crate::sampling::{map_sample_batches, SampleStreamConfig};

/// Quantile level and sample-size request for radius estimation.
#[derive(Debug, Clone, Copy)]
pub struct QuantileSpec {
    alpha: f64,
    n: usize,
}

impl QuantileSpec {
    /// Default sample count; large enough that the 0.95 quantile of the
    /// max statistic carries only third-digit noise.
    pub const DEFAULT_N: usize = 100_000;

    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 0.5), got {alpha}"
            )));
        }
        if n < 1 {
            return Err(Error::domain("sample count must be at least 1"));
        }
        Ok(QuantileSpec { alpha, n })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Realized values of a scalar statistic, sorted ascending.
#[derive(Debug, Clone)]
pub struct StatisticBatch {
    values: Vec<f64>,
}

impl StatisticBatch {
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_unstable_by(f64::total_cmp);
        StatisticBatch { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted values, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// 1-based order-statistic index of the `(1 - alpha)` empirical quantile.
fn order_index(n: usize, alpha: f64) -> usize {
    let k = ((1.0 - alpha) * n as f64).ceil() as usize;
    k.clamp(1, n)
}

/// The `(1 - alpha)` empirical quantile: the `ceil((1 - alpha) n)`-th
/// ascending order statistic.
pub fn empirical_quantile(batch: &StatisticBatch, alpha: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::domain("empirical quantile of an empty batch"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 0.5), got {alpha}"
        )));
    }
    Ok(batch.values[order_index(batch.len(), alpha) - 1])
}

/// Distribution-free standard error of the empirical quantile, from the
/// binomial bracket of order statistics: the values at
/// `k -/+ ceil(3 sqrt(n alpha (1-alpha)))` span about six standard errors.
pub fn quantile_standard_error(batch: &StatisticBatch, alpha: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::domain("standard error of an empty batch"));
    }
    let n = batch.len();
    let k = order_index(n, alpha);
    let delta = (3.0 * (n as f64 * alpha * (1.0 - alpha)).sqrt()).ceil() as usize;
    let lo = k.saturating_sub(delta).max(1);
    let hi = (k + delta).min(n);
    Ok((batch.values[hi - 1] - batch.values[lo - 1]) / 6.0)
}

/// Radius estimate together with the retained statistic sample.
#[derive(Debug, Clone)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub batch: StatisticBatch,
}

/// Streams `spec.n` Gaussian vectors and reduces each one to its
/// max-block-norm statistic immediately (memory stays O(n + d*batch)),
/// then extracts the empirical quantile. The batch is returned for reuse.
pub fn estimate_region_radius(
    model: &CovarianceModel,
    partition: &BlockPartition,
    p: NormOrder,
    spec: &QuantileSpec,
    seed: u64,
) -> Result<RadiusEstimate> {
    if partition.d() != model.dim() {
        return Err(Error::domain(format!(
            "partition dimension {} does not match model dimension {}",
            partition.d(),
            model.dim()
        )));
    }
    let cfg = SampleStreamConfig::new(spec.n, seed);
    let stats = map_sample_batches(model, &cfg, |batch| {
        batch
            .rows()
            .map(|row| max_block_norm(row, partition, p))
            .collect()
    })?;
    let batch = StatisticBatch::from_unsorted(stats);
    let radius = empirical_quantile(&batch, spec.alpha)?;
    Ok(RadiusEstimate { radius, batch })
}

/// Both radii of a cell from one shared sample stream: the block-lp
/// statistic and the sup-norm statistic are reduced from the same vectors,
/// so their ratio carries far less Monte Carlo noise and the s = 1 case
/// yields bit-identical radii.
pub struct DualRadii {
    pub lp: RadiusEstimate,
    pub sup: RadiusEstimate,
}

pub fn estimate_dual_radii(
    model: &CovarianceModel,
    partition: &BlockPartition,
    p: NormOrder,
    spec: &QuantileSpec,
    seed: u64,
) -> Result<DualRadii> {
    if partition.d() != model.dim() {
        return Err(Error::domain(format!(
            "partition dimension {} does not match model dimension {}",
            partition.d(),
            model.dim()
        )));
    }
    let cfg = SampleStreamConfig::new(spec.n, seed);
    let pairs: Vec<(f64, f64)> = map_sample_batches(model, &cfg, |batch| {
        batch
            .rows()
            .map(|row| {
                let lp = max_block_norm(row, partition, p)?;
                let sup = max_block_norm(row, partition, NormOrder::INFINITY)?;
                Ok((lp, sup))
            })
            .collect()
    })?;
    let (lp_values, sup_values): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();

    let lp_batch = StatisticBatch::from_unsorted(lp_values);
    let sup_batch = StatisticBatch::from_unsorted(sup_values);
    let lp_radius = empirical_quantile(&lp_batch, spec.alpha)?;
    let sup_radius = empirical_quantile(&sup_batch, spec.alpha)?;
    Ok(DualRadii {
        lp: RadiusEstimate {
            radius: lp_radius,
            batch: lp_batch,
        },
        sup: RadiusEstimate {
            radius: sup_radius,
            batch: sup_batch,
        },
    })
}

/// Concentration threshold dominating the block-lp radius for `p >= 2`:
///
/// `s^(1/p - 1/2) * sqrt(2 lambda_max log(d / (alpha s))) + s^(1/p) * sqrt(lambda_max)`
pub fn quantile_upper_bound(
    s: usize,
    p: f64,
    lambda_max: f64,
    d: usize,
    alpha: f64,
) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::domain(format!(
            "the concentration bound only holds for p >= 2, got {p}"
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
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let log_arg = d as f64 / (alpha * s as f64);
    if log_arg <= 1.0 {
        return Err(Error::domain(format!(
            "bound needs d / (alpha s) > 1, got {log_arg}"
        )));
    }
    let s = s as f64;
    let tail = s.powf(1.0 / p - 0.5) * (2.0 * lambda_max * log_arg.ln()).sqrt();
    let mean = s.powf(1.0 / p) * lambda_max.sqrt();
    Ok(tail + mean)
}
