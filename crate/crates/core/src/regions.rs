//! Region geometry: block partitions, block norms, membership, and
//! log-space volume formulas for the hypercube and the block-lp regions.
//!
//! Volumes only ever exist here in log form: `(2c)^d` overflows doubles
//! around d ~ 700 already, so raw volumes are never materialized.
//!
//! The sup-norm region is the same code path as the block-lp region with
//! `NormOrder::INFINITY` (the statistic is partition-independent there), so
//! there is no special-cased cube logic to drift.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::ln_gamma;

/// Order of an lp norm: a finite `p >= 1` or the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOrder(Repr);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Repr {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub const INFINITY: NormOrder = NormOrder(Repr::Infinity);

    pub fn finite(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::domain(format!("norm order must satisfy p >= 1, got {p}")));
        }
        Ok(NormOrder(Repr::Finite(p)))
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self.0 {
            Repr::Finite(p) => Some(p),
            Repr::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.0, Repr::Infinity)
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Repr::Finite(p) => write!(f, "{p}"),
            Repr::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "oo" => Ok(NormOrder::INFINITY),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::domain(format!("cannot parse norm order {s:?}")))?;
                NormOrder::finite(p)
            }
        }
    }
}

/// Partition of {0..d-1} into `d/s` blocks of size `s`. Default blocks are
/// contiguous; an optional coordinate permutation is applied before
/// blocking, so block `k` collects coordinates `perm[k*s .. (k+1)*s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    d: usize,
    s: usize,
    permutation: Option<Vec<usize>>,
}

impl BlockPartition {
    /// Contiguous partition; errors unless `s` divides `d`.
    pub fn new(d: usize, s: usize) -> Result<Self> {
        if d < 1 || s < 1 {
            return Err(Error::domain("partition needs d >= 1 and s >= 1"));
        }
        if !d.is_multiple_of(s) {
            return Err(Error::Divisibility { d, s });
        }
        Ok(BlockPartition {
            d,
            s,
            permutation: None,
        })
    }

    /// Same blocking applied after a coordinate permutation.
    pub fn with_permutation(mut self, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != self.d {
            return Err(Error::domain(format!(
                "permutation has length {}, expected {}",
                perm.len(),
                self.d
            )));
        }
        let mut seen = vec![false; self.d];
        for &p in &perm {
            if p >= self.d || seen[p] {
                return Err(Error::domain(format!(
                    "not a permutation of 0..{}: index {p} repeated or out of range",
                    self.d
                )));
            }
            seen[p] = true;
        }
        self.permutation = Some(perm);
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Number of blocks, `d / s`.
    pub fn block_count(&self) -> usize {
        self.d / self.s
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    /// Coordinate indices of block `k`.
    pub fn block(&self, k: usize) -> Vec<usize> {
        let range = k * self.s..(k + 1) * self.s;
        match &self.permutation {
            Some(p) => range.map(|i| p[i]).collect(),
            None => range.collect(),
        }
    }
}

/// Max over blocks of the lp norm of the block subvector. For the sup norm
/// this is `max_i |x_i|` regardless of the partition; blocks of size one
/// reduce to the same thing for every p.
pub fn max_block_norm(x: &[f64], partition: &BlockPartition, p: NormOrder) -> Result<f64> {
    if x.len() != partition.d {
        return Err(Error::domain(format!(
            "vector length {} does not match partition dimension {}",
            x.len(),
            partition.d
        )));
    }
    // Size-one blocks and the sup norm share the exact same statistic;
    // evaluating it the same way keeps the two radii bit-identical when a
    // cell compares them.
    if p.is_infinite() || partition.s == 1 {
        return Ok(sup_norm(x));
    }
    let p = p.as_finite().expect("finite by the branch above");
    let s = partition.s;
    let mut best = 0.0_f64;
    match &partition.permutation {
        None => {
            for block in x.chunks_exact(s) {
                best = best.max(block_lp_norm(block.iter().copied(), p));
            }
        }
        Some(perm) => {
            for k in 0..partition.block_count() {
                let idx = &perm[k * s..(k + 1) * s];
                best = best.max(block_lp_norm(idx.iter().map(|&i| x[i]), p));
            }
        }
    }
    Ok(best)
}

#[inline]
fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

#[inline]
fn block_lp_norm(values: impl Iterator<Item = f64> + Clone, p: f64) -> f64 {
    if p == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else if p == 1.0 {
        values.map(f64::abs).sum()
    } else {
        // Scale by the block maximum so large p stays overflow-free.
        let m = values.clone().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let sum: f64 = values.map(|v| (v.abs() / m).powf(p)).sum();
        m * sum.powf(1.0 / p)
    }
}

/// One confidence region: which blocks, which norm, which radius.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub partition: BlockPartition,
    pub p: NormOrder,
    pub radius: f64,
}

impl RegionSpec {
    pub fn new(partition: BlockPartition, p: NormOrder, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {radius}")));
        }
        Ok(RegionSpec {
            partition,
            p,
            radius,
        })
    }

    /// Membership test; regions are closed, so boundary points belong.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(max_block_norm(x, &self.partition, self.p)? <= self.radius)
    }
}

/// `ln V` of the cube `{ |x_i| <= radius }`: `d * ln(2 radius)`.
pub fn log_volume_cube(d: usize, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    Ok(d as f64 * (2.0 * radius).ln())
}

/// `ln V` of the block-lp region: `d/s` orthogonal cylinders, each an
/// s-dimensional lp ball of the given radius, giving
/// `d * [ln(2 radius) + ln G(1/p + 1) - ln G(s/p + 1) / s]`.
///
/// At `s = 1` the Gamma terms cancel exactly and this equals
/// [`log_volume_cube`] bit for bit.
pub fn log_volume_block_lp(d: usize, s: usize, p: NormOrder, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    let Some(p) = p.as_finite() else {
        return Err(Error::domain(
            "block-lp volume needs a finite norm order; use log_volume_cube for the sup norm",
        ));
    };
    if d < 1 || s < 1 {
        return Err(Error::domain("volume needs d >= 1 and s >= 1"));
    }
    if !d.is_multiple_of(s) {
        return Err(Error::Divisibility { d, s });
    }
    let gamma_term = ln_gamma(1.0 / p + 1.0)? - ln_gamma(s as f64 / p + 1.0)? / s as f64;
    Ok(d as f64 * ((2.0 * radius).ln() + gamma_term))
}

/// Log-volume ratio of the block-lp region against the cube, both total and
/// per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRatio {
    /// `ln V(block region) - ln V(cube)`.
    pub log_ratio: f64,
    /// `log_ratio / d`.
    pub per_dim: f64,
}

pub fn log_volume_ratio(
    d: usize,
    s: usize,
    p: NormOrder,
    radius_p: f64,
    radius_inf: f64,
) -> Result<VolumeRatio> {
    let log_ratio = log_volume_block_lp(d, s, p, radius_p)? - log_volume_cube(d, radius_inf)?;
    Ok(VolumeRatio {
        log_ratio,
        per_dim: log_ratio / d as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN_PI: f64 = 1.1447298858494002;
    const LN_2: f64 = std::f64::consts::LN_2;

    fn p(v: f64) -> NormOrder {
        NormOrder::finite(v).unwrap()
    }

    #[test]
    fn partition_shapes() {
        let part = BlockPartition::new(6, 2).unwrap();
        assert_eq!(part.block_count(), 3);
        assert_eq!(part.block(0), vec![0, 1]);
        assert_eq!(part.block(2), vec![4, 5]);

        assert!(matches!(
            BlockPartition::new(5, 2),
            Err(Error::Divisibility { d: 5, s: 2 })
        ));

        let whole = BlockPartition::new(4, 4).unwrap();
        assert_eq!(whole.block_count(), 1);
        assert_eq!(whole.block(0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn partition_with_permutation() {
        let part = BlockPartition::new(4, 2)
            .unwrap()
            .with_permutation(vec![2, 0, 3, 1])
            .unwrap();
        assert_eq!(part.block(0), vec![2, 0]);
        assert_eq!(part.block(1), vec![3, 1]);

        assert!(BlockPartition::new(4, 2)
            .unwrap()
            .with_permutation(vec![0, 0, 1, 2])
            .is_err());
    }

    #[test]
    fn block_norms_by_hand() {
        let part = BlockPartition::new(4, 2).unwrap();
        let x = [3.0, 4.0, 0.0, 0.0];
        assert_eq!(max_block_norm(&x, &part, p(2.0)).unwrap(), 5.0);
        assert_eq!(max_block_norm(&x, &part, p(1.0)).unwrap(), 7.0);
        assert_eq!(max_block_norm(&x, &part, NormOrder::INFINITY).unwrap(), 4.0);

        let whole = BlockPartition::new(4, 4).unwrap();
        assert_eq!(max_block_norm(&x, &whole, NormOrder::INFINITY).unwrap(), 4.0);
    }

    #[test]
    fn block_norm_respects_permutation() {
        // perm pairs coordinates (0,2) and (1,3).
        let part = BlockPartition::new(4, 2)
            .unwrap()
            .with_permutation(vec![0, 2, 1, 3])
            .unwrap();
        let x = [3.0, 0.0, 4.0, 0.0];
        assert_eq!(max_block_norm(&x, &part, p(2.0)).unwrap(), 5.0);
    }

    #[test]
    fn block_norm_dimension_mismatch() {
        let part = BlockPartition::new(4, 2).unwrap();
        assert!(max_block_norm(&[1.0, 2.0], &part, p(2.0)).is_err());
    }

    #[test]
    fn size_one_blocks_equal_sup_norm_bitwise() {
        let part = BlockPartition::new(5, 1).unwrap();
        let x = [0.1, -2.5, 1.00000000001, 2.4999999999, 0.0];
        for order in [p(1.0), p(2.0), p(3.7), NormOrder::INFINITY] {
            let v = max_block_norm(&x, &part, order).unwrap();
            assert_eq!(v.to_bits(), 2.5f64.to_bits());
        }
    }

    #[test]
    fn membership_boundary_and_interior() {
        let cube = RegionSpec::new(BlockPartition::new(3, 1).unwrap(), NormOrder::INFINITY, 1.0)
            .unwrap();
        assert!(cube.contains(&[1.0, 1.0, 1.0]).unwrap());
        assert!(cube.contains(&[0.0, 0.0, 0.0]).unwrap());
        assert!(!cube.contains(&[1.0, -1.0001, 0.0]).unwrap());

        let disk = RegionSpec::new(BlockPartition::new(4, 2).unwrap(), p(2.0), 1.0).unwrap();
        // sqrt(2 * 0.81) ~ 1.2728 > 1
        assert!(!disk.contains(&[0.9, 0.9, 0.0, 0.0]).unwrap());
        assert!(disk.contains(&[0.0; 4]).unwrap());
    }

    #[test]
    fn cube_volume_values() {
        assert_eq!(log_volume_cube(1, 0.5).unwrap(), 0.0);
        assert!((log_volume_cube(2, 1.0).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert!((log_volume_cube(100, 2.0).unwrap() - 100.0 * 4.0f64.ln()).abs() < 1e-12);
        assert!(log_volume_cube(3, 0.0).is_err());
    }

    #[test]
    fn block_volume_analytic_cases() {
        // Unit disk area: ln pi.
        let disk = log_volume_block_lp(2, 2, p(2.0), 1.0).unwrap();
        assert!((disk - LN_PI).abs() < 1e-12, "{disk}");
        // Unit cross-polytope in the plane has area 2.
        let cross = log_volume_block_lp(2, 2, p(1.0), 1.0).unwrap();
        assert!((cross - LN_2).abs() < 1e-12, "{cross}");
    }

    #[test]
    fn block_volume_at_s1_equals_cube_exactly() {
        for d in [1, 2, 7, 100, 701] {
            for order in [1.0, 2.0, 3.5, 17.0] {
                for r in [0.3, 1.0, 2.0] {
                    let a = log_volume_block_lp(d, 1, p(order), r).unwrap();
                    let b = log_volume_cube(d, r).unwrap();
                    assert_eq!(a.to_bits(), b.to_bits(), "d={d} p={order} r={r}");
                }
            }
        }
    }

    #[test]
    fn volume_ratio_disk_vs_square_and_identity() {
        let r = log_volume_ratio(2, 2, p(2.0), 1.0, 1.0).unwrap();
        assert!((r.log_ratio - (-0.24156447527049044)).abs() < 1e-12);
        assert!((r.log_ratio - 2.0 * r.per_dim).abs() <= 1e-12 * r.log_ratio.abs());

        let same = log_volume_ratio(64, 1, p(2.0), 1.7, 1.7).unwrap();
        assert_eq!(same.log_ratio, 0.0);
        assert_eq!(same.per_dim, 0.0);
    }

    #[test]
    fn block_volume_matches_grid_integration_oracle() {
        // Deterministic midpoint-grid integration of the indicator of the
        // s-dimensional lp ball, checked against the Gamma formula.
        for (s, order, r, cells) in [
            (1, 2.0, 1.5, 100_001),
            (2, 1.0, 1.0, 2_001),
            (2, 2.0, 1.0, 2_001),
            (2, 3.5, 0.8, 2_001),
            (3, 2.0, 1.0, 401),
            (3, 1.0, 1.2, 401),
        ] {
            let exact = log_volume_block_lp(s, s, p(order), r).unwrap().exp();
            let grid = lp_ball_volume_by_grid(s, order, r, cells);
            assert!(
                (grid - exact).abs() <= 1e-2 * exact,
                "s={s} p={order} r={r}: grid {grid} vs formula {exact}"
            );
        }
    }

    /// Midpoint rule on [-r, r]^s: counts cell centers with
    /// sum |x_i|^p <= r^p. Per-axis powers are precomputed once.
    fn lp_ball_volume_by_grid(s: usize, order: f64, r: f64, cells: usize) -> f64 {
        let h = 2.0 * r / cells as f64;
        let axis_pow: Vec<f64> = (0..cells)
            .map(|c| (-r + (c as f64 + 0.5) * h).abs().powf(order))
            .collect();
        let r_pow = r.powf(order);
        let total_cells = (cells as u64).pow(s as u32);
        let mut inside = 0u64;
        for flat in 0..total_cells {
            let mut rem = flat;
            let mut sum = 0.0;
            for _ in 0..s {
                sum += axis_pow[(rem % cells as u64) as usize];
                rem /= cells as u64;
            }
            if sum <= r_pow {
                inside += 1;
            }
        }
        inside as f64 * h.powi(s as i32)
    }

    #[test]
    fn norm_order_parsing_and_display() {
        assert_eq!("2".parse::<NormOrder>().unwrap(), p(2.0));
        assert_eq!("inf".parse::<NormOrder>().unwrap(), NormOrder::INFINITY);
        assert_eq!("Infinity".parse::<NormOrder>().unwrap(), NormOrder::INFINITY);
        assert!("0.5".parse::<NormOrder>().is_err());
        assert!("abc".parse::<NormOrder>().is_err());
        assert_eq!(p(2.0).to_string(), "2");
        assert_eq!(NormOrder::INFINITY.to_string(), "inf");
    }

    proptest! {
        #[test]
        fn block_norm_is_nonincreasing_in_p(
            xs in prop::collection::vec(-10.0f64..10.0, 12),
            s in prop::sample::select(vec![1usize, 2, 3, 4, 6, 12]),
        ) {
            let part = BlockPartition::new(12, s).unwrap();
            let orders = [1.0, 1.5, 2.0, 3.0, 8.0];
            let mut prev = f64::INFINITY;
            for o in orders {
                let v = max_block_norm(&xs, &part, p(o)).unwrap();
                prop_assert!(v <= prev + 1e-9 * prev.abs().max(1.0));
                prev = v;
            }
            let sup = max_block_norm(&xs, &part, NormOrder::INFINITY).unwrap();
            prop_assert!(sup <= prev + 1e-9 * prev.abs().max(1.0));
        }

        #[test]
        fn membership_is_monotone_in_radius(
            xs in prop::collection::vec(-5.0f64..5.0, 8),
            r1 in 0.1f64..3.0,
            grow in 0.0f64..2.0,
        ) {
            let part = BlockPartition::new(8, 2).unwrap();
            let small = RegionSpec::new(part.clone(), p(2.0), r1).unwrap();
            let large = RegionSpec::new(part, p(2.0), r1 + grow).unwrap();
            if small.contains(&xs).unwrap() {
                prop_assert!(large.contains(&xs).unwrap());
            }
        }

        #[test]
        fn s1_volume_identity_property(
            d in 1usize..600,
            order in 1.0f64..20.0,
            r in 0.05f64..5.0,
        ) {
            let a = log_volume_block_lp(d, 1, p(order), r).unwrap();
            let b = log_volume_cube(d, r).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
