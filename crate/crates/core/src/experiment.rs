//! Grid experiment runner: per-cell quantile estimation, log-volume ratios,
//! coverage checks, permutation variants, and deterministic CSV output.
//!
//! Seeding scheme: cell `k` of a grid uses
//! `cell_seed = splitmix_mix(master_seed, k)` where `k` is the cell's
//! position in the full cross-product enumeration (c outermost, then p,
//! then s, then d), counting skipped cells too. Within a cell, the
//! coverage stream and the blocking permutation derive their own seeds
//! from the cell seed with fixed tags, so they are reproducible from the
//! CSV's `cell_seed` column alone and independent of the estimation stream.
//!
//! Cells execute in parallel; output order and content depend only on the
//! configuration, never on the number of worker threads.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::covariance::{one_norm_eigen_bound, CovarianceModel};
use crate::error::{Error, Result};
use crate::quantiles::{
    estimate_dual_radii, quantile_standard_error, quantile_upper_bound, QuantileSpec,
};
use crate::regions::{log_volume_ratio, max_block_norm, BlockPartition, NormOrder};
use crate::sampling::{map_sample_batches, splitmix_mix, SampleStreamConfig, SplitMix64};

/// Seed tag for the fresh coverage stream (ASCII "coverage").
const COVERAGE_SEED_TAG: u64 = 0x636f_7665_7261_6765;
/// Seed tag for the blocking permutation (ASCII "blockprm").
const PERMUTATION_SEED_TAG: u64 = 0x626c_6f63_6b70_726d;

/// Exact CSV column set, in declared order.
pub const CSV_HEADER: &str = "d,s,p,c,alpha,n,cell_seed,permuted,c_p,c_inf,log_vol_ratio,log_vol_ratio_per_dim,xbar_p,lambda_max_bound,coverage_p,coverage_inf";

/// Full grid request.
#[derive(Debug, Clone)]
pub struct GridConfig {
    pub d_values: Vec<usize>,
    pub s_values: Vec<usize>,
    /// Finite norm orders; the sup-norm radius is always estimated per cell.
    pub p_values: Vec<NormOrder>,
    pub c_values: Vec<f64>,
    pub alpha: f64,
    pub n: usize,
    pub master_seed: u64,
    pub permute: bool,
    /// Fresh-sample count for coverage estimation; 0 disables coverage.
    pub coverage_n: usize,
}

impl GridConfig {
    pub const DEFAULT_ALPHA: f64 = 0.05;
    pub const DEFAULT_N: usize = 100_000;
    pub const DEFAULT_SEED: u64 = 42;
    pub const DEFAULT_COVERAGE_N: usize = 100_000;

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::config(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if self.n < 1 {
            return Err(Error::config("n must be at least 1"));
        }
        for p in &self.p_values {
            if p.is_infinite() {
                return Err(Error::config(
                    "grid p-values must be finite; the sup-norm radius is computed in every cell",
                ));
            }
        }
        for &c in &self.c_values {
            if !(0.0..1.0).contains(&c) {
                return Err(Error::config(format!("c must lie in [0, 1), got {c}")));
            }
        }
        if self.d_values.is_empty()
            || self.s_values.is_empty()
            || self.p_values.is_empty()
            || self.c_values.is_empty()
        {
            return Err(Error::config("empty effective grid: a value list is empty"));
        }
        Ok(())
    }
}

/// Everything one cell needs.
#[derive(Debug, Clone)]
pub struct CellParams {
    pub d: usize,
    pub s: usize,
    pub p: NormOrder,
    pub c: f64,
    pub alpha: f64,
    pub n: usize,
    pub cell_seed: u64,
    pub permute: bool,
    pub coverage_n: usize,
}

/// One grid cell's outputs, in CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub d: usize,
    pub s: usize,
    pub p: f64,
    pub c: f64,
    pub alpha: f64,
    pub n: usize,
    pub cell_seed: u64,
    pub permuted: bool,
    pub c_p: f64,
    pub c_inf: f64,
    pub log_vol_ratio: f64,
    pub log_vol_ratio_per_dim: f64,
    /// Concentration threshold; absent for p < 2 where it is undefined.
    pub xbar_p: Option<f64>,
    pub lambda_max_bound: f64,
    pub coverage_p: Option<f64>,
    pub coverage_inf: Option<f64>,
}

/// Record plus Monte Carlo diagnostics that do not travel in the CSV.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub record: ExperimentRecord,
    /// Order-statistic standard error of `c_p`.
    pub se_p: f64,
    /// Order-statistic standard error of `c_inf`.
    pub se_inf: f64,
}

/// The blocking permutation a permuted cell uses, derived from its seed.
pub fn cell_permutation(d: usize, cell_seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..d).collect();
    let mut rng = SplitMix64::new(splitmix_mix(cell_seed, PERMUTATION_SEED_TAG));
    perm.shuffle(&mut rng);
    perm
}

/// Run one experiment cell: estimate both radii from one shared stream,
/// form the log-volume ratio, attach the concentration threshold and the
/// eigenvalue bound, and (optionally) measure fresh-sample coverage.
pub fn run_cell(params: &CellParams) -> Result<CellOutput> {
    let p_finite = params
        .p
        .as_finite()
        .ok_or_else(|| Error::domain("cells need a finite norm order"))?;
    let mut partition = BlockPartition::new(params.d, params.s)?;
    if params.permute {
        partition = partition.with_permutation(cell_permutation(params.d, params.cell_seed))?;
    }
    let model = CovarianceModel::toeplitz(params.d, params.c)?;
    let spec = QuantileSpec::new(params.alpha, params.n)?;

    let dual = estimate_dual_radii(&model, &partition, params.p, &spec, params.cell_seed)?;
    let ratio = log_volume_ratio(
        params.d,
        params.s,
        params.p,
        dual.lp.radius,
        dual.sup.radius,
    )?;
    let lambda_max_bound = one_norm_eigen_bound(params.c)?;
    let xbar_p = quantile_upper_bound(
        params.s,
        p_finite,
        lambda_max_bound,
        params.d,
        params.alpha,
    )
    .ok();

    let (coverage_p, coverage_inf) = if params.coverage_n > 0 {
        let (hits_p, hits_inf) = coverage_counts(
            &model,
            &partition,
            params.p,
            dual.lp.radius,
            dual.sup.radius,
            params.coverage_n,
            splitmix_mix(params.cell_seed, COVERAGE_SEED_TAG),
        )?;
        let m = params.coverage_n as f64;
        (Some(hits_p as f64 / m), Some(hits_inf as f64 / m))
    } else {
        (None, None)
    };

    let se_p = quantile_standard_error(&dual.lp.batch, params.alpha)?;
    let se_inf = quantile_standard_error(&dual.sup.batch, params.alpha)?;

    Ok(CellOutput {
        record: ExperimentRecord {
            d: params.d,
            s: params.s,
            p: p_finite,
            c: params.c,
            alpha: params.alpha,
            n: params.n,
            cell_seed: params.cell_seed,
            permuted: params.permute,
            c_p: dual.lp.radius,
            c_inf: dual.sup.radius,
            log_vol_ratio: ratio.log_ratio,
            log_vol_ratio_per_dim: ratio.per_dim,
            xbar_p,
            lambda_max_bound,
            coverage_p,
            coverage_inf,
        },
        se_p,
        se_inf,
    })
}

/// Membership counts of a fresh sample stream in both fitted regions.
fn coverage_counts(
    model: &CovarianceModel,
    partition: &BlockPartition,
    p: NormOrder,
    radius_p: f64,
    radius_inf: f64,
    coverage_n: usize,
    seed: u64,
) -> Result<(u64, u64)> {
    let cfg = SampleStreamConfig::new(coverage_n, seed);
    let per_batch = map_sample_batches(model, &cfg, |batch| {
        let mut hits_p = 0u64;
        let mut hits_inf = 0u64;
        for row in batch.rows() {
            if max_block_norm(row, partition, p)? <= radius_p {
                hits_p += 1;
            }
            if max_block_norm(row, partition, NormOrder::INFINITY)? <= radius_inf {
                hits_inf += 1;
            }
        }
        Ok(vec![(hits_p, hits_inf)])
    })?;
    Ok(per_batch
        .into_iter()
        .fold((0, 0), |(a, b), (x, y)| (a + x, b + y)))
}

/// A grid cell skipped because the block size does not divide the dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCell {
    pub ordinal: usize,
    pub d: usize,
    pub s: usize,
}

/// Grid results: cell outputs in enumeration order plus the skip report.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub cells: Vec<CellOutput>,
    pub skipped: Vec<SkippedCell>,
}

impl GridOutcome {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        self.cells.iter().map(|c| c.record.clone()).collect()
    }
}

/// Run every divisible cell of the grid, in parallel, deterministically.
pub fn run_grid(config: &GridConfig) -> Result<GridOutcome> {
    config.validate()?;

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    let mut ordinal = 0usize;
    for &c in &config.c_values {
        for &p in &config.p_values {
            for &s in &config.s_values {
                for &d in &config.d_values {
                    if d.is_multiple_of(s) {
                        cells.push(CellParams {
                            d,
                            s,
                            p,
                            c,
                            alpha: config.alpha,
                            n: config.n,
                            cell_seed: splitmix_mix(config.master_seed, ordinal as u64),
                            permute: config.permute,
                            coverage_n: config.coverage_n,
                        });
                    } else {
                        skipped.push(SkippedCell { ordinal, d, s });
                    }
                    ordinal += 1;
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::config(
            "empty effective grid: no (d, s) pair satisfies s | d",
        ));
    }

    let outputs: Vec<Result<CellOutput>> = cells.par_iter().map(run_cell).collect();
    let mut done = Vec::with_capacity(outputs.len());
    for out in outputs {
        done.push(out?);
    }
    Ok(GridOutcome {
        cells: done,
        skipped,
    })
}

fn fmt_float(v: f64) -> String {
    // Shortest decimal that round-trips the exact f64; deterministic bytes.
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn record_csv_row(r: &ExperimentRecord) -> String {
    let mut row = String::new();
    let _ = write!(
        row,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.d,
        r.s,
        fmt_float(r.p),
        fmt_float(r.c),
        fmt_float(r.alpha),
        r.n,
        r.cell_seed,
        r.permuted,
        fmt_float(r.c_p),
        fmt_float(r.c_inf),
        fmt_float(r.log_vol_ratio),
        fmt_float(r.log_vol_ratio_per_dim),
        fmt_opt(r.xbar_p),
        fmt_float(r.lambda_max_bound),
        fmt_opt(r.coverage_p),
        fmt_opt(r.coverage_inf),
    );
    row
}

/// Serialize records as CSV text: header row plus one row per record,
/// floats in round-trip precision, absent values as empty fields.
pub fn csv_string(records: &[ExperimentRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::domain("refusing to emit a CSV with no records"));
    }
    let mut out = String::with_capacity(64 + records.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_csv_row(r));
        out.push('\n');
    }
    Ok(out)
}

/// Write the CSV to any sink.
pub fn emit_csv<W: Write>(records: &[ExperimentRecord], mut sink: W) -> Result<()> {
    let text = csv_string(records)?;
    sink.write_all(text.as_bytes())
        .map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Write the CSV to a file path, surfacing the path on failure.
pub fn emit_csv_to_path(records: &[ExperimentRecord], path: &std::path::Path) -> Result<()> {
    let text = csv_string(records)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field.parse().map_err(|_| {
        Error::domain(format!(
            "CSV line {line}: cannot parse {name} from {field:?}"
        ))
    })
}

fn parse_opt(field: &str, name: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, name, line).map(Some)
    }
}

/// Parse a grid CSV produced by [`csv_string`].
pub fn read_csv(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::domain(format!(
                "unexpected CSV header: {header:?}"
            )))
        }
        None => return Err(Error::domain("empty CSV input")),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 16 {
            return Err(Error::domain(format!(
                "CSV line {}: expected 16 fields, found {}",
                i + 1,
                f.len()
            )));
        }
        let ln = i + 1;
        records.push(ExperimentRecord {
            d: parse_field(f[0], "d", ln)?,
            s: parse_field(f[1], "s", ln)?,
            p: parse_field(f[2], "p", ln)?,
            c: parse_field(f[3], "c", ln)?,
            alpha: parse_field(f[4], "alpha", ln)?,
            n: parse_field(f[5], "n", ln)?,
            cell_seed: parse_field(f[6], "cell_seed", ln)?,
            permuted: parse_field(f[7], "permuted", ln)?,
            c_p: parse_field(f[8], "c_p", ln)?,
            c_inf: parse_field(f[9], "c_inf", ln)?,
            log_vol_ratio: parse_field(f[10], "log_vol_ratio", ln)?,
            log_vol_ratio_per_dim: parse_field(f[11], "log_vol_ratio_per_dim", ln)?,
            xbar_p: parse_opt(f[12], "xbar_p", ln)?,
            lambda_max_bound: parse_field(f[13], "lambda_max_bound", ln)?,
            coverage_p: parse_opt(f[14], "coverage_p", ln)?,
            coverage_inf: parse_opt(f[15], "coverage_inf", ln)?,
        });
    }
    Ok(records)
}

/// Ordinary least squares of y on x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub n_points: usize,
}

/// OLS fit; needs at least three points with at least three distinct x.
/// A zero-variance response fits slope 0 with R-squared reported as 0.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::domain(format!(
            "slope fit needs at least 3 points, got {n}"
        )));
    }
    let mut distinct: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    distinct.sort_unstable_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::domain(
            "slope fit needs at least 3 distinct x values",
        ));
    }

    let nf = n as f64;
    let mean_x = points.iter().map(|&(x, _)| x).sum::<f64>() / nf;
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mean_x).powi(2)).sum();
    let syy: f64 = points.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y - mean_y))
        .sum();

    if syy == 0.0 {
        return Ok(SlopeFit {
            slope: 0.0,
            intercept: mean_y,
            r_squared: 0.0,
            slope_se: 0.0,
            n_points: n,
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = 1.0 - rss / syy;
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        n_points: n,
    })
}

/// Fit the log-volume ratio against d for the records matching one
/// (s, p, c) combination.
pub fn fit_slope_for(
    records: &[ExperimentRecord],
    s: usize,
    p: f64,
    c: f64,
) -> Result<SlopeFit> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.s == s && r.p == p && r.c == c)
        .map(|r| (r.d as f64, r.log_vol_ratio))
        .collect();
    fit_slope(&points)
}

/// Distinct (s, p, c) combinations in record order.
pub fn slope_groups(records: &[ExperimentRecord]) -> Vec<(usize, f64, f64)> {
    let mut groups = Vec::new();
    for r in records {
        let key = (r.s, r.p, r.c);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    groups
}

/// Named grid presets `fig1` .. `fig8`: the three correlation levels, plain
/// and permuted, plus the two high-correlation larger-block variants. The
/// block-size lists are reconstructions chosen so each preset exhibits the
/// behavior it exists to show; for the larger-block variants that means
/// reaching past the c = 0.9 transition (the ratio keeps growing until the
/// blocks are well over 32 coordinates wide). Coverage is disabled in
/// presets; pass `--coverage-n` to turn it back on.
pub fn preset(name: &str) -> Result<GridConfig> {
    let plain_d = vec![16, 32, 64, 128, 256, 512];
    let plain_s = vec![1, 2, 4, 8];
    let large_d = vec![64, 128, 256, 512, 1024];
    let large_s = vec![32, 64, 128];
    let (c, permute, d_values, s_values) = match name {
        "fig1" => (0.0, false, plain_d, plain_s),
        "fig2" => (0.5, false, plain_d, plain_s),
        "fig3" => (0.9, false, plain_d, plain_s),
        "fig4" => (0.9, false, large_d, large_s),
        "fig5" => (0.0, true, plain_d, plain_s),
        "fig6" => (0.5, true, plain_d, plain_s),
        "fig7" => (0.9, true, plain_d, plain_s),
        "fig8" => (0.9, true, large_d, large_s),
        other => {
            return Err(Error::config(format!(
                "unknown preset {other:?}; expected fig1 .. fig8"
            )))
        }
    };
    Ok(GridConfig {
        d_values,
        s_values,
        p_values: vec![NormOrder::finite(2.0).expect("2 >= 1")],
        c_values: vec![c],
        alpha: GridConfig::DEFAULT_ALPHA,
        n: GridConfig::DEFAULT_N,
        master_seed: GridConfig::DEFAULT_SEED,
        permute,
        coverage_n: 0,
    })
}
