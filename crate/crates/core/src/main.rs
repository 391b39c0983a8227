//! `regionvol` CLI: grid experiments, single-cell quantiles, closed-form
//! volume queries, bound property suites, and slope fits over grid CSVs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical/domain error,
//! 3 property-suite failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use regionvol::bounds::{minimal_sparsity, ratio_root_bound, TheoremRegime};
use regionvol::covariance::{one_norm_eigen_bound, CovarianceModel};
use regionvol::error::{Error, Result};
use regionvol::experiment::{
    cell_permutation, csv_string, fit_slope, preset, read_csv, run_cell, run_grid, CellParams,
    GridConfig,
};
use regionvol::quantiles::{estimate_region_radius, quantile_standard_error, QuantileSpec};
use regionvol::regions::{log_volume_block_lp, log_volume_cube, BlockPartition, NormOrder};
use regionvol::sampling::splitmix_mix;

#[derive(Parser)]
#[command(
    name = "regionvol",
    about = "Volumes of block-norm confidence regions for high-dimensional Gaussians",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of cells and emit one CSV row per cell.
    Grid(GridArgs),
    /// Estimate both radii for one cell and print them with their errors.
    Quantile(QuantileArgs),
    /// Closed-form log-volume desk checks.
    Volume(VolumeArgs),
    /// Run the domination, growth, and Gamma-ratio property suites.
    CheckBounds(CheckBoundsArgs),
    /// Fit per-(s, p, c) slopes of the log-volume ratio from a grid CSV.
    Slope(SlopeArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<usize>>,
    /// Finite norm orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<String>>,
    /// Toeplitz correlations in [0, 1), comma separated.
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Samples per cell for quantile estimation.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Permute coordinates before blocking (seeded per cell).
    #[arg(long, action = ArgAction::SetTrue)]
    permute: bool,
    /// Fresh samples per cell for coverage estimation; 0 disables.
    #[arg(long = "coverage-n")]
    coverage_n: Option<usize>,
    /// Output CSV path; "-" writes to standard output.
    #[arg(long, default_value = "-")]
    out: String,
    /// Start from a named preset (fig1 .. fig8); explicit flags override.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct QuantileArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    p: String,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = GridConfig::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = GridConfig::DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = GridConfig::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, action = ArgAction::SetTrue)]
    permute: bool,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    s: usize,
    /// Norm order; "inf" selects the cube.
    #[arg(long)]
    p: String,
    #[arg(long)]
    radius: f64,
}

#[derive(Args)]
struct CheckBoundsArgs {
    /// Samples per Monte Carlo check.
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = GridConfig::DEFAULT_SEED)]
    seed: u64,
    /// Also write the plain-text summary to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SlopeArgs {
    /// Grid CSV to read; "-" reads standard input.
    #[arg(long)]
    input: String,
    /// Output CSV path; "-" writes to standard output.
    #[arg(long, default_value = "-")]
    out: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Grid(args) => cmd_grid(args),
        Command::Quantile(args) => cmd_quantile(args),
        Command::Volume(args) => cmd_volume(args),
        Command::CheckBounds(args) => cmd_check_bounds(args),
        Command::Slope(args) => cmd_slope(args),
    }
}

fn parse_norm_orders(raw: &[String]) -> Result<Vec<NormOrder>> {
    raw.iter().map(|s| s.parse()).collect()
}

fn cmd_grid(args: GridArgs) -> Result<i32> {
    let base = match &args.preset {
        Some(name) => Some(preset(name)?),
        None => None,
    };
    let take_list = |explicit: Option<Vec<usize>>, from_preset: fn(&GridConfig) -> Vec<usize>, flag: &str| -> Result<Vec<usize>> {
        match (explicit, &base) {
            (Some(v), _) => Ok(v),
            (None, Some(p)) => Ok(from_preset(p)),
            (None, None) => Err(Error::config(format!(
                "--{flag} is required unless --preset is given"
            ))),
        }
    };

    let d_values = take_list(args.d, |p| p.d_values.clone(), "d")?;
    let s_values = take_list(args.s, |p| p.s_values.clone(), "s")?;
    let p_values = match (&args.p, &base) {
        (Some(raw), _) => parse_norm_orders(raw)?,
        (None, Some(p)) => p.p_values.clone(),
        (None, None) => return Err(Error::config("--p is required unless --preset is given")),
    };
    let c_values = match (&args.c, &base) {
        (Some(v), _) => v.clone(),
        (None, Some(p)) => p.c_values.clone(),
        (None, None) => return Err(Error::config("--c is required unless --preset is given")),
    };

    let config = GridConfig {
        d_values,
        s_values,
        p_values,
        c_values,
        alpha: args
            .alpha
            .or(base.as_ref().map(|p| p.alpha))
            .unwrap_or(GridConfig::DEFAULT_ALPHA),
        n: args
            .n
            .or(base.as_ref().map(|p| p.n))
            .unwrap_or(GridConfig::DEFAULT_N),
        master_seed: args
            .seed
            .or(base.as_ref().map(|p| p.master_seed))
            .unwrap_or(GridConfig::DEFAULT_SEED),
        permute: args.permute || base.as_ref().is_some_and(|p| p.permute),
        coverage_n: args
            .coverage_n
            .or(base.as_ref().map(|p| p.coverage_n))
            .unwrap_or(GridConfig::DEFAULT_COVERAGE_N),
    };

    let outcome = run_grid(&config)?;
    for skip in &outcome.skipped {
        eprintln!(
            "skipping cell {}: block size {} does not divide d = {}",
            skip.ordinal, skip.s, skip.d
        );
    }
    let text = csv_string(&outcome.records())?;
    write_output(&args.out, &text)?;
    Ok(0)
}

fn cmd_quantile(args: QuantileArgs) -> Result<i32> {
    let p: NormOrder = args.p.parse()?;
    if p.is_infinite() {
        return Err(Error::domain(
            "pass a finite p; the sup-norm radius is always reported as c_inf",
        ));
    }
    let out = run_cell(&CellParams {
        d: args.d,
        s: args.s,
        p,
        c: args.c,
        alpha: args.alpha,
        n: args.n,
        cell_seed: args.seed,
        permute: args.permute,
        coverage_n: 0,
    })?;
    let r = &out.record;
    println!("c_p = {}", r.c_p);
    println!("c_inf = {}", r.c_inf);
    match r.xbar_p {
        Some(x) => println!("xbar_p = {x}"),
        None => println!("xbar_p = (undefined for p < 2)"),
    }
    println!("mc_se_c_p = {}", out.se_p);
    println!("mc_se_c_inf = {}", out.se_inf);
    if args.permute {
        let perm = cell_permutation(args.d, args.seed);
        if args.d <= 32 {
            println!("permutation = {perm:?}");
        } else {
            println!(
                "permutation = seeded from cell seed {} (length {})",
                args.seed, args.d
            );
        }
    }
    Ok(0)
}

fn cmd_volume(args: VolumeArgs) -> Result<i32> {
    let p: NormOrder = args.p.parse()?;
    let log_volume = if p.is_infinite() {
        log_volume_cube(args.d, args.radius)?
    } else {
        log_volume_block_lp(args.d, args.s, p, args.radius)?
    };
    println!("log_volume = {log_volume}");
    println!("log_volume_per_dim = {}", log_volume / args.d as f64);
    Ok(0)
}

struct SuiteReport {
    lines: Vec<String>,
    failures: usize,
}

impl SuiteReport {
    fn new() -> Self {
        SuiteReport {
            lines: Vec::new(),
            failures: 0,
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let status = if pass { "PASS" } else { "FAIL" };
        if !pass {
            self.failures += 1;
        }
        let line = format!("{status} {name}: {detail}");
        println!("{line}");
        self.lines.push(line);
    }

    fn note(&mut self, text: String) {
        println!("{text}");
        self.lines.push(text);
    }
}

fn cmd_check_bounds(args: CheckBoundsArgs) -> Result<i32> {
    let mut report = SuiteReport::new();
    gamma_ratio_suite(&mut report)?;
    domination_suite(&mut report, args.n, args.seed)?;
    growth_suite(&mut report, args.n, args.seed)?;

    let summary = format!(
        "{} checks, {} failures",
        report.lines.iter().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(),
        report.failures
    );
    println!("{summary}");
    report.lines.push(summary);

    if let Some(path) = &args.report {
        std::fs::write(path, report.lines.join("\n") + "\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(if report.failures == 0 { 0 } else { 3 })
}

fn gamma_ratio_suite(report: &mut SuiteReport) -> Result<()> {
    let f = |s: usize| ratio_root_bound(s, 2.0, 1.0);
    let mut decreasing = true;
    let mut prev = f(1)?;
    for s in 2..=64 {
        let v = f(s)?;
        if v >= prev {
            decreasing = false;
        }
        prev = v;
    }
    report.check(
        "gamma-ratio decreasing (p=2, s=1..64)",
        decreasing,
        format!("f(1) = {}, f(64) = {}", f(1)?, f(64)?),
    );

    let far = f(4096)?;
    let near = f(4)?;
    report.check(
        "gamma-ratio decay to zero",
        far < 0.05 * near && f(65536)? < 0.01,
        format!("f(4096)/f(4) = {}, f(65536) = {}", far / near, f(65536)?),
    );

    let mut consistent = true;
    let mut detail = String::new();
    for (p, r) in [(2.0, 10.0), (2.0, 1.0), (2.5, 3.0)] {
        let s = minimal_sparsity(p, r)?;
        let ok_here = ratio_root_bound(s as usize, p, r)? < 1.0
            && (s == 1 || ratio_root_bound(s as usize - 1, p, r)? >= 1.0);
        consistent &= ok_here;
        use std::fmt::Write as _;
        let _ = write!(detail, "s*({p}, {r}) = {s}; ");
    }
    report.check("minimal sparsity consistency", consistent, detail);
    Ok(())
}

fn domination_suite(report: &mut SuiteReport, n: usize, seed: u64) -> Result<()> {
    const S_VALUES: [usize; 4] = [1, 2, 4, 8];
    const D_VALUES: [usize; 3] = [16, 64, 256];

    for s in S_VALUES {
        for d in D_VALUES {
            let regime = TheoremRegime::new(2.0, s, 1.0)?;
            if !regime.constant_regime_applies(d) {
                report.note(format!(
                    "note: constant regime log(d) > s does not apply at d = {d}, s = {s}"
                ));
            }
        }
    }

    let spec = QuantileSpec::new(0.05, n)?;
    let p = NormOrder::finite(2.0).expect("2 >= 1");
    let mut ordinal = 0u64;
    let mut violations = 0usize;
    let mut cells = 0usize;
    for c in [0.0, 0.5, 0.9] {
        for s in S_VALUES {
            for d in D_VALUES {
                let model = CovarianceModel::toeplitz(d, c)?;
                let partition = BlockPartition::new(d, s)?;
                let est = estimate_region_radius(
                    &model,
                    &partition,
                    p,
                    &spec,
                    splitmix_mix(seed, ordinal),
                )?;
                ordinal += 1;
                let bound =
                    regionvol::quantiles::quantile_upper_bound(s, 2.0, one_norm_eigen_bound(c)?, d, 0.05)?;
                let se = quantile_standard_error(&est.batch, 0.05)?;
                cells += 1;
                if est.radius > bound + 3.0 * se {
                    violations += 1;
                }
            }
        }
    }
    report.check(
        "concentration domination c_p <= xbar_p + 3se",
        violations == 0,
        format!("{violations} violations over {cells} cells (n = {n})"),
    );
    Ok(())
}

fn growth_suite(report: &mut SuiteReport, n: usize, seed: u64) -> Result<()> {
    let spec = QuantileSpec::new(0.05, n)?;
    let mut points = Vec::new();
    for (i, exponent) in (4..=10).enumerate() {
        let d = 1usize << exponent;
        let model = CovarianceModel::toeplitz(d, 0.0)?;
        let partition = BlockPartition::new(d, 1)?;
        let est = estimate_region_radius(
            &model,
            &partition,
            NormOrder::INFINITY,
            &spec,
            splitmix_mix(seed ^ 0x67726f77, i as u64),
        )?;
        points.push(((d as f64).ln().sqrt(), est.radius));
    }
    let fit = fit_slope(&points)?;
    report.check(
        "sup-norm quantile growth ~ sqrt(log d)",
        fit.slope > 0.0 && fit.r_squared >= 0.98,
        format!("slope = {:.4}, R^2 = {:.5}", fit.slope, fit.r_squared),
    );
    Ok(())
}

fn cmd_slope(args: SlopeArgs) -> Result<i32> {
    let text = if args.input == "-" {
        let mut buf = String::new();
        use std::io::Read;
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::io("<stdin>", e))?;
        buf
    } else {
        std::fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?
    };
    let records = read_csv(&text)?;

    let mut out = String::from("s,p,c,n_points,slope,slope_se,r_squared\n");
    for (s, p, c) in regionvol::experiment::slope_groups(&records) {
        match regionvol::experiment::fit_slope_for(&records, s, p, c) {
            Ok(fit) => {
                use std::fmt::Write as _;
                let _ = writeln!(
                    out,
                    "{s},{p},{c},{},{},{},{}",
                    fit.n_points, fit.slope, fit.slope_se, fit.r_squared
                );
            }
            Err(e) => eprintln!("skipping group (s={s}, p={p}, c={c}): {e}"),
        }
    }
    write_output(&args.out, &out)?;
    Ok(0)
}

fn write_output(dest: &str, text: &str) -> Result<()> {
    if dest == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?;
    } else {
        std::fs::write(dest, text).map_err(|e| Error::io(dest, e))?;
    }
    Ok(())
}
