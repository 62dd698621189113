//! Command-line front end for the log-derivative moment machinery.
//!
//! Subcommands fall into three groups: `verify-identities` runs the exact
//! rational identity suite, `moment`, `pole-subtracted`, `variance`,
//! `density-histogram` and `compare` run Monte Carlo experiments, and
//! `exact` / `asymptotic` evaluate closed forms without sampling.
//!
//! Exit codes: 0 success, 1 invalid arguments or I/O failure, 2 an
//! identity check failed. Standard output carries only the requested
//! table; progress notes go to standard error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use logdet_core::combinatorics::{rat_int, Rational};
use logdet_core::ensembles::{sample_with, Ensemble, RngStream};
use logdet_core::formulas::{
    asymptotic_moment, compare, exact_moment_so_even, weighted_product_moment,
};
use logdet_core::matcalc::{
    verify_even_binomial_det, verify_inverse_factorial_toeplitz, verify_row_multiplicity,
    verify_shifted_binomial_det, verify_so_even_leading, verify_third_order,
    verify_unit_row_shift_det, shift_table, IdentityCheck, MatrixSpec, OffsetParity,
};
use logdet_core::moments::{
    estimate_pole_subtracted_moment, scaled_variance_usp, ScaledPoint,
};
use logdet_core::residue::{integral_value_t0, recursion_split, IntegralSpec};

const DETERMINISM_NOTE: &str = "Determinism: for a fixed subcommand, flag set and seed, the output \
bytes are identical on every run and for every --threads value. Monte Carlo work is split into \
fixed-size blocks, each block draws from its own counter-based RNG stream, and block results are \
merged in block order. JSON output includes a wall-clock timestamp unless --no-timestamp is given.";

#[derive(Parser)]
#[command(
    name = "logdet",
    version,
    about = "Moments of the log-derivative of characteristic polynomials over SO(2N), SO(2N+1), USp(2N)",
    after_long_help = DETERMINISM_NOTE
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the exact identity suite in rational arithmetic.
    VerifyIdentities(VerifyArgs),
    /// Monte Carlo moment estimate with its closed-form references.
    Moment(MomentArgs),
    /// Odd orthogonal moment with the fixed eigenvalue's pole removed.
    PoleSubtracted(PoleSubtractedArgs),
    /// Scaled variance of the symplectic log-derivative.
    Variance(VarianceArgs),
    /// Empirical eigenangle density in mean-spacing units.
    DensityHistogram(HistogramArgs),
    /// One row holding Monte Carlo, asymptotic and exact values side by side.
    Compare(MomentArgs),
    /// Exact finite-N averages over SO(2N), no sampling.
    Exact(ExactArgs),
    /// Asymptotic formula value for small a.
    Asymptotic(AsymptoticArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    /// Even orthogonal, SO(2N)
    SoEven,
    /// Odd orthogonal, SO(2N+1)
    SoOdd,
    /// Unitary symplectic, USp(2N)
    Usp,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::SoEven => Ensemble::SOEven,
            EnsembleArg::SoOdd => Ensemble::SOOdd,
            EnsembleArg::Usp => Ensemble::USp,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct PointArgs {
    /// Moment order K.
    #[arg(long = "K", default_value_t = 1)]
    k: u32,
    /// Half-dimension parameter N (matrix size 2N or 2N+1).
    #[arg(long = "N")]
    n: u32,
    /// Scaled distance a; moments are evaluated at s = exp(-a/N).
    #[arg(long)]
    a: f64,
}

impl PointArgs {
    fn point(&self) -> anyhow::Result<ScaledPoint> {
        Ok(ScaledPoint::new(self.n, self.a)?)
    }
}

#[derive(Args)]
struct SampleArgs {
    /// Number of matrices to draw.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// RNG seed. Falls back to the LOGDET_SEED variable, then to 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sampling (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

impl SampleArgs {
    fn resolve_seed(&self) -> anyhow::Result<u64> {
        if let Some(seed) = self.seed {
            return Ok(seed);
        }
        match std::env::var("LOGDET_SEED") {
            Ok(text) => text
                .trim()
                .parse()
                .map_err(|_| anyhow!("LOGDET_SEED must be an unsigned integer, got {text:?}")),
            Err(std::env::VarError::NotPresent) => Ok(1),
            Err(err) => Err(anyhow!("LOGDET_SEED is not readable: {err}")),
        }
    }

    fn apply_threads(&self) -> anyhow::Result<()> {
        if let Some(threads) = self.threads {
            if threads == 0 {
                bail!("--threads must be at least 1");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .context("thread pool already initialized")?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output format for the result table.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write the table to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp from JSON metadata (byte-identical reruns).
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest determinant size to sweep (1 to 8).
    #[arg(long = "max-K", default_value_t = 5)]
    max_k: u32,
}

#[derive(Args)]
struct MomentArgs {
    /// Matrix ensemble.
    #[arg(long, value_enum)]
    ensemble: EnsembleArg,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PoleSubtractedArgs {
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VarianceArgs {
    /// Half-dimension parameter N.
    #[arg(long = "N")]
    n: u32,
    /// Scaled distance a.
    #[arg(long)]
    a: f64,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct HistogramArgs {
    /// Matrix ensemble.
    #[arg(long, value_enum)]
    ensemble: EnsembleArg,
    /// Half-dimension parameter N.
    #[arg(long = "N")]
    n: u32,
    /// Number of equal-width bins over the angle range.
    #[arg(long)]
    bins: u32,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ExactArgs {
    /// Moment order K (1 or 2), for the single-shift moment.
    #[arg(long = "K", default_value_t = 1)]
    k: u32,
    /// Half-dimension parameter N.
    #[arg(long = "N")]
    n: u32,
    /// Scaled distance a for the single-shift moment.
    #[arg(long)]
    a: Option<f64>,
    /// Comma-separated distinct shifts for the multi-shift product average
    /// (mutually exclusive with --a).
    #[arg(long)]
    shifts: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AsymptoticArgs {
    /// Matrix ensemble.
    #[arg(long, value_enum)]
    ensemble: EnsembleArg,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; real parse errors
            // are invalid arguments and must exit 1, not clap's default 2.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Cmd::VerifyIdentities(args) => cmd_verify_identities(&args),
        Cmd::Moment(args) => cmd_moment(&args, false),
        Cmd::Compare(args) => cmd_moment(&args, true),
        Cmd::PoleSubtracted(args) => cmd_pole_subtracted(&args),
        Cmd::Variance(args) => cmd_variance(&args),
        Cmd::DensityHistogram(args) => cmd_density_histogram(&args),
        Cmd::Exact(args) => cmd_exact(&args),
        Cmd::Asymptotic(args) => cmd_asymptotic(&args),
    }
}

// ---------------------------------------------------------------------------
// Table output

enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v}"),
            Cell::Text(v) => v.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::Value::from(*v as i64),
            // Non-finite floats have no JSON representation; emit null.
            Cell::Float(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Text(v) => serde_json::Value::from(v.as_str()),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let mut text = self.columns.join(",");
        text.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            text.push_str(&fields.join(","));
            text.push('\n');
        }
        text
    }

    fn to_json(&self, no_timestamp: bool) -> anyhow::Result<String> {
        let mut root = serde_json::Map::new();
        root.insert(
            "version".into(),
            serde_json::Value::from(env!("CARGO_PKG_VERSION")),
        );
        if !no_timestamp {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .context("system clock before unix epoch")?
                .as_secs();
            root.insert("timestamp".into(), serde_json::Value::from(now));
        }
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut object = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    object.insert((*name).into(), cell.json());
                }
                serde_json::Value::Object(object)
            })
            .collect();
        root.insert("rows".into(), serde_json::Value::from(rows));
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root))?;
        text.push('\n');
        Ok(text)
    }

    fn emit(&self, output: &OutputArgs) -> anyhow::Result<()> {
        let text = match output.format {
            FormatArg::Csv => self.to_csv(),
            FormatArg::Json => self.to_json(output.no_timestamp)?,
        };
        match &output.out {
            Some(path) => std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }
}

fn opt_float(v: Option<f64>) -> Cell {
    v.map(Cell::Float).unwrap_or(Cell::Missing)
}

fn progress(samples: u64, what: &str) {
    if samples >= 50_000 {
        eprintln!("drawing {samples} {what} samples...");
    }
}

// ---------------------------------------------------------------------------
// verify-identities

fn cmd_verify_identities(args: &VerifyArgs) -> anyhow::Result<u8> {
    if !(1..=8).contains(&args.max_k) {
        bail!("--max-K must be between 1 and 8");
    }
    let checks = identity_suite(args.max_k as usize)?;
    let mut failures = 0usize;
    let mut stdout = std::io::stdout().lock();
    for check in &checks {
        let status = if check.holds() { "PASS" } else { "FAIL" };
        if !check.holds() {
            failures += 1;
        }
        writeln!(
            stdout,
            "{status} {}: computed {} expected {}",
            check.label, check.computed, check.expected
        )?;
    }
    writeln!(stdout, "{} checks, {} failures", checks.len(), failures)?;
    Ok(if failures == 0 { 0 } else { 2 })
}

fn identity_suite(max_k: usize) -> anyhow::Result<Vec<IdentityCheck>> {
    let mut checks = Vec::new();
    for k in 1..=max_k {
        checks.push(verify_even_binomial_det(k)?);
    }
    for n in 1..=max_k {
        for m in 0..=2 {
            checks.push(verify_shifted_binomial_det(n, m)?);
        }
    }
    for k in 1..=max_k {
        checks.push(verify_inverse_factorial_toeplitz(k)?);
    }
    checks.push(low_degree_sweep(200));
    checks.push(recursion_sweep(200)?);
    for k in 2..=max_k {
        checks.push(base_t_independence(k)?);
    }
    for k in 2..=max_k {
        checks.push(verify_row_multiplicity(k, OffsetParity::Odd)?);
        checks.push(verify_row_multiplicity(k, OffsetParity::Even)?);
    }
    for k in 2..=max_k {
        checks.push(verify_so_even_leading(k)?);
    }
    for k in 3..=max_k {
        checks.push(verify_third_order(k)?);
    }
    for k in 4..=max_k {
        let (pattern, pair) = shift_table_checks(k)?;
        checks.push(pattern);
        checks.push(pair);
    }
    checks.push(symplectic_base_det()?);
    checks.push(symplectic_second_shift_derivative()?);
    for k in 2..=max_k {
        checks.push(verify_unit_row_shift_det(k)?);
    }
    Ok(checks)
}

// 200 randomized contour integrals whose degree lies at or below -2; each
// must evaluate to exactly zero.
fn low_degree_sweep(count: usize) -> IdentityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1CE);
    let mut nonzero = 0i64;
    let mut done = 0usize;
    while done < count {
        let size = rng.random_range(1..=6u32);
        let derivs = rng.random_range(0..=3u32);
        let highest = i64::from(size) + 2 * i64::from(derivs) - 2;
        let power = rng.random_range(-12..=highest);
        let Ok(spec) = IntegralSpec::new(power, derivs, size) else {
            continue;
        };
        if spec.degree() > -2 {
            continue;
        }
        if !integral_value_t0(spec).is_zero() {
            nonzero += 1;
        }
        done += 1;
    }
    IdentityCheck {
        label: format!("low-degree integrals vanish ({count} randomized)"),
        computed: rat_int(nonzero),
        expected: rat_int(0),
    }
}

// 200 randomized checks of I(r, E) = 2 I(r-2, E-1) + I(r-2, E).
fn recursion_sweep(count: usize) -> anyhow::Result<IdentityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEED);
    let mut violations = 0i64;
    for _ in 0..count {
        let size = rng.random_range(1..=6u32);
        let derivs = rng.random_range(1..=4u32);
        let power = rng.random_range(-10..=14i64);
        let spec = IntegralSpec::new(power, derivs, size)?;
        let (lower, same) = recursion_split(spec)?;
        let lhs = integral_value_t0(spec);
        let rhs = rat_int(2) * integral_value_t0(lower) + integral_value_t0(same);
        if lhs != rhs {
            violations += 1;
        }
    }
    Ok(IdentityCheck {
        label: format!("three-term contour recursion ({count} randomized)"),
        computed: rat_int(violations),
        expected: rat_int(0),
    })
}

// The even orthogonal base determinant does not depend on t: every
// derivative up to order K vanishes.
fn base_t_independence(k: usize) -> anyhow::Result<IdentityCheck> {
    let spec = MatrixSpec::so_even_base(k)?;
    let mut total: Rational = rat_int(0);
    for order in 1..=k as u32 {
        total += spec.dt_derivative_det(order)?.abs();
    }
    Ok(IdentityCheck {
        label: format!("base determinant t-independence, derivatives 1..={k} (K={k})"),
        computed: total,
        expected: rat_int(0),
    })
}

// The K-th derivative of the shifted symplectic determinants: every shift
// triple must vanish except (0,1,2) and (0,3,0), which cancel in a pair.
fn shift_table_checks(k: usize) -> anyhow::Result<(IdentityCheck, IdentityCheck)> {
    let rows = shift_table(k)?;
    let mut mismatches = 0i64;
    let mut surviving_sum: Rational = rat_int(0);
    let mut surviving_product: Rational = rat_int(1);
    for row in &rows {
        if row.value.is_zero() != row.expected_zero {
            mismatches += 1;
        }
        if !row.expected_zero {
            surviving_sum += row.value.clone();
            surviving_product *= row.value.clone();
        }
    }
    let pattern = IdentityCheck {
        label: format!("row-shift survival pattern over {} triples (K={k})", rows.len()),
        computed: rat_int(mismatches),
        expected: rat_int(0),
    };
    // The two survivors are negatives of each other and genuinely nonzero,
    // so their sum is zero while their product is negative.
    let pair = IdentityCheck {
        label: format!("surviving shifts cancel in a nonzero pair (K={k})"),
        computed: if surviving_product.is_zero() {
            rat_int(-1)
        } else {
            surviving_sum
        },
        expected: rat_int(0),
    };
    Ok((pattern, pair))
}

fn symplectic_base_det() -> anyhow::Result<IdentityCheck> {
    let spec = MatrixSpec::usp_base(2)?;
    Ok(IdentityCheck {
        label: "symplectic 2x2 base determinant".into(),
        computed: spec.det_t0(),
        expected: rat_int(-2),
    })
}

fn symplectic_second_shift_derivative() -> anyhow::Result<IdentityCheck> {
    let spec = MatrixSpec::usp_base(2)?.with_row_shifts(&[2])?;
    Ok(IdentityCheck {
        label: "first derivative of the twice-shifted 2x2 base".into(),
        computed: spec.dt_derivative_det(1)?,
        expected: rat_int(-4),
    })
}

// ---------------------------------------------------------------------------
// Sampling commands

fn cmd_moment(args: &MomentArgs, full: bool) -> anyhow::Result<u8> {
    args.sample.apply_threads()?;
    let point = args.point.point()?;
    let seed = args.sample.resolve_seed()?;
    let ensemble: Ensemble = args.ensemble.into();
    progress(args.sample.samples, ensemble.label());
    let rec = compare(ensemble, args.point.k, point, args.sample.samples, seed)?;

    let table = if full {
        Table {
            columns: vec![
                "ensemble",
                "K",
                "N",
                "a",
                "samples",
                "seed",
                "mc_mean",
                "mc_stderr",
                "asymptotic_leading",
                "asymptotic_next",
                "asymptotic_value",
                "formula",
                "exact",
                "mc_over_asymptotic",
                "z_vs_asymptotic",
                "z_vs_exact",
            ],
            rows: vec![vec![
                Cell::Text(ensemble.label().into()),
                Cell::Int(args.point.k.into()),
                Cell::Int(args.point.n.into()),
                Cell::Float(args.point.a),
                Cell::Int(args.sample.samples.into()),
                Cell::Int(seed.into()),
                Cell::Float(rec.monte_carlo.mean),
                Cell::Float(rec.monte_carlo.std_error),
                Cell::Float(rec.asymptotic.leading),
                opt_float(rec.asymptotic.next_to_leading),
                Cell::Float(rec.asymptotic.value()),
                Cell::Text(rec.asymptotic.formula.into()),
                opt_float(rec.exact),
                Cell::Float(rec.mc_over_asymptotic),
                Cell::Float(rec.z_vs_asymptotic),
                opt_float(rec.z_vs_exact),
            ]],
        }
    } else {
        // z_score is taken against the sharpest available reference.
        let z_score = rec.z_vs_exact.unwrap_or(rec.z_vs_asymptotic);
        Table {
            columns: vec![
                "ensemble",
                "K",
                "N",
                "a",
                "samples",
                "seed",
                "mc_mean",
                "mc_stderr",
                "asymptotic",
                "exact",
                "ratio",
                "z_score",
            ],
            rows: vec![vec![
                Cell::Text(ensemble.label().into()),
                Cell::Int(args.point.k.into()),
                Cell::Int(args.point.n.into()),
                Cell::Float(args.point.a),
                Cell::Int(args.sample.samples.into()),
                Cell::Int(seed.into()),
                Cell::Float(rec.monte_carlo.mean),
                Cell::Float(rec.monte_carlo.std_error),
                Cell::Float(rec.asymptotic.value()),
                opt_float(rec.exact),
                Cell::Float(rec.mc_over_asymptotic),
                Cell::Float(z_score),
            ]],
        }
    };
    table.emit(&args.output)?;
    Ok(0)
}

fn cmd_pole_subtracted(args: &PoleSubtractedArgs) -> anyhow::Result<u8> {
    args.sample.apply_threads()?;
    let point = args.point.point()?;
    let seed = args.sample.resolve_seed()?;
    progress(args.sample.samples, "so-odd");
    let est =
        estimate_pole_subtracted_moment(args.point.k, point, args.sample.samples, seed)?;
    let table = Table {
        columns: vec![
            "ensemble",
            "K",
            "N",
            "a",
            "samples",
            "seed",
            "mc_mean",
            "mc_stderr",
            "pole_term",
        ],
        rows: vec![vec![
            Cell::Text("so-odd".into()),
            Cell::Int(args.point.k.into()),
            Cell::Int(args.point.n.into()),
            Cell::Float(args.point.a),
            Cell::Int(args.sample.samples.into()),
            Cell::Int(seed.into()),
            Cell::Float(est.mean),
            Cell::Float(est.std_error),
            Cell::Float(point.pole_term()),
        ]],
    };
    table.emit(&args.output)?;
    Ok(0)
}

fn cmd_variance(args: &VarianceArgs) -> anyhow::Result<u8> {
    args.sample.apply_threads()?;
    let point = ScaledPoint::new(args.n, args.a)?;
    let seed = args.sample.resolve_seed()?;
    progress(args.sample.samples, "usp");
    let variance = scaled_variance_usp(point, args.sample.samples, seed)?;
    let table = Table {
        columns: vec!["ensemble", "N", "a", "samples", "seed", "scaled_variance"],
        rows: vec![vec![
            Cell::Text("usp".into()),
            Cell::Int(args.n.into()),
            Cell::Float(args.a),
            Cell::Int(args.sample.samples.into()),
            Cell::Int(seed.into()),
            Cell::Float(variance),
        ]],
    };
    table.emit(&args.output)?;
    Ok(0)
}

fn cmd_density_histogram(args: &HistogramArgs) -> anyhow::Result<u8> {
    if args.bins == 0 {
        bail!("--bins must be at least 1");
    }
    args.sample.apply_threads()?;
    let seed = args.sample.resolve_seed()?;
    let ensemble: Ensemble = args.ensemble.into();
    progress(args.sample.samples, ensemble.label());

    // Mean-spacing units: x = theta N / pi runs over [0, N].
    let n_f = f64::from(args.n);
    let width = n_f / f64::from(args.bins);
    let mut counts = vec![0u64; args.bins as usize];
    let mut rng = RngStream::new(seed, 0).rng();
    for _ in 0..args.sample.samples {
        let draw = sample_with(ensemble, args.n, &mut rng)?;
        for &theta in &draw.angles {
            let x = theta * n_f / std::f64::consts::PI;
            let bin = ((x / width) as usize).min(args.bins as usize - 1);
            counts[bin] += 1;
        }
    }

    let norm = args.sample.samples as f64 * width;
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            vec![
                Cell::Float(i as f64 * width),
                Cell::Float((i + 1) as f64 * width),
                Cell::Int(count.into()),
                Cell::Float(count as f64 / norm),
            ]
        })
        .collect();
    let table = Table {
        columns: vec!["bin_left", "bin_right", "count", "density"],
        rows,
    };
    table.emit(&args.output)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Closed-form commands

fn cmd_exact(args: &ExactArgs) -> anyhow::Result<u8> {
    let table = match (&args.shifts, args.a) {
        (Some(_), Some(_)) => bail!("--a and --shifts are mutually exclusive"),
        (None, None) => bail!("one of --a or --shifts is required"),
        (Some(text), None) => {
            let shifts: Vec<f64> = text
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<f64>()
                        .map_err(|_| anyhow!("bad shift {part:?} in --shifts"))
                })
                .collect::<anyhow::Result<_>>()?;
            let value = weighted_product_moment(&shifts, args.n)?;
            // Semicolon-joined so the CSV stays free of quoting.
            let canonical = shifts
                .iter()
                .map(|s| format!("{s}"))
                .collect::<Vec<_>>()
                .join(";");
            Table {
                columns: vec!["ensemble", "N", "shifts", "value"],
                rows: vec![vec![
                    Cell::Text("so-even".into()),
                    Cell::Int(args.n.into()),
                    Cell::Text(canonical),
                    Cell::Float(value),
                ]],
            }
        }
        (None, Some(a)) => {
            let point = ScaledPoint::new(args.n, a)?;
            let value = exact_moment_so_even(args.k, point)?;
            Table {
                columns: vec!["ensemble", "K", "N", "a", "value"],
                rows: vec![vec![
                    Cell::Text("so-even".into()),
                    Cell::Int(args.k.into()),
                    Cell::Int(args.n.into()),
                    Cell::Float(a),
                    Cell::Float(value),
                ]],
            }
        }
    };
    table.emit(&args.output)?;
    Ok(0)
}

fn cmd_asymptotic(args: &AsymptoticArgs) -> anyhow::Result<u8> {
    let point = args.point.point()?;
    let result = asymptotic_moment(args.ensemble.into(), args.point.k, point)?;
    let table = Table {
        columns: vec![
            "ensemble",
            "K",
            "N",
            "a",
            "leading",
            "next_to_leading",
            "value",
            "formula",
        ],
        rows: vec![vec![
            Cell::Text(result.ensemble.label().into()),
            Cell::Int(args.point.k.into()),
            Cell::Int(args.point.n.into()),
            Cell::Float(args.point.a),
            Cell::Float(result.leading),
            opt_float(result.next_to_leading),
            Cell::Float(result.value()),
            Cell::Text(result.formula.into()),
        ]],
    };
    table.emit(&args.output)?;
    Ok(0)
}
