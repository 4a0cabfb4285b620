//! The `weyl-lab` command line.
//!
//! Every subcommand computes a table in memory, then writes
//! `<out>/<subcommand>.csv` and `<out>/<subcommand>.manifest.json`. Nothing is
//! written when the computation fails. The manifest stores the complete
//! configuration, and `weyl-lab replay <manifest>` recomputes the CSV from it.
//!
//! Exit codes: 0 success, 2 configuration or precondition error, 3 resource
//! cap exceeded, 1 numeric or I/O failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{
    cluster_sup_scan, lambda_grid, localized_integral, localized_sum, off_spectrum_window, random_pairs, WidthRule,
};
use crate::error::Error;
use crate::lattice::Lattice;
use crate::manifolds::{DerivIndex, ModelManifold};
use crate::projector::{cluster_vs_bessel, offdiagonal_scan, remainder_scan};
use crate::randomwaves::RandomWaveEnsemble;
use crate::smoothing::{MollifierSpec, SmoothedProjector};

/// Version tag written into every manifest.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "WEYL_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "weyl-lab", version, about = "Spectral-function experiments on flat tori and the round sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalue levels and multiplicities up to the top of the lambda grid.
    Eigens(RunArgs),
    /// Spectral function (or cluster kernel with --A) on a point grid.
    Kernel(RunArgs),
    /// Sup of the remainder after the Bessel leading term, per lambda.
    RemainderScan(RunArgs),
    /// Sup of the spectral function over separated pairs, per lambda.
    OffdiagScan(RunArgs),
    /// Mollified projector: mode sum against lattice images.
    SmoothCompare(RunArgs),
    /// Cluster kernel against its Bessel prediction along a geodesic.
    ClusterBessel(RunArgs),
    /// Random-wave samples, covariances, or rescaled limits.
    Randomwave(RunArgs),
    /// Localized sums and integrals, with lambda rounded to integers.
    AppendixA(RunArgs),
    /// Diagonal cluster sup over a lambda grid.
    ClusterSup(RunArgs),
    /// Recompute the output of a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eigens(_) => "eigens",
            Command::Kernel(_) => "kernel",
            Command::RemainderScan(_) => "remainder-scan",
            Command::OffdiagScan(_) => "offdiag-scan",
            Command::SmoothCompare(_) => "smooth-compare",
            Command::ClusterBessel(_) => "cluster-bessel",
            Command::Randomwave(_) => "randomwave",
            Command::AppendixA(_) => "appendix-a",
            Command::ClusterSup(_) => "cluster-sup",
            Command::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveMode {
    Sample,
    Covariance,
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthChoice {
    Fixed,
    OneOverLog,
}

/// Flags shared by all experiment subcommands. Unused flags are ignored.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct RunArgs {
    /// `torus:<n>:<basis>` or `sphere2[:radius]`. Basis is `square2pi`,
    /// `square=<p>`, `rect=<p1>,<p2>[,<p3>]`, `hex=<s>` or `basis=<entries>`
    /// (period vectors one after another).
    #[arg(long, default_value = "torus:2:square2pi")]
    pub manifold: String,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `lo:hi:count[:log]`.
    #[arg(long = "lambda-grid")]
    pub lambda_grid: Option<String>,
    /// Window width or mollifier scale; comma-separated for smooth-compare.
    #[arg(long = "A", value_delimiter = ',')]
    pub a: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Derivative orders `ax,ay` along the first axis in x and y.
    #[arg(long, default_value = "0,0")]
    pub deriv: String,
    #[arg(long, default_value = "weyl-lab-out")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Explicit points, `a,b;c,d;...`.
    #[arg(long)]
    pub points: Option<String>,
    /// Number of seeded random pairs.
    #[arg(long, default_value_t = 8)]
    pub pairs: usize,
    /// Minimum separation for off-diagonal pairs.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Number of distance or tangent grid nodes.
    #[arg(long, default_value_t = 17)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "covariance")]
    pub mode: WaveMode,
    /// Exponents for appendix-a.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub p: Vec<f64>,
    /// Decay order for appendix-a.
    #[arg(long = "N", default_value_t = 4)]
    pub order: u32,
    #[arg(long = "width-rule", value_enum, default_value = "fixed")]
    pub width_rule: WidthChoice,
}

/// Configuration record written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub full_config: BTreeMap<String, Value>,
    pub seed: u64,
    pub artifact_version: String,
    pub timestamp: String,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Lib(Error::Resource { .. }) => 3,
            Failure::Lib(Error::Numeric(_)) | Failure::Io(_) => 1,
            Failure::Lib(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("configuration error: {m}"),
            Failure::Lib(e) => e.to_string(),
            Failure::Io(m) => format!("i/o failure: {m}"),
        }
    }
}

fn config<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Config(msg.into()))
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_to(argv, &mut std::io::stdout())
}

/// [`run`] with the one-line summaries sent to `summary` instead of stdout.
pub fn run_to<I, T>(argv: I, summary: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("weyl-lab: {}", f.message());
        return f.exit_code();
    }
    match execute(cli.command, summary) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("weyl-lab: {}", f.message());
            f.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")),
    };
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cmd: Command, summary: &mut dyn Write) -> Result<(), Failure> {
    let name = cmd.name();
    match cmd {
        Command::Replay { manifest, out } => replay(&manifest, out, summary),
        Command::Eigens(a)
        | Command::Kernel(a)
        | Command::RemainderScan(a)
        | Command::OffdiagScan(a)
        | Command::SmoothCompare(a)
        | Command::ClusterBessel(a)
        | Command::Randomwave(a)
        | Command::AppendixA(a)
        | Command::ClusterSup(a) => run_experiment(name, &a, summary),
    }
}

fn replay(path: &Path, out: Option<PathBuf>, summary: &mut dyn Write) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("malformed manifest {}: {e}", path.display())))?;
    if manifest.artifact_version != ARTIFACT_VERSION {
        eprintln!(
            "weyl-lab: manifest was written by version {}, replaying with {}",
            manifest.artifact_version, ARTIFACT_VERSION
        );
    }
    let map: serde_json::Map<String, Value> = manifest.full_config.into_iter().collect();
    let mut args: RunArgs =
        serde_json::from_value(Value::Object(map)).map_err(|e| Failure::Config(format!("manifest config: {e}")))?;
    args.out = out.unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    const NAMES: [&str; 9] = [
        "eigens",
        "kernel",
        "remainder-scan",
        "offdiag-scan",
        "smooth-compare",
        "cluster-bessel",
        "randomwave",
        "appendix-a",
        "cluster-sup",
    ];
    match NAMES.iter().find(|n| **n == manifest.subcommand) {
        Some(n) => run_experiment(n, &args, summary),
        None => config(format!("manifest names unknown subcommand {:?}", manifest.subcommand)),
    }
}

fn run_experiment(name: &str, args: &RunArgs, summary: &mut dyn Write) -> Result<(), Failure> {
    let table = compute(name, args)?;
    let csv = table.to_csv()?;
    let manifest = RunManifest {
        subcommand: name.to_string(),
        full_config: match serde_json::to_value(args) {
            Ok(Value::Object(m)) => m.into_iter().collect(),
            _ => return Err(Failure::Io("could not serialize the configuration".into())),
        },
        seed: args.seed,
        artifact_version: ARTIFACT_VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", args.out.display()));
    fs::create_dir_all(&args.out).map_err(io)?;
    fs::write(args.out.join(format!("{name}.csv")), csv).map_err(io)?;
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(args.out.join(format!("{name}.manifest.json")), json + "\n").map_err(io)?;
    for line in &table.summary {
        writeln!(summary, "{line}").map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

enum Cell {
    F(f64),
    I(i64),
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<String>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new(), summary: Vec::new() }
    }

    fn to_csv(&self) -> Result<Vec<u8>, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Failure::Io(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::F(v) => format!("{v:.16e}"),
                Cell::I(v) => v.to_string(),
            }))
            .map_err(err)?;
        }
        w.into_inner().map_err(|e| Failure::Io(e.to_string()))
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn coord_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}[coord]")).collect()
}

/// Column names of the CSV written by `subcommand` on an `n`-dimensional manifold.
pub fn csv_header(subcommand: &str, n: usize, mode: WaveMode) -> Option<Vec<String>> {
    Some(match subcommand {
        "eigens" => header(&["index[count]", "sqrt_eigenvalue[1/length]", "eigenvalue[1/length^2]", "multiplicity[count]", "cumulative[count]"]),
        "kernel" => {
            let mut h = header(&["lambda[1/length]", "dist[length]"]);
            h.extend(coord_header("x", n));
            h.extend(coord_header("y", n));
            h.push("value[length^-n]".into());
            h
        }
        "remainder-scan" => header(&["lambda_requested[1/length]", "lambda_used[1/length]", "sup_abs_remainder[length^-n]"]),
        "offdiag-scan" => header(&["lambda_requested[1/length]", "lambda_used[1/length]", "sup_abs_kernel[length^-n]"]),
        "smooth-compare" => header(&[
            "lambda[1/length]",
            "A[1/length]",
            "pairs[count]",
            "max_abs_spectral[length^-n]",
            "max_abs_error[length^-n]",
            "max_rel_error[1]",
            "spectral_radius[1/length]",
            "image_radius[length]",
        ]),
        "cluster-bessel" => header(&[
            "lambda_used[1/length]",
            "width[1/length]",
            "dist[length]",
            "cluster[length^-n]",
            "bessel_prediction[length^-n]",
            "abs_error[length^-n]",
            "relative_error[1]",
        ]),
        "randomwave" => match mode {
            WaveMode::Sample => {
                let mut h = header(&["sample[index]", "point[index]"]);
                h.extend(coord_header("x", n));
                h.push("value[1]".into());
                h
            }
            WaveMode::Covariance => {
                let mut h = header(&["pair[index]"]);
                h.extend(coord_header("x", n));
                h.extend(coord_header("y", n));
                h.extend(header(&["empirical[1]", "exact[1]", "std_error[1]", "z_score[1]"]));
                h
            }
            WaveMode::Rescaled => {
                let mut h = coord_header("u", n);
                h.extend(coord_header("v", n));
                h.extend(header(&["separation[1]", "exact_rescaled[1]", "universal[1]", "abs_error[1]"]));
                h
            }
        },
        "appendix-a" => header(&["lambda[1]", "p[1]", "N[1]", "sum[1]", "integral[1]", "normalized_sum[1]", "sum_over_integral[1]"]),
        "cluster-sup" => header(&["lambda_requested[1/length]", "lambda_used[1/length]", "width[1/length]", "sup_value[length^-n]", "normalized[1]"]),
        _ => return None,
    })
}

/// Parses a `--manifold` string.
pub fn parse_manifold(s: &str) -> Result<ModelManifold, Error> {
    let bad = |why: &str| Error::Domain(format!("invalid manifold {s:?}: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["sphere2"] => ModelManifold::round_sphere(1.0),
        ["sphere2", r] => ModelManifold::round_sphere(r.parse().map_err(|_| bad("radius is not a number"))?),
        ["torus", n, basis] => {
            let n: usize = n.parse().map_err(|_| bad("dimension is not an integer"))?;
            if !(2..=3).contains(&n) {
                return Err(bad("torus dimension must be 2 or 3"));
            }
            let nums = |v: &str| -> Result<Vec<f64>, Error> {
                v.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad("bad number in basis"))).collect()
            };
            let lattice = match basis.split_once('=') {
                None if *basis == "square2pi" => Lattice::square(n, 2.0 * std::f64::consts::PI)?,
                Some(("square", p)) => Lattice::square(n, p.parse().map_err(|_| bad("bad period"))?)?,
                Some(("rect", p)) => {
                    let p = nums(p)?;
                    if p.len() != n {
                        return Err(bad("rect needs one period per dimension"));
                    }
                    Lattice::rectangular(&p)?
                }
                Some(("hex", p)) if n == 2 => Lattice::hexagonal(p.parse().map_err(|_| bad("bad hex side"))?)?,
                Some(("basis", p)) => {
                    let p = nums(p)?;
                    if p.len() != n * n {
                        return Err(bad("basis needs n*n entries"));
                    }
                    Lattice::new(DMatrix::from_column_slice(n, n, &p))?
                }
                _ => return Err(bad("unknown lattice basis")),
            };
            Ok(ModelManifold::flat_torus(lattice))
        }
        _ => Err(bad("expected torus:<n>:<basis> or sphere2[:radius]")),
    }
}

fn parse_grid(args: &RunArgs, default: &str) -> Result<Vec<f64>, Failure> {
    if let (None, Some(l)) = (&args.lambda_grid, args.lambda) {
        return Ok(vec![l]);
    }
    let spec = args.lambda_grid.as_deref().unwrap_or(default);
    let parts: Vec<&str> = spec.split(':').collect();
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(other) => return config(format!("lambda grid flag must be 'log', got {other:?}")),
    };
    if !(3..=4).contains(&parts.len()) {
        return config(format!("lambda grid must be lo:hi:count[:log], got {spec:?}"));
    }
    let lo: f64 = parts[0].parse().map_err(|_| Failure::Config(format!("bad grid start {:?}", parts[0])))?;
    let hi: f64 = parts[1].parse().map_err(|_| Failure::Config(format!("bad grid end {:?}", parts[1])))?;
    let count: usize = parts[2].parse().map_err(|_| Failure::Config(format!("bad grid count {:?}", parts[2])))?;
    Ok(lambda_grid(lo, hi, count, log)?)
}

fn parse_points(s: &str, n: usize) -> Result<Vec<Vec<f64>>, Failure> {
    s.split(';')
        .map(|p| {
            let v: Vec<f64> = p
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Config(format!("bad point {p:?}")))?;
            if v.len() != n {
                return config(format!("point {p:?} needs {n} coordinates"));
            }
            Ok(v)
        })
        .collect()
}

fn parse_deriv(s: &str) -> Result<DerivIndex, Failure> {
    let v: Vec<u8> = s
        .split(',')
        .map(|t| t.trim().parse::<u8>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Config(format!("--deriv must be ax,ay, got {s:?}")))?;
    match v.as_slice() {
        [ax, ay] => Ok(DerivIndex::along_first_axis(*ax, *ay)?),
        _ => config(format!("--deriv must be ax,ay, got {s:?}")),
    }
}

/// Base point and a few interior points used when `--points` is absent.
fn default_points(m: &ModelManifold) -> Vec<Vec<f64>> {
    match m {
        ModelManifold::FlatTorus(l) => {
            let n = l.dim();
            [[0.0, 0.0, 0.0], [0.13, 0.31, 0.57], [0.37, 0.66, 0.21], [0.8, 0.07, 0.44]]
                .iter()
                .map(|f| (l.basis() * nalgebra::DVector::from_column_slice(&f[..n])).iter().copied().collect())
                .collect()
        }
        ModelManifold::RoundSphere2 { .. } => vec![vec![0.0, 0.0], vec![0.9, 0.3], vec![1.7, 2.5]],
    }
}

fn points_or_default(args: &RunArgs, m: &ModelManifold) -> Result<Vec<Vec<f64>>, Failure> {
    match &args.points {
        Some(p) => parse_points(p, m.dim()),
        None => Ok(default_points(m)),
    }
}

fn first_a(args: &RunArgs, default: f64) -> f64 {
    args.a.first().copied().unwrap_or(default)
}

fn require_lambda(args: &RunArgs) -> Result<f64, Failure> {
    args.lambda.ok_or_else(|| Failure::Config("--lambda is required".into()))
}

fn linspace(hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    (0..count).map(|i| hi * i as f64 / (count - 1) as f64).collect()
}

fn push_coords(row: &mut Vec<Cell>, p: &[f64]) {
    row.extend(p.iter().map(|v| Cell::F(*v)));
}

fn compute(name: &str, args: &RunArgs) -> Result<Table, Failure> {
    let m = parse_manifold(&args.manifold)?;
    let n = m.dim();
    let d = parse_deriv(&args.deriv)?;
    let mut t = Table::new(csv_header(name, n, args.mode).ok_or_else(|| Failure::Config(format!("unknown subcommand {name}")))?);
    match name {
        "eigens" => {
            let top = parse_grid(args, "0:10:1")?.into_iter().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0i64;
            for (i, level) in m.eigenlevels(top)?.iter().enumerate() {
                total += level.multiplicity as i64;
                let r = level.sqrt_eigenvalue;
                t.rows.push(vec![Cell::I(i as i64), Cell::F(r), Cell::F(r * r), Cell::I(level.multiplicity as i64), Cell::I(total)]);
            }
            t.summary.push(format!("levels up to {top}: total multiplicity {total}"));
        }
        "kernel" => {
            let grid = parse_grid(args, "10:10:1")?;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = match &args.points {
                Some(p) => {
                    let pts = parse_points(p, n)?;
                    pts.iter().map(|q| (pts[0].clone(), q.clone())).collect()
                }
                None => {
                    let x0 = default_points(&m)[0].clone();
                    let mut dir = vec![0.0; n];
                    dir[0] = 1.0;
                    linspace(0.5 * m.injectivity_radius(), args.steps)
                        .into_iter()
                        .map(|s| {
                            let u: Vec<f64> = dir.iter().map(|c| c * s).collect();
                            Ok((x0.clone(), m.exp_map(&x0, &u)?))
                        })
                        .collect::<Result<_, Error>>()?
                }
            };
            for lam in grid {
                let vals = match args.a.first() {
                    Some(&w) => m.cluster_kernel_pairs(lam, w, &pairs, d)?,
                    None => m.spectral_function_pairs(lam, &pairs, d)?,
                };
                for ((x, y), v) in pairs.iter().zip(vals) {
                    let mut row = vec![Cell::F(lam), Cell::F(m.distance(x, y)?)];
                    push_coords(&mut row, x);
                    push_coords(&mut row, y);
                    row.push(Cell::F(v));
                    t.rows.push(row);
                }
            }
        }
        "remainder-scan" => {
            let grid = parse_grid(args, "50:400:30:log")?;
            let pairs: Vec<_> = points_or_default(args, &m)?.into_iter().map(|p| (p.clone(), p)).collect();
            let r = remainder_scan(&m, &grid, &pairs, d)?;
            for ((req, used), v) in grid.iter().zip(&r.lambda_grid).zip(&r.sup_values) {
                t.rows.push(vec![Cell::F(*req), Cell::F(*used), Cell::F(*v)]);
            }
            t.summary.push(format!("fitted exponent {:.4} (max log residual {:.3})", r.fitted_exponent, r.fit_residual));
        }
        "offdiag-scan" => {
            let grid = parse_grid(args, "50:400:30:log")?;
            let hi = (0.9 * m.injectivity_radius()).max(args.eps);
            let pairs = random_pairs(&m, args.seed, args.pairs, args.eps, hi)?;
            let r = offdiagonal_scan(&m, &grid, args.eps, &pairs)?;
            for ((req, used), v) in grid.iter().zip(&r.lambda_grid).zip(&r.sup_values) {
                t.rows.push(vec![Cell::F(*req), Cell::F(*used), Cell::F(*v)]);
            }
            t.summary.push(format!("fitted exponent {:.4}", r.fitted_exponent));
        }
        "smooth-compare" => {
            let grid = parse_grid(args, "5:20:3:log")?;
            let widths = if args.a.is_empty() { vec![1.0, 0.5] } else { args.a.clone() };
            let spec = MollifierSpec::for_manifold(&m)?;
            let pairs = random_pairs(&m, args.seed, args.pairs, 0.0, 0.9 * m.injectivity_radius())?;
            let mut worst: f64 = 0.0;
            for &lam in &grid {
                for &a in &widths {
                    let p = SmoothedProjector::new(&m, &spec, lam, a)?;
                    let spectral = p.spectral_pairs(&pairs)?;
                    let (mut max_s, mut max_abs, mut max_rel) = (0.0f64, 0.0f64, 0.0f64);
                    for ((x, y), s) in pairs.iter().zip(&spectral) {
                        let e = (s - p.images(x, y)?).abs();
                        max_s = max_s.max(s.abs());
                        max_abs = max_abs.max(e);
                        max_rel = max_rel.max(e / (1.0 + s.abs()));
                    }
                    worst = worst.max(max_rel);
                    t.rows.push(vec![
                        Cell::F(lam),
                        Cell::F(a),
                        Cell::I(pairs.len() as i64),
                        Cell::F(max_s),
                        Cell::F(max_abs),
                        Cell::F(max_rel),
                        Cell::F(p.spectral_radius()),
                        Cell::F(p.image_radius()),
                    ]);
                }
            }
            let verdict = if worst <= args.tol { "within" } else { "ABOVE" };
            t.summary.push(format!("max relative error {worst:.3e} ({verdict} tol {:.1e})", args.tol));
        }
        "cluster-bessel" => {
            let lam = require_lambda(args)?;
            let (lo, w) = off_spectrum_window(&m, lam, WidthRule::Fixed(first_a(args, 1.0)))?;
            let x0 = points_or_default(args, &m)?[0].clone();
            let mut dir = vec![0.0; n];
            dir[0] = 1.0;
            let reach = (8.0 / lam).min(0.5 * m.injectivity_radius());
            let table = cluster_vs_bessel(&m, lo, w, &x0, &dir, &linspace(reach, args.steps), d)?;
            for r in &table.rows {
                t.rows.push(vec![
                    Cell::F(lo),
                    Cell::F(w),
                    Cell::F(r.dist),
                    Cell::F(r.cluster),
                    Cell::F(r.bessel_prediction),
                    Cell::F(r.abs_error),
                    Cell::F(r.relative_error),
                ]);
            }
            t.summary.push(format!(
                "mean shell radius {:.6}, max relative error {:.4}",
                table.mean_radius,
                table.max_relative_error()
            ));
        }
        "randomwave" => {
            let lam = require_lambda(args)?;
            let ens = RandomWaveEnsemble::with_width(m.clone(), lam, first_a(args, 1.0), args.seed, args.samples)?;
            match args.mode {
                WaveMode::Sample => {
                    let pts = points_or_default(args, &m)?;
                    for s in 0..args.samples {
                        for (i, (p, v)) in pts.iter().zip(ens.sample_at(s, &pts)?).enumerate() {
                            let mut row = vec![Cell::I(s as i64), Cell::I(i as i64)];
                            push_coords(&mut row, p);
                            row.push(Cell::F(v));
                            t.rows.push(row);
                        }
                    }
                }
                WaveMode::Covariance => {
                    let pairs = random_pairs(&m, args.seed, args.pairs, 0.0, 0.5 * m.injectivity_radius())?;
                    let r = ens.covariance_report(&pairs)?;
                    for (i, (x, y)) in pairs.iter().enumerate() {
                        let mut row = vec![Cell::I(i as i64)];
                        push_coords(&mut row, x);
                        push_coords(&mut row, y);
                        let z = (r.empirical[i] - r.exact[i]) / r.std_errors[i];
                        row.extend([Cell::F(r.empirical[i]), Cell::F(r.exact[i]), Cell::F(r.std_errors[i]), Cell::F(z)]);
                        t.rows.push(row);
                    }
                    t.summary.push(format!("max |z| = {:.3} over {} pairs", r.max_z_score(), pairs.len()));
                }
                WaveMode::Rescaled => {
                    let x0 = points_or_default(args, &m)?[0].clone();
                    let reach = ens.effective_rescale_radius().min(5.0);
                    let mut worst: f64 = 0.0;
                    for s in linspace(reach, args.steps) {
                        let mut u = vec![0.0; n];
                        u[0] = s;
                        let v = vec![0.0; n];
                        let e = ens.rescaled_covariance_error(&x0, &u, &v)?;
                        worst = worst.max(e.abs_error);
                        let mut row = Vec::new();
                        push_coords(&mut row, &u);
                        push_coords(&mut row, &v);
                        row.extend([Cell::F(s), Cell::F(e.exact_rescaled), Cell::F(e.universal), Cell::F(e.abs_error)]);
                        t.rows.push(row);
                    }
                    t.summary.push(format!("max abs error {worst:.4e}"));
                }
            }
        }
        "appendix-a" => {
            // the sum over k depends on the fractional part of λ, so nodes are integers
            let mut grid: Vec<f64> = parse_grid(args, "50:800:30:log")?.into_iter().map(f64::round).collect();
            grid.dedup();
            for &p in &args.p {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &lam in &grid {
                    let s = localized_sum(lam, args.order, p)?;
                    let i = localized_integral(lam, args.order, p)?;
                    let norm = s / lam.powf(p);
                    lo = lo.min(norm);
                    hi = hi.max(norm);
                    t.rows.push(vec![Cell::F(lam), Cell::F(p), Cell::I(args.order as i64), Cell::F(s), Cell::F(i), Cell::F(norm), Cell::F(s / i)]);
                }
                t.summary.push(format!("p = {p}: normalized max/min = {:.4}", hi / lo));
            }
        }
        "cluster-sup" => {
            let grid = parse_grid(args, "50:800:30:log")?;
            let rule = match args.width_rule {
                WidthChoice::Fixed => WidthRule::Fixed(first_a(args, 1.0)),
                WidthChoice::OneOverLog => WidthRule::OneOverLog,
            };
            let diag = DerivIndex { alpha: d.alpha, beta: d.alpha };
            let r = cluster_sup_scan(&m, &grid, rule, diag, &points_or_default(args, &m)?)?;
            let normalized = r.normalized.clone().unwrap_or_default();
            for (i, req) in grid.iter().enumerate() {
                let used = r.lambda_grid[i];
                t.rows.push(vec![Cell::F(*req), Cell::F(used), Cell::F(rule.width(used)), Cell::F(r.sup_values[i]), Cell::F(normalized[i])]);
            }
            t.summary.push(format!(
                "fitted exponent {:.4}, normalized max/min {:.4}",
                r.fitted_exponent,
                r.normalized_spread().unwrap_or(f64::NAN)
            ));
        }
        other => return config(format!("unknown subcommand {other}")),
    }
    Ok(t)
}
