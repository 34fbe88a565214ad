//! Command-line front end: experiment sweeps, synthetic data and sketch
//! inspection. The binary only forwards to [`run_from_args`].

use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::bench_io::{
    self, aggregate, default_estimator_size, emit_plotdata, estimate_fro_residual, gaussian_points, load_dataset,
    read_libsvm, synth_lowrank_noise, write_libsvm, write_matrix_market, write_results_to, Decay,
    MatrixMarketColumns, ResultRow, DEFAULT_ESTIMATOR_EPSILON,
};
use crate::error::{Error, Result};
use crate::gmr::{self, GmrProblem};
use crate::matrix::{thin_qr, thin_svd, CscMatrix, Mat, MatrixHandle};
use crate::rng::{derive_seed, gaussian_matrix, substream, STREAM_AUX};
use crate::sketch::{leverage_scores, ScoreSide, SketchFamily, SketchOperator, SketchSpec};
use crate::spsd::{self, KernelOracle, SpsdApproximation};
use crate::svd_stream::{tail_norm, StreamSvdConfig, StreamSvdState, Variant};

/// Environment variable that shifts the seed list to start at its value.
pub const SEED_ENV: &str = "FASTGMR_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_ALGORITHM: i32 = 4;

/// Fresh seeds tried after a rank collapse before giving up.
const MAX_RETRIES: u64 = 3;

#[derive(Debug, Parser)]
#[command(name = "fastgmr", version, about = "Sketched GMR, SPSD approximation and single-pass SVD experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fast vs exact GMR error ratio over a sketch-size sweep.
    GmrBench(GmrBenchArgs),
    /// SPSD kernel approximation methods over a core-sample sweep.
    SpsdBench(SpsdBenchArgs),
    /// Fast vs practical single-pass SVD over a budget sweep.
    SvdBench(SvdBenchArgs),
    /// Write a synthetic matrix or point cloud.
    Synth(SynthArgs),
    /// Realize a sketch and print its structure and embedding quality.
    SketchInfo(SketchInfoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecayArg {
    None,
    Poly,
}

impl From<DecayArg> for Decay {
    fn from(d: DecayArg) -> Self {
        match d {
            DecayArg::None => Decay::None,
            DecayArg::Poly => Decay::Poly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SketchArg {
    /// Gaussian for dense inputs, count sketch for sparse ones.
    Auto,
    Gaussian,
    Countsketch,
    Osnap,
    Srht,
    Uniform,
    Leverage,
}

/// Output and seeding options shared by the bench commands.
#[derive(Debug, Clone, Args)]
pub struct RunOpts {
    /// Seeds: comma list (`1,2,5`) or half-open range (`0..30`).
    #[arg(long, default_value = "0..10")]
    pub seeds: String,
    /// Results CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot-ready aggregates (series,x,median,q25,q75).
    #[arg(long)]
    pub plotdata: Option<PathBuf>,
    /// JSON mirror of the aggregates.
    #[arg(long)]
    pub json_summary: Option<PathBuf>,
}

/// Synthetic low-rank-plus-noise matrix used when no dataset is given.
#[derive(Debug, Clone, Args)]
pub struct SynthMatrixOpts {
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    /// Planted rank.
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = DecayArg::None)]
    pub decay: DecayArg,
    #[arg(long, default_value_t = 42)]
    pub synth_seed: u64,
}

impl SynthMatrixOpts {
    fn build(&self) -> Result<(MatrixHandle, String)> {
        if self.rank > self.m.min(self.n) {
            return Err(Error::Config(format!("rank {} exceeds min(m, n)", self.rank)));
        }
        let a = synth_lowrank_noise(self.m, self.n, self.rank, self.noise, self.decay.into(), self.synth_seed);
        let name = format!(
            "synth-{}x{}-rank{}-noise{}-{:?}-seed{}",
            self.m, self.n, self.rank, self.noise, self.decay, self.synth_seed
        )
        .to_lowercase();
        Ok((a, name))
    }
}

#[derive(Debug, Clone, Args)]
pub struct GmrBenchArgs {
    /// Matrix Market (.mtx) or libsvm file; synthetic when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthMatrixOpts,
    #[arg(long, default_value_t = 20)]
    pub c: usize,
    #[arg(long, default_value_t = 20)]
    pub r: usize,
    /// Sketch-size multipliers a (s_c = a c, s_r = a r).
    #[arg(long, default_value = "2,4,6,8,10,12")]
    pub sweep: String,
    #[arg(long, value_enum, default_value_t = SketchArg::Auto)]
    pub sketch: SketchArg,
    /// Accuracy of the count-sketch residual estimator.
    #[arg(long, default_value_t = DEFAULT_ESTIMATOR_EPSILON)]
    pub epsilon: f64,
    /// Inputs with more nonzeros switch to estimated residuals (rows then
    /// carry the estimator epsilon).
    #[arg(long, default_value_t = 10_000_000)]
    pub nnz_threshold: usize,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Args)]
pub struct SpsdBenchArgs {
    /// libsvm file of data points (samples become kernel indices).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Synthetic cloud: number of points.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Synthetic cloud: dimension.
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    #[arg(long, default_value_t = 42)]
    pub synth_seed: u64,
    /// RBF scale; tuned so that eta(k) reaches --eta-target when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.6)]
    pub eta_target: f64,
    /// Target rank; columns sampled c = 2k.
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    /// Core-sample multipliers a (s = a c).
    #[arg(long, default_value = "2,4,6,8,10")]
    pub sweep: String,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Args)]
pub struct SvdBenchArgs {
    /// Matrix Market or libsvm file; `-` streams Matrix Market from stdin.
    #[arg(long)]
    pub dataset: Option<String>,
    #[command(flatten)]
    pub synth: SynthMatrixOpts,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Budgets (c + r) / k.
    #[arg(long, default_value = "4,6,8,12")]
    pub sweep: String,
    #[arg(long, default_value_t = 50)]
    pub block_size: usize,
    /// Core sketch rows per column of C for the fast variant (s_c = s_r = f c).
    #[arg(long, default_value_t = 6)]
    pub s_factor: usize,
    /// OSNAP rows per column of C (c0 = r0 = f c).
    #[arg(long, default_value_t = 2)]
    pub c0_factor: usize,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Low-rank plus noise matrix, written as Matrix Market.
    Matrix,
    /// Clustered point cloud, written as libsvm (label = cluster).
    Points,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Matrix)]
    pub kind: SynthKind,
    #[command(flatten)]
    pub synth: SynthMatrixOpts,
    /// Write a sparse coordinate file instead of a dense array.
    #[arg(long)]
    pub sparse: bool,
    /// Points: dimension.
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SketchInfoArgs {
    #[arg(long, value_enum, default_value_t = SketchArg::Gaussian)]
    pub sketch: SketchArg,
    /// Source dimension.
    #[arg(long, default_value_t = 400)]
    pub m: usize,
    /// Sketch rows.
    #[arg(long, default_value_t = 100)]
    pub s: usize,
    /// OSNAP nonzeros per column.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Dimension of the random subspace used for the embedding check.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses a sweep list; values must be positive and strictly increasing.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad sweep value {t:?}")))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() || vals.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Config("sweep values must be positive".into()));
    }
    if vals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sweep values must be strictly increasing".into()));
    }
    Ok(vals)
}

/// Parses `a,b,c` or `lo..hi`; a `FASTGMR_SEED` value shifts the list so it
/// starts there while keeping its length.
pub fn parse_seeds(text: &str, env_override: Option<&str>) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list {text:?}"));
    let mut seeds: Vec<u64> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        (lo..hi).collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    if let Some(base) = env_override {
        let base: u64 = base
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an integer, got {base:?}")))?;
        seeds = (0..seeds.len() as u64).map(|i| base + i).collect();
    }
    Ok(seeds)
}

fn seeds_for(run: &RunOpts) -> Result<Vec<u64>> {
    parse_seeds(&run.seeds, std::env::var(SEED_ENV).ok().as_deref())
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidSpec(_) | Error::DimensionMismatch { .. } | Error::NotSquare { .. } => {
            EXIT_CONFIG
        }
        Error::Io(_)
        | Error::Csv(_)
        | Error::Parse { .. }
        | Error::Index { .. }
        | Error::UnsupportedField(_)
        | Error::Checkpoint(_)
        | Error::InvalidStructure(_) => EXIT_IO,
        _ => EXIT_ALGORITHM,
    }
}

pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::GmrBench(a) => cmd_gmr_bench(a).and_then(|rows| emit(&rows, &a.run)),
        Command::SpsdBench(a) => cmd_spsd_bench(a).and_then(|rows| emit(&rows, &a.run)),
        Command::SvdBench(a) => cmd_svd_bench(a).and_then(|rows| emit(&rows, &a.run)),
        Command::Synth(a) => cmd_synth(a),
        Command::SketchInfo(a) => cmd_sketch_info(a, &mut io::stdout().lock()),
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    rows: usize,
    metric: &'a str,
    x_field: &'a str,
    points: Vec<bench_io::PlotPoint>,
}

/// Writes the CSV (file or stdout), plot data and JSON summary.
fn emit(rows: &[ResultRow], run: &RunOpts) -> Result<()> {
    match &run.out {
        Some(path) => bench_io::write_results(rows, path)?,
        None => write_results_to(rows, io::stdout().lock())?,
    }
    // Every bench emits its primary metric first.
    let metric = rows.first().map_or("error_ratio", |r| r.metric.as_str());
    if let Some(path) = &run.plotdata {
        emit_plotdata(rows, "a", metric, path)?;
    }
    if let Some(path) = &run.json_summary {
        let summary = Summary {
            rows: rows.len(),
            metric,
            x_field: "a",
            points: aggregate(rows, "a", metric)?,
        };
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.into()))?;
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

/// Runs `f` with `seed`, retrying with fresh derived seeds on rank collapse.
fn with_retries<T>(seed: u64, mut f: impl FnMut(u64) -> Result<T>) -> Result<(T, u64)> {
    let mut attempt_seed = seed;
    for attempt in 0..=MAX_RETRIES {
        match f(attempt_seed) {
            Err(Error::RankCollapse { .. }) if attempt < MAX_RETRIES => {
                attempt_seed = derive_seed(seed, 1000 + attempt);
            }
            other => return other.map(|v| (v, attempt_seed)),
        }
    }
    unreachable!()
}

fn load_matrix(dataset: &Option<PathBuf>, synth: &SynthMatrixOpts) -> Result<(MatrixHandle, String)> {
    match dataset {
        Some(path) => {
            let (a, rec) = load_dataset(path)?;
            Ok((a, rec.name))
        }
        None => synth.build(),
    }
}

fn family_for(arg: SketchArg, sparse: bool) -> SketchArg {
    match arg {
        SketchArg::Auto if sparse => SketchArg::Countsketch,
        SketchArg::Auto => SketchArg::Gaussian,
        other => other,
    }
}

fn sketch_spec(arg: SketchArg, s: usize, dim: usize, seed: u64, scores: impl FnOnce() -> Result<Vec<f64>>) -> Result<SketchSpec> {
    let family = match arg {
        SketchArg::Auto | SketchArg::Gaussian => SketchFamily::Gaussian,
        SketchArg::Countsketch => SketchFamily::CountSketch,
        SketchArg::Osnap => SketchFamily::Osnap { nnz_per_col: 2 },
        SketchArg::Srht => SketchFamily::Srht,
        SketchArg::Uniform => SketchFamily::UniformSample,
        SketchArg::Leverage => SketchFamily::LeverageSample(scores()?),
    };
    Ok(SketchSpec::new(family, s, dim, seed))
}

fn sketch_name(arg: SketchArg) -> &'static str {
    match arg {
        SketchArg::Auto => "auto",
        SketchArg::Gaussian => "gaussian",
        SketchArg::Countsketch => "countsketch",
        SketchArg::Osnap => "osnap",
        SketchArg::Srht => "srht",
        SketchArg::Uniform => "uniform",
        SketchArg::Leverage => "leverage",
    }
}

/// GMR error ratio `||A - C X~ R|| / ||A - C X* R|| - 1` with `C = A G_C`,
/// `R = G_R A` for Gaussian `G_C`, `G_R`.
pub fn cmd_gmr_bench(args: &GmrBenchArgs) -> Result<Vec<ResultRow>> {
    let sweep = parse_sweep(&args.sweep)?;
    let seeds = seeds_for(&args.run)?;
    let (a, dataset) = load_matrix(&args.dataset, &args.synth)?;
    let (m, n) = (a.rows(), a.cols());
    if args.c == 0 || args.r == 0 || args.c > m || args.r > n {
        return Err(Error::Config(format!("need 1 <= c <= {m} and 1 <= r <= {n}")));
    }
    let family = family_for(args.sketch, a.is_sparse());
    let estimate = a.nnz() > args.nnz_threshold;
    let est_size = default_estimator_size(args.epsilon);
    let jobs: Vec<(f64, u64)> = sweep.iter().flat_map(|&x| seeds.iter().map(move |&s| (x, s))).collect();
    let experiment = format!("gmr/{}", sketch_name(family));
    jobs.par_iter()
        .map(|&(factor, seed)| {
            let start = Instant::now();
            let s_c = (factor * args.c as f64).ceil() as usize;
            let s_r = (factor * args.r as f64).ceil() as usize;
            let (ratio, _) = with_retries(seed, |sd| {
                let gc = gaussian_matrix(n, args.c, &mut substream(derive_seed(sd, 100), STREAM_AUX));
                let gr = gaussian_matrix(args.r, m, &mut substream(derive_seed(sd, 101), STREAM_AUX));
                let p = GmrProblem::new(a.clone(), a.mul_dense(&gc), a.left_mul_dense(&gr))?;
                let exact = gmr::solve_exact(&p)?;
                let sc = sketch_spec(family, s_c, m, derive_seed(sd, 1), || {
                    Ok(leverage_scores(&p.c, ScoreSide::Row)?.scores)
                })?;
                let sr = sketch_spec(family, s_r, n, derive_seed(sd, 2), || {
                    Ok(leverage_scores(&p.r, ScoreSide::Column)?.scores)
                })?;
                let fast = gmr::solve_fast(&p, &sc, &sr)?;
                if estimate {
                    let es = derive_seed(sd, 3);
                    let ef = estimate_fro_residual(&p.a, &p.c, &fast.core, &p.r, est_size, est_size, es)?;
                    let ee = estimate_fro_residual(&p.a, &p.c, &exact.core, &p.r, est_size, est_size, es)?;
                    Ok(ef / ee - 1.0)
                } else {
                    Ok(fast.error_ratio(&exact))
                }
            })?;
            Ok(ResultRow {
                experiment: experiment.clone(),
                dataset: dataset.clone(),
                m,
                n,
                c: Some(args.c),
                r: Some(args.r),
                s_c: Some(s_c),
                s_r: Some(s_r),
                a: Some(factor),
                epsilon: estimate.then_some(args.epsilon),
                seed,
                metric: "error_ratio".into(),
                value: ratio,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                ..Default::default()
            })
        })
        .collect()
}

/// Error ratio `||K - C X C^T||_F / ||K||_F` and queries for Nystrom, the
/// single-sketch baseline, the query-frugal method and the optimal core.
pub fn cmd_spsd_bench(args: &SpsdBenchArgs) -> Result<Vec<ResultRow>> {
    let sweep = parse_sweep(&args.sweep)?;
    let seeds = seeds_for(&args.run)?;
    let (points, dataset) = match &args.dataset {
        Some(path) => {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (read_libsvm(path)?.features.to_dense(), name)
        }
        None => (
            gaussian_points(args.d, args.n, args.clusters, 1.0, args.synth_seed),
            format!("points-{}x{}-clusters{}-seed{}", args.d, args.n, args.clusters, args.synth_seed),
        ),
    };
    let n = points.ncols();
    let c = 2 * args.k;
    if args.k == 0 || c > n {
        return Err(Error::Config(format!("need 1 <= 2k <= n (k = {}, n = {n})", args.k)));
    }
    let sigma = match args.sigma {
        Some(s) => s,
        None => spsd::tune_sigma(&points, args.k, args.eta_target, 1e-6, 1e3)?,
    };
    let base = KernelOracle::new(points, sigma)?;
    let k_dense = base.dense();
    let k_norm = k_dense.norm();
    let per_seed: Vec<Vec<ResultRow>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rows = Vec::new();
            let mut push = |method: &str, s: Option<usize>, factor: f64, approx: &SpsdApproximation, ms: f64| {
                let row = ResultRow {
                    experiment: format!("spsd/{method}"),
                    dataset: dataset.clone(),
                    m: n,
                    n,
                    c: Some(c),
                    s_c: s,
                    s_r: s,
                    a: Some(factor),
                    k: Some(args.k),
                    sigma: Some(sigma),
                    seed,
                    wall_ms: ms,
                    ..Default::default()
                };
                rows.push(ResultRow {
                    metric: "error_ratio".into(),
                    value: approx.residual_fro(&k_dense) / k_norm,
                    ..row.clone()
                });
                rows.push(ResultRow {
                    metric: "queries".into(),
                    value: approx.queries_used as f64,
                    ..row
                });
            };
            let timed = |f: &mut dyn FnMut() -> Result<SpsdApproximation>| -> Result<(SpsdApproximation, f64)> {
                let t = Instant::now();
                let out = f()?;
                Ok((out, t.elapsed().as_secs_f64() * 1e3))
            };
            let (ny, ny_ms) = timed(&mut || spsd::nystrom(&mut base.clone(), c, seed))?;
            let (opt, opt_ms) = timed(&mut || spsd::optimal_core(&mut base.clone(), c, seed))?;
            for &factor in &sweep {
                let s = ((factor * c as f64).ceil() as usize).min(n);
                push("nystrom", None, factor, &ny, ny_ms);
                push("optimal", None, factor, &opt, opt_ms);
                let (fast, ms) = timed(&mut || {
                    with_retries(seed, |sd| spsd::approximate(&mut base.clone(), c, s, sd)).map(|x| x.0)
                })?;
                push("faster", Some(s), factor, &fast, ms);
                let (bl, ms) = timed(&mut || {
                    with_retries(seed, |sd| spsd::fast_spsd_baseline(&mut base.clone(), c, s, sd)).map(|x| x.0)
                })?;
                push("baseline", Some(s), factor, &bl, ms);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = per_seed.into_iter().flatten().collect();
    // Deterministic (sweep value, seed) order; the sort is stable so the
    // method order within a pair is kept.
    rows.sort_by(|x, y| x.a.unwrap_or(0.0).total_cmp(&y.a.unwrap_or(0.0)).then(x.seed.cmp(&y.seed)));
    Ok(rows)
}

fn svd_configs(args: &SvdBenchArgs, budget: usize, seed: u64) -> (StreamSvdConfig, StreamSvdConfig) {
    let c = budget / 2;
    let fast = StreamSvdConfig {
        k: args.k,
        epsilon: args.epsilon,
        c0: args.c0_factor * c,
        r0: args.c0_factor * (budget - c),
        c,
        r: budget - c,
        s_c: args.s_factor * c,
        s_r: args.s_factor * c,
        block_size: args.block_size,
        seed,
        osnap_p: crate::svd_stream::DEFAULT_OSNAP_NNZ,
    };
    let pc = budget / 3;
    let practical = StreamSvdConfig {
        c: pc,
        r: budget - pc,
        ..fast.clone()
    };
    (fast, practical)
}

/// Single-pass SVD error ratio `||A - U S V^T|| / ||A - A_k|| - 1` for the
/// fast and practical variants at budgets `(c + r) = a k`.
pub fn cmd_svd_bench(args: &SvdBenchArgs) -> Result<Vec<ResultRow>> {
    let sweep = parse_sweep(&args.sweep)?;
    let seeds = seeds_for(&args.run)?;
    if args.block_size == 0 {
        return Err(Error::Config("block size must be at least 1".into()));
    }
    let (a, dataset) = match args.dataset.as_deref() {
        Some("-") => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text)?;
            (read_stream_dense(text.as_bytes(), args.block_size)?, "stdin".to_string())
        }
        Some(path) => load_matrix(&Some(PathBuf::from(path)), &args.synth)?,
        None => args.synth.build()?,
    };
    let (m, n) = (a.rows(), a.cols());
    let dense = a.to_dense();
    let tail = tail_norm(&dense, args.k)?;
    let jobs: Vec<(f64, u64)> = sweep.iter().flat_map(|&x| seeds.iter().map(move |&s| (x, s))).collect();
    let per_job: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(factor, seed)| {
            let budget = (factor * args.k as f64).round() as usize;
            let (fcfg, pcfg) = svd_configs(args, budget, seed);
            let mut rows = Vec::new();
            for (name, cfg, variant) in [("fast", fcfg, Variant::Fast), ("practical", pcfg, Variant::Practical)] {
                let start = Instant::now();
                let (factors, _) = with_retries(seed, |sd| {
                    let cfg = StreamSvdConfig { seed: sd, ..cfg.clone() };
                    let mut st = StreamSvdState::with_variant(cfg, m, n, variant)?;
                    for (off, blk) in bench_io::column_blocks(&a, args.block_size) {
                        st.ingest_block(&blk, off)?;
                    }
                    st.finalize()
                })?;
                let value = if tail <= 1e-12 * dense.norm() {
                    factors.residual_fro(&dense) / dense.norm()
                } else {
                    factors.residual_fro(&dense) / tail - 1.0
                };
                rows.push(ResultRow {
                    experiment: format!("svd/{name}"),
                    dataset: dataset.clone(),
                    m,
                    n,
                    c: Some(cfg.c),
                    r: Some(cfg.r),
                    s_c: (variant == Variant::Fast).then_some(cfg.s_c),
                    s_r: (variant == Variant::Fast).then_some(cfg.s_r),
                    a: Some(factor),
                    k: Some(args.k),
                    epsilon: Some(args.epsilon),
                    seed,
                    metric: if tail <= 1e-12 * dense.norm() { "relative_residual" } else { "error_ratio" }.into(),
                    value,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    ..Default::default()
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Reads a Matrix Market stream block by block into memory.
fn read_stream_dense(bytes: &[u8], block_size: usize) -> Result<MatrixHandle> {
    let stream = MatrixMarketColumns::from_reader(bytes, block_size)?;
    let (m, n) = (stream.rows(), stream.cols());
    let mut out = Mat::zeros(m, n);
    for item in stream {
        let (off, blk) = item?;
        out.columns_mut(off, blk.cols()).copy_from(&blk.to_dense());
    }
    Ok(MatrixHandle::Dense(out))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    match args.kind {
        SynthKind::Matrix => {
            let (a, _) = args.synth.build()?;
            let a = if args.sparse {
                MatrixHandle::Sparse(CscMatrix::from_dense(&a.to_dense()))
            } else {
                a
            };
            write_matrix_market(&a, &args.out)
        }
        SynthKind::Points => {
            let pts = gaussian_points(args.d, args.synth.n, args.clusters, 1.0, args.synth.synth_seed);
            let labels: Vec<f64> = (0..pts.ncols()).map(|j| (j % args.clusters.max(1)) as f64).collect();
            write_libsvm(&CscMatrix::from_dense(&pts), &labels, &args.out)
        }
    }
}

#[derive(Serialize)]
struct SketchInfo {
    family: &'static str,
    sketch_rows: usize,
    source_dim: usize,
    seed: u64,
    nnz: usize,
    subspace_dim: usize,
    min_singular_value: f64,
    max_singular_value: f64,
}

/// Prints a JSON description of the realized sketch, including the extreme
/// singular values of `S U` for a random orthonormal `U` (`m x k`).
pub fn cmd_sketch_info(args: &SketchInfoArgs, out: &mut impl Write) -> Result<()> {
    if args.k == 0 || args.k > args.m {
        return Err(Error::Config(format!("need 1 <= k <= m (k = {}, m = {})", args.k, args.m)));
    }
    let family = family_for(args.sketch, false);
    let u = thin_qr(&gaussian_matrix(args.m, args.k, &mut substream(derive_seed(args.seed, 7), STREAM_AUX))).0;
    let mut spec = sketch_spec(family, args.s, args.m, args.seed, || {
        Ok(leverage_scores(&u, ScoreSide::Row)?.scores)
    })?;
    if let SketchFamily::Osnap { .. } = spec.family {
        spec.family = SketchFamily::Osnap { nnz_per_col: args.p };
    }
    let op = SketchOperator::realize(&spec)?;
    let sv = thin_svd(&op.apply_left_dense(&u))?.singular_values;
    let info = SketchInfo {
        family: spec.family.name(),
        sketch_rows: op.sketch_rows(),
        source_dim: op.source_dim(),
        seed: args.seed,
        nnz: op.nnz(),
        subspace_dim: args.k,
        min_singular_value: if sv.len() < args.k { 0.0 } else { sv.last().copied().unwrap_or(0.0) },
        max_singular_value: sv.first().copied().unwrap_or(0.0),
    };
    let text = serde_json::to_string_pretty(&info).map_err(|e| Error::Io(e.into()))?;
    writeln!(out, "{text}")?;
    Ok(())
}
