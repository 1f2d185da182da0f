//! Command-line surface: reproducible experiments over the planner, the
//! filter index, the instance generators, and the oracles.
//!
//! One binary, five modes selected by `--mode`:
//!
//! * `plan`  — resolve and print concrete filter parameters (human-readable
//!   table plus a JSON line; `--out` writes the JSON to a file).
//! * `curve` — sweep `beta` across its optimal range and emit the
//!   query/update exponent tradeoff as CSV.
//! * `build` — read a vector file, build an index, persist it.
//! * `query` — load a persisted index and run queries from a vector file.
//! * `bench` — run planted-instance trials end to end and report recall,
//!   measured costs, and the planner's predictions.
//!
//! Configuration comes from `--config <json>` overridden by flags
//! (`--n --d --theta --c --beta --kappa --m --trials --seed --out
//! --regime --mode`, plus `--vectors --index --target-angle
//! --curve-points`). Exactly one of `--theta`/`--c` must be set for
//! commands that need an angle. Exit codes: 0 success, 1 runtime failure,
//! 2 invalid configuration.
//!
//! CSV schemas (all v1, first line a `#`-comment naming schema and
//! version, second line the header):
//!
//! * curve: `beta,rho_u,rho_q`
//! * query: `query,found,best_id,best_angle,candidates,buckets`
//! * bench: `trial,found,candidates,buckets_query,buckets_update`
//!
//! Bench rows deliberately exclude wall-clock time so identical
//! (config, seed) runs are byte-identical; the elapsed time appears only
//! in the human-readable summary. Per-trial randomness uses `seed + trial
//! index`; the shared background dataset and the code use the next seeds
//! after the trial range.

pub mod vecfile;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;

use crate::filter_index::FilterIndex;
use crate::instance_gen::{generate, InstanceSpec, Model};
use crate::planner::{
    self, plan, theta_from_c, tradeoff_curve, tradeoff_curve_for_c, PlanParams, Regime,
    DEFAULT_KAPPA,
};
use crate::sphere_geometry::{sample_at_angle, sample_unit_vector, Angle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Acceptance slack when comparing a measured angle against the planted
/// angle: the construction is exact only up to normalization rounding.
const TARGET_ANGLE_SLACK: f64 = 1e-9;

/// What the command should do; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plan,
    Curve,
    Build,
    Query,
    Bench,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plan" => Ok(Mode::Plan),
            "curve" => Ok(Mode::Curve),
            "build" => Ok(Mode::Build),
            "query" => Ok(Mode::Query),
            "bench" => Ok(Mode::Bench),
            other => Err(format!(
                "unknown mode '{other}' (expected plan, curve, build, query, or bench)"
            )),
        }
    }
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    match s {
        "sparse" => Ok(Regime::Sparse),
        "dense" => Ok(Regime::Dense),
        "critical" => Ok(Regime::Critical),
        other => Err(format!(
            "unknown regime '{other}' (expected sparse, dense, or critical)"
        )),
    }
}

/// A complete experiment description. Every field is optional so a JSON
/// config file and command-line flags can each supply any subset; flags
/// win. Defaults are applied at resolution time.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub regime: Option<Regime>,
    pub n: Option<u64>,
    pub d: Option<u32>,
    pub theta: Option<f64>,
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub m: Option<u32>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub target_angle: Option<f64>,
    pub curve_points: Option<usize>,
}

/// Command-line flags; each one overrides the matching config-file field.
#[derive(Debug, Parser)]
#[command(
    name = "sphf",
    about = "Asymmetric spherical filters for near-neighbor search: planning, indexing, and benchmarks",
    version
)]
pub struct Cli {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// plan | curve | build | query | bench
    #[arg(long)]
    pub mode: Option<Mode>,
    /// sparse | dense | critical
    #[arg(long, value_parser = parse_regime)]
    pub regime: Option<Regime>,
    /// Dataset size the plan is sized for.
    #[arg(long)]
    pub n: Option<u64>,
    /// Ambient dimension.
    #[arg(long)]
    pub d: Option<u32>,
    /// Nearby angle in radians (exactly one of --theta/--c).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Approximation factor; sets cos(theta) = 1 - 1/c^2.
    #[arg(long)]
    pub c: Option<f64>,
    /// Threshold ratio alpha_q/alpha_u (default 1: balanced).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Expected planted-pair filter collisions the plan targets.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Override the number of code blocks.
    #[arg(long)]
    pub m: Option<u32>,
    /// Bench trials.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed; trial i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (JSON for plan, CSV otherwise; default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vector file (input points for build, queries for query).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Index file (output of build, input of query).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query acceptance angle in radians (default: the plan's theta).
    #[arg(long)]
    pub target_angle: Option<f64>,
    /// Resolution of the tradeoff curve (default 1000).
    #[arg(long)]
    pub curve_points: Option<usize>,
}

/// A failure with its process exit code: configuration problems exit 2,
/// runtime problems exit 1.
#[derive(Debug)]
pub enum CliFailure {
    Config(String),
    Runtime(String),
}

impl CliFailure {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliFailure::Config(_) => 2,
            CliFailure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliFailure::Config(m) | CliFailure::Runtime(m) => m,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliFailure>;

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliFailure::Config(msg.into()))
}

/// Parses the process arguments, runs the experiment, and returns the exit
/// code (clap itself exits 2 on malformed flags).
pub fn main_from_env() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

/// Merges the config file (if any) with the flags and dispatches.
pub fn run(cli: Cli) -> CliResult<()> {
    let config = resolve_config(&cli)?;
    let mode = match config.mode {
        Some(m) => m,
        None => return config_err("no mode given; pass --mode plan|curve|build|query|bench"),
    };
    if let Some(t) = config.trials {
        if t < 1 {
            return config_err("--trials must be at least 1");
        }
    }
    match mode {
        Mode::Plan => cmd_plan(&config),
        Mode::Curve => cmd_curve(&config),
        Mode::Build => cmd_build(&config),
        Mode::Query => cmd_query(&config),
        Mode::Bench => cmd_bench(&config),
    }
}

fn resolve_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliFailure::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| {
                CliFailure::Config(format!("config {}: {e}", path.display()))
            })?
        }
        None => ExperimentConfig::default(),
    };
    if cli.mode.is_some() {
        config.mode = cli.mode;
    }
    if cli.regime.is_some() {
        config.regime = cli.regime;
    }
    if cli.n.is_some() {
        config.n = cli.n;
    }
    if cli.d.is_some() {
        config.d = cli.d;
    }
    // theta and c form one mutually exclusive group: supplying either on
    // the command line replaces the group, so a flag can switch the angle
    // parametrization without editing the config file.
    if cli.theta.is_some() || cli.c.is_some() {
        config.theta = cli.theta;
        config.c = cli.c;
    }
    if cli.beta.is_some() {
        config.beta = cli.beta;
    }
    if cli.kappa.is_some() {
        config.kappa = cli.kappa;
    }
    if cli.m.is_some() {
        config.m = cli.m;
    }
    if cli.trials.is_some() {
        config.trials = cli.trials;
    }
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    if cli.vectors.is_some() {
        config.vectors = cli.vectors.clone();
    }
    if cli.index.is_some() {
        config.index = cli.index.clone();
    }
    if cli.target_angle.is_some() {
        config.target_angle = cli.target_angle;
    }
    if cli.curve_points.is_some() {
        config.curve_points = cli.curve_points;
    }
    Ok(config)
}

/// The resolved angle parametrization: always a concrete angle, plus the
/// approximation factor when that is how it was given (the c-form keeps
/// closed-form exponent values exact).
#[derive(Debug)]
struct AngleSpec {
    theta: Angle,
    c: Option<f64>,
}

fn resolve_angle(config: &ExperimentConfig) -> CliResult<AngleSpec> {
    match (config.theta, config.c) {
        (Some(_), Some(_)) => config_err("give exactly one of --theta and --c, not both"),
        (None, None) => config_err("an angle is required: give exactly one of --theta and --c"),
        (Some(t), None) => {
            let theta = Angle::from_radians(t)
                .map_err(|e| CliFailure::Config(format!("--theta: {e}")))?;
            Ok(AngleSpec { theta, c: None })
        }
        (None, Some(c)) => {
            let theta =
                theta_from_c(c).map_err(|e| CliFailure::Config(format!("--c: {e}")))?;
            Ok(AngleSpec { theta, c: Some(c) })
        }
    }
}

fn require<T: Copy>(value: Option<T>, what: &str) -> CliResult<T> {
    match value {
        Some(v) => Ok(v),
        None => config_err(format!("{what} is required for this mode")),
    }
}

fn require_path<'a>(value: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    match value {
        Some(p) => Ok(p.as_path()),
        None => config_err(format!("{what} is required for this mode")),
    }
}

fn resolve_plan(config: &ExperimentConfig) -> CliResult<(PlanParams, AngleSpec)> {
    let angle = resolve_angle(config)?;
    let regime = config.regime.unwrap_or(Regime::Sparse);
    let n = require(config.n, "--n")?;
    let d = require(config.d, "--d")?;
    let beta = config.beta.unwrap_or(1.0);
    let kappa = config.kappa.unwrap_or(DEFAULT_KAPPA);
    let params = plan(regime, n, d, angle.theta, beta, kappa, config.m)
        .map_err(|e| CliFailure::Config(e.to_string()))?;
    Ok((params, angle))
}

fn write_output(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, contents).map_err(|e| {
            CliFailure::Runtime(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(contents.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| CliFailure::Runtime(format!("cannot write to stdout: {e}")))
        }
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string(value)
        .map_err(|e| CliFailure::Runtime(format!("serialization failed: {e}")))
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

fn cmd_plan(config: &ExperimentConfig) -> CliResult<()> {
    let (params, angle) = resolve_plan(config)?;
    let mut table = String::new();
    let _ = writeln!(table, "regime       {}", params.regime);
    let _ = writeln!(table, "n            {}", params.n);
    let _ = writeln!(table, "d            {} (padded to {})", params.d, params.d_pad);
    let _ = writeln!(table, "theta        {:.8} rad", params.theta.radians());
    if let Some(c) = angle.c {
        let _ = writeln!(table, "c            {c:.8}");
    }
    let _ = writeln!(table, "beta         {:.8}", params.beta);
    let _ = writeln!(table, "alpha_q      {:.8}", params.alpha_q);
    let _ = writeln!(table, "alpha_u      {:.8}", params.alpha_u);
    let _ = writeln!(table, "m            {}", params.m);
    let _ = writeln!(table, "b            {}", params.b);
    let _ = writeln!(table, "t            {} (requested {})", params.t, params.t_requested);
    let _ = writeln!(table, "rho_q        {:.8}", params.rho_q);
    let _ = writeln!(table, "rho_u        {:.8}", params.rho_u);
    let _ = writeln!(table, "kappa        {:.4}", params.kappa);
    print!("{table}");
    let json = json_line(&params)?;
    println!("{json}");
    if config.out.is_some() {
        write_output(config.out.as_deref(), &(json + "\n"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------------

fn cmd_curve(config: &ExperimentConfig) -> CliResult<()> {
    let angle = resolve_angle(config)?;
    let regime = config.regime.unwrap_or(Regime::Sparse);
    let points = config.curve_points.unwrap_or(1000);
    let curve = match angle.c {
        Some(c) => tradeoff_curve_for_c(c, points, regime),
        None => tradeoff_curve(angle.theta, points, regime),
    }
    .map_err(|e| CliFailure::Config(e.to_string()))?;
    let mut csv = String::from("# sphere-filters curve csv v1\nbeta,rho_u,rho_q\n");
    for p in &curve {
        let _ = writeln!(csv, "{:.12},{:.12},{:.12}", p.beta, p.rho_u, p.rho_q);
    }
    write_output(config.out.as_deref(), &csv)
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct BuildSummary {
    points: usize,
    dimension: u32,
    filters: u64,
    blocks: u32,
    base: u32,
    non_empty_buckets: usize,
    bucket_entries: u64,
}

fn cmd_build(config: &ExperimentConfig) -> CliResult<()> {
    let vectors_path = require_path(&config.vectors, "--vectors")?;
    let index_path = require_path(&config.index, "--index")?;
    let vectors = vecfile::read_vectors(vectors_path)
        .map_err(|e| CliFailure::Config(format!("{}: {e}", vectors_path.display())))?;
    if vectors.is_empty() {
        return config_err(format!("{} holds no vectors", vectors_path.display()));
    }
    let file_dim = vectors[0].dim() as u32;
    if let Some(d) = config.d {
        if d != file_dim {
            return config_err(format!(
                "--d {d} disagrees with the vector file's dimension {file_dim}"
            ));
        }
    }
    let mut config = config.clone();
    config.d = Some(file_dim);
    if config.n.is_none() {
        config.n = Some(vectors.len() as u64);
    }
    let (params, _) = resolve_plan(&config)?;
    let seed = config.seed.unwrap_or(0);
    let mut index = FilterIndex::from_plan(params, seed)
        .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    index.reserve_for_points(vectors.len());
    for (id, v) in vectors.iter().enumerate() {
        index
            .insert(id as u64, v)
            .map_err(|e| CliFailure::Runtime(format!("inserting vector {id}: {e}")))?;
    }
    index
        .save(index_path)
        .map_err(|e| CliFailure::Runtime(format!("saving {}: {e}", index_path.display())))?;
    let summary = BuildSummary {
        points: index.len(),
        dimension: index.params().d,
        filters: index.params().t,
        blocks: index.params().m,
        base: index.params().b,
        non_empty_buckets: index.bucket_count(),
        bucket_entries: index.entry_count(),
    };
    println!("{}", json_line(&summary)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

fn cmd_query(config: &ExperimentConfig) -> CliResult<()> {
    let index_path = require_path(&config.index, "--index")?;
    let vectors_path = require_path(&config.vectors, "--vectors")?;
    let index = FilterIndex::load(index_path)
        .map_err(|e| CliFailure::Config(format!("{}: {e}", index_path.display())))?;
    let queries = vecfile::read_vectors(vectors_path)
        .map_err(|e| CliFailure::Config(format!("{}: {e}", vectors_path.display())))?;
    let target = match config.target_angle {
        Some(radians) => Angle::from_radians(radians)
            .map_err(|e| CliFailure::Config(format!("--target-angle: {e}")))?,
        None => index.params().theta,
    };
    let mut csv = String::from(
        "# sphere-filters query csv v1\nquery,found,best_id,best_angle,candidates,buckets\n",
    );
    for (i, q) in queries.iter().enumerate() {
        let result = index
            .query(q, target)
            .map_err(|e| CliFailure::Config(format!("query {i}: {e}")))?;
        let (best_id, best_angle) = match result.best {
            Some((id, angle)) => (id.to_string(), format!("{:.12}", angle.radians())),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            csv,
            "{i},{},{best_id},{best_angle},{},{}",
            result.found_within_target as u8,
            result.candidates_examined,
            result.buckets_visited
        );
    }
    write_output(config.out.as_deref(), &csv)
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct BenchSummary {
    trials: u64,
    recall: f64,
    avg_candidates: f64,
    /// Bucket entries scanned per query before deduplication — the
    /// quantity `predicted_candidates` models.
    avg_entries_scanned: f64,
    predicted_candidates: f64,
    avg_buckets_query: f64,
    avg_buckets_update: f64,
    predicted_buckets_update: f64,
    predicted_planted_collisions: f64,
    background_points: u64,
    non_empty_buckets: usize,
    bucket_entries: u64,
    wall_ms: u128,
}

fn cmd_bench(config: &ExperimentConfig) -> CliResult<()> {
    let started = Instant::now();
    let (params, _) = resolve_plan(config)?;
    let trials = config.trials.unwrap_or(10);
    if trials < 1 {
        return config_err("--trials must be at least 1");
    }
    let seed = config.seed.unwrap_or(0);
    // Trial i draws from seed + i; the shared background instance and the
    // code take the next two seeds after the trial range so no stream is
    // reused.
    let background_seed = seed.wrapping_add(trials);
    let code_seed = seed.wrapping_add(trials).wrapping_add(1);

    let model = match params.regime {
        Regime::Sparse => Model::Sparse,
        Regime::Dense | Regime::Critical => Model::Dense,
    };
    let spec = InstanceSpec {
        model,
        n: params.n,
        d: params.d,
        theta: params.theta,
        psi: Angle::from_radians(std::f64::consts::FRAC_PI_2).unwrap(),
        planted: false,
        seed: background_seed,
    };
    let background = generate(&spec).map_err(|e| CliFailure::Runtime(e.to_string()))?;

    let mut index = FilterIndex::from_plan(params.clone(), code_seed)
        .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    index.reserve_for_points(background.dataset.len());
    let mut background_update_buckets = 0u64;
    for (id, p) in background.dataset.iter().enumerate() {
        background_update_buckets += index
            .insert(id as u64, p)
            .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    }

    let target = Angle::from_radians(params.theta.radians() + TARGET_ANGLE_SLACK)
        .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    let planted_id = params.n; // one past the background ids
    let mut csv = String::from(
        "# sphere-filters bench csv v1\ntrial,found,candidates,buckets_query,buckets_update\n",
    );
    let mut hits = 0u64;
    let mut total_candidates = 0u64;
    let mut total_entries = 0u64;
    let mut total_query_buckets = 0u64;
    let mut total_update_buckets = 0u64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial));
        let q = sample_unit_vector(params.d, &mut rng)
            .map_err(|e| CliFailure::Runtime(e.to_string()))?;
        let planted = sample_at_angle(&q, params.theta, &mut rng)
            .map_err(|e| CliFailure::Runtime(e.to_string()))?;
        let update_buckets = index
            .insert(planted_id, &planted)
            .map_err(|e| CliFailure::Runtime(e.to_string()))?;
        let result = index
            .query(&q, target)
            .map_err(|e| CliFailure::Runtime(e.to_string()))?;
        index
            .delete(planted_id)
            .map_err(|e| CliFailure::Runtime(e.to_string()))?;
        let found =
            result.found_within_target && result.best.map(|(id, _)| id) == Some(planted_id);
        hits += found as u64;
        total_candidates += result.candidates_examined;
        total_entries += result.entries_scanned;
        total_query_buckets += result.buckets_visited;
        total_update_buckets += update_buckets;
        let _ = writeln!(
            csv,
            "{trial},{},{},{},{update_buckets}",
            found as u8, result.candidates_examined, result.buckets_visited
        );
    }

    let predicted_candidates = planner::predicted_query_candidates(&params, params.n)
        .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    let predicted_buckets_update = planner::predicted_update_buckets(&params)
        .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    let predicted_collisions = planner::predicted_planted_collisions(&params)
        .map_err(|e| CliFailure::Runtime(e.to_string()))?;
    let summary = BenchSummary {
        trials,
        recall: hits as f64 / trials as f64,
        avg_candidates: total_candidates as f64 / trials as f64,
        avg_entries_scanned: total_entries as f64 / trials as f64,
        predicted_candidates,
        avg_buckets_query: total_query_buckets as f64 / trials as f64,
        avg_buckets_update: (background_update_buckets + total_update_buckets) as f64
            / (background.dataset.len() as u64 + trials) as f64,
        predicted_buckets_update,
        predicted_planted_collisions: predicted_collisions,
        background_points: params.n,
        non_empty_buckets: index.bucket_count(),
        bucket_entries: index.entry_count(),
        wall_ms: started.elapsed().as_millis(),
    };
    let summary_line = json_line(&summary)?;
    if config.out.is_some() {
        write_output(config.out.as_deref(), &csv)?;
        println!("{summary_line}");
    } else {
        write_output(None, &csv)?;
        eprintln!("{summary_line}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
