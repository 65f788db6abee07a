//! `opinionforge`: generate synthetic rating data, estimate opinions by Gibbs
//! sampling, summarize and diagnose traces, and compute exact posteriors of
//! tiny instances.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O
//! error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use opinionforge::diagnostics::{chain_stats, write_plot_csv};
use opinionforge::generative::{forward_generate_network, sample_edges, GroundTruth};
use opinionforge::inference::{gibbs_run, summarize_posterior, LambdaMode, SamplerConfig};
use opinionforge::io::{
    export_opinions_json, load_ratings_csv, load_trace, save_ratings_csv, save_trace, write_atomic,
    write_json_file, IdMap, RunManifest, TruthFile,
};
use opinionforge::oracle::{exact_posterior, ExactPosterior, OracleConfig};
use opinionforge::{Error, LogitParams};
use serde::Serialize;

const THREADS_VAR: &str = "OPINIONFORGE_THREADS";

#[derive(Parser)]
#[command(
    name = "opinionforge",
    version,
    about = "Opinion estimation from ordinal trust ratings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a ground truth from the priors and a synthetic ratings CSV
    Generate(GenerateArgs),
    /// Run the Gibbs sampler on a ratings CSV
    Infer(InferArgs),
    /// Recompute the opinions JSON from a trace
    Summarize(TraceArgs),
    /// Effective sample sizes and convergence z-scores of a trace
    Diagnose(TraceArgs),
    /// Exact posterior marginals of a tiny ratings CSV
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 30)]
    trustors: usize,
    #[arg(long, default_value_t = 20)]
    trustees: usize,
    /// Probability that a pair is rated
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 4)]
    levels: u32,
    #[arg(long, default_value_t = 30)]
    lambda_max: u32,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    epsilon: f64,
    /// Comma-separated non-increasing cutpoints, one fewer than --levels
    /// [default: evenly spaced from 1.5 down to -3.5]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, default_value_t = 2000)]
    iterations: u64,
    #[arg(long, default_value_t = 500)]
    burn_in: u64,
    #[arg(long, default_value_t = 1)]
    thin: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    lambda_max: u32,
    /// fixed | blocked-joint | paper-literal
    #[arg(long, default_value = "blocked-joint", value_parser = parse_mode)]
    lambda_mode: LambdaMode,
    #[arg(long, default_value_t = 101)]
    bias_grid: usize,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    epsilon_min: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    epsilon_max: f64,
    #[arg(long, default_value_t = 201)]
    epsilon_grid: usize,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    theta_min: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    theta_max: f64,
    #[arg(long, default_value_t = 201)]
    theta_grid: usize,
}

impl SamplerArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            lambda_max: self.lambda_max,
            bias_grid: self.bias_grid,
            epsilon_bounds: [self.epsilon_min, self.epsilon_max],
            epsilon_grid: self.epsilon_grid,
            theta_bounds: [self.theta_min, self.theta_max],
            theta_grid: self.theta_grid,
            lambda_mode: self.lambda_mode,
        }
    }
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    levels: u32,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    levels: u32,
    #[arg(long, default_value_t = 3)]
    lambda_max: u32,
    #[arg(long, default_value_t = 5)]
    bias_grid: usize,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    epsilon_min: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    epsilon_max: f64,
    #[arg(long, default_value_t = 5)]
    epsilon_grid: usize,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    theta_min: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    theta_max: f64,
    #[arg(long, default_value_t = 5)]
    theta_grid: usize,
    /// Enumerate behaviors on a simplex lattice with this many subdivisions
    /// instead of integrating them out
    #[arg(long)]
    behavior_grid: Option<u32>,
}

fn parse_mode(s: &str) -> Result<LambdaMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(Error::Config(_)) => 1,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn configure_threads() -> Outcome<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("{THREADS_VAR}={value:?} is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

/// Collects the files a command writes, for the manifest.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Outcome<Self> {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn finish(
        mut self,
        command: &str,
        input: Option<&Path>,
        config: Option<SamplerConfig>,
        seed: u64,
        start: Instant,
    ) -> Outcome<()> {
        let manifest_path = self.path("manifest.json");
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input: input.map(Path::to_path_buf),
            outputs: self.written.clone(),
            arguments: std::env::args().collect(),
            config,
            seed,
            duration_seconds: start.elapsed().as_secs_f64(),
        };
        write_json_file(&manifest_path, &manifest)?;
        eprintln!(
            "{command}: wrote {} files to {}",
            self.written.len(),
            self.dir.display()
        );
        Ok(())
    }
}

fn default_theta(levels: u32) -> Vec<f64> {
    let k = levels as usize - 1;
    if k == 1 {
        return vec![-1.0];
    }
    (0..k)
        .map(|l| 1.5 - 5.0 * l as f64 / (k - 1) as f64)
        .collect()
}

fn generate(args: GenerateArgs, start: Instant) -> Outcome<()> {
    if args.levels < 2 {
        return Err(Failure::Usage("--levels must be at least 2".into()));
    }
    let theta = args.theta.unwrap_or_else(|| default_theta(args.levels));
    if theta.len() != args.levels as usize - 1 {
        return Err(Failure::Usage(format!(
            "--theta needs {} values for {} levels, got {}",
            args.levels - 1,
            args.levels,
            theta.len()
        )));
    }
    let logit = LogitParams::new(args.epsilon, theta).map_err(|e| Failure::Usage(e.to_string()))?;
    let edges = sample_edges(args.trustors, args.trustees, args.density, args.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let truth = GroundTruth::sample(
        args.trustors,
        args.trustees,
        &edges,
        args.lambda_max,
        logit,
        args.seed,
    )?;
    let (ratings, opinions) = forward_generate_network(&truth, args.seed)?;
    let ids = IdMap::dense(args.trustors, args.trustees);
    let mut out = Outputs::new(&args.output_dir)?;
    save_ratings_csv(&out.path("ratings.csv"), &ratings, &ids)?;
    let truth_file = TruthFile {
        truth,
        ids,
        opinions,
    };
    write_json_file(&out.path("truth.json"), &truth_file)?;
    out.finish("generate", None, None, args.seed, start)
}

fn infer(args: InferArgs, start: Instant) -> Outcome<()> {
    let config = args.sampler.config();
    config.validate()?;
    let (ratings, ids) = load_ratings_csv(&args.input, args.levels)?;
    let trace = gibbs_run(&ratings, &config)?;
    let summary = summarize_posterior(&trace, &ratings)?;
    let mut out = Outputs::new(&args.output_dir)?;
    save_trace(&out.path("trace.ndjson"), &trace, &ratings, &ids)?;
    export_opinions_json(&summary, &ids, &out.path("opinions.json"))?;
    write_json_file(&out.path("ids.json"), &ids)?;
    let seed = config.seed;
    out.finish("infer", Some(&args.input), Some(config), seed, start)
}

fn summarize(args: TraceArgs, start: Instant) -> Outcome<()> {
    let loaded = load_trace(&args.input)?;
    let summary = summarize_posterior(&loaded.trace, &loaded.ratings)?;
    let mut out = Outputs::new(&args.output_dir)?;
    export_opinions_json(&summary, &loaded.ids, &out.path("opinions.json"))?;
    let seed = loaded.trace.config.seed;
    out.finish(
        "summarize",
        Some(&args.input),
        Some(loaded.trace.config),
        seed,
        start,
    )
}

fn diagnose(args: TraceArgs, start: Instant) -> Outcome<()> {
    let loaded = load_trace(&args.input)?;
    let stats = chain_stats(&loaded.trace, &loaded.ratings)?;
    let mut out = Outputs::new(&args.output_dir)?;
    write_json_file(&out.path("diagnostics.json"), &stats)?;
    write_atomic(&out.path("trace_plot.csv"), |w| {
        write_plot_csv(w, &loaded.trace, &loaded.ratings)
    })?;
    for (name, (ess, z)) in stats
        .statistics
        .iter()
        .zip(stats.ess.iter().zip(&stats.geweke_z))
    {
        eprintln!("{name:>22}  ess {ess:>9.1}  z {z:>+6.2}");
    }
    let seed = loaded.trace.config.seed;
    out.finish(
        "diagnose",
        Some(&args.input),
        Some(loaded.trace.config),
        seed,
        start,
    )
}

#[derive(Serialize)]
struct OracleFile<'a> {
    config: &'a OracleConfig,
    ids: &'a IdMap,
    posterior: &'a ExactPosterior,
}

fn oracle(args: OracleArgs, start: Instant) -> Outcome<()> {
    let config = OracleConfig {
        lambda_max: args.lambda_max,
        bias_grid: args.bias_grid,
        epsilon_bounds: [args.epsilon_min, args.epsilon_max],
        epsilon_grid: args.epsilon_grid,
        theta_bounds: [args.theta_min, args.theta_max],
        theta_grid: args.theta_grid,
        behavior_grid: args.behavior_grid,
    };
    config.validate()?;
    let (ratings, ids) = load_ratings_csv(&args.input, args.levels)?;
    let posterior = exact_posterior(&ratings, &config)?;
    let mut out = Outputs::new(&args.output_dir)?;
    let file = OracleFile {
        config: &config,
        ids: &ids,
        posterior: &posterior,
    };
    write_json_file(&out.path("exact.json"), &file)?;
    out.finish("oracle", Some(&args.input), None, 0, start)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests also arrive here
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Generate(a) => generate(a, start),
        Command::Infer(a) => infer(a, start),
        Command::Summarize(a) => summarize(a, start),
        Command::Diagnose(a) => diagnose(a, start),
        Command::Oracle(a) => oracle(a, start),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
