//! Command-line frontend: fit noise models, train the agent, evaluate
//! policies, solve single days. Every run writes a manifest (resolved config,
//! seeds, artifact hashes) into the output directory.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 data error, 4 solver failure.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use windbid::arma::fit_arma;
use windbid::config::{ConfigError, RunConfig};
use windbid::data::{ingest, synth_data, DataError, DataSet};
use windbid::ddpg::{train, write_learning_curve, Agent, DdpgError, TrainOptions};
use windbid::env::{EnvError, Environment, EpisodeState};
use windbid::eval::{
    evaluate, summarize, write_histograms, write_records, write_summary, AgentPolicy,
    BenchmarkPolicy, BidPolicy, FullForecastPolicy, ZeroPolicy,
};
use windbid::market::{solve_full_sp, BatteryContext, MarketDay, ModelError};
use windbid::scenario::{generate_scenarios, NoiseModels, ScenarioError};
use windbid::simplex::SimplexStatus;

#[derive(Parser)]
#[command(name = "windbid", version, about = "Wind-farm day-ahead bidding pipeline")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataOpts {
    /// Hourly price file: timestamp,da_price,rt_price
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Hourly wind file: timestamp,wind_speed
    #[arg(long)]
    wind: Option<PathBuf>,
    /// Generate synthetic data instead of reading files.
    #[arg(long)]
    synth_days: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit ARMA noise models to RT prices and wind speeds, save them as JSON.
    FitNoise {
        #[command(flatten)]
        data: DataOpts,
    },
    /// Train the bidding agent and write a checkpoint plus learning curve.
    Train {
        #[command(flatten)]
        data: DataOpts,
        /// Training steps (default from config).
        #[arg(long)]
        steps: Option<usize>,
        /// Scenario count per episode (default from config).
        #[arg(long)]
        scenarios: Option<usize>,
        /// Previously fitted noise models (fit on the fly when absent).
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Evaluate agent checkpoints and rule-based policies on fresh episodes.
    Evaluate {
        #[command(flatten)]
        data: DataOpts,
        /// Trained agent checkpoint.
        #[arg(long)]
        agent: PathBuf,
        /// Optional briefly-trained agent for paired comparison.
        #[arg(long)]
        agent_short: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Solve one day's full program and print the optimum and bid.
    SolveDay {
        #[command(flatten)]
        data: DataOpts,
        /// Episode JSON (day + battery + scenarios) to solve directly.
        #[arg(long)]
        episode: Option<PathBuf>,
        /// Day index into the data set (used when --episode is absent).
        #[arg(long, default_value_t = 0)]
        day: usize,
        #[arg(long)]
        scenarios: Option<usize>,
    },
    /// Benchmark-only evaluation (no agent checkpoints needed).
    Bench {
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        scenarios: Option<usize>,
    },
}

/// Wrapper for our own argument-combination errors (exit code 2).
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<ConfigError>() || cause.is::<clap::Error>() {
            return 2;
        }
        if cause.is::<DataError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<EnvError>() {
            return match e {
                EnvError::DataExhausted | EnvError::Io(_) | EnvError::Format(_) => 3,
                _ => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<DdpgError>() {
            return match e {
                DdpgError::StepsBelowBatch { .. } | DdpgError::InvalidConfig(_) => 2,
                DdpgError::Io(_) | DdpgError::Format(_) | DdpgError::Version(_) => 3,
                _ => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<ScenarioError>() {
            return match e {
                ScenarioError::InvalidCurve(_) | ScenarioError::NoScenarios => 2,
                _ => 3,
            };
        }
        if cause.is::<ModelError>() {
            return 4;
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
    }
    2
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;

    match &cli.command {
        Command::FitNoise { data } => cmd_fit_noise(&cli, &cfg, data),
        Command::Train { data, steps, scenarios, models } => {
            if let Some(s) = scenarios {
                cfg.scenarios = *s;
            }
            cmd_train(&cli, &cfg, data, *steps, models.as_deref())
        }
        Command::Evaluate { data, agent, agent_short, episodes, scenarios, models } => {
            if let Some(s) = scenarios {
                cfg.scenarios = *s;
            }
            cmd_evaluate(
                &cli,
                &cfg,
                data,
                agent,
                agent_short.as_deref(),
                *episodes,
                models.as_deref(),
            )
        }
        Command::SolveDay { data, episode, day, scenarios } => {
            if let Some(s) = scenarios {
                cfg.scenarios = *s;
            }
            cmd_solve_day(&cli, &cfg, data, episode.as_deref(), *day)
        }
        Command::Bench { data, episodes, scenarios } => {
            if let Some(s) = scenarios {
                cfg.scenarios = *s;
            }
            cmd_bench(&cli, &cfg, data, *episodes)
        }
    }
}

fn load_data(opts: &DataOpts, cfg: &RunConfig) -> Result<DataSet> {
    match (&opts.prices, &opts.wind) {
        (Some(p), Some(w)) => {
            if opts.synth_days.is_some() {
                return Err(UsageError("--synth-days conflicts with --prices/--wind".into()).into());
            }
            Ok(ingest(p, w)?)
        }
        (None, None) => {
            let days = opts.synth_days.unwrap_or(cfg.synth_days);
            if days == 0 {
                return Err(UsageError("need at least one synthetic day".into()).into());
            }
            Ok(synth_data(days, cfg.seed))
        }
        _ => Err(UsageError("--prices and --wind must be given together".into()).into()),
    }
}

fn fit_models(data: &DataSet, cfg: &RunConfig) -> Result<NoiseModels> {
    let price = fit_arma(&data.rt_price_series(), cfg.arma.price_p, cfg.arma.price_q)
        .context("fitting RT price noise model")?;
    let wind = fit_arma(&data.wind_speed_series(), cfg.arma.wind_p, cfg.arma.wind_q)
        .context("fitting wind speed noise model")?;
    let (price, wind) = if cfg.arma.gaussian_residuals {
        (price.with_gaussian_residuals(), wind.with_gaussian_residuals())
    } else {
        (price, wind)
    };
    for (name, model) in [("price", &price), ("wind", &wind)] {
        if !model.is_stationary() {
            eprintln!("warning: fitted {name} AR part is non-stationary");
        }
    }
    Ok(NoiseModels::new(price, wind, cfg.curve.clone()))
}

fn obtain_models(data: &DataSet, cfg: &RunConfig, path: Option<&Path>) -> Result<NoiseModels> {
    match path {
        Some(p) => Ok(NoiseModels::load(p)?),
        None => fit_models(data, cfg),
    }
}

fn build_env(data: DataSet, models: NoiseModels, cfg: &RunConfig) -> Environment {
    Environment::new(data, models, cfg.episode_config(), cfg.model_config())
}

/// Seed base for evaluation episodes, disjoint from training episode seeds.
fn eval_seed(cfg: &RunConfig) -> u64 {
    cfg.seed.wrapping_add(0x5eed_0000)
}

fn write_manifest(
    cli: &Cli,
    cfg: &RunConfig,
    command: &str,
    artifacts: &[PathBuf],
) -> Result<PathBuf> {
    let mut hashes = BTreeMap::new();
    for path in artifacts {
        let bytes =
            std::fs::read(path).with_context(|| format!("hashing artifact {}", path.display()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        hashes.insert(name, hex::encode(Sha256::digest(&bytes)));
    }
    let manifest = serde_json::json!({
        "version": 1,
        "command": command,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "eval_episode_seed": eval_seed(cfg),
        "config": cfg,
        "artifacts": hashes,
    });
    let path = cli.out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

fn cmd_fit_noise(cli: &Cli, cfg: &RunConfig, data_opts: &DataOpts) -> Result<()> {
    let data = load_data(data_opts, cfg)?;
    let models = fit_models(&data, cfg)?;
    let path = cli.out_dir.join("models.json");
    models.save(&path)?;
    println!(
        "fitted price ARMA({},{}) and wind ARMA({},{}) on {} days",
        cfg.arma.price_p,
        cfg.arma.price_q,
        cfg.arma.wind_p,
        cfg.arma.wind_q,
        data.n_days()
    );
    println!("price ar {:?}", models.price.ar_coeffs);
    println!("wind ar {:?}", models.wind.ar_coeffs);
    write_manifest(cli, cfg, "fit-noise", &[path])?;
    Ok(())
}

fn cmd_train(
    cli: &Cli,
    cfg: &RunConfig,
    data_opts: &DataOpts,
    steps: Option<usize>,
    models_path: Option<&Path>,
) -> Result<()> {
    let data = load_data(data_opts, cfg)?;
    let models = obtain_models(&data, cfg, models_path)?;
    let env = build_env(data, models, cfg);
    let horizon = env.horizon();
    let agent_cfg = cfg.agent_config(3 * horizon + 5, horizon);
    let n_steps = steps.unwrap_or(cfg.train_steps);

    let checkpoint_dir = cli.out_dir.join("checkpoints");
    std::fs::create_dir_all(&checkpoint_dir)?;
    let opts = TrainOptions {
        n_steps,
        log_interval: 500,
        checkpoint_interval: (n_steps / 5).max(1),
        checkpoint_dir: Some(checkpoint_dir),
        episode_seed: cfg.seed.wrapping_add(1),
    };
    let (agent, log) = train(&env, &agent_cfg, &opts)?;

    let agent_path = cli.out_dir.join("agent.json");
    agent.save_json(&agent_path)?;
    let curve_path = cli.out_dir.join("learning_curve.csv");
    write_learning_curve(&log, &curve_path)?;
    if let Some(last) = log.last() {
        println!(
            "trained {n_steps} steps; mean recent reward {:.4}, critic loss {:.3e}",
            last.mean_recent_reward, last.critic_loss
        );
    }
    write_manifest(cli, cfg, "train", &[agent_path, curve_path])?;
    Ok(())
}

fn run_evaluation(
    cli: &Cli,
    cfg: &RunConfig,
    env: &Environment,
    policies: &[&dyn BidPolicy],
    episodes: usize,
    command: &str,
) -> Result<()> {
    let records = evaluate(env, policies, episodes, eval_seed(cfg));
    let summary = summarize(&records);
    let records_path = cli.out_dir.join("eval_records.csv");
    let summary_path = cli.out_dir.join("summary.csv");
    let histogram_path = cli.out_dir.join("histogram.csv");
    write_records(&records, &records_path)?;
    write_summary(&summary, &summary_path)?;
    write_histograms(&summary, &histogram_path)?;
    for p in &summary.policies {
        println!(
            "{:<12} mean ratio {:.4}  median {:.4}  >=95%: {:.1}%  <85%: {:.1}%  ({} episodes)",
            p.policy,
            p.mean_ratio,
            p.median_ratio,
            100.0 * p.share_within_95,
            100.0 * p.share_below_85,
            p.episodes_used
        );
    }
    if summary.excluded_episodes > 0 {
        println!("excluded episodes: {}", summary.excluded_episodes);
    }
    write_manifest(cli, cfg, command, &[records_path, summary_path, histogram_path])?;
    Ok(())
}

fn cmd_evaluate(
    cli: &Cli,
    cfg: &RunConfig,
    data_opts: &DataOpts,
    agent_path: &Path,
    agent_short_path: Option<&Path>,
    episodes: Option<usize>,
    models_path: Option<&Path>,
) -> Result<()> {
    let data = load_data(data_opts, cfg)?;
    let models = obtain_models(&data, cfg, models_path)?;
    let env = build_env(data, models, cfg);

    let rl = AgentPolicy::new("rl", Agent::load_json(agent_path)?);
    let rl_short = match agent_short_path {
        Some(p) => Some(AgentPolicy::new("rl_short", Agent::load_json(p)?)),
        None => None,
    };
    let bench = BenchmarkPolicy;
    let zero = ZeroPolicy;
    let full = FullForecastPolicy;
    let mut policies: Vec<&dyn BidPolicy> = vec![&rl];
    if let Some(p) = &rl_short {
        policies.push(p);
    }
    policies.push(&bench);
    policies.push(&zero);
    policies.push(&full);

    run_evaluation(cli, cfg, &env, &policies, episodes.unwrap_or(cfg.eval_episodes), "evaluate")
}

fn cmd_bench(
    cli: &Cli,
    cfg: &RunConfig,
    data_opts: &DataOpts,
    episodes: Option<usize>,
) -> Result<()> {
    let data = load_data(data_opts, cfg)?;
    let models = fit_models(&data, cfg)?;
    let env = build_env(data, models, cfg);
    let bench = BenchmarkPolicy;
    let zero = ZeroPolicy;
    let full = FullForecastPolicy;
    let policies: Vec<&dyn BidPolicy> = vec![&bench, &zero, &full];
    run_evaluation(cli, cfg, &env, &policies, episodes.unwrap_or(cfg.eval_episodes), "bench")
}

fn cmd_solve_day(
    cli: &Cli,
    cfg: &RunConfig,
    data_opts: &DataOpts,
    episode: Option<&Path>,
    day_index: usize,
) -> Result<()> {
    let model_config = cfg.model_config();
    let (day, battery, scenarios) = match episode {
        Some(path) => {
            let state = EpisodeState::load_json(path)?;
            (state.day, state.battery, state.scenarios)
        }
        None => {
            let data = load_data(data_opts, cfg)?;
            let models = fit_models(&data, cfg)?;
            let record = data
                .days
                .get(day_index)
                .ok_or_else(|| {
                    UsageError(format!("--day {day_index} outside {} days", data.n_days()))
                })?
                .clone();
            let day = MarketDay {
                da_price: record.da_price.clone(),
                rt_price_forecast: record.rt_price.clone(),
                wind_forecast: record
                    .wind_speed
                    .iter()
                    .map(|v| windbid::scenario::speed_to_power(&models.curve, *v))
                    .collect(),
            };
            let scenarios = generate_scenarios(
                &day,
                &models.price,
                &models.wind,
                &models.curve,
                &cfg.penalties,
                cfg.scenarios,
                cfg.seed.wrapping_add(day_index as u64),
            )?;
            (day, BatteryContext::disabled(), scenarios)
        }
    };
    let report = solve_full_sp(&day, &battery, &scenarios, &model_config)?;
    match report.status {
        SimplexStatus::Optimal => {
            println!("f_sp {}", report.objective);
            let bid: Vec<String> =
                report.first_stage.p_da.iter().map(|b| format!("{b:.3}")).collect();
            println!("bid {}", bid.join(" "));
            println!("iterations {}", report.iterations);
        }
        other => println!("status {other:?}"),
    }
    write_manifest(cli, cfg, "solve-day", &[])?;
    Ok(())
}
