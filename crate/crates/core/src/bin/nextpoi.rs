use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nextpoi::config::{parse_config, ExperimentConfig};
use nextpoi::dataset::{write_checkins, Dataset, ModelSpec, SyntheticSpec};
use nextpoi::evaluation::{
    client_profiles, evaluate_ranks, metrics_from_ranks, run_experiment, CsvSink, Method, MetricsReport,
    TrainedModel,
};
use nextpoi::trainer::{train_spirel, LatentModel, Privacy};
use nextpoi::transition::TransitionMatrix;
use nextpoi::{Error, Result};

#[derive(Parser)]
#[command(name = "nextpoi", version, about = "Next-POI recommendation under local differential privacy")]
struct Cli {
    /// TOML experiment config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// NON-PRIVATE diagnostic mode for `train`: exact transitions and exact
    /// gradients, with a per-iteration RMSE trace.
    #[arg(long, global = true)]
    no_privacy: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    RandomWalk,
    Ring,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic check-in file.
    Generate {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        /// Forward probability for `--model ring`.
        #[arg(long, default_value_t = 0.8)]
        forward: f64,
        /// Zipf exponent of the jump destination for `--model ring`.
        #[arg(long, default_value_t = 0.0)]
        popularity: f64,
        /// Destination file; defaults to `<output>/checkins.tsv`.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Train the joint model and write `model.bin` and `transitions.bin`.
    Train {
        /// Check-in file overriding the configured dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score a trained checkpoint and write `evaluation.csv`.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run the configured experiment grid and write `metrics.csv`.
    Sweep,
    /// Summarize a `model.bin` or `transitions.bin` file.
    Inspect { path: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config { key: "--jobs".into(), reason: "must be at least 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config { key: "--jobs".into(), reason: e.to_string() })?;
    }
    let mut config = match &cli.config {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &cli.output {
        config.output = o.clone();
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if cli.no_privacy && !matches!(cli.command, Command::Train { .. }) {
        return Err(Error::Config { key: "--no-privacy".into(), reason: "only applies to `train`".into() });
    }

    match cli.command {
        Command::Generate { m, n, len, model, forward, popularity, file } => {
            let base = config.dataset.synthetic.clone().unwrap_or(SyntheticSpec {
                users: 10_000,
                pois: 373,
                length: 20,
                seed: config.seed,
                model: ModelSpec::RandomWalk,
            });
            let spec = SyntheticSpec {
                users: m.unwrap_or(base.users),
                pois: n.unwrap_or(base.pois),
                length: len.unwrap_or(base.length),
                seed: cli.seed.unwrap_or(base.seed),
                model: match model {
                    None => base.model,
                    Some(ModelKind::RandomWalk) => ModelSpec::RandomWalk,
                    Some(ModelKind::Ring) => ModelSpec::Ring { forward, backward: 0.0, stay: 0.0, popularity },
                },
            };
            let dataset = spec.generate()?;
            let path = match file {
                Some(f) => f,
                None => output_dir(&config)?.join("checkins.tsv"),
            };
            write_checkins(&path, &dataset)?;
            log::info!("wrote {} users x {} check-ins over {} POIs to {}", spec.users, spec.length, spec.pois, path.display());
        }
        Command::Train { dataset } => {
            let data = load(&mut config, dataset)?;
            let privacy = if cli.no_privacy { Privacy::Disabled } else { Privacy::Local };
            if cli.no_privacy {
                log::warn!("--no-privacy: clients send exact data; this run is NOT differentially private");
            }
            let train = config.train_config(privacy)?;
            log::info!("training on {} users, {} POIs, d = {}", data.n_users(), data.n_pois(), train.d);
            let out = train_spirel(&data, &train)?;
            let dir = output_dir(&config)?;
            out.model.save(&dir.join("model.bin"))?;
            out.transitions.save(&dir.join("transitions.bin"))?;
            if cli.no_privacy {
                let path = dir.join("trace.csv");
                let mut text = String::from("iteration,p_rmse,q_rmse\n");
                for r in &out.trace {
                    text.push_str(&format!("{},{:.6},{:.6}\n", r.iteration, r.p_rmse, r.q_rmse));
                }
                fs::write(&path, text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            }
            log::info!("wrote checkpoint to {}", dir.display());
        }
        Command::Evaluate { model, dataset } => {
            let data = load(&mut config, dataset)?;
            let checkpoint = LatentModel::load(&model)?;
            if checkpoint.n() != data.n_pois() {
                return Err(Error::InvalidInput(format!(
                    "checkpoint has {} POIs, dataset has {}",
                    checkpoint.n(),
                    data.n_pois()
                )));
            }
            let v = checkpoint.factors().clone();
            let profiles = client_profiles(&data, &v, config.trainer.lambda)?;
            let ranks = evaluate_ranks(&data, &TrainedModel { v, profiles, uses_location: true })?;
            let (recall_at, mrr_at, mrr) = metrics_from_ranks(&ranks, &config.ks);
            let report = MetricsReport {
                method: Method::Spirel,
                dataset: config.dataset_name(),
                epsilon: config.privacy.epsilon,
                split_ratio: config.privacy.split,
                iterations: config.trainer.iterations,
                d: checkpoint.d(),
                seeds: vec![config.seed],
                evaluated_users: data.n_users(),
                recall_at,
                mrr_at,
                mrr,
            };
            let path = output_dir(&config)?.join("evaluation.csv");
            CsvSink::create(&path)?.write(&report)?;
            log::info!("MRR {:.4} over {} users; wrote {}", mrr, data.n_users(), path.display());
        }
        Command::Sweep => {
            let data = config.load_dataset()?;
            let plan = config.plan()?;
            let path = output_dir(&config)?.join("metrics.csv");
            let mut sink = CsvSink::create(&path)?;
            log::info!("{} cells x {} seeds on {} users", plan.cells.len(), plan.seeds.len(), data.n_users());
            run_experiment(&data, &plan, |r| sink.write(r))?;
            log::info!("wrote {}", path.display());
        }
        Command::Inspect { path } => inspect(&path)?,
    }
    Ok(())
}

fn output_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(&config.output).map_err(|e| Error::Io { path: config.output.clone(), source: e })?;
    Ok(config.output.clone())
}

/// A `--dataset` flag replaces whatever source the config names.
fn load(config: &mut ExperimentConfig, path: Option<PathBuf>) -> Result<Dataset> {
    if let Some(p) = path {
        config.dataset.path = Some(p);
        config.dataset.synthetic = None;
        config.dataset.name = None;
    }
    config.load_dataset()
}

fn inspect(path: &Path) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let w = |e: std::io::Error| Error::Io { path: PathBuf::from("<stdout>"), source: e };
    if let Ok(model) = LatentModel::load(path) {
        let v = model.factors().as_slice();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        writeln!(out, "model checkpoint {}", path.display()).map_err(w)?;
        writeln!(out, "  POIs (n):        {}", model.n()).map_err(w)?;
        writeln!(out, "  latent dim (d):  {}", model.d()).map_err(w)?;
        writeln!(out, "  optimizer steps: {}", model.adam().step_count()).map_err(w)?;
        writeln!(out, "  V range:         [{lo:.4}, {hi:.4}]").map_err(w)?;
        writeln!(out, "  ||V||_F:         {norm:.4}").map_err(w)?;
        return Ok(());
    }
    let t = TransitionMatrix::load(path)
        .map_err(|e| Error::Format(format!("{} is neither a model nor a transition checkpoint ({e})", path.display())))?;
    let raw = t.raw().as_slice();
    let positive = raw.iter().filter(|&&x| x > 0.0).count();
    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    writeln!(out, "transition matrix {}", path.display()).map_err(w)?;
    writeln!(out, "  POIs (n):        {}", t.n()).map_err(w)?;
    writeln!(out, "  estimate range:  [{lo:.2}, {hi:.2}]").map_err(w)?;
    writeln!(out, "  positive cells:  {positive} / {}", raw.len()).map_err(w)?;
    Ok(())
}
