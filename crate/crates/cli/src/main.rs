use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use posearrange_core::baselines::{arrange, train_baselines, ArrangeConfig, BaselineTrainConfig, Method};
use posearrange_core::densities::CategoryParams;
use posearrange_core::dp::{estimate_marginals, heatmap, pose_frequencies, run_chain, SceneModel};
use posearrange_core::evaluation::{cross_validate, render_report, EvalConfig, Predictor, Scenario};
use posearrange_core::io::{
    from_json_text, parse_params, parse_scene, serialize_scene, to_canonical_json, ArrangementFile, ParamsFile,
    PosesFile,
};
use posearrange_core::learning::{learn_parameters, LearnConfig};
use posearrange_core::skeleton::generate_pose_candidates;
use posearrange_core::synthetic;
use posearrange_core::{Error, Scene, SkeletonLibrary};

#[derive(Parser)]
#[command(name = "posearrange", version, about = "Place objects in 3-D rooms using hallucinated human poses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn model and baseline parameters from labeled scenes.
    Train {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict placements for objects in a scene.
    Arrange {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Comma-separated categories; repeat a category to place several.
        #[arg(long, value_delimiter = ',', required = true)]
        objects: Vec<String>,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated comparison of placing methods.
    Eval {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_predictor)]
        methods: Vec<Predictor>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the raw per-(scene, category, method) records as JSON.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sampled placement density of one category as CSV and PGM.
    Heatmap {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path without extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Human poses sampled for a scene's objects, with frequencies.
    SamplePoses {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes synthetic scenes used by tests.
    #[command(hide = true)]
    GenFixture {
        #[arg(long, value_enum)]
        kind: FixtureKind,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    New,
    Empty,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// Desk, chair and monitor.
    Office,
    /// Offices with labeled keyboard, mouse and mug.
    OfficeTrain,
    Kitchen,
    Living,
    /// 10 × 10 m room with a center pedestal, plus matching parameters.
    Pedestal,
    /// Scenes drawn from known parameters for one category.
    Theta,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_predictor(s: &str) -> Result<Predictor, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct TrainConfig {
    learn: LearnConfig,
    baselines: BaselineTrainConfig,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write {}", path.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| anyhow!("cannot write {}: {}", path.display(), e.error))?;
    Ok(())
}

fn load_config<T: Default + serde::de::DeserializeOwned>(path: Option<&PathBuf>) -> anyhow::Result<T> {
    match path {
        Some(p) => Ok(from_json_text(&read(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Ok(T::default()),
    }
}

fn load_scene(path: &Path) -> anyhow::Result<Scene> {
    parse_scene(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_params(path: &Path) -> anyhow::Result<ParamsFile> {
    parse_params(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Every `*.json` scene in a directory, in file-name order.
fn load_scene_dir(dir: &Path) -> anyhow::Result<Vec<Scene>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths.iter().map(|p| load_scene(p)).collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let lib = SkeletonLibrary::bundled();
    match cli.command {
        Command::Train { scenes, out, config, seed } => {
            let mut cfg: TrainConfig = load_config(config.as_ref())?;
            if let Some(s) = seed {
                cfg.learn.dp.seed = s;
                cfg.baselines.classifier.seed = s;
                cfg.baselines.fmm.seed = s;
            }
            let scenes = load_scene_dir(&scenes)?;
            let (params, trace) = learn_parameters(&scenes, &cfg.learn, &lib)?;
            let baselines = train_baselines(&scenes, &cfg.baselines, &lib)?;
            write_atomic(&out, &to_canonical_json(&ParamsFile::new(params, Some(trace), Some(baselines))))?;
        }
        Command::Arrange { scene, params, objects, method, omega, seed, config, out } => {
            let mut cfg: ArrangeConfig = load_config(config.as_ref())?;
            cfg = cfg.with_seed(seed);
            if omega.is_some() {
                cfg.omega = omega;
            }
            let scene = load_scene(&scene)?;
            let pf = load_params(&params)?;
            let models = pf.baselines.clone().unwrap_or_default();
            let result = arrange(method, &scene, &objects, &pf.model_params(), &models, &lib, &cfg)?;
            let file = ArrangementFile::new(&scene.id, method.name(), result.objects);
            write_atomic(&out, &to_canonical_json(&file))?;
        }
        Command::Eval { scenes, scenario, methods, folds, seed, config, records, out } => {
            let mut cfg: EvalConfig = load_config(config.as_ref())?;
            cfg.folds = folds;
            cfg.seed = seed;
            let scenario = match scenario {
                ScenarioArg::New => Scenario::NewObjects,
                ScenarioArg::Empty => Scenario::EmptyRoom,
            };
            let scenes = load_scene_dir(&scenes)?;
            let recs = cross_validate(&scenes, &methods, scenario, &cfg, &lib)?;
            let (_, csv) = render_report(&recs)?;
            write_atomic(&out, &csv)?;
            if let Some(path) = records {
                write_atomic(&path, &to_canonical_json(&recs))?;
            }
        }
        Command::Heatmap { scene, params, object, resolution, seed, config, out } => {
            let mut cfg: ArrangeConfig = load_config(config.as_ref())?;
            cfg = cfg.with_seed(seed);
            let scene = load_scene(&scene)?;
            let params = load_params(&params)?.model_params();
            let model = SceneModel::for_scene(&scene, std::slice::from_ref(&object), &params, &lib)?;
            let snaps = run_chain(&model, &cfg.dp)?;
            let dist = estimate_marginals(&snaps, &model);
            let map = heatmap(&dist.objects[0], &scene, resolution)?;
            let base = out.as_os_str().to_string_lossy().into_owned();
            write_atomic(Path::new(&format!("{base}.csv")), &map.to_csv())?;
            write_atomic(Path::new(&format!("{base}.pgm")), &map.to_pgm())?;
        }
        Command::SamplePoses { scene, params, seed, config, out } => {
            let mut cfg: ArrangeConfig = load_config(config.as_ref())?;
            cfg = cfg.with_seed(seed);
            let scene = load_scene(&scene)?;
            let params = load_params(&params)?.model_params();
            let objects: Vec<_> = scene.all_objects().cloned().collect();
            let model = SceneModel::new(generate_pose_candidates(&scene, &lib)?, &objects, Vec::new(), &params)?;
            let snaps = run_chain(&model, &cfg.dp)?;
            let file = PosesFile::new(&scene.id, snaps.len(), pose_frequencies(&snaps, &model));
            write_atomic(&out, &to_canonical_json(&file))?;
        }
        Command::GenFixture { kind, count, seed, out } => {
            fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            let scenes: Vec<Scene> = match kind {
                FixtureKind::Office => (seed..seed + count).map(synthetic::office_fixture).collect(),
                FixtureKind::OfficeTrain => (seed..seed + count).map(synthetic::office_training_scene).collect(),
                FixtureKind::Kitchen => (seed..seed + count).map(synthetic::kitchen_scene).collect(),
                FixtureKind::Living => (seed..seed + count).map(synthetic::living_room_scene).collect(),
                FixtureKind::Pedestal => {
                    let params = ParamsFile::new(synthetic::pedestal_params(), None, None);
                    write_atomic(&out.join("pedestal_params.json"), &to_canonical_json(&params))?;
                    vec![synthetic::pedestal_fixture()]
                }
                FixtureKind::Theta => {
                    let theta = CategoryParams {
                        dist_mu: 0.5,
                        dist_sigma: 0.2,
                        rel_kappa: 4.0,
                        ori_kappa: 4.0,
                        height_mu: 0.2,
                        height_sigma: 0.1,
                        ..CategoryParams::default()
                    };
                    synthetic::known_theta_scenes(&theta, "mug", count as usize, 10, seed, &lib)?.scenes
                }
            };
            for s in &scenes {
                write_atomic(&out.join(format!("{}.json", s.id)), &serialize_scene(s))?;
            }
        }
    }
    Ok(())
}

/// Error kind tag for the single-line diagnostic.
fn kind_of(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<Error>().map(Error::kind))
        .or_else(|| err.chain().find_map(|e| e.downcast_ref::<std::io::Error>().map(|_| "IoError")))
        .unwrap_or("Error")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {}: {msg}", kind_of(&e));
            ExitCode::FAILURE
        }
    }
}
