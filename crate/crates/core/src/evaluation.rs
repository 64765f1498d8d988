//! Error metrics, cross-validated placing experiments and the tabular
//! report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    arrange, combine_human_object, object_context_distribution, settle, shared_candidates, train_baselines,
    ArrangeConfig, BaselineModels, BaselineTrainConfig, Method, OMEGA_GRID,
};
use crate::dp::{estimate_marginals, run_chain, SceneModel};
use crate::error::{Error, Result};
use crate::learning::{learn_parameters, LearnConfig};
use crate::params::ModelParams;
use crate::scene::{ObjectInstance, Scene};
use crate::skeleton::{generate_pose_candidates, SkeletonLibrary};

pub fn location_error(predicted: &ObjectInstance, truth: &ObjectInstance, three_d: bool) -> Result<f64> {
    same_category(predicted, truth)?;
    let (p, t) = (predicted.location(), truth.location());
    Ok(if three_d { p.distance(t) } else { p.horizontal_distance(t) })
}

pub fn height_error(predicted: &ObjectInstance, truth: &ObjectInstance) -> Result<f64> {
    same_category(predicted, truth)?;
    Ok((predicted.location().z - truth.location().z).abs())
}

fn same_category(a: &ObjectInstance, b: &ObjectInstance) -> Result<()> {
    if a.category == b.category {
        Ok(())
    } else {
        Err(Error::CategoryMismatch(a.category.clone(), b.category.clone()))
    }
}

/// Pairs predictions with labels by repeatedly taking the closest remaining
/// pair. Returns (prediction, label) index pairs.
pub fn greedy_match(predicted: &[ObjectInstance], truth: &[ObjectInstance], three_d: bool) -> Result<Vec<(usize, usize)>> {
    let mut dists = Vec::with_capacity(predicted.len() * truth.len());
    for (i, p) in predicted.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            dists.push((location_error(p, t, three_d)?, i, j));
        }
    }
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_p, mut used_t) = (vec![false; predicted.len()], vec![false; truth.len()]);
    let mut out = Vec::new();
    for (_, i, j) in dists {
        if !used_p[i] && !used_t[j] {
            used_p[i] = true;
            used_t[j] = true;
            out.push((i, j));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Other categories stay in place; the held-out category is predicted.
    NewObjects,
    /// Every object is removed and all categories are predicted together.
    EmptyRoom,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::NewObjects => "new_objects",
            Scenario::EmptyRoom => "empty_room",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "new" | "new_objects" => Ok(Scenario::NewObjects),
            "empty" | "empty_room" => Ok(Scenario::EmptyRoom),
            _ => Err(Error::Config(format!("unknown scenario '{s}'"))),
        }
    }
}

/// A placing method under evaluation. `Oracle` returns the labels and
/// exists to check the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predictor {
    Method(Method),
    Oracle,
}

impl Predictor {
    pub fn name(self) -> &'static str {
        match self {
            Predictor::Method(m) => m.name(),
            Predictor::Oracle => "oracle",
        }
    }

    /// Row label used in the report.
    pub fn label(self) -> &'static str {
        match self {
            Predictor::Method(Method::OpenArea) => "open",
            Predictor::Method(Method::Height) => "height",
            Predictor::Method(Method::Room) => "room",
            Predictor::Method(Method::ObjectContext) => "obj.",
            Predictor::Method(Method::Classifier) => "class.",
            Predictor::Method(Method::Fmm) => "FMM",
            Predictor::Method(Method::Dp) => "DP",
            Predictor::Method(Method::DpObject) => "DP+obj",
            Predictor::Oracle => "oracle",
        }
    }

    fn row_order(self) -> usize {
        match self {
            Predictor::Method(Method::OpenArea) => 0,
            Predictor::Method(Method::Height) => 1,
            Predictor::Method(Method::Room) => 2,
            Predictor::Method(Method::ObjectContext) => 3,
            Predictor::Method(Method::Classifier) => 4,
            Predictor::Method(Method::Fmm) => 5,
            Predictor::Method(Method::Dp) => 6,
            Predictor::Method(Method::DpObject) => 7,
            Predictor::Oracle => 8,
        }
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "oracle" {
            Ok(Predictor::Oracle)
        } else {
            s.parse().map(Predictor::Method)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub scene_id: String,
    pub category: String,
    pub method: String,
    pub scenario: Scenario,
    /// Mean over matched instances.
    pub location_error: f64,
    pub height_error: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    /// Score location with 3-D instead of horizontal distance.
    pub location_3d: bool,
    /// Pick ω for `dp+obj` on each fold's training scenes.
    pub tune_omega: bool,
    pub learn: LearnConfig,
    pub baselines: BaselineTrainConfig,
    pub arrange: ArrangeConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            seed: 0,
            location_3d: false,
            tune_omega: false,
            learn: LearnConfig::default(),
            baselines: BaselineTrainConfig::default(),
            arrange: ArrangeConfig::default(),
        }
    }
}

/// Fold index of every scene: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

/// Labels of a scene grouped by category: placed objects and labeled
/// placements alike.
pub fn ground_truth(scene: &Scene) -> BTreeMap<String, Vec<ObjectInstance>> {
    let mut out: BTreeMap<String, Vec<ObjectInstance>> = BTreeMap::new();
    for o in scene.all_objects() {
        out.entry(o.category.clone()).or_default().push(o.clone());
    }
    out
}

/// Trained state of one fold.
struct FoldModels {
    params: ModelParams,
    baselines: BaselineModels,
}

fn train_fold(train: &[Scene], predictors: &[Predictor], config: &EvalConfig, lib: &SkeletonLibrary) -> Result<FoldModels> {
    let uses = |m: Method| predictors.contains(&Predictor::Method(m));
    let params = if uses(Method::Dp) || uses(Method::DpObject) {
        learn_parameters(train, &config.learn, lib)?.0
    } else {
        ModelParams::default()
    };
    let bcfg = BaselineTrainConfig {
        train_classifier: config.baselines.train_classifier && uses(Method::Classifier),
        train_fmm: config.baselines.train_fmm && uses(Method::Fmm),
        ..config.baselines.clone()
    };
    let mut baselines = train_baselines(train, &bcfg, lib)?;
    if config.tune_omega && uses(Method::DpObject) {
        baselines.omega = tune_omega(train, &params, &baselines, lib, &config.arrange, config.location_3d)?;
    }
    Ok(FoldModels { params, baselines })
}

fn score(
    scene: &Scene,
    category: &str,
    predictor: Predictor,
    scenario: Scenario,
    predicted: &[ObjectInstance],
    truth: &[ObjectInstance],
    three_d: bool,
) -> Result<EvalRecord> {
    let pairs = greedy_match(predicted, truth, three_d)?;
    if pairs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no prediction for '{category}' in scene '{}'",
            scene.id
        )));
    }
    let (mut loc, mut h) = (0.0, 0.0);
    for &(i, j) in &pairs {
        loc += location_error(&predicted[i], &truth[j], three_d)?;
        h += height_error(&predicted[i], &truth[j])?;
    }
    let n = pairs.len() as f64;
    Ok(EvalRecord {
        scene_id: scene.id.clone(),
        category: category.to_string(),
        method: predictor.name().to_string(),
        scenario,
        location_error: loc / n,
        height_error: h / n,
        instances: pairs.len(),
    })
}

/// Per-call seed derived from the run seed and the position of the call.
fn call_seed(seed: u64, scene: usize, category: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((scene as u64) << 20)
        .wrapping_add(category as u64)
}

fn predict(
    predictor: Predictor,
    scene: &Scene,
    targets: &[String],
    truth: &[ObjectInstance],
    models: &FoldModels,
    lib: &SkeletonLibrary,
    arrange_cfg: &ArrangeConfig,
) -> Result<Vec<ObjectInstance>> {
    match predictor {
        Predictor::Oracle => Ok(truth.to_vec()),
        Predictor::Method(m) => {
            Ok(arrange(m, scene, targets, &models.params, &models.baselines, lib, arrange_cfg)?.objects)
        }
    }
}

/// Trains on each fold's training scenes and scores predictions on its test
/// scenes. Records come out ordered by scene, category, then predictor.
pub fn cross_validate(
    scenes: &[Scene],
    predictors: &[Predictor],
    scenario: Scenario,
    config: &EvalConfig,
    lib: &SkeletonLibrary,
) -> Result<Vec<EvalRecord>> {
    if config.folds < 2 {
        return Err(Error::Config(format!("folds must be at least 2, got {}", config.folds)));
    }
    if scenes.len() < config.folds {
        return Err(Error::TooFewScenes {
            needed: config.folds,
            got: scenes.len(),
        });
    }
    let fold_of = fold_assignment(scenes.len(), config.folds, config.seed);
    let mut per_scene: Vec<Vec<EvalRecord>> = vec![Vec::new(); scenes.len()];
    for fold in 0..config.folds {
        let train: Vec<Scene> = scenes
            .iter()
            .zip(&fold_of)
            .filter(|(_, &f)| f != fold)
            .map(|(s, _)| s.clone())
            .collect();
        let models = train_fold(&train, predictors, config, lib)?;
        for (si, scene) in scenes.iter().enumerate().filter(|(i, _)| fold_of[*i] == fold) {
            let truth = ground_truth(scene);
            let out = &mut per_scene[si];
            match scenario {
                Scenario::NewObjects => {
                    for (ci, (cat, labels)) in truth.iter().enumerate() {
                        let mut input = scene.clone();
                        input.objects = scene.all_objects().filter(|o| &o.category != cat).cloned().collect();
                        input.labeled_placements.clear();
                        let targets = vec![cat.clone(); labels.len()];
                        let cfg = config.arrange.clone().with_seed(call_seed(config.seed, si, ci));
                        for &p in predictors {
                            let pred = predict(p, &input, &targets, labels, &models, lib, &cfg)?;
                            out.push(score(scene, cat, p, scenario, &pred, labels, config.location_3d)?);
                        }
                    }
                }
                Scenario::EmptyRoom => {
                    let mut input = scene.clone();
                    input.objects.clear();
                    input.labeled_placements.clear();
                    let targets: Vec<String> = truth
                        .iter()
                        .flat_map(|(c, v)| std::iter::repeat_n(c.clone(), v.len()))
                        .collect();
                    let all_truth: Vec<ObjectInstance> = truth.values().flatten().cloned().collect();
                    let cfg = config.arrange.clone().with_seed(call_seed(config.seed, si, 0));
                    let mut by_pred = Vec::with_capacity(predictors.len());
                    for &p in predictors {
                        by_pred.push(predict(p, &input, &targets, &all_truth, &models, lib, &cfg)?);
                    }
                    for (cat, labels) in &truth {
                        for (&p, pred) in predictors.iter().zip(&by_pred) {
                            let mine: Vec<ObjectInstance> = pred.iter().filter(|o| &o.category == cat).cloned().collect();
                            out.push(score(scene, cat, p, scenario, &mine, labels, config.location_3d)?);
                        }
                    }
                }
            }
        }
    }
    Ok(per_scene.into_iter().flatten().collect())
}

/// Chooses ω on validation scenes by mean location error of the top
/// feasible `dp+obj` pick over the ω grid. Ties go to the smaller ω.
pub fn tune_omega(
    scenes: &[Scene],
    params: &ModelParams,
    models: &BaselineModels,
    lib: &SkeletonLibrary,
    config: &ArrangeConfig,
    three_d: bool,
) -> Result<f64> {
    let mut totals = vec![0.0; OMEGA_GRID.len()];
    let mut n = 0usize;
    for (si, scene) in scenes.iter().enumerate() {
        for (ci, (cat, labels)) in ground_truth(scene).iter().enumerate() {
            let mut input = scene.clone();
            input.objects = scene.all_objects().filter(|o| &o.category != cat).cloned().collect();
            input.labeled_placements.clear();
            let obj = match object_context_distribution(&models.pair_stats, &input, cat, &shared_candidates(&input, cat)?) {
                Ok(d) => d,
                Err(Error::NoReference(_)) => continue,
                Err(e) => return Err(e),
            };
            let cands = shared_candidates(&input, cat)?;
            let model = SceneModel::new(
                generate_pose_candidates(&input, lib)?,
                &input.objects,
                vec![(cat.clone(), cands.clone())],
                params,
            )?;
            let mut dp = config.dp.clone();
            dp.seed = call_seed(config.dp.seed, si, ci);
            let human = estimate_marginals(&run_chain(&model, &dp)?, &model).objects[0].candidate_distribution();
            for (k, &omega) in OMEGA_GRID.iter().enumerate() {
                let mixed = combine_human_object(&human, &obj, omega, None)?;
                let placed = settle(&input, std::slice::from_ref(cat), std::slice::from_ref(&cands), &[mixed.ranked()])?;
                let pairs = greedy_match(&placed, labels, three_d)?;
                let (i, j) = pairs[0];
                totals[k] += location_error(&placed[i], &labels[j], three_d)?;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Ok(models.omega);
    }
    let best = (0..OMEGA_GRID.len())
        .min_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(a.cmp(&b)))
        .expect("non-empty grid");
    Ok(OMEGA_GRID[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Location,
    Height,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Location => "location (m)",
            Metric::Height => "height (m)",
        }
    }

    fn of(self, r: &EvalRecord) -> f64 {
        match self {
            Metric::Location => r.location_error,
            Metric::Height => r.height_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: Scenario,
    pub metric: Metric,
    pub method: String,
    /// Mean per category, aligned with [`Report::categories`].
    pub cells: Vec<Option<f64>>,
    /// Mean and standard error over every record of the method.
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub categories: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two decimals with the leading zero dropped below one: 0.18 → ".18".
pub fn format_sem(sem: f64) -> String {
    let s = format!("{sem:.2}");
    s.strip_prefix('0').map(str::to_string).unwrap_or(s)
}

fn method_sort_key(name: &str) -> (usize, String) {
    match name.parse::<Predictor>() {
        Ok(p) => (p.row_order(), String::new()),
        Err(_) => (usize::MAX, name.to_string()),
    }
}

fn method_label(name: &str) -> String {
    name.parse::<Predictor>().map(|p| p.label().to_string()).unwrap_or_else(|_| name.to_string())
}

pub fn build_report(records: &[EvalRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no evaluation records".into()));
    }
    let categories: Vec<String> = records
        .iter()
        .map(|r| r.category.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let scenarios: std::collections::BTreeSet<Scenario> = records.iter().map(|r| r.scenario).collect();
    let mut methods: Vec<&str> = records
        .iter()
        .map(|r| r.method.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    methods.sort_by_key(|m| method_sort_key(m));
    let mut rows = Vec::new();
    for &scenario in &scenarios {
        for metric in [Metric::Location, Metric::Height] {
            for &method in &methods {
                let mine: Vec<&EvalRecord> = records
                    .iter()
                    .filter(|r| r.scenario == scenario && r.method == method)
                    .collect();
                if mine.is_empty() {
                    continue;
                }
                let cells = categories
                    .iter()
                    .map(|c| {
                        let v: Vec<f64> = mine.iter().filter(|r| &r.category == c).map(|r| metric.of(r)).collect();
                        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
                    })
                    .collect();
                let all: Vec<f64> = mine.iter().map(|r| metric.of(r)).collect();
                let (mean, sem) = mean_sem(&all);
                rows.push(ReportRow {
                    scenario,
                    metric,
                    method: method.to_string(),
                    cells,
                    mean,
                    sem,
                    n: all.len(),
                });
            }
        }
    }
    Ok(Report { categories, rows })
}

impl Report {
    /// CSV with one row per (scenario, metric, method), one column per
    /// category and a final `AVG` column holding mean±SEM.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,metric,method");
        for c in &self.categories {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push_str(",AVG\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.scenario.name(), r.metric.label(), csv_field(&method_label(&r.method)));
            for c in &r.cells {
                match c {
                    Some(v) => {
                        let _ = write!(out, ",{v:.2}");
                    }
                    None => out.push(','),
                }
            }
            let _ = writeln!(out, ",{:.2}±{}", r.mean, format_sem(r.sem));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Aggregates records and renders the CSV report.
pub fn render_report(records: &[EvalRecord]) -> Result<(Report, String)> {
    let report = build_report(records)?;
    let csv = report.to_csv();
    Ok((report, csv))
}
