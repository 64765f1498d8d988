//! Comparison methods. Every method ranks the same candidate list for a
//! given scene and category, produced by [`shared_candidates`].

pub mod classifier;
pub mod combine;
pub mod fmm;
pub mod object_context;
pub mod simple;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crate::dp::CandidateDistribution;
use crate::dp::{estimate_marginals, predict_arrangement, run_chain, DpConfig, SceneModel};
use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::params::ModelParams;
use crate::scene::{collides_with_any, ObjectInstance, PlacementCandidate, Scene};
use crate::skeleton::{generate_pose_candidates, SkeletonLibrary};

pub use classifier::{classifier_predict, classifier_train, extract_features, ClassifierConfig, ClassifierModel};
pub use combine::{combine_human_object, DEFAULT_OMEGA, OMEGA_GRID};
pub use fmm::{fmm_em, fmm_fit, fmm_predict, FmmConfig, FmmModel};
pub use object_context::{baseline_object_context, fit_pair_stats, object_context_distribution, PairStats};
pub use simple::{baseline_height, baseline_open_area, baseline_room_context};

/// Candidate indices, best first.
pub type Ranking = Vec<usize>;

/// Indices by decreasing score; ties keep candidate order.
pub fn rank_by_score(scores: &[f64]) -> Ranking {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Indices by increasing key; ties keep candidate order.
pub fn rank_by_key<K: Ord>(n: usize, key: impl Fn(usize) -> K) -> Ranking {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_cached_key(|&i| (key(i), i));
    idx
}

/// The candidate list every method receives for `category` in `scene`:
/// stable, clear of furniture and of the scene's objects.
pub fn shared_candidates(scene: &Scene, category: &str) -> Result<Vec<PlacementCandidate>> {
    crate::dp::target_candidates(scene, category)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "fmm")]
    Fmm,
    #[serde(rename = "open")]
    OpenArea,
    #[serde(rename = "height")]
    Height,
    #[serde(rename = "room")]
    Room,
    #[serde(rename = "obj")]
    ObjectContext,
    #[serde(rename = "class")]
    Classifier,
    #[serde(rename = "dp+obj")]
    DpObject,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Dp,
        Method::Fmm,
        Method::OpenArea,
        Method::Height,
        Method::Room,
        Method::ObjectContext,
        Method::Classifier,
        Method::DpObject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Fmm => "fmm",
            Method::OpenArea => "open",
            Method::Height => "height",
            Method::Room => "room",
            Method::ObjectContext => "obj",
            Method::Classifier => "class",
            Method::DpObject => "dp+obj",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Everything the non-DP methods learn from training scenes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineModels {
    /// Mean base height per category.
    pub mean_heights: BTreeMap<String, f64>,
    /// Mean location normalized by room extents.
    pub room_means: BTreeMap<String, [f64; 3]>,
    /// Orientation bins seen in training, per category.
    pub orientations: BTreeMap<String, Vec<u8>>,
    pub pair_stats: Vec<PairStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmm: Option<FmmModel>,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineTrainConfig {
    pub train_classifier: bool,
    pub train_fmm: bool,
    pub classifier: ClassifierConfig,
    pub fmm: FmmConfig,
    pub omega: f64,
}

impl Default for BaselineTrainConfig {
    fn default() -> Self {
        BaselineTrainConfig {
            train_classifier: true,
            train_fmm: true,
            classifier: ClassifierConfig::default(),
            fmm: FmmConfig::default(),
            omega: DEFAULT_OMEGA,
        }
    }
}

pub fn train_baselines(scenes: &[Scene], config: &BaselineTrainConfig, lib: &SkeletonLibrary) -> Result<BaselineModels> {
    let mut heights: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut rooms: BTreeMap<String, ([f64; 3], usize)> = BTreeMap::new();
    let mut orientations: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for s in scenes {
        for o in s.all_objects() {
            let loc = o.location();
            let h = heights.entry(o.category.clone()).or_default();
            h.0 += loc.z;
            h.1 += 1;
            let r = rooms.entry(o.category.clone()).or_default();
            let n = simple::normalized_location(s, loc);
            (0..3).for_each(|k| r.0[k] += n[k]);
            r.1 += 1;
            orientations.entry(o.category.clone()).or_default().push(simple::yaw_bin(o.bbox.yaw));
        }
    }
    orientations.values_mut().for_each(|v| {
        v.sort_unstable();
        v.dedup();
    });
    Ok(BaselineModels {
        mean_heights: heights.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        room_means: rooms
            .into_iter()
            .map(|(k, (s, n))| (k, s.map(|v| v / n as f64)))
            .collect(),
        orientations,
        pair_stats: fit_pair_stats(scenes),
        classifier: if config.train_classifier {
            Some(classifier_train(scenes, &config.classifier)?)
        } else {
            None
        },
        fmm: if config.train_fmm {
            Some(fmm_fit(scenes, &config.fmm, lib)?)
        } else {
            None
        },
        omega: config.omega,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrangeConfig {
    pub dp: DpConfig,
    pub fmm: FmmConfig,
    /// Overrides the trained ω for `dp+obj` when set.
    pub omega: Option<f64>,
}

impl ArrangeConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dp.seed = seed;
        self.fmm.seed = seed;
        self
    }
}

/// A predicted arrangement and the candidate lists it was chosen from.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrangeOutput {
    pub objects: Vec<ObjectInstance>,
    pub candidates: Vec<Vec<PlacementCandidate>>,
}

/// Walks each target's ranking in target order and keeps the first
/// candidate clear of furniture, existing objects and earlier targets.
pub fn settle(
    scene: &Scene,
    targets: &[String],
    candidates: &[Vec<PlacementCandidate>],
    rankings: &[Ranking],
) -> Result<Vec<ObjectInstance>> {
    let mut obstacles: Vec<OrientedBox> = scene.furniture.iter().map(|f| f.bbox).collect();
    obstacles.extend(scene.objects.iter().map(|o| o.bbox));
    let mut out = Vec::with_capacity(targets.len());
    for ((cat, cands), ranking) in targets.iter().zip(candidates).zip(rankings) {
        let size = scene.category_size(cat)?;
        let inst = ranking
            .iter()
            .map(|&i| cands[i].instance(cat, size))
            .find(|inst| !collides_with_any(&inst.bbox, obstacles.iter()))
            .ok_or_else(|| Error::NoFeasiblePlacement(cat.clone()))?;
        obstacles.push(inst.bbox);
        out.push(inst);
    }
    Ok(out)
}

/// Places targets one at a time so later targets can use earlier picks as
/// reference objects. A target with no reference in sight falls back to the
/// room-context ranking.
fn object_context_sequential(
    scene: &Scene,
    targets: &[String],
    candidates: &[Vec<PlacementCandidate>],
    models: &BaselineModels,
) -> Result<Vec<ObjectInstance>> {
    let mut context = scene.clone();
    let mut out = Vec::with_capacity(targets.len());
    for (cat, cands) in targets.iter().zip(candidates) {
        let ranking = match object_context::object_context_ranking(&models.pair_stats, &context, cat, cands) {
            Ok(r) => r,
            Err(Error::NoReference(_)) => {
                let m = *models
                    .room_means
                    .get(cat)
                    .ok_or_else(|| Error::NoReference(cat.clone()))?;
                simple::room_ranking(m, &context, cands)
            }
            Err(e) => return Err(e),
        };
        let placed = settle(&context, std::slice::from_ref(cat), std::slice::from_ref(cands), &[ranking])?;
        context.objects.extend(placed.iter().cloned());
        out.extend(placed);
    }
    Ok(out)
}

fn require<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Config(format!("parameters carry no trained {what} model")))
}

/// Places `targets` (category names) into `scene` with `method`.
pub fn arrange(
    method: Method,
    scene: &Scene,
    targets: &[String],
    params: &ModelParams,
    models: &BaselineModels,
    lib: &SkeletonLibrary,
    config: &ArrangeConfig,
) -> Result<ArrangeOutput> {
    let candidates: Vec<Vec<PlacementCandidate>> = targets
        .iter()
        .map(|c| shared_candidates(scene, c))
        .collect::<Result<_>>()?;
    let scene_model = |params: &ModelParams| -> Result<SceneModel> {
        SceneModel::new(
            generate_pose_candidates(scene, lib)?,
            &scene.objects,
            targets.iter().cloned().zip(candidates.iter().cloned()).collect(),
            params,
        )
    };
    let rankings: Vec<Ranking> = match method {
        Method::Dp => {
            let model = scene_model(params)?;
            let snaps = run_chain(&model, &config.dp)?;
            let dist = estimate_marginals(&snaps, &model);
            let objects = predict_arrangement(&dist.objects, scene)?;
            return Ok(ArrangeOutput { objects, candidates });
        }
        Method::DpObject => {
            let model = scene_model(params)?;
            let snaps = run_chain(&model, &config.dp)?;
            let dist = estimate_marginals(&snaps, &model);
            let omega = config.omega.unwrap_or(models.omega);
            targets
                .iter()
                .zip(&candidates)
                .zip(&dist.objects)
                .map(|((cat, cands), d)| {
                    let human = d.candidate_distribution();
                    let mixed = match object_context_distribution(&models.pair_stats, scene, cat, cands) {
                        Ok(obj) => combine_human_object(&human, &obj, omega, None)?,
                        // Without a reference object only the human term is defined.
                        Err(Error::NoReference(_)) => human,
                        Err(e) => return Err(e),
                    };
                    Ok(mixed.ranked())
                })
                .collect::<Result<_>>()?
        }
        Method::Fmm => {
            let fmm = require(&models.fmm, "FMM")?;
            let model = scene_model(&fmm.params)?;
            let pred = fmm_predict(&model, &config.fmm)?;
            pred.scores.iter().map(|s| rank_by_score(s)).collect()
        }
        Method::OpenArea => targets
            .iter()
            .zip(&candidates)
            .map(|(cat, cands)| {
                let bins = models.orientations.get(cat).map(Vec::as_slice).unwrap_or(&[]);
                simple::open_area_ranking(scene, cands, bins)
            })
            .collect(),
        Method::Height => targets
            .iter()
            .zip(&candidates)
            .map(|(cat, cands)| {
                let h = *models
                    .mean_heights
                    .get(cat)
                    .ok_or_else(|| Error::InsufficientData(format!("no training heights for '{cat}'")))?;
                Ok(simple::height_ranking(h, cands))
            })
            .collect::<Result<_>>()?,
        Method::Room => targets
            .iter()
            .zip(&candidates)
            .map(|(cat, cands)| {
                let m = *models
                    .room_means
                    .get(cat)
                    .ok_or_else(|| Error::InsufficientData(format!("no training locations for '{cat}'")))?;
                Ok(simple::room_ranking(m, scene, cands))
            })
            .collect::<Result<_>>()?,
        Method::ObjectContext => {
            let objects = object_context_sequential(scene, targets, &candidates, models)?;
            return Ok(ArrangeOutput { objects, candidates });
        }
        Method::Classifier => {
            let clf = require(&models.classifier, "classifier")?;
            targets
                .iter()
                .zip(&candidates)
                .map(|(cat, cands)| classifier::classifier_ranking(clf, scene, cat, cands))
                .collect::<Result<_>>()?
        }
    };
    let objects = settle(scene, targets, &candidates, &rankings)?;
    Ok(ArrangeOutput { objects, candidates })
}
