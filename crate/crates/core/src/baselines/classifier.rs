//! Per-category logistic regression over hand-built placement features.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::scene::{PlacementCandidate, Scene, SupportId, ORIENTATION_BINS};

use super::{rank_by_score, Ranking};

pub const FEATURE_SCHEMA_VERSION: u32 = 1;
/// Context categories with per-category distance/bearing features.
pub const TOP_CATEGORIES: usize = 8;
pub const FEATURE_COUNT: usize = 5 + 2 * TOP_CATEGORIES + ORIENTATION_BINS as usize + 2;
/// Candidates this close to a label count as positives.
pub const POSITIVE_RADIUS: f64 = 0.5;
pub const NEGATIVE_RATIO: usize = 5;
/// Positives kept per training scene.
pub const MAX_POSITIVES_PER_SCENE: usize = 200;
pub const MIN_POSITIVES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub l2: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            l2: 1e-3,
            grad_tol: 1e-5,
            max_iters: 10_000,
            seed: 0,
        }
    }
}

/// Feature vector of placing `category` at `c` in `scene`.
///
/// Layout: base height; x and y normalized by the room; distance to the
/// nearest wall; distance to the nearest object; distance and bearing to
/// the nearest instance of each context category (zeros when absent);
/// orientation one-hot; footprint area; supporting-surface area.
pub fn extract_features(scene: &Scene, category: &str, c: &PlacementCandidate, context: &[String]) -> Result<Vec<f64>> {
    let size = scene.category_size(category)?;
    let (w, d) = (scene.room.width, scene.room.depth);
    let p = c.location;
    let mut f = Vec::with_capacity(FEATURE_COUNT);
    f.push(p.z);
    f.push(p.x / w);
    f.push(p.y / d);
    f.push(p.x.min(w - p.x).min(p.y).min(d - p.y));
    let nearest_any = scene
        .objects
        .iter()
        .map(|o| o.location().horizontal_distance(p))
        .fold(f64::INFINITY, f64::min);
    f.push(if nearest_any.is_finite() { nearest_any } else { w.hypot(d) });
    for cat in context.iter().take(TOP_CATEGORIES) {
        let nearest = scene
            .objects
            .iter()
            .filter(|o| &o.category == cat)
            .map(|o| (o.location().horizontal_distance(p), o))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        match nearest {
            Some((dist, o)) => {
                let r = o.location();
                f.push(dist);
                f.push(wrap_angle((p.y - r.y).atan2(p.x - r.x) - o.bbox.yaw));
            }
            None => f.extend([0.0, 0.0]),
        }
    }
    for _ in context.len().min(TOP_CATEGORIES)..TOP_CATEGORIES {
        f.extend([0.0, 0.0]);
    }
    for b in 0..ORIENTATION_BINS {
        f.push(if b == c.orientation_bin { 1.0 } else { 0.0 });
    }
    f.push(size.x * size.y);
    f.push(match c.support {
        SupportId::Floor => w * d,
        SupportId::Furniture(i) => scene.furniture[i].bbox.footprint_area(),
    });
    debug_assert_eq!(f.len(), FEATURE_COUNT);
    Ok(f)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln σ(z), stable for large |z|.
fn ln_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// A fitted logistic model on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

impl LogisticModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.bias
            + x.iter()
                .zip(&self.weights)
                .zip(self.feature_mean.iter().zip(&self.feature_scale))
                .map(|((v, w), (m, s))| w * (v - m) / s)
                .sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.score(x))
    }
}

/// Result of a fit together with its objective trace.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    /// Penalized mean log-likelihood after each accepted step (first entry
    /// is the starting point).
    pub objective_trace: Vec<f64>,
    pub grad_norm: f64,
}

fn objective(z: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = y.len() as f64;
    let ll: f64 = z
        .iter()
        .zip(y)
        .map(|(x, &t)| {
            let s = b + x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
            if t {
                ln_sigmoid(s)
            } else {
                ln_sigmoid(-s)
            }
        })
        .sum();
    ll / n - 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`objective`] with the bias last.
fn gradient(z: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, l2: f64) -> Vec<f64> {
    let n = y.len() as f64;
    let mut g = vec![0.0; w.len() + 1];
    for (x, &t) in z.iter().zip(y) {
        let s = b + x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let r = f64::from(u8::from(t)) - sigmoid(s);
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += r * xi / n;
        }
        g[w.len()] += r / n;
    }
    for (gi, wi) in g.iter_mut().zip(w) {
        *gi -= l2 * wi;
    }
    g
}

/// L2-regularized logistic regression by gradient ascent. The bias is
/// unpenalized. Steps start from a Barzilai–Borwein estimate and are
/// halved until the Armijo condition holds, so the objective never drops.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], config: &ClassifierConfig) -> Result<LogisticFit> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InsufficientData("logistic regression needs labeled rows".into()));
    }
    let dim = x[0].len();
    let n = x.len() as f64;
    let feature_mean: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let feature_scale: Vec<f64> = (0..dim)
        .map(|j| {
            let v = x.iter().map(|r| (r[j] - feature_mean[j]).powi(2)).sum::<f64>() / n;
            if v.sqrt() > 1e-12 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| (0..dim).map(|j| (r[j] - feature_mean[j]) / feature_scale[j]).collect())
        .collect();
    let mut theta = vec![0.0; dim + 1];
    let split = |t: &[f64]| (t[..dim].to_vec(), t[dim]);
    let mut f = objective(&z, y, &theta[..dim], theta[dim], config.l2);
    let mut g = gradient(&z, y, &theta[..dim], theta[dim], config.l2);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for _ in 0..config.max_iters {
        if norm(&g) <= config.grad_tol {
            break;
        }
        if let Some((pt, pg)) = &prev {
            let s: Vec<f64> = theta.iter().zip(pt).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g.iter().zip(pg).map(|(a, b)| b - a).collect();
            let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
            if sy > 1e-300 {
                step = s.iter().map(|a| a * a).sum::<f64>() / sy;
            }
        }
        let gg: f64 = g.iter().map(|a| a * a).sum();
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t + step * d).collect();
            let (w, b) = split(&cand);
            let fc = objective(&z, y, &w, b, config.l2);
            if fc >= f + 1e-4 * step * gg {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        prev = Some((theta, g));
        theta = cand;
        f = fc;
        let (w, b) = split(&theta);
        g = gradient(&z, y, &w, b, config.l2);
        trace.push(f);
    }
    let (weights, bias) = split(&theta);
    Ok(LogisticFit {
        model: LogisticModel {
            weights,
            bias,
            feature_mean,
            feature_scale,
        },
        objective_trace: trace,
        grad_norm: norm(&g),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub schema_version: u32,
    pub l2: f64,
    /// Context categories in feature order.
    pub context: Vec<String>,
    pub models: BTreeMap<String, LogisticModel>,
}

/// Categories ranked by number of training instances, ties by name.
pub fn context_categories(scenes: &[Scene]) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in scenes {
        for o in s.all_objects() {
            *counts.entry(&o.category).or_default() += 1;
        }
    }
    let mut v: Vec<(&str, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v.into_iter().take(TOP_CATEGORIES).map(|(c, _)| c.to_string()).collect()
}

/// The scene with every instance of `category` taken out and the labels
/// folded into the fixed objects.
pub(crate) fn context_without(scene: &Scene, category: &str) -> Scene {
    let mut s = scene.clone();
    s.objects = scene.all_objects().filter(|o| o.category != category).cloned().collect();
    s.labeled_placements.clear();
    s
}

/// Labeled rows for one category.
pub fn training_rows(
    scenes: &[Scene],
    category: &str,
    context: &[String],
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut positives = 0;
    for s in scenes {
        let labels: Vec<_> = s.all_objects().filter(|o| o.category == category).map(|o| o.location()).collect();
        if labels.is_empty() {
            continue;
        }
        let ctx = context_without(s, category);
        let Ok(cands) = super::shared_candidates(&ctx, category) else { continue };
        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..cands.len())
            .partition(|&i| labels.iter().any(|l| cands[i].location.distance(*l) <= POSITIVE_RADIUS));
        let pos: Vec<usize> = if pos.len() > MAX_POSITIVES_PER_SCENE {
            let mut k: Vec<usize> = sample(&mut rng, pos.len(), MAX_POSITIVES_PER_SCENE).into_iter().map(|j| pos[j]).collect();
            k.sort_unstable();
            k
        } else {
            pos
        };
        let n_neg = (NEGATIVE_RATIO * pos.len()).min(neg.len());
        let mut negs: Vec<usize> = sample(&mut rng, neg.len(), n_neg).into_iter().map(|j| neg[j]).collect();
        negs.sort_unstable();
        positives += pos.len();
        for (idx, label) in pos.iter().map(|&i| (i, true)).chain(negs.iter().map(|&i| (i, false))) {
            x.push(extract_features(&ctx, category, &cands[idx], context)?);
            y.push(label);
        }
    }
    if positives < MIN_POSITIVES {
        return Err(Error::InsufficientData(format!(
            "classifier for '{category}' has {positives} positives, needs {MIN_POSITIVES}"
        )));
    }
    Ok((x, y))
}

/// Trains one model per category with enough positives; the rest are
/// skipped and report `InsufficientData` at prediction time.
pub fn classifier_train(scenes: &[Scene], config: &ClassifierConfig) -> Result<ClassifierModel> {
    let context = context_categories(scenes);
    let mut categories: Vec<String> = scenes
        .iter()
        .flat_map(|s| s.all_objects().map(|o| o.category.clone()))
        .collect();
    categories.sort();
    categories.dedup();
    let mut models = BTreeMap::new();
    for (k, cat) in categories.iter().enumerate() {
        match training_rows(scenes, cat, &context, config.seed.wrapping_add(k as u64)) {
            Ok((x, y)) => {
                models.insert(cat.clone(), fit_logistic(&x, &y, config)?.model);
            }
            Err(Error::InsufficientData(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(ClassifierModel {
        schema_version: FEATURE_SCHEMA_VERSION,
        l2: config.l2,
        context,
        models,
    })
}

pub fn classifier_scores(
    model: &ClassifierModel,
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<Vec<f64>> {
    let m = model
        .models
        .get(category)
        .ok_or_else(|| Error::InsufficientData(format!("no classifier for '{category}'")))?;
    candidates
        .iter()
        .map(|c| extract_features(scene, category, c, &model.context).map(|f| m.score(&f)))
        .collect()
}

pub fn classifier_ranking(
    model: &ClassifierModel,
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<Ranking> {
    Ok(rank_by_score(&classifier_scores(model, scene, category, candidates)?))
}

pub fn classifier_predict(
    model: &ClassifierModel,
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<PlacementCandidate> {
    classifier_ranking(model, scene, category, candidates)?
        .first()
        .map(|&i| candidates[i])
        .ok_or_else(|| Error::EmptyCandidateSet("classifier baseline".into()))
}
