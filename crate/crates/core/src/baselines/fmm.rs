//! Finite mixture of K poses fitted by EM, with discrete M-steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densities::{potential_terms, CategoryParams, PoseActivityTable};
use crate::dp::{ArrangementModel, SceneModel};
use crate::error::{Error, Result};
use crate::learning::{fit_activity_tables, fit_category, observed_objects, TrainingPair};
use crate::params::ModelParams;
use crate::sampling::log_sum_exp;
use crate::scene::{ObjectInstance, Scene};
use crate::skeleton::{generate_pose_candidates, HumanPose, SkeletonLibrary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmmConfig {
    /// Number of poses in the mixture.
    pub k: usize,
    pub em_iters: usize,
    pub em_tol: f64,
    /// Bound on the alternating pose/placement (or pose/parameter) updates
    /// inside one M-step.
    pub inner_iters: usize,
    pub seed: u64,
}

impl Default for FmmConfig {
    fn default() -> Self {
        FmmConfig {
            k: 3,
            em_iters: 100,
            em_tol: 1e-6,
            inner_iters: 20,
            seed: 0,
        }
    }
}

impl FmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("FMM needs K >= 1".into()));
        }
        if self.em_iters < 1 || self.inner_iters < 1 {
            return Err(Error::Config("FMM iteration bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Mixture state on one scene: K pose indices and one placement per object
/// (0 for fixed objects).
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    pub poses: Vec<usize>,
    pub placements: Vec<usize>,
}

/// Σ_i ln((1/K) Σ_c Ψ(O_i, H_c)).
pub fn observed_log_likelihood<M: ArrangementModel + ?Sized>(model: &M, state: &MixtureState) -> f64 {
    let k = state.poses.len() as f64;
    let mut buf = Vec::with_capacity(state.poses.len());
    (0..model.num_objects())
        .map(|i| {
            buf.clear();
            buf.extend(state.poses.iter().map(|&h| model.log_potential(i, state.placements[i], h)));
            log_sum_exp(&buf) - k.ln()
        })
        .sum()
}

/// Responsibilities γ_ic ∝ Ψ(O_i, H_c).
pub fn responsibilities<M: ArrangementModel + ?Sized>(model: &M, state: &MixtureState) -> Vec<Vec<f64>> {
    (0..model.num_objects())
        .map(|i| {
            let l: Vec<f64> = state.poses.iter().map(|&h| model.log_potential(i, state.placements[i], h)).collect();
            let z = log_sum_exp(&l);
            l.iter().map(|v| (v - z).exp()).collect()
        })
        .collect()
}

fn argmax_keep(scores: &[f64], current: usize) -> usize {
    let mut best = current;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn pose_rows<M: ArrangementModel + ?Sized>(model: &M, placements: &[usize]) -> Vec<Vec<f64>> {
    (0..model.num_objects())
        .map(|i| {
            let mut row = vec![0.0; model.num_poses()];
            model.add_pose_scores(i, placements[i], &mut row);
            row
        })
        .collect()
}

/// Updates each H_c to the pose maximizing Σ_i γ_ic ln Ψ(O_i, H). Returns
/// whether anything changed.
fn update_poses<M: ArrangementModel + ?Sized>(model: &M, state: &mut MixtureState, gamma: &[Vec<f64>]) -> bool {
    let rows = pose_rows(model, &state.placements);
    let mut changed = false;
    for c in 0..state.poses.len() {
        let mut acc = vec![0.0; model.num_poses()];
        for (row, g) in rows.iter().zip(gamma) {
            let w = g[c];
            if w > 0.0 {
                acc.iter_mut().zip(row).for_each(|(a, r)| *a += w * r);
            }
        }
        let h = argmax_keep(&acc, state.poses[c]);
        changed |= h != state.poses[c];
        state.poses[c] = h;
    }
    changed
}

/// Updates each target placement to maximize Σ_c γ_ic ln Ψ(O, H_c).
fn update_placements<M: ArrangementModel + ?Sized>(model: &M, state: &mut MixtureState, gamma: &[Vec<f64>]) -> bool {
    let mut changed = false;
    let mut buf = Vec::new();
    for (i, g) in gamma.iter().enumerate().take(model.num_objects()) {
        let Some(n) = model.num_placements(i) else { continue };
        let mut acc = vec![0.0; n];
        for (c, &h) in state.poses.iter().enumerate() {
            model.placement_scores(i, h, &mut buf);
            let w = g[c];
            acc.iter_mut().zip(&buf).for_each(|(a, s)| *a += w * s);
        }
        let p = argmax_keep(&acc, state.placements[i]);
        changed |= p != state.placements[i];
        state.placements[i] = p;
    }
    changed
}

/// Weighted placement scores Σ_c γ_ic ln Ψ(p, H_c) for a target.
pub fn placement_scores<M: ArrangementModel + ?Sized>(model: &M, state: &MixtureState, gamma: &[Vec<f64>], obj: usize) -> Vec<f64> {
    let n = model.num_placements(obj).unwrap_or(0);
    let mut acc = vec![0.0; n];
    let mut buf = Vec::new();
    for (c, &h) in state.poses.iter().enumerate() {
        model.placement_scores(obj, h, &mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, s)| *a += gamma[obj][c] * s);
    }
    acc
}

/// Random target placements, then poses chosen farthest-first: the best
/// pose of a random object, then repeatedly the best pose of the object
/// worst explained so far.
pub fn initial_state<M: ArrangementModel + ?Sized, R: Rng + ?Sized>(model: &M, k: usize, rng: &mut R) -> Result<MixtureState> {
    if model.num_poses() == 0 {
        return Err(Error::EmptyCandidateSet("no pose candidates".into()));
    }
    let placements: Vec<usize> = (0..model.num_objects())
        .map(|i| match model.num_placements(i) {
            None => Ok(0),
            Some(0) => Err(Error::EmptyCandidateSet(format!("object {i} has no placements"))),
            Some(n) => Ok(rng.random_range(0..n)),
        })
        .collect::<Result<_>>()?;
    let n = model.num_objects();
    if n == 0 {
        return Ok(MixtureState {
            poses: (0..k).map(|_| rng.random_range(0..model.num_poses())).collect(),
            placements,
        });
    }
    let rows = pose_rows(model, &placements);
    let best_pose = |i: usize| argmax_keep(&rows[i], 0);
    let mut poses = vec![best_pose(rng.random_range(0..n))];
    while poses.len() < k {
        let worst = (0..n)
            .min_by(|&a, &b| {
                let fa = poses.iter().map(|&h| rows[a][h]).fold(f64::NEG_INFINITY, f64::max);
                let fb = poses.iter().map(|&h| rows[b][h]).fold(f64::NEG_INFINITY, f64::max);
                fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            })
            .expect("non-empty");
        poses.push(best_pose(worst));
    }
    Ok(MixtureState { poses, placements })
}

#[derive(Debug, Clone)]
pub struct FmmRun {
    pub state: MixtureState,
    pub gamma: Vec<Vec<f64>>,
    /// Observed-data log-likelihood at the start and after every EM
    /// iteration.
    pub log_likelihood: Vec<f64>,
}

/// EM with Θ fixed: poses and target placements are the parameters.
pub fn fmm_em<M: ArrangementModel + ?Sized>(model: &M, config: &FmmConfig) -> Result<FmmRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial_state(model, config.k, &mut rng)?;
    let mut ll = observed_log_likelihood(model, &state);
    let mut trace = vec![ll];
    for _ in 0..config.em_iters {
        let gamma = responsibilities(model, &state);
        for _ in 0..config.inner_iters {
            let a = update_poses(model, &mut state, &gamma);
            let b = update_placements(model, &mut state, &gamma);
            if !(a || b) {
                break;
            }
        }
        let next = observed_log_likelihood(model, &state);
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain <= config.em_tol {
            break;
        }
    }
    let gamma = responsibilities(model, &state);
    Ok(FmmRun {
        state,
        gamma,
        log_likelihood: trace,
    })
}

/// Θ learned by EM over the training scenes, plus the likelihood trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmmModel {
    pub params: ModelParams,
    pub config: FmmConfig,
    pub log_likelihood: Vec<f64>,
}

fn category_objective(pairs: &[(TrainingPair, f64, PosedPlacement)], p: &CategoryParams) -> f64 {
    let pa = PoseActivityTable::default();
    pairs
        .iter()
        .map(|(_, w, (pl, pose))| {
            let t = potential_terms(pl, pose, p, &pa).expect("valid parameters");
            w * (t.total() - t.pose_activity)
        })
        .sum()
}

type PosedPlacement = (crate::scene::Placement, HumanPose);

/// Fits Θ by EM: per-scene poses and the shared Θ are the parameters,
/// assignments are marginalized. Each Θ refit is kept only if it does not
/// lower the expected complete-data objective, so the likelihood trace is
/// non-decreasing.
pub fn fmm_fit(scenes: &[Scene], config: &FmmConfig, lib: &SkeletonLibrary) -> Result<FmmModel> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::InsufficientData("no training scenes".into()));
    }
    let data: Vec<(Vec<ObjectInstance>, Vec<HumanPose>)> = scenes
        .iter()
        .map(|s| Ok((observed_objects(s), generate_pose_candidates(s, lib)?)))
        .collect::<Result<_>>()?;
    let mut params = ModelParams::default();
    for (objs, _) in &data {
        for o in objs {
            params.categories.entry(o.category.clone()).or_default();
        }
    }
    let build = |params: &ModelParams| -> Result<Vec<SceneModel>> {
        data.iter()
            .map(|(objs, poses)| SceneModel::new(poses.clone(), objs, Vec::new(), params))
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut models = build(&params)?;
    let mut states: Vec<MixtureState> = models
        .iter()
        .map(|m| initial_state(m, config.k, &mut rng))
        .collect::<Result<_>>()?;
    let total_ll = |models: &[SceneModel], states: &[MixtureState]| -> f64 {
        models.iter().zip(states).map(|(m, s)| observed_log_likelihood(m, s)).sum()
    };
    let mut ll = total_ll(&models, &states);
    let mut trace = vec![ll];
    for _ in 0..config.em_iters {
        let gammas: Vec<Vec<Vec<f64>>> = models.iter().zip(&states).map(|(m, s)| responsibilities(m, s)).collect();
        for _ in 0..config.inner_iters {
            let mut moved = false;
            for ((m, s), g) in models.iter().zip(states.iter_mut()).zip(&gammas) {
                moved |= update_poses(m, s, g);
            }
            let refit = refit_parameters(&data, &states, &gammas, &params)?;
            let changed = refit != params;
            if changed {
                params = refit;
                models = build(&params)?;
            }
            if !(moved || changed) {
                break;
            }
        }
        let next = total_ll(&models, &states);
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain <= config.em_tol {
            break;
        }
    }
    Ok(FmmModel {
        params,
        config: config.clone(),
        log_likelihood: trace,
    })
}

/// Weighted per-term refit of Θ and the pose-activity table, keeping the
/// old value of any block whose weighted objective would drop.
fn refit_parameters(
    data: &[(Vec<ObjectInstance>, Vec<HumanPose>)],
    states: &[MixtureState],
    gammas: &[Vec<Vec<f64>>],
    current: &ModelParams,
) -> Result<ModelParams> {
    let mut per_cat: std::collections::BTreeMap<String, Vec<(TrainingPair, f64, PosedPlacement)>> = Default::default();
    let mut pose_weights = Vec::new();
    for (((objs, poses), st), gamma) in data.iter().zip(states).zip(gammas) {
        for (c, &h) in st.poses.iter().enumerate() {
            let pose = &poses[h];
            let mut wsum = 0.0;
            for (i, o) in objs.iter().enumerate() {
                let w = gamma[i][c];
                wsum += w;
                let pl = o.placement();
                per_cat
                    .entry(o.category.clone())
                    .or_default()
                    .push((TrainingPair::new(&pl, pose), w, (pl, pose.clone())));
            }
            pose_weights.push((pose.template, pose.activity, wsum));
        }
    }
    let mut next = current.clone();
    for (cat, rows) in &per_cat {
        let pairs: Vec<TrainingPair> = rows.iter().map(|r| r.0).collect();
        let weights: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let fitted = match fit_category(&pairs, &weights) {
            Ok(p) => p,
            Err(Error::InsufficientData(_)) => continue,
            Err(e) => return Err(e),
        };
        let old = current.params_for(cat);
        if category_objective(rows, &fitted) >= category_objective(rows, &old) {
            next.categories.insert(cat.clone(), fitted);
        }
    }
    let table = fit_activity_tables(std::iter::empty(), pose_weights.iter().copied()).1;
    let q = |t: &PoseActivityTable| -> f64 { pose_weights.iter().map(|(pt, a, w)| w * t.get(*pt, *a).ln()).sum() };
    if q(&table) >= q(&current.pose_activity) {
        next.pose_activity = table;
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct FmmPrediction {
    pub run: FmmRun,
    /// Weighted scores over each target's candidates.
    pub scores: Vec<Vec<f64>>,
}

/// Places the targets of a scene by EM with Θ fixed.
pub fn fmm_predict(model: &SceneModel, config: &FmmConfig) -> Result<FmmPrediction> {
    let run = fmm_em(model, config)?;
    let scores = (0..model.num_targets())
        .map(|t| placement_scores(model, &run.state, &run.gamma, model.target_object(t)))
        .collect();
    Ok(FmmPrediction { run, scores })
}
