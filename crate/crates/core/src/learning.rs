//! Maximum-likelihood estimation of the category parameters, alternating
//! with pose sampling on the training scenes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::densities::{
    bessel_ratio, log_potential, relative_geometry, CategoryParams, PoseActivityTable, KAPPA_MAX, TABLE_FLOOR,
};
use crate::dp::{run_chain, DpConfig, SceneModel, Snapshot};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scene::{ObjectInstance, Placement, Scene};
use crate::skeleton::{generate_pose_candidates, Activity, HumanPose, Joint, PoseType, SkeletonLibrary};

/// Lower bound on fitted standard deviations (meters, or log-meters for
/// the distance term).
pub const SIGMA_FLOOR: f64 = 0.02;
/// Below this mean resultant length the angles are treated as uniform.
pub const RBAR_UNIFORM: f64 = 1e-3;
/// Joints the distance term may be anchored to. Torso first: it wins ties.
pub const DISTANCE_JOINTS: [Joint; 4] = [Joint::Torso, Joint::Head, Joint::LeftHand, Joint::RightHand];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    /// Pose snapshots kept per scene per outer iteration.
    pub samples_per_scene: usize,
    pub max_outer_iters: usize,
    /// Relative change in the mean per-object log potential that counts as
    /// converged.
    pub tol: f64,
    /// Categories with fewer (object, pose) pairs keep their defaults.
    pub min_pairs: usize,
    /// Sampler settings; `sweeps` is derived from `burn_in`, `thinning`
    /// and `samples_per_scene`.
    pub dp: DpConfig,
    /// Pose-type weights of the base measure, copied into the learned
    /// parameters. Indexed by [`PoseType`](crate::skeleton::PoseType).
    pub pose_type_weights: [f64; 6],
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            samples_per_scene: 50,
            max_outer_iters: 50,
            tol: 1e-4,
            min_pairs: 10,
            dp: DpConfig::default(),
            pose_type_weights: [1.0; 6],
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_scene < 1 {
            return Err(Error::Config("samples_per_scene must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.max_outer_iters < 1 {
            return Err(Error::Config("max_outer_iters must be at least 1".into()));
        }
        ModelParams { pose_type_weights: self.pose_type_weights, ..ModelParams::default() }
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.chain_config(0).validate()
    }

    fn chain_config(&self, seed: u64) -> DpConfig {
        DpConfig {
            sweeps: self.dp.burn_in + self.samples_per_scene * self.dp.thinning,
            seed,
            ..self.dp.clone()
        }
    }
}

fn weighted_count_check(n: usize, total_w: f64, what: &str) -> Result<()> {
    if n < 2 || !(total_w > 0.0) {
        return Err(Error::InsufficientData(format!("{what} needs at least 2 weighted values, got {n}")));
    }
    Ok(())
}

/// Weighted mean and population standard deviation, floored at
/// [`SIGMA_FLOOR`].
pub fn fit_gaussian_weighted(values: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    let wsum: f64 = weights.iter().sum();
    weighted_count_check(values.iter().zip(weights).filter(|(_, w)| **w > 0.0).count(), wsum, "Gaussian fit")?;
    let mu = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let var = values.iter().zip(weights).map(|(v, w)| w * (v - mu).powi(2)).sum::<f64>() / wsum;
    Ok((mu, var.sqrt().max(SIGMA_FLOOR)))
}

pub fn fit_gaussian_mle(values: &[f64]) -> Result<(f64, f64)> {
    fit_gaussian_weighted(values, &vec![1.0; values.len()])
}

pub fn fit_lognormal_weighted(values: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("log-normal data must be positive, got {v}")));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    fit_gaussian_weighted(&logs, weights)
}

pub fn fit_lognormal_mle(values: &[f64]) -> Result<(f64, f64)> {
    fit_lognormal_weighted(values, &vec![1.0; values.len()])
}

/// Solves A(κ) = r̄ on [0, KAPPA_MAX] by bisection, to the resolution of
/// double precision.
pub fn solve_kappa(rbar: f64) -> f64 {
    if rbar < RBAR_UNIFORM {
        return 0.0;
    }
    if rbar >= bessel_ratio(KAPPA_MAX) {
        return KAPPA_MAX;
    }
    let (mut lo, mut hi) = (0.0f64, KAPPA_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bessel_ratio(mid) < rbar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Weighted circular mean and concentration. Returns (mu, kappa, r̄).
pub fn fit_vonmises_weighted(angles: &[f64], weights: &[f64]) -> Result<(f64, f64, f64)> {
    let wsum: f64 = weights.iter().sum();
    weighted_count_check(angles.iter().zip(weights).filter(|(_, w)| **w > 0.0).count(), wsum, "von Mises fit")?;
    let (s, c) = angles
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(s, c), (a, w)| (s + w * a.sin(), c + w * a.cos()));
    let rbar = (s.hypot(c) / wsum).min(1.0);
    Ok((s.atan2(c), solve_kappa(rbar), rbar))
}

pub fn fit_vonmises_mle(angles: &[f64]) -> Result<(f64, f64)> {
    fit_vonmises_weighted(angles, &vec![1.0; angles.len()]).map(|(mu, k, _)| (mu, k))
}

/// Constrained maximum-likelihood probability vector: maximizes
/// Σ wᵢ ln pᵢ subject to Σ pᵢ = 1 and pᵢ ≥ [`TABLE_FLOOR`].
///
/// Entries whose share would fall under the floor are pinned to it and the
/// remainder is split in proportion to the weights. No weight at all gives
/// the uniform vector.
pub fn smoothed_probabilities<const N: usize>(weights: &[f64; N]) -> [f64; N] {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return [1.0 / N as f64; N];
    }
    let mut free = [true; N];
    loop {
        let pinned = free.iter().filter(|f| !**f).count();
        let free_w: f64 = weights.iter().zip(&free).filter(|(_, f)| **f).map(|(w, _)| w).sum();
        let scale = (1.0 - TABLE_FLOOR * pinned as f64) / free_w;
        let mut changed = false;
        for i in 0..N {
            if free[i] && weights[i] * scale < TABLE_FLOOR {
                free[i] = false;
                changed = true;
            }
        }
        if !changed {
            let mut p = [TABLE_FLOOR; N];
            for i in 0..N {
                if free[i] {
                    p[i] = weights[i] * scale;
                }
            }
            return p;
        }
    }
}

/// One observed object against the pose it was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    /// Distance to each of [`DISTANCE_JOINTS`].
    pub distances: [f64; 4],
    pub rel_bearing: f64,
    pub ori_diff: f64,
    pub rel_height: f64,
    pub template: PoseType,
    pub activity: Activity,
}

impl TrainingPair {
    pub fn new(placement: &Placement, pose: &HumanPose) -> Self {
        let g = relative_geometry(pose, placement, Joint::Torso);
        TrainingPair {
            distances: DISTANCE_JOINTS.map(|j| relative_geometry(pose, placement, j).distance),
            rel_bearing: g.rel_bearing,
            ori_diff: g.ori_diff,
            rel_height: g.rel_height,
            template: pose.template,
            activity: pose.activity,
        }
    }
}

/// Pairs gathered per category.
pub type TrainingPairSet = BTreeMap<String, Vec<TrainingPair>>;

/// Picks the joint whose fitted log-normal gives the highest total
/// log-likelihood of the distances. Ties go to the torso.
pub fn select_distance_joint(pairs: &[TrainingPair], weights: &[f64]) -> Result<(Joint, f64, f64)> {
    let mut best: Option<(Joint, f64, f64, f64)> = None;
    for (k, &joint) in DISTANCE_JOINTS.iter().enumerate() {
        let d: Vec<f64> = pairs.iter().map(|p| p.distances[k]).collect();
        let (mu, sigma) = fit_lognormal_weighted(&d, weights)?;
        let ll: f64 = d
            .iter()
            .zip(weights)
            .map(|(x, w)| w * crate::densities::lognormal_logpdf(*x, mu, sigma).expect("positive distances"))
            .sum();
        let better = match best {
            None => true,
            Some((_, _, _, b)) => ll > b + 1e-9 * b.abs().max(1.0),
        };
        if better {
            best = Some((joint, mu, sigma, ll));
        }
    }
    let (j, mu, sigma, _) = best.expect("four candidate joints");
    Ok((j, mu, sigma))
}

/// Fits every continuous term and the object-activity vector of one
/// category from weighted pairs.
pub fn fit_category(pairs: &[TrainingPair], weights: &[f64]) -> Result<CategoryParams> {
    let (distance_joint, dist_mu, dist_sigma) = select_distance_joint(pairs, weights)?;
    let col = |f: fn(&TrainingPair) -> f64| pairs.iter().map(f).collect::<Vec<_>>();
    let (rel_mu, rel_kappa, _) = fit_vonmises_weighted(&col(|p| p.rel_bearing), weights)?;
    let (ori_mu, ori_kappa, _) = fit_vonmises_weighted(&col(|p| p.ori_diff), weights)?;
    let (height_mu, height_sigma) = fit_gaussian_weighted(&col(|p| p.rel_height), weights)?;
    let mut counts = [0.0; 5];
    for (p, w) in pairs.iter().zip(weights) {
        counts[p.activity.index()] += w;
    }
    Ok(CategoryParams {
        distance_joint,
        dist_mu,
        dist_sigma,
        rel_mu,
        rel_kappa,
        ori_mu,
        ori_kappa,
        height_mu,
        height_sigma,
        object_activity: smoothed_probabilities(&counts),
    })
}

/// Object-activity vectors per category and the shared pose-activity
/// table from weighted counts.
pub fn fit_activity_tables<'a>(
    pairs: impl IntoIterator<Item = (&'a str, Activity, f64)>,
    poses: impl IntoIterator<Item = (PoseType, Activity, f64)>,
) -> (BTreeMap<String, [f64; 5]>, PoseActivityTable) {
    let mut per_cat: BTreeMap<String, [f64; 5]> = BTreeMap::new();
    for (cat, a, w) in pairs {
        per_cat.entry(cat.to_string()).or_insert([0.0; 5])[a.index()] += w;
    }
    let mut rows = [[0.0; 5]; 6];
    for (t, a, w) in poses {
        rows[t.index()][a.index()] += w;
    }
    (
        per_cat.into_iter().map(|(k, c)| (k, smoothed_probabilities(&c))).collect(),
        PoseActivityTable(rows.map(|r| smoothed_probabilities(&r))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceIteration {
    pub iteration: usize,
    /// Mean per-object log potential of the sampled pairs under the newly
    /// fitted parameters.
    pub objective: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub iterations: Vec<TraceIteration>,
    pub converged: bool,
    /// Categories that kept default parameters for lack of data.
    pub defaulted: Vec<String>,
}

/// Every object with a known placement in the scene, as fixed context.
pub fn observed_objects(scene: &Scene) -> Vec<ObjectInstance> {
    scene.all_objects().cloned().collect()
}

/// Gathers (object, assigned pose) pairs per category.
pub fn collect_pairs(
    objects: &[ObjectInstance],
    model: &SceneModel,
    snapshots: &[Snapshot],
    out: &mut TrainingPairSet,
) {
    for s in snapshots {
        for (i, o) in objects.iter().enumerate() {
            let pose = &model.poses()[s.object_pose[i]];
            out.entry(o.category.clone())
                .or_default()
                .push(TrainingPair::new(&o.placement(), pose));
        }
    }
}

fn mean_log_potential(
    scenes: &[(Vec<ObjectInstance>, SceneModel, Vec<Snapshot>)],
    params: &ModelParams,
) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (objects, model, snaps) in scenes {
        let cat_params: Vec<CategoryParams> = objects.iter().map(|o| params.params_for(&o.category)).collect();
        for s in snaps {
            for (i, o) in objects.iter().enumerate() {
                let pose = &model.poses()[s.object_pose[i]];
                sum += log_potential(&o.placement(), pose, &cat_params[i], &params.pose_activity)?;
                n += 1;
            }
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Alternates pose sampling on every training scene (objects clamped) with
/// per-category, per-term refits until the mean log potential settles.
pub fn learn_parameters(
    scenes: &[Scene],
    config: &LearnConfig,
    lib: &SkeletonLibrary,
) -> Result<(ModelParams, TrainingTrace)> {
    config.validate()?;
    if scenes.is_empty() {
        return Err(Error::InsufficientData("no training scenes".into()));
    }
    let prepared: Vec<(Vec<ObjectInstance>, Vec<HumanPose>)> = scenes
        .iter()
        .map(|s| Ok((observed_objects(s), generate_pose_candidates(s, lib)?)))
        .collect::<Result<_>>()?;
    let mut params = ModelParams { pose_type_weights: config.pose_type_weights, ..ModelParams::default() };
    for (objects, _) in &prepared {
        for o in objects {
            params.categories.entry(o.category.clone()).or_default();
        }
    }
    let mut trace = TrainingTrace::default();
    let mut previous: Option<f64> = None;
    for iter in 0..config.max_outer_iters {
        let mut sampled = Vec::with_capacity(scenes.len());
        for (k, (objects, poses)) in prepared.iter().enumerate() {
            let model = SceneModel::new(poses.clone(), objects, Vec::new(), &params)?;
            let seed = config
                .dp
                .seed
                .wrapping_add((iter as u64).wrapping_mul(1_000_003))
                .wrapping_add(k as u64);
            let snaps = run_chain(&model, &config.chain_config(seed))?;
            sampled.push((objects.clone(), model, snaps));
        }
        let mut pairs = TrainingPairSet::new();
        let mut pose_counts = Vec::new();
        for (objects, model, snaps) in &sampled {
            collect_pairs(objects, model, snaps, &mut pairs);
            for s in snaps {
                for h in s.component_poses() {
                    let p = &model.poses()[h];
                    pose_counts.push((p.template, p.activity, 1.0));
                }
            }
        }
        let mut next = params.clone();
        let mut defaulted = Vec::new();
        for (cat, ps) in &pairs {
            if ps.len() < config.min_pairs {
                defaulted.push(cat.clone());
                continue;
            }
            match fit_category(ps, &vec![1.0; ps.len()]) {
                Ok(p) => {
                    next.categories.insert(cat.clone(), p);
                }
                Err(Error::InsufficientData(_)) => defaulted.push(cat.clone()),
                Err(e) => return Err(e),
            }
        }
        next.pose_activity = fit_activity_tables(std::iter::empty(), pose_counts).1;
        params = next;
        let objective = mean_log_potential(&sampled, &params)?;
        trace.iterations.push(TraceIteration {
            iteration: iter,
            objective,
            pairs: pairs.values().map(Vec::len).sum(),
        });
        trace.defaulted = defaulted;
        if let Some(prev) = previous {
            if (objective - prev).abs() <= config.tol * prev.abs().max(1e-12) {
                trace.converged = true;
                break;
            }
        }
        previous = Some(objective);
    }
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn gaussian_hand_cases() {
        assert_eq!(fit_gaussian_mle(&[1.0, 1.0, 1.0]).unwrap(), (1.0, SIGMA_FLOOR));
        assert_eq!(fit_gaussian_mle(&[0.0, 2.0]).unwrap(), (1.0, 1.0));
        assert!(matches!(fit_gaussian_mle(&[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn gaussian_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Normal::new(0.5, 0.2).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| n.sample(&mut rng)).collect();
        let (mu, sigma) = fit_gaussian_mle(&xs).unwrap();
        assert!((mu - 0.5).abs() < 0.01 && (sigma - 0.2).abs() < 0.01);
    }

    #[test]
    fn lognormal_hand_cases() {
        let (mu, sigma) = fit_lognormal_mle(&[E, E, E]).unwrap();
        assert!((mu - 1.0).abs() < 1e-12);
        assert_eq!(sigma, SIGMA_FLOOR);
        let (mu, sigma) = fit_lognormal_mle(&[1.0, E * E]).unwrap();
        assert!((mu - 1.0).abs() < 1e-12 && (sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lognormal_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = Normal::<f64>::new(-0.7, 0.3).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| n.sample(&mut rng).exp()).collect();
        let (mu, _) = fit_lognormal_mle(&xs).unwrap();
        assert!(((mu - -0.7) / 0.7).abs() < 0.02);
    }

    #[test]
    fn vonmises_uniform_and_degenerate() {
        let n = 10_000;
        let uniform: Vec<f64> = (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect();
        assert_eq!(fit_vonmises_mle(&uniform).unwrap().1, 0.0);
        let same = vec![0.7; 20];
        let (mu, k) = fit_vonmises_mle(&same).unwrap();
        assert!((mu - 0.7).abs() < 1e-12);
        assert_eq!(k, KAPPA_MAX);
    }

    /// A(κ) by trapezoid quadrature of the von Mises density's first moment.
    fn ratio_by_quadrature(kappa: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=m {
            let t = i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            let e = (kappa * (t.cos() - 1.0)).exp();
            num += w * e * t.cos();
            den += w * e;
        }
        num / den
    }

    #[test]
    fn vonmises_two_angle_case() {
        let (mu, k) = fit_vonmises_mle(&[0.0, FRAC_PI_2]).unwrap();
        assert!((mu - FRAC_PI_4).abs() < 1e-12);
        let rbar = 0.5f64.sqrt();
        assert!((ratio_by_quadrature(k) - rbar).abs() < 1e-6);
        assert!((bessel_ratio(k) - rbar).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn kappa_solves_ratio(rbar in 0.001f64..0.99) {
            let k = solve_kappa(rbar);
            prop_assert!((bessel_ratio(k) - rbar).abs() <= 1e-6);
        }

        #[test]
        fn gaussian_shift_equivariance(xs in prop::collection::vec(-5.0f64..5.0, 2..30), d in -3.0f64..3.0) {
            let (m0, s0) = fit_gaussian_mle(&xs).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|x| x + d).collect();
            let (m1, s1) = fit_gaussian_mle(&shifted).unwrap();
            prop_assert!((m1 - m0 - d).abs() < 1e-9);
            prop_assert!((s1 - s0).abs() < 1e-9);
        }

        #[test]
        fn lognormal_scale_equivariance(xs in prop::collection::vec(0.01f64..5.0, 2..30), k in 0.1f64..10.0) {
            let (m0, _) = fit_lognormal_mle(&xs).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
            let (m1, _) = fit_lognormal_mle(&scaled).unwrap();
            prop_assert!((m1 - m0 - k.ln()).abs() < 1e-9);
        }

        #[test]
        fn smoothed_tables_are_valid(w in prop::array::uniform5(0.0f64..100.0)) {
            let p = smoothed_probabilities(&w);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= TABLE_FLOOR - 1e-15));
        }
    }

    #[test]
    fn activity_tables() {
        let pairs = (0..50).map(|_| ("mouse", Activity::Working, 1.0));
        let (oa, _) = fit_activity_tables(pairs, std::iter::empty());
        let p = oa["mouse"];
        assert!((p[Activity::Working.index()] - (1.0 - 4.0 * TABLE_FLOOR)).abs() < 1e-12);

        let pairs = Activity::ALL.map(|a| ("cup", a, 1.0));
        let (oa, pa) = fit_activity_tables(pairs, std::iter::empty());
        assert!(oa["cup"].iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert!(pa.0.iter().flatten().all(|&x| (x - 0.2).abs() < 1e-15));
    }

    /// Independent version: pin the smallest shares to the floor one by one
    /// until the rest fit.
    fn water_fill_oracle(w: &[f64; 5]) -> [f64; 5] {
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|a, b| w[*a].partial_cmp(&w[*b]).unwrap());
        for pinned in 0..5 {
            let rest: f64 = order[pinned..].iter().map(|&i| w[i]).sum();
            let mass = 1.0 - TABLE_FLOOR * pinned as f64;
            if w[order[pinned]] / rest * mass >= TABLE_FLOOR {
                let mut p = [TABLE_FLOOR; 5];
                for &i in &order[pinned..] {
                    p[i] = w[i] / rest * mass;
                }
                return p;
            }
        }
        unreachable!()
    }

    #[test]
    fn random_counts_match_recount() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let counts: [f64; 5] = std::array::from_fn(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0..2000) as f64
                }
            });
            if counts.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let got = smoothed_probabilities(&counts);
            let want = water_fill_oracle(&counts);
            for i in 0..5 {
                assert!((got[i] - want[i]).abs() < 1e-12);
            }
        }
    }

    fn pair_with(distances: [f64; 4]) -> TrainingPair {
        TrainingPair {
            distances,
            rel_bearing: 0.0,
            ori_diff: 0.0,
            rel_height: 0.0,
            template: PoseType::Standing,
            activity: Activity::Working,
        }
    }

    #[test]
    fn concentrated_joint_wins() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs: Vec<_> = (0..100)
            .map(|_| {
                let mut d = [0.0; 4];
                d.iter_mut().take(3).for_each(|v| *v = rng.random_range(0.2..3.0));
                d[3] = 0.3 + rng.random_range(-0.01..0.01);
                pair_with(d)
            })
            .collect();
        let (j, ..) = select_distance_joint(&pairs, &vec![1.0; 100]).unwrap();
        assert_eq!(j, Joint::RightHand);
    }

    #[test]
    fn identical_distances_tie_to_torso() {
        let pairs: Vec<_> = (0..20).map(|i| pair_with([0.5 + 0.01 * i as f64; 4])).collect();
        assert_eq!(select_distance_joint(&pairs, &[1.0; 20]).unwrap().0, Joint::Torso);
    }

    #[test]
    fn zero_scenes_is_an_error() {
        let r = learn_parameters(&[], &LearnConfig::default(), &SkeletonLibrary::bundled());
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn refitting_one_category_leaves_others() {
        let a: Vec<_> = (0..30).map(|i| pair_with([0.3 + 0.01 * i as f64; 4])).collect();
        let b: Vec<_> = (0..30).map(|i| pair_with([1.0 + 0.02 * i as f64; 4])).collect();
        let pb = fit_category(&b, &vec![1.0; 30]).unwrap();
        let _ = fit_category(&a, &vec![1.0; 30]).unwrap();
        assert_eq!(fit_category(&b, &vec![1.0; 30]).unwrap(), pb);
    }
}
