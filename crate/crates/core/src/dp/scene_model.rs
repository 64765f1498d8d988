use std::ops::Range;

use crate::densities::PreparedParams;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::scene::{exclude_object_collisions, generate_placement_candidates, ObjectInstance, Placement, PlacementCandidate, Scene};
use crate::skeleton::{generate_pose_candidates, HumanPose, SkeletonLibrary};

use super::{run_chain, ArrangementModel, DpConfig, Snapshot};

enum Slot {
    Fixed {
        /// ln Ψ against every pose, computed once.
        scores: Vec<f64>,
    },
    Target {
        placements: Vec<Placement>,
    },
}

struct ObjectSlot {
    category: String,
    prepared: PreparedParams,
    slot: Slot,
}

/// A scene prepared for sampling: pose candidates with their base measure,
/// fixed objects scored once against every pose, and target objects with
/// their placement candidates.
///
/// Objects are indexed fixed-first, then targets in the order given.
pub struct SceneModel {
    poses: Vec<HumanPose>,
    log_prior: Vec<f64>,
    /// Runs of consecutive poses that differ only in activity.
    groups: Vec<Range<usize>>,
    /// ln Ψ_PA per pose.
    pose_activity_ln: Vec<f64>,
    objects: Vec<ObjectSlot>,
    target_candidates: Vec<Vec<PlacementCandidate>>,
    num_fixed: usize,
}

impl SceneModel {
    /// Targets of the given categories against the scene's existing objects.
    pub fn for_scene(scene: &Scene, targets: &[String], params: &ModelParams, lib: &SkeletonLibrary) -> Result<Self> {
        let poses = generate_pose_candidates(scene, lib)?;
        let candidates = targets
            .iter()
            .map(|cat| target_candidates(scene, cat))
            .collect::<Result<Vec<_>>>()?;
        Self::new(poses, &scene.objects, targets.iter().cloned().zip(candidates).collect(), params)
    }

    pub fn new(
        poses: Vec<HumanPose>,
        fixed: &[ObjectInstance],
        targets: Vec<(String, Vec<PlacementCandidate>)>,
        params: &ModelParams,
    ) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::EmptyCandidateSet("no pose candidates".into()));
        }
        params.validate()?;
        let wsum: f64 = poses.iter().map(|p| params.pose_type_weight(p.template)).sum();
        if wsum <= 0.0 {
            return Err(Error::EmptyCandidateSet("pose-type weights exclude every pose".into()));
        }
        let log_prior = poses
            .iter()
            .map(|p| (params.pose_type_weight(p.template) / wsum).ln())
            .collect();
        let pose_activity_ln = poses
            .iter()
            .map(|p| params.pose_activity.get(p.template, p.activity).ln())
            .collect();
        let mut groups = Vec::new();
        let mut start = 0;
        for h in 1..=poses.len() {
            if h == poses.len() || !same_geometry(&poses[start], &poses[h]) {
                groups.push(start..h);
                start = h;
            }
        }
        let mut model = SceneModel {
            poses,
            log_prior,
            groups,
            pose_activity_ln,
            objects: Vec::new(),
            target_candidates: Vec::new(),
            num_fixed: fixed.len(),
        };
        for o in fixed {
            let prepared = PreparedParams::new(&params.params_for(&o.category))?;
            let mut scores = vec![0.0; model.poses.len()];
            model.score_all_poses(&prepared, &o.placement(), &mut scores);
            model.objects.push(ObjectSlot {
                category: o.category.clone(),
                prepared,
                slot: Slot::Fixed { scores },
            });
        }
        for (category, cands) in targets {
            if cands.is_empty() {
                return Err(Error::EmptyCandidateSet(format!("no placement for '{category}'")));
            }
            let prepared = PreparedParams::new(&params.params_for(&category))?;
            model.objects.push(ObjectSlot {
                category,
                prepared,
                slot: Slot::Target {
                    placements: cands.iter().map(PlacementCandidate::placement).collect(),
                },
            });
            model.target_candidates.push(cands);
        }
        Ok(model)
    }

    /// Adds ln Ψ against every pose to `acc`, evaluating the geometric
    /// part once per activity run.
    fn score_all_poses(&self, prepared: &PreparedParams, placement: &Placement, acc: &mut [f64]) {
        let oa = &prepared.params.object_activity;
        for g in &self.groups {
            let geo = prepared.geometric(placement, &self.poses[g.start]);
            for h in g.clone() {
                acc[h] += geo + oa[self.poses[h].activity.index()].ln() + self.pose_activity_ln[h];
            }
        }
    }

    pub fn poses(&self) -> &[HumanPose] {
        &self.poses
    }

    pub fn num_fixed(&self) -> usize {
        self.num_fixed
    }

    pub fn num_targets(&self) -> usize {
        self.target_candidates.len()
    }

    /// Object index of the `t`-th target.
    pub fn target_object(&self, t: usize) -> usize {
        self.num_fixed + t
    }

    pub fn target_candidates(&self, t: usize) -> &[PlacementCandidate] {
        &self.target_candidates[t]
    }

    pub fn category(&self, obj: usize) -> &str {
        &self.objects[obj].category
    }
}

fn same_geometry(a: &HumanPose, b: &HumanPose) -> bool {
    a.template == b.template && a.root == b.root && a.facing == b.facing
}

/// Placement candidates for `category` that also avoid the scene's objects.
pub(crate) fn target_candidates(scene: &Scene, category: &str) -> Result<Vec<PlacementCandidate>> {
    let cands = generate_placement_candidates(scene, category)?;
    let size = scene.category_size(category)?;
    let free = exclude_object_collisions(&cands, size, &scene.objects);
    if free.is_empty() {
        return Err(Error::EmptyCandidateSet(format!(
            "every placement of '{category}' collides with existing objects"
        )));
    }
    Ok(free)
}

impl ArrangementModel for SceneModel {
    fn num_objects(&self) -> usize {
        self.objects.len()
    }

    fn num_poses(&self) -> usize {
        self.poses.len()
    }

    fn pose_log_prior(&self, pose: usize) -> f64 {
        self.log_prior[pose]
    }

    fn num_placements(&self, obj: usize) -> Option<usize> {
        match &self.objects[obj].slot {
            Slot::Fixed { .. } => None,
            Slot::Target { placements } => Some(placements.len()),
        }
    }

    fn log_potential(&self, obj: usize, placement: usize, pose: usize) -> f64 {
        let o = &self.objects[obj];
        match &o.slot {
            Slot::Fixed { scores } => scores[pose],
            Slot::Target { placements } => {
                let h = &self.poses[pose];
                o.prepared.geometric(&placements[placement], h)
                    + o.prepared.params.object_activity[h.activity.index()].ln()
                    + self.pose_activity_ln[pose]
            }
        }
    }

    fn add_pose_scores(&self, obj: usize, placement: usize, acc: &mut [f64]) {
        let o = &self.objects[obj];
        match &o.slot {
            Slot::Fixed { scores } => acc.iter_mut().zip(scores).for_each(|(a, s)| *a += s),
            Slot::Target { placements } => self.score_all_poses(&o.prepared, &placements[placement], acc),
        }
    }

    fn placement_scores(&self, obj: usize, pose: usize, out: &mut Vec<f64>) {
        out.clear();
        let o = &self.objects[obj];
        if let Slot::Target { placements } = &o.slot {
            let h = &self.poses[pose];
            let act = o.prepared.params.object_activity[h.activity.index()].ln() + self.pose_activity_ln[pose];
            out.extend(placements.iter().map(|p| o.prepared.geometric(p, h) + act));
        }
    }
}

/// Builds the scene model and runs one chain. Returns the model alongside
/// the snapshots so callers can map indices back to poses and candidates.
pub fn run_scene_chain(
    scene: &Scene,
    targets: &[String],
    params: &ModelParams,
    lib: &SkeletonLibrary,
    config: &DpConfig,
) -> Result<(SceneModel, Vec<Snapshot>)> {
    let model = SceneModel::for_scene(scene, targets, params, lib)?;
    let snaps = run_chain(&model, config)?;
    Ok((model, snaps))
}
