//! Placement relative to the most predictable co-occurring object.

use serde::{Deserialize, Serialize};

use crate::densities::{gaussian_logpdf, vonmises_logpdf};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec3};
use crate::learning::solve_kappa;
use crate::sampling::softmax;
use crate::scene::{ObjectInstance, PlacementCandidate, Scene};

use super::{rank_by_score, CandidateDistribution, Ranking};

/// Added to every variance so single-pair statistics stay proper.
pub const OFFSET_VARIANCE_FLOOR: f64 = 0.02 * 0.02;

/// Offset statistics of `target` objects in the frame of the nearest
/// `reference` object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub target: String,
    pub reference: String,
    /// Mean (dx, dy) in the reference's yaw frame and mean dz.
    pub mean: [f64; 3],
    /// Population covariance of (dx, dy).
    pub cov: [[f64; 2]; 2],
    pub dz_var: f64,
    pub ori_mu: f64,
    pub ori_kappa: f64,
    pub count: usize,
    /// trace(cov) + dz_var.
    pub dispersion: f64,
}

/// Offset of `obj` in the frame of `reference`: (dx, dy, dz, relative yaw).
fn relative_offset(obj_loc: Vec3, obj_yaw: f64, reference: &ObjectInstance) -> (Vec3, f64) {
    let d = (obj_loc - reference.location()).rotate_z(-reference.bbox.yaw);
    (d, wrap_angle(obj_yaw - reference.bbox.yaw))
}

fn nearest<'a>(objs: impl Iterator<Item = &'a ObjectInstance>, p: Vec3) -> Option<&'a ObjectInstance> {
    objs.min_by(|a, b| {
        a.location()
            .horizontal_distance(p)
            .partial_cmp(&b.location().horizontal_distance(p))
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

pub fn fit_pair_stats(scenes: &[Scene]) -> Vec<PairStats> {
    use std::collections::BTreeMap;
    let mut samples: BTreeMap<(String, String), Vec<(Vec3, f64)>> = BTreeMap::new();
    for s in scenes {
        let objs: Vec<&ObjectInstance> = s.all_objects().collect();
        let cats: std::collections::BTreeSet<&str> = objs.iter().map(|o| o.category.as_str()).collect();
        for t in &objs {
            for &r in &cats {
                if r == t.category {
                    continue;
                }
                let refs = objs.iter().copied().filter(|o| o.category == r);
                if let Some(ro) = nearest(refs, t.location()) {
                    samples
                        .entry((t.category.clone(), r.to_string()))
                        .or_default()
                        .push(relative_offset(t.location(), t.bbox.yaw, ro));
                }
            }
        }
    }
    samples
        .into_iter()
        .map(|((target, reference), v)| {
            let n = v.len() as f64;
            let mean = v.iter().fold([0.0; 3], |m, (d, _)| [m[0] + d.x / n, m[1] + d.y / n, m[2] + d.z / n]);
            let mut cov = [[0.0; 2]; 2];
            let mut dz_var = 0.0;
            for (d, _) in &v {
                let e = [d.x - mean[0], d.y - mean[1]];
                for i in 0..2 {
                    for j in 0..2 {
                        cov[i][j] += e[i] * e[j] / n;
                    }
                }
                dz_var += (d.z - mean[2]).powi(2) / n;
            }
            let (s, c) = v.iter().fold((0.0, 0.0), |(s, c), (_, a)| (s + a.sin(), c + a.cos()));
            PairStats {
                target,
                reference,
                mean,
                cov,
                dz_var,
                ori_mu: s.atan2(c),
                ori_kappa: solve_kappa((s.hypot(c) / n).min(1.0)),
                count: v.len(),
                dispersion: cov[0][0] + cov[1][1] + dz_var,
            }
        })
        .collect()
}

impl PairStats {
    /// Log density of a placement at `offset` / relative yaw `rel_yaw`.
    pub fn log_density(&self, offset: Vec3, rel_yaw: f64) -> f64 {
        let a = self.cov[0][0] + OFFSET_VARIANCE_FLOOR;
        let b = self.cov[0][1];
        let d = self.cov[1][1] + OFFSET_VARIANCE_FLOOR;
        let det = a * d - b * b;
        let (ex, ey) = (offset.x - self.mean[0], offset.y - self.mean[1]);
        let maha = (d * ex * ex - 2.0 * b * ex * ey + a * ey * ey) / det;
        let planar = -0.5 * maha - 0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln();
        let vertical = gaussian_logpdf(offset.z, self.mean[2], (self.dz_var + OFFSET_VARIANCE_FLOOR).sqrt())
            .expect("positive variance");
        let ori = vonmises_logpdf(rel_yaw, self.ori_mu, self.ori_kappa).expect("non-negative kappa");
        planar + vertical + ori
    }
}

/// The trained reference with the smallest dispersion that is present in
/// the scene. Ties go to the reference name.
pub fn choose_reference<'a>(stats: &'a [PairStats], scene: &Scene, category: &str) -> Result<&'a PairStats> {
    stats
        .iter()
        .filter(|p| p.target == category && scene.objects.iter().any(|o| o.category == p.reference))
        .min_by(|a, b| {
            a.dispersion
                .partial_cmp(&b.dispersion)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.reference.cmp(&b.reference))
        })
        .ok_or_else(|| Error::NoReference(category.to_string()))
}

/// ln Ψ_obj of every candidate: best score over the reference instances.
pub fn object_context_scores(
    stats: &[PairStats],
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<Vec<f64>> {
    let ps = choose_reference(stats, scene, category)?;
    let refs: Vec<&ObjectInstance> = scene.objects.iter().filter(|o| o.category == ps.reference).collect();
    Ok(candidates
        .iter()
        .map(|c| {
            refs.iter()
                .map(|r| {
                    let (d, yaw) = relative_offset(c.location, c.orientation(), r);
                    ps.log_density(d, yaw)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Ψ_obj normalized over the candidate list.
pub fn object_context_distribution(
    stats: &[PairStats],
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<CandidateDistribution> {
    let scores = object_context_scores(stats, scene, category, candidates)?;
    let probs = softmax(&scores).ok_or_else(|| Error::EmptyCandidateSet(format!("object context for '{category}'")))?;
    Ok(CandidateDistribution { probs })
}

pub fn object_context_ranking(
    stats: &[PairStats],
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<Ranking> {
    Ok(rank_by_score(&object_context_scores(stats, scene, category, candidates)?))
}

pub fn baseline_object_context(
    stats: &[PairStats],
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<PlacementCandidate> {
    let r = object_context_ranking(stats, scene, category, candidates)?;
    r.first()
        .map(|&i| candidates[i])
        .ok_or_else(|| Error::EmptyCandidateSet("object-context baseline".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::OrientedBox;
    use crate::scene::{generate_placement_candidates, Room};

    fn desk_scene(id: &str, monitor_at: Vec3, yaw: f64) -> Scene {
        let mut s = Scene::new(id, Room { width: 4.0, depth: 4.0, height: 2.5 })
            .with_furniture("desk", OrientedBox::new(Vec3::new(2.0, 2.0, 0.375), Vec3::new(1.6, 1.6, 0.75), 0.0).unwrap());
        s.objects.push(s.instance_at("monitor", monitor_at, yaw).unwrap());
        s
    }

    fn training_scenes() -> Vec<Scene> {
        // Keyboard always 0.3 m in front of the monitor (along its yaw).
        [(1.8, 2.0, 0.0), (2.2, 1.9, std::f64::consts::FRAC_PI_2), (2.0, 2.3, std::f64::consts::PI)]
            .iter()
            .enumerate()
            .map(|(k, &(x, y, yaw))| {
                let m = Vec3::new(x, y, 0.75);
                let mut s = desk_scene(&format!("t{k}"), m, yaw);
                let kb = m + Vec3::new(0.3, 0.0, 0.0).rotate_z(yaw);
                s.labeled_placements.push(s.instance_at("keyboard", kb, yaw).unwrap());
                s
            })
            .collect()
    }

    #[test]
    fn keyboard_lands_in_front_of_monitor() {
        let stats = fit_pair_stats(&training_scenes());
        let ps = stats.iter().find(|p| p.target == "keyboard").unwrap();
        assert!((ps.mean[0] - 0.3).abs() < 1e-9 && ps.mean[1].abs() < 1e-9);
        let test = desk_scene("x", Vec3::new(1.9, 2.1, 0.75), 0.0);
        let cands = generate_placement_candidates(&test, "keyboard").unwrap();
        let best = baseline_object_context(&stats, &test, "keyboard", &cands).unwrap();
        // Density scan: the winner is the highest-density candidate and
        // sits at the candidate nearest the trained offset.
        let target = Vec3::new(2.2, 2.1, 0.75);
        let nearest_d = cands
            .iter()
            .filter(|c| c.orientation_bin == 0)
            .map(|c| c.location.distance(target))
            .fold(f64::INFINITY, f64::min);
        assert!((best.location.distance(target) - nearest_d).abs() < 1e-9);
        assert_eq!(best.orientation_bin, 0);
        let scores = object_context_scores(&stats, &test, "keyboard", &cands).unwrap();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let best_idx = cands.iter().position(|c| *c == best).unwrap();
        assert_eq!(scores[best_idx], max);
    }

    #[test]
    fn missing_reference() {
        let stats = fit_pair_stats(&training_scenes());
        let empty = Scene::new("e", Room { width: 4.0, depth: 4.0, height: 2.5 });
        let cands = generate_placement_candidates(&empty, "keyboard").unwrap();
        assert!(matches!(
            baseline_object_context(&stats, &empty, "keyboard", &cands),
            Err(Error::NoReference(_))
        ));
    }

    #[test]
    fn lowest_dispersion_reference_wins() {
        let mk = |r: &str, disp: f64| PairStats {
            target: "mouse".into(),
            reference: r.into(),
            mean: [0.0; 3],
            cov: [[disp / 2.0, 0.0], [0.0, disp / 2.0]],
            dz_var: 0.0,
            ori_mu: 0.0,
            ori_kappa: 0.0,
            count: 5,
            dispersion: disp,
        };
        let stats = vec![mk("keyboard", 1.0), mk("monitor", 0.01)];
        let mut s = Scene::new("s", Room { width: 3.0, depth: 3.0, height: 2.5 });
        s.objects.push(s.instance_at("keyboard", Vec3::new(1.0, 1.0, 0.0), 0.0).unwrap());
        s.objects.push(s.instance_at("monitor", Vec3::new(2.0, 2.0, 0.0), 0.0).unwrap());
        assert_eq!(choose_reference(&stats, &s, "mouse").unwrap().reference, "monitor");
    }
}
