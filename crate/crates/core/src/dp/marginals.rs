use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::OrientedBox;
use crate::scene::{collides_with_any, ObjectInstance, PlacementCandidate, Scene};
use crate::skeleton::HumanPose;

use super::{SceneModel, Snapshot};

/// Horizontal edge of an Ω-cell.
pub const OMEGA_HORIZONTAL: f64 = 0.25;
/// Vertical edge of an Ω-cell.
pub const OMEGA_VERTICAL: f64 = 0.1;

/// The neighborhood a placement sample is counted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OmegaCell {
    pub ix: i64,
    pub iy: i64,
    pub iz: i64,
    pub orientation_bin: u8,
}

impl OmegaCell {
    pub fn of(c: &PlacementCandidate) -> Self {
        let bin = |v: f64, edge: f64| (v / edge + 1e-9).floor() as i64;
        OmegaCell {
            ix: bin(c.location.x, OMEGA_HORIZONTAL),
            iy: bin(c.location.y, OMEGA_HORIZONTAL),
            iz: bin(c.location.z, OMEGA_VERTICAL),
            orientation_bin: c.orientation_bin,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub count: usize,
    pub frequency: f64,
    /// Visited candidates in the cell, most visited first, then by
    /// candidate order.
    pub members: Vec<usize>,
}

/// Sample-count estimate of one target's placement distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDistribution {
    pub category: String,
    pub candidates: Vec<PlacementCandidate>,
    /// Kept samples that landed on each candidate.
    pub visits: Vec<usize>,
    pub cells: BTreeMap<OmegaCell, CellStats>,
    pub samples: usize,
}

impl ObjectDistribution {
    pub fn from_visits(category: String, candidates: Vec<PlacementCandidate>, visits: Vec<usize>) -> Self {
        let samples: usize = visits.iter().sum();
        let mut cells: BTreeMap<OmegaCell, CellStats> = BTreeMap::new();
        for (i, &v) in visits.iter().enumerate().filter(|(_, &v)| v > 0) {
            let cell = cells.entry(OmegaCell::of(&candidates[i])).or_insert(CellStats {
                count: 0,
                frequency: 0.0,
                members: Vec::new(),
            });
            cell.count += v;
            cell.members.push(i);
        }
        for c in cells.values_mut() {
            c.frequency = c.count as f64 / samples as f64;
            c.members.sort_by(|a, b| visits[*b].cmp(&visits[*a]).then(a.cmp(b)));
        }
        ObjectDistribution {
            category,
            candidates,
            visits,
            cells,
            samples,
        }
    }

    pub fn max_frequency(&self) -> f64 {
        self.cells.values().map(|c| c.frequency).fold(0.0, f64::max)
    }

    /// Cells by decreasing frequency; ties go to the cell holding the
    /// earliest candidate.
    pub fn ranked_cells(&self) -> Vec<(&OmegaCell, &CellStats)> {
        let mut v: Vec<_> = self.cells.iter().collect();
        v.sort_by(|a, b| {
            b.1.count
                .cmp(&a.1.count)
                .then_with(|| first_member(a.1).cmp(&first_member(b.1)))
        });
        v
    }

    /// Visit frequencies per candidate.
    pub fn candidate_distribution(&self) -> CandidateDistribution {
        let s = self.samples.max(1) as f64;
        CandidateDistribution {
            probs: self.visits.iter().map(|&v| v as f64 / s).collect(),
        }
    }
}

fn first_member(c: &CellStats) -> usize {
    c.members.iter().copied().min().unwrap_or(usize::MAX)
}

/// A probability vector over a shared candidate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDistribution {
    pub probs: Vec<f64>,
}

impl CandidateDistribution {
    /// Index of the most probable candidate; ties go to the earliest.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if best.is_none_or(|b| p > self.probs[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Candidate indices by decreasing probability, ties by index.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probs.len()).collect();
        idx.sort_by(|&a, &b| {
            self.probs[b]
                .partial_cmp(&self.probs[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Per-target distributions from one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementDistribution {
    pub objects: Vec<ObjectDistribution>,
    pub samples: usize,
}

/// Counts, for every target, how often each Ω-cell was visited.
pub fn estimate_marginals(snapshots: &[Snapshot], model: &SceneModel) -> PlacementDistribution {
    let objects = (0..model.num_targets())
        .map(|t| {
            let obj = model.target_object(t);
            let cands = model.target_candidates(t);
            let mut visits = vec![0usize; cands.len()];
            for s in snapshots {
                visits[s.placements[obj]] += 1;
            }
            ObjectDistribution::from_visits(model.category(obj).to_string(), cands.to_vec(), visits)
        })
        .collect();
    PlacementDistribution {
        objects,
        samples: snapshots.len(),
    }
}

/// Turns distributions into a collision-free arrangement.
///
/// Objects are settled in decreasing order of their peak cell frequency.
/// Each takes the best cell that still has a member clear of furniture,
/// existing objects and earlier predictions. The result is in target order.
pub fn predict_arrangement(dist: &[ObjectDistribution], scene: &Scene) -> Result<Vec<ObjectInstance>> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| {
        dist[b]
            .max_frequency()
            .partial_cmp(&dist[a].max_frequency())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut obstacles: Vec<OrientedBox> = scene.furniture.iter().map(|f| f.bbox).collect();
    obstacles.extend(scene.objects.iter().map(|o| o.bbox));
    let mut out: Vec<Option<ObjectInstance>> = vec![None; dist.len()];
    for i in order {
        let d = &dist[i];
        if d.samples == 0 {
            return Err(Error::InsufficientData(format!("no samples for '{}'", d.category)));
        }
        let size = scene.category_size(&d.category)?;
        let chosen = d
            .ranked_cells()
            .into_iter()
            .flat_map(|(_, c)| c.members.iter().copied())
            .map(|k| d.candidates[k].instance(&d.category, size))
            .find(|inst| !collides_with_any(&inst.bbox, obstacles.iter()))
            .ok_or_else(|| Error::NoFeasiblePlacement(d.category.clone()))?;
        obstacles.push(chosen.bbox);
        out[i] = Some(chosen);
    }
    Ok(out.into_iter().map(|o| o.expect("every object settled")).collect())
}

/// Sample counts on a horizontal grid over the room.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heatmap {
    pub nx: usize,
    pub ny: usize,
    /// Row-major by y: `counts[iy * nx + ix]`.
    pub counts: Vec<u64>,
}

impl Heatmap {
    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `x_index,y_index,count` for every cell, x-major.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x_index,y_index,count\n");
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                s.push_str(&format!("{ix},{iy},{}\n", self.get(ix, iy)));
            }
        }
        s
    }

    /// ASCII greymap (P2), maxval 255, the largest count mapped to 255.
    /// Column is the x index, row the y index.
    pub fn to_pgm(&self) -> String {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut s = format!("P2\n{} {}\n255\n", self.nx, self.ny);
        for iy in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|ix| {
                    let c = self.get(ix, iy);
                    if max == 0 {
                        0
                    } else {
                        (c as f64 * 255.0 / max as f64).round() as u64
                    }
                    .to_string()
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Histogram of one target's samples over the room at `resolution`,
/// marginalizing height and orientation.
pub fn heatmap(dist: &ObjectDistribution, scene: &Scene, resolution: f64) -> Result<Heatmap> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Config(format!("resolution must be positive, got {resolution}")));
    }
    let cells = |extent: f64| ((extent / resolution) - 1e-9).ceil().max(1.0) as usize;
    let (nx, ny) = (cells(scene.room.width), cells(scene.room.depth));
    let mut counts = vec![0u64; nx * ny];
    let index = |v: f64, n: usize| ((v / resolution + 1e-9).floor().max(0.0) as usize).min(n - 1);
    for (c, &v) in dist.candidates.iter().zip(&dist.visits) {
        if v > 0 {
            let (ix, iy) = (index(c.location.x, nx), index(c.location.y, ny));
            counts[iy * nx + ix] += v as u64;
        }
    }
    Ok(Heatmap { nx, ny, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFrequency {
    pub pose: HumanPose,
    /// Mean number of components per kept sweep that sat on this pose.
    pub frequency: f64,
}

/// Sampled component poses with their frequencies, most frequent first.
pub fn pose_frequencies(snapshots: &[Snapshot], model: &SceneModel) -> Vec<PoseFrequency> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in snapshots {
        for h in s.component_poses() {
            *counts.entry(h).or_default() += 1;
        }
    }
    let n = snapshots.len().max(1) as f64;
    let mut v: Vec<(usize, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter()
        .map(|(h, c)| PoseFrequency {
            pose: model.poses()[h].clone(),
            frequency: c as f64 / n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::scene::{Room, SupportId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cand(x: f64, y: f64, z: f64, bin: u8) -> PlacementCandidate {
        PlacementCandidate {
            location: Vec3::new(x, y, z),
            orientation_bin: bin,
            support: SupportId::Floor,
        }
    }

    fn scene() -> Scene {
        Scene::new("h", Room { width: 10.0, depth: 10.0, height: 3.0 })
    }

    #[test]
    fn identical_samples_give_one_cell() {
        let d = ObjectDistribution::from_visits("mug".into(), vec![cand(1.0, 1.0, 0.0, 0), cand(3.0, 1.0, 0.0, 0)], vec![40, 0]);
        assert_eq!(d.cells.len(), 1);
        assert_eq!(d.cells.values().next().unwrap().frequency, 1.0);
    }

    #[test]
    fn alternating_samples_split_evenly() {
        let d = ObjectDistribution::from_visits("mug".into(), vec![cand(1.0, 1.0, 0.0, 0), cand(1.0, 1.0, 0.0, 1)], vec![20, 20]);
        let f: Vec<f64> = d.cells.values().map(|c| c.frequency).collect();
        assert_eq!(f, vec![0.5, 0.5]);
    }

    #[test]
    fn frequencies_match_independent_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cands: Vec<_> = (0..300)
            .map(|_| cand(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), rng.random_range(0.0..1.0), rng.random_range(0..8)))
            .collect();
        let samples: Vec<usize> = (0..1000).map(|_| rng.random_range(0..300)).collect();
        let mut visits = vec![0; 300];
        samples.iter().for_each(|&s| visits[s] += 1);
        let d = ObjectDistribution::from_visits("mug".into(), cands.clone(), visits);
        // Recount straight from the samples with an independent key.
        let mut recount: std::collections::HashMap<(i64, i64, i64, u8), usize> = Default::default();
        for &s in &samples {
            let c = &cands[s];
            let key = (
                (c.location.x * 4.0 + 1e-9).floor() as i64,
                (c.location.y * 4.0 + 1e-9).floor() as i64,
                (c.location.z * 10.0 + 1e-9).floor() as i64,
                c.orientation_bin,
            );
            *recount.entry(key).or_default() += 1;
        }
        assert_eq!(recount.len(), d.cells.len());
        for (cell, stats) in &d.cells {
            let n = recount[&(cell.ix, cell.iy, cell.iz, cell.orientation_bin)];
            assert_eq!(stats.frequency, n as f64 / 1000.0);
        }
        let total: f64 = d.cells.values().map(|c| c.frequency).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_cell_prediction() {
        let s = scene();
        let d = ObjectDistribution::from_visits("mug".into(), vec![cand(2.0, 2.0, 0.0, 0), cand(5.0, 5.0, 0.0, 0)], vec![0, 3]);
        let out = predict_arrangement(&[d], &s).unwrap();
        assert_eq!(out[0].location(), Vec3::new(5.0, 5.0, 0.0));
    }

    #[test]
    fn overlapping_top_cells_force_demotion() {
        let s = scene();
        let cands = vec![cand(5.0, 5.0, 0.0, 0), cand(8.0, 8.0, 0.0, 0)];
        let a = ObjectDistribution::from_visits("tv".into(), cands.clone(), vec![10, 0]);
        let b = ObjectDistribution::from_visits("tv".into(), cands, vec![6, 4]);
        let out = predict_arrangement(&[b, a], &s).unwrap();
        assert_eq!(out[1].location(), Vec3::new(5.0, 5.0, 0.0));
        assert_eq!(out[0].location(), Vec3::new(8.0, 8.0, 0.0));
    }

    #[test]
    fn infeasible_prediction_errors() {
        let s = scene();
        let cands = vec![cand(5.0, 5.0, 0.0, 0)];
        let a = ObjectDistribution::from_visits("tv".into(), cands.clone(), vec![1]);
        let b = ObjectDistribution::from_visits("tv".into(), cands, vec![1]);
        assert!(matches!(predict_arrangement(&[a, b], &s), Err(Error::NoFeasiblePlacement(_))));
    }

    #[test]
    fn randomized_predictions_are_feasible_and_greedy_optimal() {
        let s = scene();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let cands: Vec<_> = (0..40)
                .map(|_| cand(rng.random_range(4.0..6.0), rng.random_range(4.0..6.0), 0.0, rng.random_range(0..8)))
                .collect();
            let dists: Vec<_> = ["tv", "monitor", "cushion"]
                .iter()
                .map(|c| ObjectDistribution::from_visits(c.to_string(), cands.clone(), (0..40).map(|_| rng.random_range(0..5)).collect()))
                .collect();
            let Ok(out) = predict_arrangement(&dists, &s) else { continue };
            for i in 0..3 {
                for j in 0..i {
                    assert!(!crate::geometry::check_collision(&out[i].bbox, &out[j].bbox));
                }
            }
            // Replay the settle order and check each choice is the best
            // feasible cell given the earlier ones.
            let mut order: Vec<usize> = (0..3).collect();
            order.sort_by(|&a, &b| dists[b].max_frequency().partial_cmp(&dists[a].max_frequency()).unwrap().then(a.cmp(&b)));
            let mut placed: Vec<OrientedBox> = Vec::new();
            for &i in &order {
                let d = &dists[i];
                let size = s.category_size(&d.category).unwrap();
                let chosen_cell = OmegaCell::of(&cand(out[i].location().x, out[i].location().y, 0.0, (out[i].bbox.yaw / std::f64::consts::FRAC_PI_4).round() as u8 % 8));
                let chosen_count = d.cells[&chosen_cell].count;
                for (cell, stats) in &d.cells {
                    let feasible = stats
                        .members
                        .iter()
                        .any(|&k| !collides_with_any(&d.candidates[k].bbox(size), placed.iter()));
                    if feasible {
                        assert!(stats.count <= chosen_count, "{cell:?} beats chosen cell");
                    }
                }
                placed.push(out[i].bbox);
            }
        }
    }

    #[test]
    fn centered_samples_hit_pixel_500() {
        let d = ObjectDistribution::from_visits("mug".into(), vec![cand(5.0, 5.0, 0.8, 0)], vec![150]);
        let h = heatmap(&d, &scene(), 0.01).unwrap();
        assert_eq!((h.nx, h.ny), (1000, 1000));
        assert_eq!(h.get(500, 500), 150);
        assert_eq!(h.total(), 150);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn uniform_samples_within_multinomial_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 20_000;
        let cands: Vec<_> = (0..n).map(|_| cand(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 0.0, 0)).collect();
        let d = ObjectDistribution::from_visits("mug".into(), cands, vec![1; n]);
        let h = heatmap(&d, &scene(), 1.0).unwrap();
        let p = 1.0 / 100.0;
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert_eq!(h.total(), n as u64);
        assert!(h.counts.iter().all(|&c| (c as f64 - mean).abs() <= 4.0 * sd));
    }

    #[test]
    fn empty_distribution_gives_zero_grid() {
        let d = ObjectDistribution::from_visits("mug".into(), vec![cand(5.0, 5.0, 0.0, 0)], vec![0]);
        let h = heatmap(&d, &scene(), 0.5).unwrap();
        assert_eq!(h.total(), 0);
        assert!(h.to_pgm().lines().skip(3).all(|l| l.split(' ').all(|v| v == "0")));
    }

    #[test]
    fn export_formats() {
        let d = ObjectDistribution::from_visits("mug".into(), vec![cand(0.5, 1.5, 0.0, 0), cand(1.5, 0.5, 0.0, 0)], vec![2, 1]);
        let h = heatmap(&d, &Scene::new("s", Room { width: 2.0, depth: 2.0, height: 2.0 }), 1.0).unwrap();
        assert_eq!(h.to_csv(), "x_index,y_index,count\n0,0,0\n0,1,2\n1,0,1\n1,1,0\n");
        assert_eq!(h.to_pgm(), "P2\n2 2\n255\n0 128\n255 0\n");
    }
}
