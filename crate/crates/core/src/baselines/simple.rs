//! Context-free baselines: open area, mean height and normalized room
//! location.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::wrap_positive;
use crate::scene::{PlacementCandidate, Scene, ORIENTATION_BINS};

use super::{rank_by_key, Ranking};

/// Orientation bin closest to a yaw.
pub fn yaw_bin(yaw: f64) -> u8 {
    let step = std::f64::consts::TAU / f64::from(ORIENTATION_BINS);
    ((wrap_positive(yaw) / step).round() as u8) % ORIENTATION_BINS
}

fn bin_distance(a: u8, b: u8) -> u8 {
    let d = a.abs_diff(b);
    d.min(ORIENTATION_BINS - d)
}

/// Minimum horizontal distance from each candidate to the scene's objects
/// (+∞ when there are none).
pub fn clearance(scene: &Scene, candidates: &[PlacementCandidate]) -> Vec<f64> {
    candidates
        .iter()
        .map(|c| {
            scene
                .objects
                .iter()
                .map(|o| c.location.horizontal_distance(o.location()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Most clutter-free location first. Within a location, orientation bins
/// nearest a training orientation come first.
pub fn open_area_ranking(scene: &Scene, candidates: &[PlacementCandidate], training_bins: &[u8]) -> Ranking {
    let dist = clearance(scene, candidates);
    let mut first_at: BTreeMap<[u64; 3], usize> = BTreeMap::new();
    let loc_id: Vec<usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let key = [c.location.x.to_bits(), c.location.y.to_bits(), c.location.z.to_bits()];
            *first_at.entry(key).or_insert(i)
        })
        .collect();
    let orient_penalty = |c: &PlacementCandidate| {
        training_bins
            .iter()
            .map(|&b| bin_distance(b, c.orientation_bin))
            .min()
            .unwrap_or(0)
    };
    rank_by_key(candidates.len(), |i| {
        (
            std::cmp::Reverse(ordered(dist[i])),
            loc_id[i],
            orient_penalty(&candidates[i]),
        )
    })
}

pub fn baseline_open_area(scene: &Scene, candidates: &[PlacementCandidate], training_bins: &[u8]) -> Result<PlacementCandidate> {
    let r = open_area_ranking(scene, candidates, training_bins);
    r.first().map(|&i| candidates[i]).ok_or_else(|| Error::EmptyCandidateSet("open-area baseline".into()))
}

/// Total order on non-NaN floats for sort keys.
pub(crate) fn ordered(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Candidates by |base z − mean training height|.
pub fn height_ranking(mean_height: f64, candidates: &[PlacementCandidate]) -> Ranking {
    rank_by_key(candidates.len(), |i| ordered((candidates[i].location.z - mean_height).abs()))
}

pub fn baseline_height(
    mean_heights: &BTreeMap<String, f64>,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<PlacementCandidate> {
    let h = *mean_heights
        .get(category)
        .ok_or_else(|| Error::InsufficientData(format!("no training heights for '{category}'")))?;
    height_ranking(h, candidates)
        .first()
        .map(|&i| candidates[i])
        .ok_or_else(|| Error::EmptyCandidateSet("height baseline".into()))
}

/// Mean training location with each axis divided by its room extent.
pub fn normalized_location(scene: &Scene, base: crate::geometry::Vec3) -> [f64; 3] {
    [base.x / scene.room.width, base.y / scene.room.depth, base.z / scene.room.height]
}

/// Candidates by 3-D distance to the normalized mean rescaled to this room.
pub fn room_ranking(normalized_mean: [f64; 3], scene: &Scene, candidates: &[PlacementCandidate]) -> Ranking {
    let target = crate::geometry::Vec3::new(
        normalized_mean[0] * scene.room.width,
        normalized_mean[1] * scene.room.depth,
        normalized_mean[2] * scene.room.height,
    );
    rank_by_key(candidates.len(), |i| ordered(candidates[i].location.distance(target)))
}

pub fn baseline_room_context(
    normalized_means: &BTreeMap<String, [f64; 3]>,
    scene: &Scene,
    category: &str,
    candidates: &[PlacementCandidate],
) -> Result<PlacementCandidate> {
    let m = *normalized_means
        .get(category)
        .ok_or_else(|| Error::InsufficientData(format!("no training locations for '{category}'")))?;
    room_ranking(m, scene, candidates)
        .first()
        .map(|&i| candidates[i])
        .ok_or_else(|| Error::EmptyCandidateSet("room baseline".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::scene::{generate_placement_candidates, Room, SupportId};

    fn room() -> Scene {
        Scene::new("r", Room { width: 4.0, depth: 4.0, height: 2.5 }).with_grid(0.25)
    }

    fn cand(x: f64, y: f64, z: f64) -> PlacementCandidate {
        PlacementCandidate {
            location: Vec3::new(x, y, z),
            orientation_bin: 0,
            support: SupportId::Floor,
        }
    }

    #[test]
    fn open_area_moves_away_from_corner_object() {
        let mut s = room();
        s.objects.push(s.instance_at("mug", Vec3::new(0.3, 0.3, 0.0), 0.0).unwrap());
        let cands = generate_placement_candidates(&s, "mug").unwrap();
        let best = baseline_open_area(&s, &cands, &[]).unwrap();
        let scan = clearance(&s, &cands).into_iter().fold(0.0, f64::max);
        assert_eq!(clearance(&s, &[best])[0], scan);
        assert!(best.location.x > 3.0 && best.location.y > 3.0);
    }

    #[test]
    fn open_area_without_objects_takes_first_candidate() {
        let s = room();
        let cands = generate_placement_candidates(&s, "mug").unwrap();
        assert_eq!(baseline_open_area(&s, &cands, &[]).unwrap(), cands[0]);
    }

    #[test]
    fn open_area_between_two_objects_is_exact_optimum() {
        let mut s = room();
        s.objects.push(s.instance_at("mug", Vec3::new(0.1, 2.0, 0.0), 0.0).unwrap());
        s.objects.push(s.instance_at("mug", Vec3::new(3.9, 2.0, 0.0), 0.0).unwrap());
        let cands = generate_placement_candidates(&s, "mug").unwrap();
        let best = baseline_open_area(&s, &cands, &[]).unwrap();
        let all = clearance(&s, &cands);
        let opt = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(clearance(&s, &[best])[0], opt);
    }

    #[test]
    fn open_area_uses_training_orientation() {
        let s = room();
        let cands = generate_placement_candidates(&s, "mug").unwrap();
        let best = baseline_open_area(&s, &cands, &[3]).unwrap();
        assert_eq!(best.location, cands[0].location);
        assert_eq!(best.orientation_bin, 3);
    }

    #[test]
    fn height_cases() {
        let cands = [cand(1.0, 1.0, 0.0), cand(1.0, 1.0, 0.5), cand(1.0, 1.0, 1.0)];
        let m = BTreeMap::from([("mug".to_string(), 0.5), ("shoe".to_string(), 0.0)]);
        assert_eq!(baseline_height(&m, "mug", &cands).unwrap().location.z, 0.5);
        assert_eq!(baseline_height(&m, "shoe", &cands).unwrap().location.z, 0.0);
        let tie = [cand(1.0, 1.0, 0.6), cand(2.0, 1.0, 0.4)];
        assert_eq!(baseline_height(&m, "mug", &tie).unwrap(), tie[0]);
        assert!(matches!(baseline_height(&m, "tv", &tie), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn room_context_maps_normalized_mean() {
        let s = room();
        let cands = generate_placement_candidates(&s, "mug").unwrap();
        let m = BTreeMap::from([("mug".to_string(), [0.5, 0.5, 0.0])]);
        let c = baseline_room_context(&m, &s, "mug", &cands).unwrap();
        assert!(c.location.horizontal_distance(Vec3::new(2.0, 2.0, 0.0)) < 0.2);

        // Rooms of different size with placements at a quarter of each side.
        let a = Scene::new("a", Room { width: 4.0, depth: 8.0, height: 2.5 });
        let b = Scene::new("b", Room { width: 6.0, depth: 2.0, height: 3.0 });
        let pa = normalized_location(&a, Vec3::new(1.0, 2.0, 0.0));
        let pb = normalized_location(&b, Vec3::new(1.5, 0.5, 0.0));
        assert_eq!(pa, [0.25, 0.25, 0.0]);
        assert_eq!(pb, [0.25, 0.25, 0.0]);
    }
}
