//! Generated scenes for tests, benchmarks and the `gen-fixture` command.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::densities::CategoryParams;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, wrap_positive, OrientedBox, Vec3};
use crate::params::ModelParams;
use crate::scene::{Room, Scene};
use crate::skeleton::{Activity, HumanPose, Joint, PoseType, SkeletonLibrary, POSE_GRID};

pub const DESK_SIZE: [f64; 3] = [1.2, 0.55, 0.75];
pub const CHAIR_SIZE: [f64; 3] = [0.45, 0.45, 0.45];
/// Horizontal gap between the desk's front edge and the chair center.
const CHAIR_SETBACK: f64 = 0.325;

/// Draws from a von Mises distribution (Best and Fisher's rejection
/// sampler).
pub fn sample_vonmises<R: Rng + ?Sized>(mu: f64, kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = if u3 > 0.5 { f.clamp(-1.0, 1.0).acos() } else { -f.clamp(-1.0, 1.0).acos() };
            return wrap_angle(mu + theta);
        }
    }
}

/// Coordinate of the pose-grid line nearest `v` along an axis of length
/// `extent`.
fn snap_to_pose_grid(v: f64, extent: f64) -> f64 {
    let n = ((extent / POSE_GRID) + 1e-9).floor().max(1.0);
    let half = (n - 1.0) / 2.0;
    let k = ((v - extent / 2.0) / POSE_GRID + half).round().clamp(0.0, n - 1.0);
    extent / 2.0 + (k - half) * POSE_GRID
}

fn furniture_box(center_xy: (f64, f64), size: [f64; 3], yaw: f64) -> OrientedBox {
    OrientedBox::from_base(Vec3::new(center_xy.0, center_xy.1, 0.0), Vec3::from(size), yaw)
        .expect("fixture furniture is well formed")
}

/// Maps a layout authored against the y = 0 wall of a `w` × `d` room onto
/// one of the four walls (quarter turns about the room center).
#[derive(Debug, Clone, Copy)]
struct Frame {
    quarter_turns: u8,
    w: f64,
    d: f64,
}

impl Frame {
    fn room(&self, height: f64) -> Room {
        if self.quarter_turns.is_multiple_of(2) {
            Room { width: self.w, depth: self.d, height }
        } else {
            Room { width: self.d, depth: self.w, height }
        }
    }

    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        match self.quarter_turns % 4 {
            0 => (x, y),
            1 => (self.d - y, x),
            2 => (self.w - x, self.d - y),
            _ => (y, self.w - x),
        }
    }

    fn vec(&self, p: Vec3) -> Vec3 {
        let (x, y) = self.point(p.x, p.y);
        Vec3::new(x, y, p.z)
    }

    fn yaw(&self, yaw: f64) -> f64 {
        yaw + f64::from(self.quarter_turns) * FRAC_PI_2
    }
}

/// Desk against a wall with a chair in front; returns the scene, the frame
/// and the chair center in the authoring frame.
fn office_shell(id: &str, desk_h: f64, rng: &mut ChaCha8Rng) -> (Scene, Frame, Vec3) {
    let w = 3.5 + 0.5 * f64::from(rng.random_range(0..4u8));
    let d = 3.5 + 0.5 * f64::from(rng.random_range(0..3u8));
    let frame = Frame { quarter_turns: rng.random_range(0..4u8), w, d };
    let chair_x = snap_to_pose_grid(rng.random_range(1.0..w - 1.0), w);
    let chair_y = snap_to_pose_grid(DESK_SIZE[1] + CHAIR_SETBACK, d);
    let desk_x = chair_x + rng.random_range(-0.2..0.2);
    let desk_y = chair_y - CHAIR_SETBACK - DESK_SIZE[1] / 2.0;
    let scene = Scene::new(id, frame.room(2.6))
        .with_furniture("desk", furniture_box(frame.point(desk_x, desk_y), [DESK_SIZE[0], DESK_SIZE[1], desk_h], frame.yaw(0.0)))
        .with_furniture("chair", furniture_box(frame.point(chair_x, chair_y), CHAIR_SIZE, frame.yaw(0.0)));
    (scene, frame, Vec3::new(chair_x, chair_y, 0.0))
}

/// The evaluation fixture: desk, chair and a monitor on the desk.
pub fn office_fixture(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut scene, frame, chair) = office_shell(&format!("office-{seed}"), DESK_SIZE[2], &mut rng);
    let top = DESK_SIZE[2];
    let at = frame.vec(Vec3::new(chair.x, DESK_SIZE[1] - 0.4, top));
    let monitor = scene.instance_at("monitor", at, frame.yaw(FRAC_PI_2)).expect("builtin category");
    scene.objects.push(monitor);
    scene
}

/// An office with a monitor in place and labeled keyboard, mouse and mug
/// placements around the seated user.
pub fn office_training_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = rng.random_range(0.68..0.8);
    let (mut scene, frame, chair) = office_shell(&format!("office-train-{seed}"), top, &mut rng);
    let front = DESK_SIZE[1];
    let n = |sd: f64, rng: &mut ChaCha8Rng| Normal::new(0.0, sd).expect("valid sd").sample(rng);
    let monitor = Vec3::new(chair.x + n(0.08, &mut rng), front - 0.4 + n(0.03, &mut rng), top);
    let keyboard = Vec3::new(chair.x + n(0.08, &mut rng), front - 0.15 + n(0.04, &mut rng), top);
    let mouse = Vec3::new(keyboard.x + 0.33 + n(0.05, &mut rng), keyboard.y + n(0.04, &mut rng), top);
    let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mug = Vec3::new(chair.x + side * (0.45 + n(0.08, &mut rng)), front - 0.2 + n(0.06, &mut rng), top);
    let place = |c: &str, p: Vec3, rng: &mut ChaCha8Rng| {
        scene
            .instance_at(c, frame.vec(p), frame.yaw(FRAC_PI_2 + n(0.1, rng)))
            .expect("builtin category")
    };
    let objects = vec![place("monitor", monitor, &mut rng)];
    let labels = [
        place("keyboard", keyboard, &mut rng),
        place("mouse", mouse, &mut rng),
        place("mug", mug, &mut rng),
    ];
    scene.objects = objects;
    scene.labeled_placements.extend(labels);
    scene
}

fn labeled<'a>(scene: &'a Scene, label: &str) -> Result<&'a crate::scene::Furniture> {
    scene
        .furniture
        .iter()
        .find(|f| f.label.as_deref() == Some(label))
        .ok_or_else(|| Error::Validation(format!("scene '{}' has no {label}", scene.id)))
}

/// The upright sitting pose on the office chair, facing the desk.
pub fn seated_pose(scene: &Scene, lib: &SkeletonLibrary) -> Result<HumanPose> {
    let chair = labeled(scene, "chair")?.bbox.center;
    let desk = labeled(scene, "desk")?.bbox.center;
    let step = PI / 4.0;
    let facing = wrap_positive(((desk.y - chair.y).atan2(desk.x - chair.x) / step).round() * step);
    let root = Vec3::new(chair.x, chair.y, 0.0);
    Ok(HumanPose::new(lib.get(PoseType::SittingUpright), root, facing, Activity::Working))
}

/// Smallest horizontal distance from `p` to either hand of `pose`.
pub fn hand_distance(pose: &HumanPose, p: Vec3) -> f64 {
    [Joint::LeftHand, Joint::RightHand]
        .iter()
        .map(|&j| pose.joint(j).horizontal_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// A counter along one wall with cooking objects on it.
pub fn kitchen_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 4.0 + 0.5 * f64::from(rng.random_range(0..3u8));
    let counter = [2.4, 0.6, 0.9];
    let cx = rng.random_range(1.4..width - 1.4);
    let mut scene = Scene::new(format!("kitchen-{seed}"), Room { width, depth: 4.0, height: 2.6 })
        .with_furniture("counter", furniture_box((cx, 0.3), counter, 0.0))
        .with_furniture("table", furniture_box((width / 2.0, 2.6), [1.2, 0.8, 0.75], 0.0));
    let items = [("pan", -0.7, 0.3), ("dishware", 0.1, 0.35), ("utensil", 0.5, 0.4), ("mug", 0.9, 0.25)];
    for (cat, dx, y) in items {
        let p = Vec3::new(cx + dx + rng.random_range(-0.05..0.05), y, counter[2]);
        let inst = scene.instance_at(cat, p, FRAC_PI_2).expect("builtin category");
        scene.labeled_placements.push(inst);
    }
    scene
}

/// Sofa, coffee table and TV stand.
pub fn living_room_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 5.0 + 0.5 * f64::from(rng.random_range(0..3u8));
    let depth = 5.0;
    let sx = rng.random_range(1.5..width - 1.5);
    let mut scene = Scene::new(format!("living-{seed}"), Room { width, depth, height: 2.7 })
        .with_furniture("sofa", furniture_box((sx, 0.45), [2.0, 0.8, 0.45], 0.0))
        .with_furniture("coffee_table", furniture_box((sx, 1.6), [1.0, 0.5, 0.3], 0.0))
        .with_furniture("tv_stand", furniture_box((sx, depth - 0.25), [1.2, 0.4, 0.6], 0.0));
    scene.objects.push(
        scene
            .instance_at("tv", Vec3::new(sx, depth - 0.25, 0.6), -FRAC_PI_2)
            .expect("builtin category"),
    );
    let remote = Vec3::new(sx + rng.random_range(-0.3..0.3), 1.6, 0.3);
    let cushion = Vec3::new(sx + 0.7 * if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.45, 0.45);
    scene.labeled_placements.push(scene.instance_at("remote", remote, FRAC_PI_2).expect("builtin category"));
    scene.labeled_placements.push(scene.instance_at("cushion", cushion, FRAC_PI_2).expect("builtin category"));
    scene
}

/// Category registered by [`pedestal_fixture`].
pub const MARKER: &str = "marker";

/// A 10 × 10 m room whose only raised surface is a thin pedestal at the
/// center, holding a single candidate location.
pub fn pedestal_fixture() -> Scene {
    let mut scene = Scene::new("pedestal", Room { width: 10.0, depth: 10.0, height: 3.0 })
        .with_grid(0.25)
        .with_furniture("pedestal", furniture_box((5.0, 5.0), [0.06, 0.06, 0.8], 0.0));
    scene.categories.0.insert(MARKER.to_string(), Vec3::new(0.04, 0.04, 0.04));
    scene
}

/// Parameters that put essentially all marker mass on the pedestal top.
pub fn pedestal_params() -> ModelParams {
    let mut params = ModelParams::default();
    params.categories.insert(
        MARKER.to_string(),
        CategoryParams {
            dist_mu: 0.0,
            dist_sigma: 1.0,
            height_mu: -0.5,
            height_sigma: 0.05,
            ..CategoryParams::default()
        },
    );
    params
}

/// Scenes generated from a single standing human and known parameters for
/// one category (distance measured from the torso).
#[derive(Debug, Clone)]
pub struct KnownThetaData {
    pub scenes: Vec<Scene>,
    pub poses: Vec<HumanPose>,
}

pub fn known_theta_scenes(
    theta: &CategoryParams,
    category: &str,
    n_scenes: usize,
    n_objects: usize,
    seed: u64,
    lib: &SkeletonLibrary,
) -> Result<KnownThetaData> {
    if theta.distance_joint != Joint::Torso {
        return Err(Error::Config("generator measures distance from the torso".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let room = Room { width: 7.0, depth: 7.0, height: 3.0 };
    let height = Normal::new(theta.height_mu, theta.height_sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let log_dist = Normal::new(theta.dist_mu, theta.dist_sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut data = KnownThetaData { scenes: Vec::new(), poses: Vec::new() };
    for k in 0..n_scenes {
        let mut scene = Scene::new(format!("theta-{k}"), room);
        let root = Vec3::new(
            snap_to_pose_grid(3.5 + rng.random_range(-0.25..0.25), room.width),
            snap_to_pose_grid(3.5 + rng.random_range(-0.25..0.25), room.depth),
            0.0,
        );
        let facing = f64::from(rng.random_range(0..8u8)) * PI / 4.0;
        let pose = HumanPose::new(lib.get(PoseType::Standing), root, facing, Activity::Working);
        let torso = pose.joint(Joint::Torso);
        while scene.objects.len() < n_objects {
            let h = height.sample(&mut rng);
            let d = log_dist.sample(&mut rng).exp();
            if d <= h.abs() {
                continue;
            }
            let r = (d * d - h * h).sqrt();
            let bearing = pose.facing + sample_vonmises(theta.rel_mu, theta.rel_kappa, &mut rng);
            let p = Vec3::new(torso.x + r * bearing.cos(), torso.y + r * bearing.sin(), torso.z + h);
            if !scene.contains_xy(p.x, p.y) || p.z < 0.0 || p.z > room.height {
                continue;
            }
            let toward_human = (torso.y - p.y).atan2(torso.x - p.x);
            let yaw = toward_human + sample_vonmises(theta.ori_mu, theta.ori_kappa, &mut rng);
            let inst = scene.instance_at(category, p, yaw)?;
            scene.objects.push(inst);
        }
        scene.validate()?;
        data.scenes.push(scene);
        data.poses.push(pose);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::bessel_ratio;
    use crate::dp::target_candidates;
    use crate::skeleton::generate_pose_candidates;

    #[test]
    fn vonmises_draws_match_mean_resultant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kappa in [0.5, 4.0, 40.0] {
            let n = 40_000;
            let (s, c) = (0..n).fold((0.0, 0.0), |(s, c), _| {
                let a = sample_vonmises(0.7, kappa, &mut rng);
                (s + a.sin(), c + a.cos())
            });
            let rbar = s.hypot(c) / f64::from(n);
            assert!((rbar - bessel_ratio(kappa)).abs() < 0.01, "kappa {kappa}: {rbar}");
            assert!(wrap_angle(s.atan2(c) - 0.7).abs() < 0.05);
        }
    }

    #[test]
    fn office_scenes_are_valid_and_seated_pose_is_a_candidate() {
        let lib = SkeletonLibrary::bundled();
        for seed in 0..6 {
            for scene in [office_fixture(seed), office_training_scene(seed)] {
                scene.validate().unwrap();
                let seated = seated_pose(&scene, &lib).unwrap();
                let poses = generate_pose_candidates(&scene, &lib).unwrap();
                assert!(poses.iter().any(|p| p.template == seated.template
                    && p.root.horizontal_distance(seated.root) < 1e-9
                    && (p.facing - seated.facing).abs() < 1e-9));
                // The keyboard fits on the desk in front of the seated hands.
                let cands = target_candidates(&scene, "keyboard").unwrap();
                assert!(cands.iter().any(|c| c.location.z > 0.7 && hand_distance(&seated, c.location) < 0.3));
            }
        }
    }

    #[test]
    fn other_rooms_are_valid() {
        for seed in 0..4 {
            kitchen_scene(seed).validate().unwrap();
            living_room_scene(seed).validate().unwrap();
        }
        pedestal_fixture().validate().unwrap();
    }

    #[test]
    fn pedestal_has_one_raised_location() {
        let scene = pedestal_fixture();
        let cands = target_candidates(&scene, MARKER).unwrap();
        let raised: Vec<_> = cands.iter().filter(|c| c.location.z > 0.0).collect();
        assert_eq!(raised.len(), 8);
        assert!(raised.iter().all(|c| c.location.horizontal_distance(Vec3::new(5.0, 5.0, 0.0)) < 1e-9));
    }

    #[test]
    fn known_theta_objects_follow_the_generator() {
        let lib = SkeletonLibrary::bundled();
        let theta = CategoryParams {
            dist_mu: 0.5,
            dist_sigma: 0.2,
            rel_kappa: 4.0,
            ori_kappa: 4.0,
            height_mu: 0.2,
            height_sigma: 0.1,
            ..CategoryParams::default()
        };
        let data = known_theta_scenes(&theta, "mug", 30, 10, 3, &lib).unwrap();
        let mut logs = Vec::new();
        for (s, pose) in data.scenes.iter().zip(&data.poses) {
            for o in &s.objects {
                logs.push(o.location().distance(pose.joint(Joint::Torso)).ln());
            }
        }
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        assert!((mean - 0.5).abs() < 0.03, "{mean}");
    }
}
