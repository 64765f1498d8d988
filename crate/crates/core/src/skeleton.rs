//! Skeleton templates, human poses, and enumeration of the pose candidates
//! the sampler draws from.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, Vec3};
use crate::scene::{collides_with_any, Scene};

/// Spacing of the floor grid of pose roots.
pub const POSE_GRID: f64 = 0.25;
pub const FACING_BINS: usize = 8;
/// Height range of a surface that can be sat on.
pub const SEAT_HEIGHT_RANGE: (f64, f64) = (0.35, 0.55);

const BUNDLED_TEMPLATES: &str = include_str!("../data/skeletons.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Head,
    Torso,
    Pelvis,
    LeftHand,
    RightHand,
    LeftFoot,
    RightFoot,
}

impl Joint {
    pub const ALL: [Joint; 7] = [
        Joint::Head,
        Joint::Torso,
        Joint::Pelvis,
        Joint::LeftHand,
        Joint::RightHand,
        Joint::LeftFoot,
        Joint::RightFoot,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseType {
    Reaching,
    Standing,
    LeaningForward,
    SittingUpright,
    SittingReclined,
    SittingForward,
}

impl PoseType {
    pub const ALL: [PoseType; 6] = [
        PoseType::Reaching,
        PoseType::Standing,
        PoseType::LeaningForward,
        PoseType::SittingUpright,
        PoseType::SittingReclined,
        PoseType::SittingForward,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_sitting(self) -> bool {
        matches!(
            self,
            PoseType::SittingUpright | PoseType::SittingReclined | PoseType::SittingForward
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Reading,
    Working,
    Talking,
    Writing,
    Resting,
}

impl Activity {
    pub const ALL: [Activity; 5] = [
        Activity::Reading,
        Activity::Working,
        Activity::Talking,
        Activity::Writing,
        Activity::Resting,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Positions of the seven named joints, indexed by [`Joint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSet(pub [Vec3; 7]);

impl JointSet {
    pub fn get(&self, joint: Joint) -> Vec3 {
        self.0[joint.index()]
    }
}

impl Serialize for JointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<Joint, Vec3> = Joint::ALL.iter().map(|&j| (j, self.get(j))).collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<Joint, Vec3>::deserialize(d)?;
        let mut out = [Vec3::ZERO; 7];
        for j in Joint::ALL {
            out[j.index()] = *m
                .get(&j)
                .ok_or_else(|| serde::de::Error::custom(format!("missing joint {j:?}")))?;
        }
        Ok(JointSet(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonTemplate {
    pub pose_type: PoseType,
    /// Offsets in the template frame: x forward, y left, z up.
    pub joints: JointSet,
    pub bounding_box: OrientedBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TemplateFile {
    schema_version: u32,
    units: String,
    #[serde(default)]
    frame: Option<String>,
    templates: Vec<SkeletonTemplate>,
}

/// The six templates, indexed by [`PoseType`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonLibrary {
    templates: Vec<SkeletonTemplate>,
}

impl SkeletonLibrary {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_TEMPLATES).expect("bundled skeleton templates are valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TemplateFile = crate::io::from_json_text(text)?;
        if file.schema_version != 1 {
            return Err(Error::Validation(format!(
                "unsupported template schema_version {}",
                file.schema_version
            )));
        }
        if file.units != "meters" {
            return Err(Error::Validation(format!("unsupported units '{}'", file.units)));
        }
        let mut slots: Vec<Option<SkeletonTemplate>> = vec![None; PoseType::COUNT];
        for t in file.templates {
            t.bounding_box.validate()?;
            let pelvis_z = t.joints.get(Joint::Pelvis).z;
            if t.pose_type.is_sitting() {
                if !(SEAT_HEIGHT_RANGE.0..=SEAT_HEIGHT_RANGE.1).contains(&pelvis_z) {
                    return Err(Error::Validation(format!(
                        "{:?}: sitting pelvis height {pelvis_z} outside [0.35, 0.55]",
                        t.pose_type
                    )));
                }
            } else if pelvis_z < 0.0 {
                return Err(Error::Validation(format!("{:?}: pelvis below floor", t.pose_type)));
            }
            let i = t.pose_type.index();
            if slots[i].is_some() {
                return Err(Error::Validation(format!("duplicate template {:?}", t.pose_type)));
            }
            slots[i] = Some(t);
        }
        let templates = slots
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::Validation(format!("missing template {:?}", PoseType::ALL[i]))))
            .collect::<Result<Vec<_>>>()?;
        Ok(SkeletonLibrary { templates })
    }

    pub fn get(&self, t: PoseType) -> &SkeletonTemplate {
        &self.templates[t.index()]
    }

    pub fn templates(&self) -> &[SkeletonTemplate] {
        &self.templates
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanPose {
    pub template: PoseType,
    /// Floor point below the pelvis.
    pub root: Vec3,
    pub facing: f64,
    /// World-frame joint positions.
    pub joints: JointSet,
    pub activity: Activity,
}

impl HumanPose {
    pub fn new(template: &SkeletonTemplate, root: Vec3, facing: f64, activity: Activity) -> Self {
        let joints = JointSet(template.joints.0.map(|off| off.rotate_z(facing) + root));
        HumanPose {
            template: template.pose_type,
            root,
            facing,
            joints,
            activity,
        }
    }

    pub fn joint(&self, j: Joint) -> Vec3 {
        self.joints.get(j)
    }

    pub fn bounding_box(&self, lib: &SkeletonLibrary) -> OrientedBox {
        world_box(&lib.get(self.template).bounding_box, self.root, self.facing)
    }
}

fn world_box(local: &OrientedBox, root: Vec3, facing: f64) -> OrientedBox {
    OrientedBox {
        center: local.center.rotate_z(facing) + root,
        size: local.size,
        yaw: crate::geometry::wrap_positive(local.yaw + facing),
    }
}

fn has_seat_under(scene: &Scene, p: Vec3) -> bool {
    scene.furniture.iter().any(|f| {
        let top = f.bbox.top();
        top >= SEAT_HEIGHT_RANGE.0 - 1e-9 && top <= SEAT_HEIGHT_RANGE.1 + 1e-9 && f.bbox.contains_xy(p.x, p.y, 1e-9)
    })
}

fn box_inside_room(scene: &Scene, b: &OrientedBox) -> bool {
    let (x0, y0, x1, y1) = b.aabb_xy();
    x0 >= 0.0 && y0 >= 0.0 && x1 <= scene.room.width && y1 <= scene.room.depth && b.top() <= scene.room.height
}

/// Root locations on the pose grid, sorted by (x, y).
pub fn pose_roots(scene: &Scene) -> Vec<Vec3> {
    let axis = |extent: f64| {
        let n = ((extent / POSE_GRID) + 1e-9).floor().max(1.0) as usize;
        let half = (n as f64 - 1.0) / 2.0;
        (0..n).map(move |k| extent / 2.0 + (k as f64 - half) * POSE_GRID).collect::<Vec<_>>()
    };
    let ys = axis(scene.room.depth);
    axis(scene.room.width)
        .into_iter()
        .flat_map(|x| ys.iter().map(move |&y| Vec3::new(x, y, 0.0)))
        .collect()
}

/// All collision-free poses: templates × floor grid × 8 facings × 5
/// activities, with sitting templates only where a seat lies under the
/// pelvis.
///
/// Ordered by template, root x, root y, facing, activity; the activity
/// index is therefore always the fastest-varying one.
pub fn generate_pose_candidates(scene: &Scene, lib: &SkeletonLibrary) -> Result<Vec<HumanPose>> {
    let furniture: Vec<&OrientedBox> = scene.furniture.iter().map(|f| &f.bbox).collect();
    let roots = pose_roots(scene);
    let mut out = Vec::new();
    for template in lib.templates() {
        for &root in &roots {
            for k in 0..FACING_BINS {
                let facing = k as f64 * FRAC_PI_4;
                let bbox = world_box(&template.bounding_box, root, facing);
                if !box_inside_room(scene, &bbox) || collides_with_any(&bbox, furniture.iter().copied()) {
                    continue;
                }
                let first = HumanPose::new(template, root, facing, Activity::Reading);
                if template.pose_type.is_sitting() && !has_seat_under(scene, first.joint(Joint::Pelvis)) {
                    continue;
                }
                out.extend(Activity::ALL.iter().map(|&a| HumanPose {
                    activity: a,
                    ..first.clone()
                }));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCandidateSet(format!(
            "no collision-free human pose in scene '{}'",
            scene.id
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Room;
    use proptest::prelude::*;

    fn room(w: f64, d: f64) -> Scene {
        Scene::new("t", Room { width: w, depth: d, height: 2.6 })
    }

    #[test]
    fn bundled_library_has_all_templates() {
        let lib = SkeletonLibrary::bundled();
        for t in PoseType::ALL {
            assert_eq!(lib.get(t).pose_type, t);
        }
    }

    #[test]
    fn empty_room_has_no_sitting_poses() {
        let lib = SkeletonLibrary::bundled();
        let poses = generate_pose_candidates(&room(3.0, 3.0), &lib).unwrap();
        assert!(poses.iter().all(|p| !p.template.is_sitting()));
        for t in [PoseType::Reaching, PoseType::Standing, PoseType::LeaningForward] {
            assert!(poses.iter().any(|p| p.template == t));
        }
        // Every interior root appears for standing poses.
        let interior = pose_roots(&room(3.0, 3.0))
            .into_iter()
            .filter(|r| r.x > 0.5 && r.x < 2.5 && r.y > 0.5 && r.y < 2.5)
            .count();
        let standing_roots: std::collections::BTreeSet<(i64, i64)> = poses
            .iter()
            .filter(|p| p.template == PoseType::Standing && p.root.x > 0.5 && p.root.x < 2.5 && p.root.y > 0.5 && p.root.y < 2.5)
            .map(|p| ((p.root.x * 1000.0) as i64, (p.root.y * 1000.0) as i64))
            .collect();
        assert_eq!(standing_roots.len(), interior);
    }

    #[test]
    fn sitting_only_over_chair_seat() {
        let lib = SkeletonLibrary::bundled();
        let seat = OrientedBox::new(Vec3::new(1.5, 1.5, 0.225), Vec3::new(0.5, 0.5, 0.45), 0.0).unwrap();
        let s = room(3.0, 3.0).with_furniture("chair", seat);
        let poses = generate_pose_candidates(&s, &lib).unwrap();
        let sitting: Vec<_> = poses.iter().filter(|p| p.template.is_sitting()).collect();
        assert!(!sitting.is_empty());
        // Enumeration oracle: roots whose pelvis (directly above the root)
        // lies over the seat footprint.
        let expected_roots: Vec<Vec3> = pose_roots(&s)
            .into_iter()
            .filter(|r| seat.contains_xy(r.x, r.y, 1e-9))
            .collect();
        assert!(!expected_roots.is_empty());
        for p in &sitting {
            let pelvis = p.joint(Joint::Pelvis);
            assert!(seat.contains_xy(pelvis.x, pelvis.y, 1e-9));
            assert!(expected_roots.iter().any(|r| r.horizontal_distance(p.root) < 1e-9));
        }
    }

    #[test]
    fn narrow_room_has_no_poses() {
        let lib = SkeletonLibrary::bundled();
        assert!(matches!(
            generate_pose_candidates(&room(0.2, 3.0), &lib),
            Err(Error::EmptyCandidateSet(_))
        ));
    }

    #[test]
    fn candidates_are_deterministic() {
        let lib = SkeletonLibrary::bundled();
        let s = room(2.0, 2.5);
        assert_eq!(generate_pose_candidates(&s, &lib).unwrap(), generate_pose_candidates(&s, &lib).unwrap());
    }

    proptest! {
        #[test]
        fn world_joints_match_rotation(x in 0.0..5.0f64, y in 0.0..5.0f64, facing in 0.0..std::f64::consts::TAU, t in 0usize..6) {
            let lib = SkeletonLibrary::bundled();
            let tmpl = lib.get(PoseType::ALL[t]);
            let root = Vec3::new(x, y, 0.0);
            let pose = HumanPose::new(tmpl, root, facing, Activity::Working);
            let (s, c) = facing.sin_cos();
            for j in Joint::ALL {
                let o = tmpl.joints.get(j);
                let expect = Vec3::new(c * o.x - s * o.y + x, s * o.x + c * o.y + y, o.z);
                prop_assert!(pose.joint(j).distance(expect) < 1e-9);
            }
        }
    }
}
