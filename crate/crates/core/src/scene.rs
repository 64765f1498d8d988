//! Scenes, placement candidates and the stability/collision filters that
//! define where an object may rest.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_collision, OrientedBox, Vec3};

pub const DEFAULT_GRID_RESOLUTION: f64 = 0.05;
/// Fraction of footprint cells that must be supported.
pub const STABILITY_FRACTION: f64 = 0.8;
/// A surface counts as supporting if it lies at most this far below the base.
pub const SUPPORT_TOLERANCE: f64 = 0.01;
pub const ORIENTATION_BINS: u8 = 8;

const EPS: f64 = 1e-9;

/// Default footprint sizes (depth along the object's front, width, height).
const BUILTIN_CATEGORIES: &[(&str, [f64; 3])] = &[
    ("book", [0.16, 0.23, 0.04]),
    ("clean_tool", [0.15, 0.15, 0.30]),
    ("cushion", [0.40, 0.40, 0.15]),
    ("decoration", [0.15, 0.15, 0.25]),
    ("desk_light", [0.15, 0.15, 0.45]),
    ("dishware", [0.25, 0.25, 0.05]),
    ("floor_light", [0.30, 0.30, 1.60]),
    ("food", [0.15, 0.15, 0.10]),
    ("keyboard", [0.15, 0.45, 0.03]),
    ("laptop", [0.25, 0.35, 0.03]),
    ("monitor", [0.20, 0.50, 0.40]),
    ("mouse", [0.10, 0.06, 0.04]),
    ("mug", [0.10, 0.10, 0.12]),
    ("pan", [0.30, 0.30, 0.08]),
    ("pen", [0.02, 0.14, 0.02]),
    ("phone", [0.14, 0.07, 0.01]),
    ("remote", [0.18, 0.05, 0.02]),
    ("shoe", [0.30, 0.12, 0.10]),
    ("tv", [0.20, 1.00, 0.60]),
    ("utensil", [0.20, 0.03, 0.02]),
];

/// Category name → default bounding-box size.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryRegistry(pub BTreeMap<String, Vec3>);

impl CategoryRegistry {
    pub fn builtin() -> Self {
        CategoryRegistry(
            BTreeMap::from_iter(BUILTIN_CATEGORIES.iter().map(|(n, s)| (n.to_string(), Vec3::from(*s)))),
        )
    }

    pub fn get(&self, category: &str) -> Option<Vec3> {
        self.0.get(category).copied()
    }

    pub fn contains(&self, category: &str) -> bool {
        self.0.contains_key(category)
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged(&self, other: &CategoryRegistry) -> CategoryRegistry {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Furniture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub bbox: OrientedBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: String,
    #[serde(flatten)]
    pub bbox: OrientedBox,
}

impl ObjectInstance {
    /// Base center of the object.
    pub fn location(&self) -> Vec3 {
        self.bbox.base()
    }

    pub fn placement(&self) -> Placement {
        Placement {
            location: self.location(),
            orientation: self.bbox.yaw,
        }
    }
}

/// A location/orientation pair, the quantity densities are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub location: Vec3,
    pub orientation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportId {
    Floor,
    Furniture(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementCandidate {
    /// Base center of the object.
    pub location: Vec3,
    /// Orientation is `orientation_bin · π/4`.
    pub orientation_bin: u8,
    pub support: SupportId,
}

impl PlacementCandidate {
    pub fn orientation(&self) -> f64 {
        f64::from(self.orientation_bin) * FRAC_PI_4
    }

    pub fn placement(&self) -> Placement {
        Placement {
            location: self.location,
            orientation: self.orientation(),
        }
    }

    pub fn bbox(&self, size: Vec3) -> OrientedBox {
        OrientedBox {
            center: self.location + Vec3::new(0.0, 0.0, size.z / 2.0),
            size,
            yaw: self.orientation(),
        }
    }

    pub fn instance(&self, category: &str, size: Vec3) -> ObjectInstance {
        ObjectInstance {
            category: category.to_string(),
            bbox: self.bbox(size),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub room: Room,
    pub furniture: Vec<Furniture>,
    /// Objects already placed (fixed context).
    pub objects: Vec<ObjectInstance>,
    /// Ground-truth placements of objects to be arranged, when known.
    pub labeled_placements: Vec<ObjectInstance>,
    pub grid_resolution: f64,
    pub categories: CategoryRegistry,
}

impl Scene {
    pub fn new(id: impl Into<String>, room: Room) -> Self {
        Scene {
            id: id.into(),
            room,
            furniture: Vec::new(),
            objects: Vec::new(),
            labeled_placements: Vec::new(),
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            categories: CategoryRegistry::builtin(),
        }
    }

    pub fn with_furniture(mut self, label: &str, bbox: OrientedBox) -> Self {
        self.furniture.push(Furniture {
            label: Some(label.to_string()),
            bbox,
        });
        self
    }

    pub fn with_grid(mut self, resolution: f64) -> Self {
        self.grid_resolution = resolution;
        self
    }

    pub fn category_size(&self, category: &str) -> Result<Vec3> {
        self.categories
            .get(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))
    }

    /// Places an object of `category` with its base at `base`.
    pub fn instance_at(&self, category: &str, base: Vec3, yaw: f64) -> Result<ObjectInstance> {
        let size = self.category_size(category)?;
        Ok(ObjectInstance {
            category: category.to_string(),
            bbox: OrientedBox::from_base(base, size, yaw)?,
        })
    }

    /// Every object with a known placement: fixed objects plus labels.
    pub fn all_objects(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().chain(self.labeled_placements.iter())
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (-EPS..=self.room.width + EPS).contains(&x) && (-EPS..=self.room.depth + EPS).contains(&y)
    }

    fn footprint_inside(&self, b: &OrientedBox) -> bool {
        let (x0, y0, x1, y1) = b.aabb_xy();
        x0 >= -1e-6
            && y0 >= -1e-6
            && x1 <= self.room.width + 1e-6
            && y1 <= self.room.depth + 1e-6
            && b.bottom() >= -1e-6
            && b.top() <= self.room.height + 1e-6
    }

    /// Checks every scene invariant.
    ///
    /// Furniture must lie fully inside the room; objects only need their
    /// base center inside, since oriented placements near a wall may poke
    /// slightly past it.
    pub fn validate(&self) -> Result<()> {
        let r = self.room;
        if !(r.width > 0.0 && r.depth > 0.0 && r.height > 0.0) || !(r.width.is_finite() && r.depth.is_finite() && r.height.is_finite()) {
            return Err(Error::Validation(format!(
                "room dimensions must be positive, got {} x {} x {}",
                r.width, r.depth, r.height
            )));
        }
        if !(self.grid_resolution > 0.0 && self.grid_resolution.is_finite()) {
            return Err(Error::Validation(format!(
                "grid_resolution must be positive, got {}",
                self.grid_resolution
            )));
        }
        for (k, s) in &self.categories.0 {
            if !(s.x > 0.0 && s.y > 0.0 && s.z > 0.0) {
                return Err(Error::Validation(format!("category '{k}' has non-positive size")));
            }
        }
        for (i, f) in self.furniture.iter().enumerate() {
            let name = f.label.as_deref().unwrap_or("unnamed");
            f.bbox
                .validate()
                .map_err(|e| Error::Validation(format!("furniture {i} ({name}): {e}")))?;
            if !self.footprint_inside(&f.bbox) {
                return Err(Error::Validation(format!(
                    "furniture {i} ({name}) lies outside room extents"
                )));
            }
        }
        let groups = [("object", &self.objects), ("labeled placement", &self.labeled_placements)];
        for (kind, list) in groups {
            for (i, o) in list.iter().enumerate() {
                o.bbox.validate().map_err(|e| {
                    Error::Validation(format!("{kind} {i} (category '{}'): {e}", o.category))
                })?;
                if !self.categories.contains(&o.category) {
                    return Err(Error::Validation(format!(
                        "{kind} {i}: category '{}' is not registered",
                        o.category
                    )));
                }
                let base = o.location();
                if !self.contains_xy(base.x, base.y) || base.z < -1e-6 || base.z > r.height + 1e-6 {
                    return Err(Error::Validation(format!(
                        "{kind} {i} (category '{}') lies outside room extents",
                        o.category
                    )));
                }
            }
        }
        Ok(())
    }

    /// Height of the highest supporting surface at (x, y) lying within
    /// `SUPPORT_TOLERANCE` below `base_z`, if any.
    fn supported_at(&self, x: f64, y: f64, base_z: f64) -> bool {
        let ok = |h: f64| h <= base_z + 1e-6 && h >= base_z - SUPPORT_TOLERANCE - 1e-12;
        if ok(0.0) {
            return true;
        }
        self.furniture
            .iter()
            .any(|f| ok(f.bbox.top()) && f.bbox.contains_xy(x, y, EPS))
    }
}

fn cell_count(extent: f64, resolution: f64) -> usize {
    ((extent / resolution) - 1e-9).ceil().max(1.0) as usize
}

/// True iff at least 80 % of the footprint's base cells have a supporting
/// surface (floor or furniture top) within 1 cm below `location.z`.
pub fn check_stability(scene: &Scene, footprint: &OrientedBox, location: Vec3) -> bool {
    if location.z.abs() <= SUPPORT_TOLERANCE && location.z >= -1e-6 {
        return true;
    }
    let res = scene.grid_resolution;
    let nx = cell_count(footprint.size.x, res);
    let ny = cell_count(footprint.size.y, res);
    let (s, c) = footprint.yaw.sin_cos();
    let mut supported = 0usize;
    for i in 0..nx {
        let lx = (i as f64 + 0.5) * footprint.size.x / nx as f64 - footprint.size.x / 2.0;
        for j in 0..ny {
            let ly = (j as f64 + 0.5) * footprint.size.y / ny as f64 - footprint.size.y / 2.0;
            let x = location.x + c * lx - s * ly;
            let y = location.y + s * lx + c * ly;
            if scene.supported_at(x, y, location.z) {
                supported += 1;
            }
        }
    }
    supported as f64 >= STABILITY_FRACTION * (nx * ny) as f64 - 1e-9
}

/// Lattice of points at spacing `res` centered on an extent.
fn centered_lattice(extent: f64, res: f64) -> impl Iterator<Item = f64> {
    let n = ((extent / res) + 1e-9).floor().max(1.0) as usize;
    let half = (n as f64 - 1.0) / 2.0;
    (0..n).map(move |k| (k as f64 - half) * res)
}

/// Surface points (in world coordinates) for one support, sorted by (x, y).
fn surface_points(scene: &Scene, support: SupportId) -> Vec<Vec3> {
    let res = scene.grid_resolution;
    let mut pts: Vec<Vec3> = match support {
        SupportId::Floor => {
            let (w, d) = (scene.room.width, scene.room.depth);
            let ys: Vec<f64> = centered_lattice(d, res).map(|v| v + d / 2.0).collect();
            centered_lattice(w, res)
                .map(|v| v + w / 2.0)
                .flat_map(|x| ys.iter().map(move |&y| Vec3::new(x, y, 0.0)))
                .collect()
        }
        SupportId::Furniture(i) => {
            let b = &scene.furniture[i].bbox;
            let ys: Vec<f64> = centered_lattice(b.size.y, res).collect();
            let top = b.top();
            centered_lattice(b.size.x, res)
                .flat_map(|lx| ys.iter().map(move |&ly| (lx, ly)))
                .map(|(lx, ly)| {
                    let p = Vec3::new(lx, ly, 0.0).rotate_z(b.yaw);
                    Vec3::new(b.center.x + p.x, b.center.y + p.y, top)
                })
                .collect()
        }
    };
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts
}

fn aabb_disjoint(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
    a.2 <= b.0 || b.2 <= a.0 || a.3 <= b.1 || b.3 <= a.1
}

/// Whether a candidate box is free of `obstacles`.
pub fn collides_with_any<'a>(bbox: &OrientedBox, obstacles: impl IntoIterator<Item = &'a OrientedBox>) -> bool {
    let ab = bbox.aabb_xy();
    obstacles
        .into_iter()
        .any(|o| !aabb_disjoint(ab, o.aabb_xy()) && check_collision(bbox, o))
}

/// Stable, collision-free placements of `category` on every surface.
///
/// Ordered by support (floor first, then furniture in scene order), then
/// x, then y, then orientation bin.
pub fn generate_placement_candidates(scene: &Scene, category: &str) -> Result<Vec<PlacementCandidate>> {
    let size = scene.category_size(category)?;
    let furniture: Vec<&OrientedBox> = scene.furniture.iter().map(|f| &f.bbox).collect();
    let supports = std::iter::once(SupportId::Floor).chain((0..scene.furniture.len()).map(SupportId::Furniture));
    let mut out = Vec::new();
    for support in supports {
        for p in surface_points(scene, support) {
            if !scene.contains_xy(p.x, p.y) || p.z + size.z > scene.room.height + 1e-9 {
                continue;
            }
            for bin in 0..ORIENTATION_BINS {
                let cand = PlacementCandidate {
                    location: p,
                    orientation_bin: bin,
                    support,
                };
                let bbox = cand.bbox(size);
                if check_stability(scene, &bbox, p) && !collides_with_any(&bbox, furniture.iter().copied()) {
                    out.push(cand);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCandidateSet(format!(
            "no stable, collision-free placement for '{category}' in scene '{}'",
            scene.id
        )));
    }
    Ok(out)
}

/// Drops candidates whose box would intersect any of `objects`.
pub fn exclude_object_collisions(
    candidates: &[PlacementCandidate],
    size: Vec3,
    objects: &[ObjectInstance],
) -> Vec<PlacementCandidate> {
    candidates
        .iter()
        .filter(|c| !collides_with_any(&c.bbox(size), objects.iter().map(|o| &o.bbox)))
        .copied()
        .collect()
}
