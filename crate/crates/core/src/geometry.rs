//! Yaw-rotated boxes and the small amount of vector math the rest of the
//! crate needs.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Overlap smaller than this is treated as touching, not intersecting.
pub const CONTACT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn horizontal_distance(self, other: Vec3) -> f64 {
        (self - other).horizontal_norm()
    }

    /// Rotates about the vertical axis by `yaw` radians.
    pub fn rotate_z(self, yaw: f64) -> Vec3 {
        let (s, c) = yaw.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// Wraps an angle to [0, 2π).
pub fn wrap_positive(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// A box rotated about the vertical axis. `center` is the volumetric center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub size: Vec3,
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vec3, size: Vec3, yaw: f64) -> Result<Self> {
        let b = OrientedBox {
            center,
            size,
            yaw: wrap_positive(yaw),
        };
        b.validate()?;
        Ok(b)
    }

    /// Box whose base (bottom face center) sits at `base`.
    pub fn from_base(base: Vec3, size: Vec3, yaw: f64) -> Result<Self> {
        Self::new(base + Vec3::new(0.0, 0.0, size.z / 2.0), size, yaw)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center.is_finite() && self.size.is_finite() && self.yaw.is_finite()) {
            return Err(Error::Validation("box has non-finite fields".into()));
        }
        if self.size.x <= 0.0 || self.size.y <= 0.0 || self.size.z <= 0.0 {
            return Err(Error::Validation(format!(
                "box size components must be positive, got {:?}",
                <[f64; 3]>::from(self.size)
            )));
        }
        if !(0.0..TAU).contains(&self.yaw) {
            return Err(Error::Validation(format!("box yaw {} not in [0, 2π)", self.yaw)));
        }
        Ok(())
    }

    pub fn base(&self) -> Vec3 {
        self.center - Vec3::new(0.0, 0.0, self.size.z / 2.0)
    }

    pub fn bottom(&self) -> f64 {
        self.center.z - self.size.z / 2.0
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.size.z / 2.0
    }

    pub fn footprint_area(&self) -> f64 {
        self.size.x * self.size.y
    }

    /// Unit axes of the footprint in world coordinates.
    fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.yaw.sin_cos();
        [(c, s), (-s, c)]
    }

    /// Footprint corners, counter-clockwise.
    pub fn corners_xy(&self) -> [(f64, f64); 4] {
        let [(ux, uy), (vx, vy)] = self.axes();
        let hx = self.size.x / 2.0;
        let hy = self.size.y / 2.0;
        let (cx, cy) = (self.center.x, self.center.y);
        [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)]
            .map(|(a, b)| (cx + a * ux + b * vx, cy + a * uy + b * vy))
    }

    /// Axis-aligned extent of the footprint: (min_x, min_y, max_x, max_y).
    pub fn aabb_xy(&self) -> (f64, f64, f64, f64) {
        let c = self.corners_xy();
        let mut out = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in c {
            out.0 = out.0.min(x);
            out.1 = out.1.min(y);
            out.2 = out.2.max(x);
            out.3 = out.3.max(y);
        }
        out
    }

    /// Expresses a world point in the box's local horizontal frame.
    pub fn to_local_xy(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Whether (x, y) lies inside the footprint, inclusive up to `tol`.
    pub fn contains_xy(&self, x: f64, y: f64, tol: f64) -> bool {
        let (lx, ly) = self.to_local_xy(x, y);
        lx.abs() <= self.size.x / 2.0 + tol && ly.abs() <= self.size.y / 2.0 + tol
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        self.contains_xy(p.x, p.y, 0.0) && p.z >= self.bottom() && p.z <= self.top()
    }
}

fn project(corners: &[(f64, f64); 4], axis: (f64, f64)) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(x, y) in corners {
        let p = x * axis.0 + y * axis.1;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

/// True iff the two boxes intersect with positive volume.
///
/// Separating-axis test on the rotated footprints (four candidate axes)
/// combined with vertical interval overlap. Touching faces do not collide.
pub fn check_collision(a: &OrientedBox, b: &OrientedBox) -> bool {
    let z_overlap = a.top().min(b.top()) - a.bottom().max(b.bottom());
    if z_overlap <= CONTACT_EPS {
        return false;
    }
    let ca = a.corners_xy();
    let cb = b.corners_xy();
    for axis in a.axes().into_iter().chain(b.axes()) {
        let (alo, ahi) = project(&ca, axis);
        let (blo, bhi) = project(&cb, axis);
        if ahi.min(bhi) - alo.max(blo) <= CONTACT_EPS {
            return false;
        }
    }
    true
}
