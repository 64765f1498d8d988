//! The six-term pose–object potential and the density kernels behind it.
//!
//! Everything is evaluated in log space: a product of six small densities
//! underflows long before the sampler gets to normalize it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::scene::Placement;
use crate::skeleton::{Activity, HumanPose, Joint, PoseType};

/// Minimum probability of any activity-table entry.
pub const TABLE_FLOOR: f64 = 1e-3;
pub const KAPPA_MAX: f64 = 700.0;
/// Distances are clamped here when a placement coincides with a joint.
pub const MIN_DISTANCE: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
/// Below this the power series is used for I0/I1, above it the asymptotic
/// expansion.
const BESSEL_SERIES_LIMIT: f64 = 50.0;

/// `I_nu(x)·e^{-x}` for nu ∈ {0, 1} and x ≥ 0.
fn bessel_i_scaled(nu: u32, x: f64) -> f64 {
    debug_assert!(nu <= 1 && x >= 0.0);
    if x <= BESSEL_SERIES_LIMIT {
        let q = x * x / 4.0;
        let mut term = if nu == 0 { 1.0 } else { x / 2.0 };
        let mut sum = term;
        let nu = f64::from(nu);
        for k in 1..500 {
            let k = f64::from(k);
            term *= q / (k * (k + nu));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mu = 4.0 * f64::from(nu * nu);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=14 {
            let odd = f64::from(2 * k - 1);
            term *= -(mu - odd * odd) / (f64::from(k) * 8.0 * x);
            sum += term;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// ln I0(x) for x ≥ 0.
pub fn ln_bessel_i0(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    bessel_i_scaled(0, x).ln() + x
}

/// Mean resultant length of a von Mises(κ): A(κ) = I1(κ)/I0(κ).
pub fn bessel_ratio(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    bessel_i_scaled(1, kappa) / bessel_i_scaled(0, kappa)
}

fn domain<T>(msg: String) -> Result<T> {
    Err(Error::Domain(msg))
}

pub fn lognormal_logpdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("log-normal argument must be positive, got {x}"));
    }
    if !(sigma > 0.0) {
        return domain(format!("log-normal sigma must be positive, got {sigma}"));
    }
    let z = (x.ln() - mu) / sigma;
    Ok(-(x * sigma).ln() - HALF_LN_2PI - 0.5 * z * z)
}

pub fn vonmises_logpdf(theta: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) {
        return domain(format!("von Mises kappa must be non-negative, got {kappa}"));
    }
    Ok(kappa * (theta - mu).cos() - LN_2PI - ln_bessel_i0(kappa))
}

pub fn gaussian_logpdf(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return domain(format!("Gaussian sigma must be positive, got {sigma}"));
    }
    let z = (x - mu) / sigma;
    Ok(-sigma.ln() - HALF_LN_2PI - 0.5 * z * z)
}

/// Per-category parameters of the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryParams {
    pub distance_joint: Joint,
    pub dist_mu: f64,
    pub dist_sigma: f64,
    pub rel_mu: f64,
    pub rel_kappa: f64,
    pub ori_mu: f64,
    pub ori_kappa: f64,
    pub height_mu: f64,
    pub height_sigma: f64,
    /// Indexed by [`Activity`].
    pub object_activity: [f64; 5],
}

impl Default for CategoryParams {
    /// Weak starting point for learning.
    fn default() -> Self {
        CategoryParams {
            distance_joint: Joint::Torso,
            dist_mu: 0.0,
            dist_sigma: 1.0,
            rel_mu: 0.0,
            rel_kappa: 0.0,
            ori_mu: 0.0,
            ori_kappa: 0.0,
            height_mu: 0.0,
            height_sigma: 1.0,
            object_activity: [0.2; 5],
        }
    }
}

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("{what} sums to {sum}, expected 1")));
    }
    if let Some(p) = v.iter().find(|&&p| !(p >= TABLE_FLOOR - 1e-12)) {
        return Err(Error::Validation(format!("{what} entry {p} below floor {TABLE_FLOOR}")));
    }
    Ok(())
}

impl CategoryParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.dist_mu,
            self.dist_sigma,
            self.rel_mu,
            self.rel_kappa,
            self.ori_mu,
            self.ori_kappa,
            self.height_mu,
            self.height_sigma,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("category parameters must be finite".into()));
        }
        if self.dist_sigma <= 0.0 || self.height_sigma <= 0.0 {
            return Err(Error::Validation("dist_sigma and height_sigma must be positive".into()));
        }
        for k in [self.rel_kappa, self.ori_kappa] {
            if !(0.0..=KAPPA_MAX).contains(&k) {
                return Err(Error::Validation(format!("kappa {k} outside [0, {KAPPA_MAX}]")));
            }
        }
        check_probability_vector(&self.object_activity, "object_activity")
    }
}

/// Pose-type × activity probabilities, shared by all categories.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseActivityTable(pub [[f64; 5]; 6]);

impl Default for PoseActivityTable {
    fn default() -> Self {
        PoseActivityTable([[0.2; 5]; 6])
    }
}

impl PoseActivityTable {
    pub fn get(&self, t: PoseType, a: Activity) -> f64 {
        self.0[t.index()][a.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for (t, row) in PoseType::ALL.iter().zip(&self.0) {
            check_probability_vector(row, &format!("pose-activity row {t:?}"))?;
        }
        Ok(())
    }
}

impl Serialize for PoseActivityTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<PoseType, BTreeMap<Activity, f64>> = PoseType::ALL
            .iter()
            .map(|&t| (t, Activity::ALL.iter().map(|&a| (a, self.get(t, a))).collect()))
            .collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PoseActivityTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let m = BTreeMap::<PoseType, BTreeMap<Activity, f64>>::deserialize(d)?;
        let mut out = [[0.0; 5]; 6];
        for t in PoseType::ALL {
            let row = m.get(&t).ok_or_else(|| D::Error::custom(format!("missing row {t:?}")))?;
            for a in Activity::ALL {
                out[t.index()][a.index()] = *row
                    .get(&a)
                    .ok_or_else(|| D::Error::custom(format!("missing entry {t:?}/{a:?}")))?;
            }
        }
        Ok(PoseActivityTable(out))
    }
}

/// Geometry of a placement relative to a pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeGeometry {
    pub distance: f64,
    /// Bearing of the object from the pose root, in the pose's facing frame.
    pub rel_bearing: f64,
    /// Object front direction minus the direction from object to pose root.
    pub ori_diff: f64,
    /// Object base height minus torso height.
    pub rel_height: f64,
}

pub fn relative_geometry(pose: &HumanPose, placement: &Placement, joint: Joint) -> RelativeGeometry {
    let loc = placement.location;
    let distance = loc.distance(pose.joint(joint)).max(MIN_DISTANCE);
    let dx = loc.x - pose.root.x;
    let dy = loc.y - pose.root.y;
    RelativeGeometry {
        distance,
        rel_bearing: wrap_angle(dy.atan2(dx) - pose.facing),
        ori_diff: wrap_angle(placement.orientation - (-dy).atan2(-dx)),
        rel_height: loc.z - pose.joint(Joint::Torso).z,
    }
}

/// The six log terms of the potential, kept apart for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerms {
    pub dist: f64,
    pub rel: f64,
    pub ori: f64,
    pub height: f64,
    pub object_activity: f64,
    pub pose_activity: f64,
}

impl PotentialTerms {
    pub fn total(&self) -> f64 {
        self.dist + self.rel + self.ori + self.height + self.object_activity + self.pose_activity
    }
}

pub fn potential_terms(
    placement: &Placement,
    pose: &HumanPose,
    params: &CategoryParams,
    pa: &PoseActivityTable,
) -> Result<PotentialTerms> {
    let g = relative_geometry(pose, placement, params.distance_joint);
    Ok(PotentialTerms {
        dist: lognormal_logpdf(g.distance, params.dist_mu, params.dist_sigma)?,
        rel: vonmises_logpdf(g.rel_bearing, params.rel_mu, params.rel_kappa)?,
        ori: vonmises_logpdf(g.ori_diff, params.ori_mu, params.ori_kappa)?,
        height: gaussian_logpdf(g.rel_height, params.height_mu, params.height_sigma)?,
        object_activity: params.object_activity[pose.activity.index()].ln(),
        pose_activity: pa.get(pose.template, pose.activity).ln(),
    })
}

/// Log potential ln Ψ(O, H; Θ) of one placement against one pose.
pub fn log_potential(
    placement: &Placement,
    pose: &HumanPose,
    params: &CategoryParams,
    pa: &PoseActivityTable,
) -> Result<f64> {
    potential_terms(placement, pose, params, pa).map(|t| t.total())
}

/// Category parameters with normalizers precomputed, for inner loops.
///
/// Splits the potential into a geometric part (depends on pose geometry)
/// and an activity part (depends on template and activity only).
#[derive(Debug, Clone)]
pub struct PreparedParams {
    pub params: CategoryParams,
    rel_norm: f64,
    ori_norm: f64,
    dist_norm: f64,
    height_norm: f64,
    ln_object_activity: [f64; 5],
}

impl PreparedParams {
    pub fn new(params: &CategoryParams) -> Result<Self> {
        if !(params.dist_sigma > 0.0 && params.height_sigma > 0.0) {
            return domain("sigma parameters must be positive".into());
        }
        if !(params.rel_kappa >= 0.0 && params.ori_kappa >= 0.0) {
            return domain("kappa parameters must be non-negative".into());
        }
        Ok(PreparedParams {
            params: params.clone(),
            rel_norm: -LN_2PI - ln_bessel_i0(params.rel_kappa),
            ori_norm: -LN_2PI - ln_bessel_i0(params.ori_kappa),
            dist_norm: -params.dist_sigma.ln() - HALF_LN_2PI,
            height_norm: -params.height_sigma.ln() - HALF_LN_2PI,
            ln_object_activity: params.object_activity.map(f64::ln),
        })
    }

    pub fn geometric(&self, placement: &Placement, pose: &HumanPose) -> f64 {
        let p = &self.params;
        let g = relative_geometry(pose, placement, p.distance_joint);
        let ln_d = g.distance.ln();
        let zd = (ln_d - p.dist_mu) / p.dist_sigma;
        let zh = (g.rel_height - p.height_mu) / p.height_sigma;
        (self.dist_norm - ln_d - 0.5 * zd * zd)
            + (p.rel_kappa * (g.rel_bearing - p.rel_mu).cos() + self.rel_norm)
            + (p.ori_kappa * (g.ori_diff - p.ori_mu).cos() + self.ori_norm)
            + (self.height_norm - 0.5 * zh * zh)
    }

    pub fn activity(&self, pa: &PoseActivityTable, template: PoseType, activity: Activity) -> f64 {
        self.ln_object_activity[activity.index()] + pa.get(template, activity).ln()
    }

    pub fn log_potential(&self, placement: &Placement, pose: &HumanPose, pa: &PoseActivityTable) -> f64 {
        self.geometric(placement, pose) + self.activity(pa, pose.template, pose.activity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::skeleton::SkeletonLibrary;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, FRAC_PI_2};

    /// I_n(x) = (1/π) ∫₀^π e^{x cos t} cos(n t) dt, by the trapezoid rule
    /// (spectrally accurate for periodic integrands).
    fn bessel_quadrature(n: u32, x: f64) -> f64 {
        let m = 20_000;
        let h = PI / m as f64;
        let f = |t: f64| (x * t.cos()).exp() * (f64::from(n) * t).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn bessel_matches_quadrature() {
        for x in [0.01, 0.5, 1.0, 3.0, 10.0, 30.0, 49.9, 50.1, 80.0, 200.0] {
            let i0 = bessel_quadrature(0, x);
            let i1 = bessel_quadrature(1, x);
            assert!((ln_bessel_i0(x) - i0.ln()).abs() < 1e-10, "x={x}");
            assert!((bessel_ratio(x) - i1 / i0).abs() < 1e-10, "x={x}");
        }
        assert_abs_diff_eq!(ln_bessel_i0(1.0), 1.266_065_877_752_008_4f64.ln(), epsilon = 1e-14);
        assert!(ln_bessel_i0(700.0).is_finite());
    }

    #[test]
    fn lognormal_closed_forms() {
        assert_abs_diff_eq!(lognormal_logpdf(1.0, 0.0, 1.0).unwrap(), -0.918_938_533, epsilon = 1e-6);
        assert_abs_diff_eq!(lognormal_logpdf(E, 0.0, 1.0).unwrap(), -2.418_938_533, epsilon = 1e-6);
        assert!(lognormal_logpdf(0.0, 0.0, 1.0).is_err());
        assert!(lognormal_logpdf(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn vonmises_closed_forms() {
        assert_abs_diff_eq!(vonmises_logpdf(1.3, -0.4, 0.0).unwrap(), -1.837_877, epsilon = 1e-6);
        assert_abs_diff_eq!(vonmises_logpdf(0.7, 0.7, 1.0).unwrap(), -1.073_791_425, epsilon = 1e-8);
        assert!(vonmises_logpdf(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_closed_forms() {
        assert_abs_diff_eq!(gaussian_logpdf(0.0, 0.0, 1.0).unwrap(), -0.918_939, epsilon = 1e-6);
        assert_abs_diff_eq!(gaussian_logpdf(2.0, 0.0, 1.0).unwrap(), -2.918_939, epsilon = 1e-6);
        assert!(gaussian_logpdf(0.0, 0.0, -1.0).is_err());
    }

    fn pose_facing(facing: f64) -> HumanPose {
        let lib = SkeletonLibrary::bundled();
        HumanPose::new(lib.get(PoseType::Standing), Vec3::new(1.0, 1.0, 0.0), facing, Activity::Working)
    }

    #[test]
    fn aligned_geometry() {
        let pose = pose_facing(0.0);
        let torso_z = pose.joint(Joint::Torso).z;
        let p = Placement {
            location: Vec3::new(3.0, 1.0, torso_z),
            orientation: PI,
        };
        let g = relative_geometry(&pose, &p, Joint::Torso);
        assert_abs_diff_eq!(g.rel_bearing, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.ori_diff, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.rel_height, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.distance, 2.0, epsilon = 1e-12);

        let g = relative_geometry(&pose_facing(FRAC_PI_2), &p, Joint::Torso);
        assert_abs_diff_eq!(g.rel_bearing, -FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn coincident_joint_clamps_distance() {
        let pose = pose_facing(0.0);
        let p = Placement {
            location: pose.joint(Joint::RightHand),
            orientation: 0.0,
        };
        assert_eq!(relative_geometry(&pose, &p, Joint::RightHand).distance, MIN_DISTANCE);
    }

    /// Rotation-matrix oracle: express the offset in the pose frame with an
    /// explicit 2×2 matrix and read angles off it.
    #[test]
    fn relative_geometry_matches_rotation_oracle() {
        let lib = SkeletonLibrary::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let t = PoseType::ALL[rng.random_range(0..6)];
            let facing = rng.random_range(0.0..2.0 * PI);
            let root = Vec3::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), 0.0);
            let pose = HumanPose::new(lib.get(t), root, facing, Activity::Reading);
            let loc = Vec3::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(0.0..2.0));
            let orientation = rng.random_range(0.0..2.0 * PI);
            let g = relative_geometry(&pose, &Placement { location: loc, orientation }, Joint::LeftHand);

            let (s, c) = facing.sin_cos();
            let r = [[c, s], [-s, c]];
            let (dx, dy) = (loc.x - root.x, loc.y - root.y);
            let local = (r[0][0] * dx + r[0][1] * dy, r[1][0] * dx + r[1][1] * dy);
            let bearing = local.1.atan2(local.0);
            let (os, oc) = orientation.sin_cos();
            // Angle between the front vector and the object→root vector.
            let (tx, ty) = (-dx, -dy);
            let ori = (oc * ty - os * tx).atan2(oc * tx + os * ty);
            assert!((wrap_angle(g.rel_bearing - bearing)).abs() < 1e-9);
            assert!((wrap_angle(g.ori_diff + ori)).abs() < 1e-9);
            let hand = lib.get(t).joints.get(Joint::LeftHand);
            let hand_world = Vec3::new(c * hand.x - s * hand.y + root.x, s * hand.x + c * hand.y + root.y, hand.z);
            assert!((g.distance - loc.distance(hand_world)).abs() < 1e-9);
        }
    }

    fn random_params(rng: &mut ChaCha8Rng) -> CategoryParams {
        let mut oa = [0.0; 5];
        for v in &mut oa {
            *v = rng.random_range(0.01..1.0);
        }
        let s: f64 = oa.iter().sum();
        CategoryParams {
            distance_joint: Joint::ALL[rng.random_range(0..7)],
            dist_mu: rng.random_range(-1.0..1.0),
            dist_sigma: rng.random_range(0.1..2.0),
            rel_mu: rng.random_range(-PI..PI),
            rel_kappa: rng.random_range(0.0..50.0),
            ori_mu: rng.random_range(-PI..PI),
            ori_kappa: rng.random_range(0.0..50.0),
            height_mu: rng.random_range(-1.0..1.0),
            height_sigma: rng.random_range(0.05..1.0),
            object_activity: oa.map(|v| v / s),
        }
    }

    #[test]
    fn potential_is_sum_of_terms() {
        let lib = SkeletonLibrary::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pa = PoseActivityTable([[0.1, 0.2, 0.3, 0.25, 0.15]; 6]);
        for _ in 0..1000 {
            let params = random_params(&mut rng);
            let pose = HumanPose::new(
                lib.get(PoseType::ALL[rng.random_range(0..6)]),
                Vec3::new(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), 0.0),
                rng.random_range(0.0..2.0 * PI),
                Activity::ALL[rng.random_range(0..5)],
            );
            let pl = Placement {
                location: Vec3::new(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), rng.random_range(0.0..1.5)),
                orientation: rng.random_range(0.0..2.0 * PI),
            };
            let g = relative_geometry(&pose, &pl, params.distance_joint);
            let expect = lognormal_logpdf(g.distance, params.dist_mu, params.dist_sigma).unwrap()
                + vonmises_logpdf(g.rel_bearing, params.rel_mu, params.rel_kappa).unwrap()
                + vonmises_logpdf(g.ori_diff, params.ori_mu, params.ori_kappa).unwrap()
                + gaussian_logpdf(g.rel_height, params.height_mu, params.height_sigma).unwrap()
                + params.object_activity[pose.activity.index()].ln()
                + pa.get(pose.template, pose.activity).ln();
            let got = log_potential(&pl, &pose, &params, &pa).unwrap();
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
            let prepared = PreparedParams::new(&params).unwrap().log_potential(&pl, &pose, &pa);
            assert!((prepared - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_potential_is_sum_of_kernel_values() {
        let pose = pose_facing(0.3);
        let params = CategoryParams::default();
        let pa = PoseActivityTable::default();
        let pl = Placement {
            location: Vec3::new(2.0, 2.0, 0.5),
            orientation: 1.0,
        };
        let g = relative_geometry(&pose, &pl, Joint::Torso);
        let expect = lognormal_logpdf(g.distance, 0.0, 1.0).unwrap() - 2.0 * LN_2PI
            + gaussian_logpdf(g.rel_height, 0.0, 1.0).unwrap()
            + 2.0 * 0.2f64.ln();
        assert_abs_diff_eq!(log_potential(&pl, &pose, &params, &pa).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn moving_off_distance_mode_lowers_score() {
        // Mode of ln Ψ in distance (including the 1/x factor) is e^{mu - sigma²}.
        let params = CategoryParams {
            dist_mu: 0.5,
            dist_sigma: 0.3,
            ..CategoryParams::default()
        };
        let pa = PoseActivityTable::default();
        let pose = pose_facing(0.0);
        let torso = pose.joint(Joint::Torso);
        let mode = (0.5f64 - 0.09).exp();
        let at = |d: f64| {
            let pl = Placement {
                location: torso + Vec3::new(d, 0.0, 0.0),
                orientation: PI,
            };
            log_potential(&pl, &pose, &params, &pa).unwrap()
        };
        assert!(at(mode) > at(mode + 0.2));
        assert!(at(mode + 0.2) > at(mode + 0.5));
        assert!(at(mode) > at(mode - 0.3));
    }

    proptest! {
        #[test]
        fn vonmises_is_periodic(theta in -10.0..10.0f64, mu in -10.0..10.0f64, kappa in 0.0..700.0f64) {
            let a = vonmises_logpdf(theta, mu, kappa).unwrap();
            let b = vonmises_logpdf(theta + 2.0 * PI, mu, kappa).unwrap();
            let c = vonmises_logpdf(theta, mu - 2.0 * PI, kappa).unwrap();
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
            prop_assert!((a - c).abs() < 1e-8 * (1.0 + a.abs()));
        }

        #[test]
        fn gaussian_is_symmetric(mu in -5.0..5.0f64, d in 0.0..5.0f64, sigma in 0.01..3.0f64) {
            let a = gaussian_logpdf(mu + d, mu, sigma).unwrap();
            let b = gaussian_logpdf(mu - d, mu, sigma).unwrap();
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }
}
