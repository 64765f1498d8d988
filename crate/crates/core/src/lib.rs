//! Human-centric object arrangement: infers where objects belong in a room
//! from hallucinated human poses, and compares against object-centric
//! baselines.

// Validation uses `!(x > 0.0)` so NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod densities;
pub mod dp;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod learning;
pub mod params;
pub mod sampling;
pub mod scene;
pub mod skeleton;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{OrientedBox, Vec3};
pub use params::ModelParams;
pub use scene::{Furniture, ObjectInstance, Placement, PlacementCandidate, Room, Scene, SupportId};
pub use skeleton::{Activity, HumanPose, Joint, PoseType, SkeletonLibrary};
