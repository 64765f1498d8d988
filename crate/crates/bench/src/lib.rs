//! Shared fixtures for the benchmarks.

use posearrange_core::densities::CategoryParams;
use posearrange_core::dp::SceneModel;
use posearrange_core::synthetic;
use posearrange_core::{ModelParams, Scene, SkeletonLibrary};

/// Hand-set parameters for a seated desk worker, so benchmarks do not pay
/// for training.
pub fn desk_params() -> ModelParams {
    let mut params = ModelParams::default();
    for (cat, dist_mu, height_mu) in [("keyboard", -0.7, -0.05), ("mouse", -0.6, -0.05), ("monitor", -0.2, -0.05)] {
        let p = CategoryParams {
            dist_mu,
            dist_sigma: 0.1,
            rel_kappa: 8.0,
            ori_kappa: 8.0,
            height_mu,
            height_sigma: 0.05,
            ..CategoryParams::default()
        };
        params.categories.insert(cat.to_string(), p);
    }
    params.pose_type_weights = [1.0, 1.0, 1.0, 100.0, 100.0, 100.0];
    params
}

pub fn office() -> Scene {
    synthetic::office_fixture(0)
}

/// Sampler model placing `targets` in the office fixture.
pub fn office_model(targets: &[&str], lib: &SkeletonLibrary) -> SceneModel {
    let targets: Vec<String> = targets.iter().map(|s| s.to_string()).collect();
    SceneModel::for_scene(&office(), &targets, &desk_params(), lib).expect("fixture is valid")
}
