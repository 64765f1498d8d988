use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::densities::{CategoryParams, PoseActivityTable};
use crate::error::{Error, Result};
use crate::skeleton::PoseType;

/// Everything inference needs: Θ per category, the shared pose-activity
/// table and the pose-type weights of the base measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub categories: BTreeMap<String, CategoryParams>,
    pub pose_activity: PoseActivityTable,
    /// Indexed by [`PoseType`]; need not be normalized.
    #[serde(default = "uniform_pose_weights")]
    pub pose_type_weights: [f64; 6],
}

fn uniform_pose_weights() -> [f64; 6] {
    [1.0; 6]
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            categories: BTreeMap::new(),
            pose_activity: PoseActivityTable::default(),
            pose_type_weights: uniform_pose_weights(),
        }
    }
}

impl ModelParams {
    /// Parameters for `category`, or the weak defaults if it was never
    /// trained.
    pub fn params_for(&self, category: &str) -> CategoryParams {
        self.categories.get(category).cloned().unwrap_or_default()
    }

    pub fn pose_type_weight(&self, t: PoseType) -> f64 {
        self.pose_type_weights[t.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in &self.categories {
            p.validate()
                .map_err(|e| Error::Validation(format!("category '{name}': {e}")))?;
        }
        self.pose_activity.validate()?;
        if self.pose_type_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("pose_type_weights must be finite and non-negative".into()));
        }
        if self.pose_type_weights.iter().all(|w| *w == 0.0) {
            return Err(Error::Validation("pose_type_weights are all zero".into()));
        }
        Ok(())
    }
}
