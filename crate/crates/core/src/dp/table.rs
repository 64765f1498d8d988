use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ArrangementModel;

/// Explicitly tabulated potentials, `table[obj][placement][pose]`. Small
/// enough instances can be checked against exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    pub table: Vec<Vec<Vec<f64>>>,
    pub fixed: Vec<bool>,
    /// ln P₀ per pose.
    pub prior: Vec<f64>,
}

impl TableModel {
    /// `n_obj` objects, the first half fixed, the rest with `n_place`
    /// options; potentials uniform in [-3, 0].
    pub fn random(n_obj: usize, n_place: usize, n_pose: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fixed: Vec<bool> = (0..n_obj).map(|i| i < n_obj / 2).collect();
        let table = fixed
            .iter()
            .map(|&f| {
                let np = if f { 1 } else { n_place };
                (0..np).map(|_| (0..n_pose).map(|_| rng.random_range(-3.0..0.0)).collect()).collect()
            })
            .collect();
        TableModel { table, fixed, prior: vec![0.0; n_pose] }
    }

    /// Fixed objects whose potential is zero everywhere.
    pub fn constant(n_obj: usize, n_pose: usize) -> Self {
        TableModel {
            table: vec![vec![vec![0.0; n_pose]]; n_obj],
            fixed: vec![true; n_obj],
            prior: vec![0.0; n_pose],
        }
    }
}

impl ArrangementModel for TableModel {
    fn num_objects(&self) -> usize {
        self.table.len()
    }
    fn num_poses(&self) -> usize {
        self.prior.len()
    }
    fn pose_log_prior(&self, pose: usize) -> f64 {
        self.prior[pose]
    }
    fn num_placements(&self, obj: usize) -> Option<usize> {
        (!self.fixed[obj]).then(|| self.table[obj].len())
    }
    fn log_potential(&self, obj: usize, placement: usize, pose: usize) -> f64 {
        self.table[obj][placement][pose]
    }
}
