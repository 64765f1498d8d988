//! Collapsed Gibbs sampling over the Dirichlet-process mixture of poses.
//!
//! The mixture weights are never instantiated: assignments are drawn from
//! the Chinese-restaurant conditional with `z` auxiliary poses standing in
//! for unoccupied components (Neal's algorithm 8). Poses and placements are
//! then redrawn exactly from their finite candidate sets.

mod marginals;
mod scene_model;
mod table;

pub use marginals::{
    estimate_marginals, heatmap, pose_frequencies, predict_arrangement, CandidateDistribution, CellStats, Heatmap,
    ObjectDistribution, OmegaCell, PlacementDistribution, PoseFrequency,
};
pub use scene_model::{run_scene_chain, SceneModel};
pub(crate) use scene_model::target_candidates;
pub use table::TableModel;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{sample_log_categorical, CumulativeTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpConfig {
    /// Concentration of the Dirichlet process.
    pub alpha: f64,
    /// Number of auxiliary poses drawn per assignment step.
    pub z: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    /// Independent chains whose snapshots are pooled; chain `k` uses a seed
    /// derived from `seed` and `k`.
    pub chains: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            alpha: 1.0,
            z: 3,
            sweeps: 500,
            burn_in: 200,
            thinning: 2,
            seed: 0,
            chains: 1,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.z < 1 {
            return Err(Error::Config("z must be at least 1".into()));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::Config(format!(
                "burn_in ({}) must be less than sweeps ({})",
                self.burn_in, self.sweeps
            )));
        }
        if self.chains < 1 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.thinning < 1 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of snapshots `run_chain` will keep.
    pub fn kept_snapshots(&self) -> usize {
        (self.sweeps - self.burn_in).div_ceil(self.thinning) * self.chains
    }

    /// Seed of chain `k`; chain 0 uses `seed` itself.
    pub fn chain_seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn keeps(&self, sweep: usize) -> bool {
        sweep >= self.burn_in && (sweep - self.burn_in).is_multiple_of(self.thinning)
    }
}

/// What the sampler needs to know about a scene: a finite pose set with a
/// base measure, and per-object placement options scored against poses.
pub trait ArrangementModel {
    fn num_objects(&self) -> usize;
    fn num_poses(&self) -> usize;
    /// ln P₀ of a pose candidate (need not be normalized).
    fn pose_log_prior(&self, pose: usize) -> f64;
    /// Placement options of an object; `None` for fixed objects.
    fn num_placements(&self, obj: usize) -> Option<usize>;
    /// ln Ψ of object `obj` at placement option `placement` against `pose`.
    /// `placement` is ignored for fixed objects.
    fn log_potential(&self, obj: usize, placement: usize, pose: usize) -> f64;

    /// Adds ln Ψ(obj at placement, h) to `acc[h]` for every pose.
    fn add_pose_scores(&self, obj: usize, placement: usize, acc: &mut [f64]) {
        for (h, a) in acc.iter_mut().enumerate() {
            *a += self.log_potential(obj, placement, h);
        }
    }

    /// Writes ln Ψ(obj at p, pose) for every placement option p.
    fn placement_scores(&self, obj: usize, pose: usize, out: &mut Vec<f64>) {
        out.clear();
        let n = self.num_placements(obj).unwrap_or(0);
        out.extend((0..n).map(|p| self.log_potential(obj, p, pose)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub pose: usize,
    pub count: usize,
}

/// Sampler state: assignments, occupied components and current placements.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Component label per object.
    pub assignments: Vec<usize>,
    pub components: BTreeMap<usize, Component>,
    /// Current placement option per object (0 for fixed objects).
    pub placements: Vec<usize>,
    next_label: usize,
}

impl ChainState {
    /// Every object in its own component with the given pose.
    pub fn singletons(poses: &[usize], placements: Vec<usize>) -> Self {
        let components = poses
            .iter()
            .enumerate()
            .map(|(i, &pose)| (i, Component { pose, count: 1 }))
            .collect();
        ChainState {
            assignments: (0..poses.len()).collect(),
            components,
            placements,
            next_label: poses.len(),
        }
    }

    /// Builds a state from explicit assignments and component poses.
    pub fn from_parts(assignments: Vec<usize>, poses: BTreeMap<usize, usize>, placements: Vec<usize>) -> Result<Self> {
        let mut components: BTreeMap<usize, Component> =
            poses.into_iter().map(|(l, pose)| (l, Component { pose, count: 0 })).collect();
        for &l in &assignments {
            components
                .get_mut(&l)
                .ok_or_else(|| Error::Config(format!("label {l} has no pose")))?
                .count += 1;
        }
        components.retain(|_, c| c.count > 0);
        let next_label = components.keys().next_back().map_or(0, |l| l + 1);
        Ok(ChainState {
            assignments,
            components,
            placements,
            next_label,
        })
    }

    pub fn pose_of(&self, obj: usize) -> usize {
        self.components[&self.assignments[obj]].pose
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    fn members(&self, label: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == label)
            .map(|(i, _)| i)
    }

    /// Counts equal the assignment multiset, every label has a pose, and
    /// no empty component survives.
    pub fn check_invariants(&self) -> bool {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in &self.assignments {
            *counts.entry(l).or_default() += 1;
        }
        counts.len() == self.components.len()
            && counts
                .iter()
                .all(|(l, n)| self.components.get(l).is_some_and(|c| c.count == *n))
    }

    /// Removes `obj` from its component. Returns the pose of the component
    /// if it became empty (and was dropped).
    fn detach(&mut self, obj: usize) -> Option<usize> {
        let label = self.assignments[obj];
        let comp = self.components.get_mut(&label).expect("assigned label exists");
        comp.count -= 1;
        if comp.count == 0 {
            let pose = comp.pose;
            self.components.remove(&label);
            Some(pose)
        } else {
            None
        }
    }

    fn attach_new(&mut self, obj: usize, pose: usize) -> usize {
        let label = self.next_label;
        self.next_label += 1;
        self.components.insert(label, Component { pose, count: 1 });
        self.assignments[obj] = label;
        label
    }

    fn attach_existing(&mut self, obj: usize, label: usize) {
        self.components.get_mut(&label).expect("existing label").count += 1;
        self.assignments[obj] = label;
    }
}

/// One kept sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Labels renumbered by first appearance.
    pub assignments: Vec<usize>,
    /// Pose candidate of each object's component.
    pub object_pose: Vec<usize>,
    /// Placement option per object (0 for fixed objects).
    pub placements: Vec<usize>,
}

impl Snapshot {
    fn capture(state: &ChainState) -> Self {
        let mut relabel: BTreeMap<usize, usize> = BTreeMap::new();
        let assignments = state
            .assignments
            .iter()
            .map(|l| {
                let next = relabel.len();
                *relabel.entry(*l).or_insert(next)
            })
            .collect();
        Snapshot {
            assignments,
            object_pose: (0..state.assignments.len()).map(|i| state.pose_of(i)).collect(),
            placements: state.placements.clone(),
        }
    }

    pub fn num_components(&self) -> usize {
        self.assignments.iter().max().map_or(0, |m| m + 1)
    }

    /// Distinct component poses.
    pub fn component_poses(&self) -> Vec<usize> {
        let mut seen = vec![None; self.num_components()];
        for (i, &l) in self.assignments.iter().enumerate() {
            seen[l].get_or_insert(self.object_pose[i]);
        }
        seen.into_iter().flatten().collect()
    }
}

/// Where an assignment draw can land.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentChoice {
    Existing(usize),
    Auxiliary(usize),
}

/// Unnormalized log weights of the assignment conditional for `obj`, which
/// must already be detached from `state`. The shared denominator
/// (n + m − 1 + α) is dropped.
pub fn assignment_log_weights<M: ArrangementModel + ?Sized>(
    model: &M,
    state: &ChainState,
    obj: usize,
    aux: &[usize],
    alpha: f64,
) -> Vec<(AssignmentChoice, f64)> {
    let placement = state.placements[obj];
    let mut out: Vec<(AssignmentChoice, f64)> = state
        .components
        .iter()
        .map(|(&label, c)| {
            let w = (c.count as f64).ln() + model.log_potential(obj, placement, c.pose);
            (AssignmentChoice::Existing(label), w)
        })
        .collect();
    let aux_weight = (alpha / aux.len() as f64).ln();
    out.extend(
        aux.iter()
            .enumerate()
            .map(|(k, &pose)| (AssignmentChoice::Auxiliary(k), aux_weight + model.log_potential(obj, placement, pose))),
    );
    out
}

/// Draws a new component for `obj` and updates the state.
///
/// `aux` are the auxiliary poses drawn from P₀. If `obj` currently sits
/// alone in its component, the caller should pass that component's pose as
/// `aux[0]` so the move stays reversible. Unselected auxiliaries are
/// discarded. Returns the new label.
pub fn sample_assignment<M: ArrangementModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    state: &mut ChainState,
    obj: usize,
    aux: &[usize],
    alpha: f64,
    rng: &mut R,
) -> usize {
    if state.components.contains_key(&state.assignments[obj]) {
        state.detach(obj);
    }
    let weights = assignment_log_weights(model, state, obj, aux, alpha);
    let logw: Vec<f64> = weights.iter().map(|(_, w)| *w).collect();
    let mut scratch = Vec::with_capacity(logw.len());
    let choice = match sample_log_categorical(&logw, &mut scratch, rng) {
        Some(k) => weights[k].0,
        // Degenerate: every weight is −∞. Fall back to a uniform auxiliary.
        None => AssignmentChoice::Auxiliary(rng.random_range(0..aux.len())),
    };
    match choice {
        AssignmentChoice::Existing(label) => {
            state.attach_existing(obj, label);
            label
        }
        AssignmentChoice::Auxiliary(k) => state.attach_new(obj, aux[k]),
    }
}

/// Exact draw of a component's pose: ln P₀(H) + Σ ln Ψ(Oᵢ, H) over members.
/// Keeps the current pose if every candidate has zero weight.
pub fn resample_pose<M: ArrangementModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    state: &mut ChainState,
    label: usize,
    rng: &mut R,
) -> usize {
    let mut acc: Vec<f64> = (0..model.num_poses()).map(|h| model.pose_log_prior(h)).collect();
    let members: Vec<usize> = state.members(label).collect();
    for i in members {
        model.add_pose_scores(i, state.placements[i], &mut acc);
    }
    let mut scratch = Vec::with_capacity(acc.len());
    let comp = state.components.get_mut(&label).expect("occupied label");
    if let Some(h) = sample_log_categorical(&acc, &mut scratch, rng) {
        comp.pose = h;
    }
    comp.pose
}

/// Exact draw of a target's placement against its component's pose.
/// Keeps the current placement if every option has zero weight.
pub fn resample_placement<M: ArrangementModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    state: &mut ChainState,
    obj: usize,
    rng: &mut R,
) -> Result<usize> {
    let n = model
        .num_placements(obj)
        .ok_or_else(|| Error::Config(format!("object {obj} is fixed")))?;
    if n == 0 {
        return Err(Error::EmptyCandidateSet(format!("object {obj} has no placements")));
    }
    let mut scores = Vec::with_capacity(n);
    model.placement_scores(obj, state.pose_of(obj), &mut scores);
    let mut scratch = Vec::with_capacity(n);
    if let Some(p) = sample_log_categorical(&scores, &mut scratch, rng) {
        state.placements[obj] = p;
    }
    Ok(state.placements[obj])
}

/// A running Gibbs chain over a model.
pub struct Chain<'m, M: ArrangementModel + ?Sized> {
    model: &'m M,
    config: DpConfig,
    prior: CumulativeTable,
    pub state: ChainState,
    rng: ChaCha8Rng,
}

impl<'m, M: ArrangementModel + ?Sized> Chain<'m, M> {
    /// Uniform-random initial placements; every object starts in its own
    /// component with a fresh pose from P₀.
    pub fn new(model: &'m M, config: &DpConfig) -> Result<Self> {
        config.validate()?;
        if model.num_poses() == 0 {
            return Err(Error::EmptyCandidateSet("no pose candidates".into()));
        }
        let lp: Vec<f64> = (0..model.num_poses()).map(|h| model.pose_log_prior(h)).collect();
        let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let prior = CumulativeTable::new(lp.iter().map(|w| (w - max).exp()))
            .ok_or_else(|| Error::EmptyCandidateSet("base measure has no mass".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut placements = Vec::with_capacity(model.num_objects());
        for i in 0..model.num_objects() {
            placements.push(match model.num_placements(i) {
                None => 0,
                Some(0) => return Err(Error::EmptyCandidateSet(format!("object {i} has no placements"))),
                Some(n) => rng.random_range(0..n),
            });
        }
        let poses: Vec<usize> = (0..model.num_objects()).map(|_| prior.sample(&mut rng)).collect();
        Ok(Chain {
            model,
            config: config.clone(),
            prior,
            state: ChainState::singletons(&poses, placements),
            rng,
        })
    }

    pub fn draw_prior_pose(&mut self) -> usize {
        self.prior.sample(&mut self.rng)
    }

    /// One full sweep: assignments for every object, then each occupied
    /// component's pose, then every target's placement.
    pub fn sweep(&mut self) -> Result<()> {
        let z = self.config.z;
        let mut aux = Vec::with_capacity(z);
        for i in 0..self.model.num_objects() {
            aux.clear();
            let label = self.state.assignments[i];
            if self.state.components[&label].count == 1 {
                aux.push(self.state.components[&label].pose);
            }
            while aux.len() < z {
                aux.push(self.prior.sample(&mut self.rng));
            }
            sample_assignment(self.model, &mut self.state, i, &aux, self.config.alpha, &mut self.rng);
        }
        let labels: Vec<usize> = self.state.components.keys().copied().collect();
        for label in labels {
            resample_pose(self.model, &mut self.state, label, &mut self.rng);
        }
        for i in 0..self.model.num_objects() {
            if self.model.num_placements(i).is_some() {
                resample_placement(self.model, &mut self.state, i, &mut self.rng)?;
            }
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<Vec<Snapshot>> {
        let mut out = Vec::with_capacity(self.config.kept_snapshots() / self.config.chains);
        for s in 0..self.config.sweeps {
            self.sweep()?;
            if self.config.keeps(s) {
                out.push(Snapshot::capture(&self.state));
            }
        }
        Ok(out)
    }
}

/// Runs `config.chains` full chains and returns their kept snapshots,
/// concatenated in chain order. Reproducible from `config.seed`.
pub fn run_chain<M: ArrangementModel + ?Sized>(model: &M, config: &DpConfig) -> Result<Vec<Snapshot>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.kept_snapshots());
    for k in 0..config.chains {
        let one = DpConfig { seed: config.chain_seed(k), chains: 1, ..config.clone() };
        out.extend(Chain::new(model, &one)?.run()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_model(n_obj: usize, n_pose: usize) -> TableModel {
        TableModel {
            table: vec![vec![vec![0.0; n_pose]]; n_obj],
            fixed: vec![true; n_obj],
            prior: vec![0.0; n_pose],
        }
    }

    #[test]
    fn assignment_probabilities_by_hand() {
        let model = constant_model(2, 4);
        // Object 1 sits on pose A (label 7); object 0 is being reassigned.
        let mut state = ChainState::from_parts(vec![3, 7], BTreeMap::from([(3, 0), (7, 1)]), vec![0, 0]).unwrap();
        state.detach(0);
        let w = assignment_log_weights(&model, &state, 0, &[2, 3], 1.0);
        let p = crate::sampling::softmax(&w.iter().map(|x| x.1).collect::<Vec<_>>()).unwrap();
        assert_eq!(w[0].0, AssignmentChoice::Existing(7));
        for (got, want) in p.iter().zip([0.5, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn assignment_frequencies_match_analytic() {
        let mut model = constant_model(2, 3);
        model.table[0][0] = vec![0.0, 1.0, -0.5];
        let aux = [1, 2];
        let base = ChainState::from_parts(vec![5, 9], BTreeMap::from([(5, 2), (9, 0)]), vec![0, 0]).unwrap();
        let mut detached = base.clone();
        detached.detach(0);
        let w = assignment_log_weights(&model, &detached, 0, &aux, 1.0);
        let p = crate::sampling::softmax(&w.iter().map(|x| x.1).collect::<Vec<_>>()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            let mut s = base.clone();
            let label = sample_assignment(&model, &mut s, 0, &aux, 1.0, &mut rng);
            assert!(s.check_invariants());
            let k = if label == 9 { 0 } else if s.components[&label].pose == 1 { 1 } else { 2 };
            counts[k] += 1;
        }
        let tv: f64 = counts.iter().zip(&p).map(|(&c, &q)| (c as f64 / n as f64 - q).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn zero_potential_component_is_excluded() {
        let mut model = constant_model(2, 3);
        model.table[0][0] = vec![f64::NEG_INFINITY, 0.0, 0.0];
        let base = ChainState::from_parts(vec![0, 1], BTreeMap::from([(0, 2), (1, 0)]), vec![0, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let mut s = base.clone();
            let l = sample_assignment(&model, &mut s, 0, &[1, 2], 1.0, &mut rng);
            assert_ne!(l, 1, "pose 0 has zero potential");
        }
    }

    #[test]
    fn degenerate_weights_fall_back_to_auxiliaries() {
        let mut model = constant_model(1, 2);
        model.table[0][0] = vec![f64::NEG_INFINITY; 2];
        let mut s = ChainState::singletons(&[0], vec![0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        sample_assignment(&model, &mut s, 0, &[0, 1], 1.0, &mut rng);
        assert!(s.check_invariants());
        assert_eq!(s.num_components(), 1);
    }

    #[test]
    fn pose_draw_with_constant_likelihood_follows_prior() {
        let mut model = constant_model(1, 3);
        model.prior = vec![0.5f64.ln(), 0.3f64.ln(), 0.2f64.ln()];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = ChainState::singletons(&[0], vec![0]);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[resample_pose(&model, &mut s, 0, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip([0.5, 0.3, 0.2]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
    }

    #[test]
    fn pose_draw_with_hand_set_potentials() {
        let mut model = constant_model(1, 3);
        model.table[0][0] = vec![2f64.ln(), 0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = ChainState::singletons(&[1], vec![0]);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[resample_pose(&model, &mut s, 0, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip([0.5, 0.25, 0.25]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
    }

    #[test]
    fn disjoint_supports_keep_previous_pose() {
        let mut model = constant_model(2, 4);
        let ninf = f64::NEG_INFINITY;
        model.table[0][0] = vec![0.0, 0.0, ninf, ninf];
        model.table[1][0] = vec![ninf, ninf, 0.0, 0.0];
        let mut s = ChainState::from_parts(vec![0, 0], BTreeMap::from([(0, 3)]), vec![0, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(resample_pose(&model, &mut s, 0, &mut rng), 3);
    }

    #[test]
    fn placement_draws() {
        let mut model = constant_model(1, 1);
        model.fixed = vec![false];
        model.table[0] = vec![vec![0.0]];
        let mut s = ChainState::singletons(&[0], vec![0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(resample_placement(&model, &mut s, 0, &mut rng).unwrap(), 0);

        model.table[0] = vec![vec![0.0], vec![1.0], vec![2.0]];
        let p = crate::sampling::softmax(&[0.0, 1.0, 2.0]).unwrap();
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[resample_placement(&model, &mut s, 0, &mut rng).unwrap()] += 1;
        }
        for i in 0..3 {
            assert!((counts[i] as f64 / n as f64 - p[i]).abs() < 0.01);
        }

        model.table[0] = vec![vec![0.3], vec![0.3]];
        let mut c0 = 0;
        for _ in 0..n {
            c0 += usize::from(resample_placement(&model, &mut s, 0, &mut rng).unwrap() == 0);
        }
        assert!((c0 as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn schedule_arithmetic_and_determinism() {
        let model = constant_model(3, 5);
        let cfg = DpConfig {
            sweeps: 11,
            burn_in: 10,
            thinning: 1,
            seed: 42,
            ..DpConfig::default()
        };
        assert_eq!(run_chain(&model, &cfg).unwrap().len(), 1);
        let cfg = DpConfig {
            sweeps: 500,
            burn_in: 200,
            thinning: 2,
            ..cfg
        };
        let a = run_chain(&model, &cfg).unwrap();
        assert_eq!(a.len(), 150);
        assert_eq!(a.len(), cfg.kept_snapshots());
        assert_eq!(a, run_chain(&model, &cfg).unwrap());
    }

    #[test]
    fn pooled_chains_concatenate_single_chains() {
        let model = TableModel::random(4, 3, 5, 9);
        let cfg = DpConfig { sweeps: 40, burn_in: 10, chains: 3, seed: 5, ..DpConfig::default() };
        let pooled = run_chain(&model, &cfg).unwrap();
        assert_eq!(pooled.len(), cfg.kept_snapshots());
        let mut expect = Vec::new();
        for k in 0..3 {
            let one = DpConfig { seed: cfg.chain_seed(k), chains: 1, ..cfg.clone() };
            expect.extend(run_chain(&model, &one).unwrap());
        }
        assert_eq!(pooled, expect);
        assert_eq!(cfg.chain_seed(0), 5);
    }

    #[test]
    fn invalid_config_rejected() {
        let model = constant_model(1, 1);
        let cfg = DpConfig {
            sweeps: 5,
            burn_in: 5,
            ..DpConfig::default()
        };
        assert!(matches!(run_chain(&model, &cfg), Err(Error::Config(_))));
        let cfg = DpConfig { chains: 0, ..DpConfig::default() };
        assert!(matches!(run_chain(&model, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn sweeps_preserve_invariants() {
        let mut model = constant_model(6, 4);
        for (i, t) in model.table.iter_mut().enumerate() {
            t[0] = (0..4).map(|h| ((i + h) % 3) as f64).collect();
        }
        let mut chain = Chain::new(&model, &DpConfig::default()).unwrap();
        for _ in 0..50 {
            chain.sweep().unwrap();
            assert!(chain.state.check_invariants());
        }
    }

    #[test]
    fn higher_alpha_gives_more_components() {
        let model = constant_model(20, 5);
        let mean_k = |alpha: f64| {
            let mut total = 0usize;
            for seed in 0..200 {
                let cfg = DpConfig {
                    alpha,
                    sweeps: 30,
                    burn_in: 29,
                    thinning: 1,
                    seed,
                    ..DpConfig::default()
                };
                total += run_chain(&model, &cfg).unwrap()[0].num_components();
            }
            total as f64 / 200.0
        };
        assert!(mean_k(5.0) > mean_k(1.0));
        assert!(mean_k(1.0) > mean_k(0.2));
    }
}
