//! Convex mixture of the human-context and object-context distributions.

use crate::error::{Error, Result};
use crate::scene::PlacementCandidate;

use super::CandidateDistribution;

/// ω values tried when ω is tuned on validation scenes.
pub const OMEGA_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const DEFAULT_OMEGA: f64 = 0.5;

fn check_normalized(d: &CandidateDistribution, what: &str) -> Result<()> {
    let s: f64 = d.probs.iter().sum();
    if (s - 1.0).abs() > 1e-6 || d.probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Domain(format!("{what} distribution is not normalized (sum {s})")));
    }
    Ok(())
}

/// ω·p_human + (1 − ω)·p_obj, candidate by candidate.
///
/// When candidate lists are supplied they must be identical.
pub fn combine_human_object(
    human: &CandidateDistribution,
    object: &CandidateDistribution,
    omega: f64,
    supports: Option<(&[PlacementCandidate], &[PlacementCandidate])>,
) -> Result<CandidateDistribution> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::Config(format!("omega must lie in [0, 1], got {omega}")));
    }
    if human.probs.len() != object.probs.len() {
        return Err(Error::MismatchedCandidates(format!(
            "{} human candidates vs {} object candidates",
            human.probs.len(),
            object.probs.len()
        )));
    }
    if let Some((a, b)) = supports {
        if a != b {
            return Err(Error::MismatchedCandidates("candidate lists differ".into()));
        }
    }
    check_normalized(human, "human")?;
    check_normalized(object, "object")?;
    // The endpoints return the inputs untouched so they are reproduced
    // exactly.
    if omega == 1.0 {
        return Ok(human.clone());
    }
    if omega == 0.0 {
        return Ok(object.clone());
    }
    Ok(CandidateDistribution {
        probs: human
            .probs
            .iter()
            .zip(&object.probs)
            .map(|(h, o)| omega * h + (1.0 - omega) * o)
            .collect(),
    })
}
