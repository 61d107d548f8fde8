use serde::{Deserialize, Serialize};

use super::SpatialScore;
use crate::program::BlockProgram;

pub const DEFAULT_PAIR_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair<P = BlockProgram> {
    pub chosen: P,
    pub rejected: P,
    pub chosen_score: SpatialScore,
    pub rejected_score: SpatialScore,
    pub margin: f64,
}

/// Every unordered pair whose reward gap is at least `threshold`, the higher
/// scoring candidate chosen. Pairs come out in candidate index order.
pub fn build_preference_pairs<P: Clone>(candidates: &[(P, SpatialScore)], threshold: f64) -> Vec<PreferencePair<P>> {
    let mut out = Vec::new();
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates[i + 1..] {
            let diff = a.1.s_spatial - b.1.s_spatial;
            if diff.abs() + 1e-9 < threshold {
                continue;
            }
            let (hi, lo) = if diff >= 0.0 { (a, b) } else { (b, a) };
            out.push(PreferencePair {
                chosen: hi.0.clone(),
                rejected: lo.0.clone(),
                chosen_score: hi.1.clone(),
                rejected_score: lo.1.clone(),
                margin: diff.abs(),
            });
        }
    }
    out
}
