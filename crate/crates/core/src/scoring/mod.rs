//! Spatial alignment reward.
//!
//! Two structural components are computed here from footprint bounding boxes:
//!
//! - overlap: `O = sum_{i<j} A(R_i ∩ R_j) / A(L)`, scored `10 * (1 - O)`
//!   clamped to `[0, 10]`;
//! - density: built coverage `D = sum A(R_i) / A(L)` over buildings only,
//!   scored 10 inside `[d_min, d_max]` and falling linearly to 0 at `D = 0`
//!   and `D = 1`.
//!
//! The semantic components come from a [`SemanticScorer`]; the reward is the
//! (optionally weighted) mean of all four.

mod external;
mod pairs;
mod render;
mod semantic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::aabb_of;
use crate::program::BlockProgram;

pub use external::{ExternalScorer, ExternalScorerConfig};
pub use pairs::{build_preference_pairs, PreferencePair, DEFAULT_PAIR_THRESHOLD};
pub use render::{render_topdown, render_topdown_with, Palette, Raster, Rgb, BACKGROUND_RGB, BUILDING_RGB, GREENSPACE_RGB};
pub use semantic::{
    declared_types, program_types, SemanticRequest, SemanticScorer, SemanticScores, SemanticSource, StubScorer,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("block region has zero area")]
    EmptyRegion,
    #[error("density band must satisfy 0 < d_min < d_max < 1 (got {d_min}, {d_max})")]
    InvalidBand { d_min: f64, d_max: f64 },
    #[error("external scorer unavailable: {0}")]
    ExternalScorerUnavailable(String),
    #[error("scorer returned an out-of-range value: {0}")]
    InvalidScore(String),
}

/// Target built-coverage interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBand {
    pub d_min: f64,
    pub d_max: f64,
}

impl DensityBand {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self, ScoringError> {
        if d_min > 0.0 && d_min < d_max && d_max < 1.0 {
            Ok(Self { d_min, d_max })
        } else {
            Err(ScoringError::InvalidBand { d_min, d_max })
        }
    }
}

impl Default for DensityBand {
    fn default() -> Self {
        Self { d_min: 0.5, d_max: 0.8 }
    }
}

/// Which elements contribute bounding boxes to the overlap sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapScope {
    #[default]
    AllElements,
    BuildingsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub band: DensityBand,
    pub overlap_scope: OverlapScope,
    /// Weights for (align, plau, overlap, density); uniform when absent.
    pub weights: Option<[f64; 4]>,
    /// Use the stub when the configured external scorer fails.
    pub allow_stub_fallback: bool,
    /// Longest raster side, in pixels, handed to the semantic scorer.
    pub raster_resolution: u32,
    pub palette: Palette,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            band: DensityBand::default(),
            overlap_scope: OverlapScope::default(),
            weights: None,
            allow_stub_fallback: false,
            raster_resolution: 512,
            palette: Palette::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialScore {
    pub s_align: f64,
    pub s_plau: f64,
    pub s_overlap: f64,
    pub s_density: f64,
    pub s_spatial: f64,
    pub semantic_source: SemanticSource,
}

impl SpatialScore {
    /// Combines the four components; `weights` default to uniform.
    pub fn combine(
        s_align: f64,
        s_plau: f64,
        s_overlap: f64,
        s_density: f64,
        weights: Option<[f64; 4]>,
        semantic_source: SemanticSource,
    ) -> Self {
        let parts = [s_align, s_plau, s_overlap, s_density];
        let s_spatial = match weights {
            Some(w) if w.iter().sum::<f64>() > 0.0 => {
                parts.iter().zip(w).map(|(s, w)| s * w).sum::<f64>() / w.iter().sum::<f64>()
            }
            _ => parts.iter().sum::<f64>() / parts.len() as f64,
        };
        Self { s_align, s_plau, s_overlap, s_density, s_spatial, semantic_source }
    }
}

fn region_area(program: &BlockProgram) -> Result<f64, ScoringError> {
    let area = program.region.area();
    if area > 0.0 && area.is_finite() {
        Ok(area)
    } else {
        Err(ScoringError::EmptyRegion)
    }
}

/// Bounding-box overlap fraction `O`.
pub fn overlap_fraction(program: &BlockProgram, scope: OverlapScope) -> Result<f64, ScoringError> {
    let area = region_area(program)?;
    let boxes: Vec<_> = program
        .elements
        .iter()
        .filter(|e| scope == OverlapScope::AllElements || e.is_building())
        .map(|e| aabb_of(e.polygon.vertices()))
        .collect();
    let mut total = 0.0;
    for (i, a) in boxes.iter().enumerate() {
        for b in &boxes[i + 1..] {
            total += a.intersection_area(b);
        }
    }
    Ok(total / area)
}

/// Built coverage `D` from building bounding boxes.
pub fn coverage(program: &BlockProgram) -> Result<f64, ScoringError> {
    let area = region_area(program)?;
    let built: f64 = program.buildings().map(|e| aabb_of(e.polygon.vertices()).area()).sum();
    Ok(built / area)
}

pub fn overlap_score_from_fraction(overlap: f64) -> f64 {
    (10.0 * (1.0 - overlap)).clamp(0.0, 10.0)
}

pub fn score_overlap(program: &BlockProgram, scope: OverlapScope) -> Result<f64, ScoringError> {
    overlap_fraction(program, scope).map(overlap_score_from_fraction)
}

/// The piecewise-linear density score for a coverage value.
pub fn density_score_from_coverage(coverage: f64, band: DensityBand) -> f64 {
    if coverage < band.d_min {
        (10.0 * coverage / band.d_min).max(0.0)
    } else if coverage <= band.d_max {
        10.0
    } else {
        (10.0 * (1.0 - coverage) / (1.0 - band.d_max)).max(0.0)
    }
}

pub fn score_density(program: &BlockProgram, band: DensityBand) -> Result<f64, ScoringError> {
    coverage(program).map(|d| density_score_from_coverage(d, band))
}

/// Full reward for one program.
///
/// When the scorer fails and `config.allow_stub_fallback` is set, the stub
/// supplies the semantic components and the score is tagged accordingly.
pub fn score_spatial(
    program: &BlockProgram,
    prompt: &str,
    scorer: &dyn SemanticScorer,
    config: &ScoringConfig,
) -> Result<SpatialScore, ScoringError> {
    let s_overlap = score_overlap(program, config.overlap_scope)?;
    let s_density = score_density(program, config.band)?;
    let raster = render_topdown_with(program, config.raster_resolution, &config.palette).to_png();
    let request = SemanticRequest { prompt, program, raster_png: &raster };
    let (semantic, source) = match scorer.score(&request) {
        Ok(s) => (s, scorer.source()),
        Err(ScoringError::ExternalScorerUnavailable(_)) if config.allow_stub_fallback => {
            (StubScorer.score(&request)?, SemanticSource::Stub)
        }
        Err(e) => return Err(e),
    };
    Ok(SpatialScore::combine(
        semantic.semantic_alignment,
        semantic.global_plausibility,
        s_overlap,
        s_density,
        config.weights,
        source,
    ))
}
