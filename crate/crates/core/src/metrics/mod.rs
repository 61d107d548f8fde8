//! Evaluation metrics over programs and meshes.

mod otr;
mod report;
mod ros;

use thiserror::Error;

use crate::geometry::polygon_intersection_area;
use crate::program::{check_format, BlockProgram, FormatVerdict, ProgramKind};

pub use otr::{otr, otr_of_meshes, planar_patches, PlanarPatch};
pub use report::{FormatFlags, QualityReport, ReportInput, ReportItem, ReportSummary, CSV_HEADER};
pub use ros::{feature_edges, ros, ros_of_edges, ros_of_meshes, RosConfig, RosScope};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("block region has zero area")]
    EmptyRegion,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("mesh has no horizontal edges")]
    DegenerateMesh,
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(u32, u32),
    #[error("i/o: {0}")]
    Io(String),
}

/// Total pairwise overlap of the true footprints over the region area.
pub fn collision_rate(program: &BlockProgram) -> Result<f64, MetricsError> {
    let area = program.region.area();
    if !(area > 0.0 && area.is_finite()) {
        return Err(MetricsError::EmptyRegion);
    }
    let polys: Vec<_> = program.elements.iter().map(|e| e.polygon.vertices()).collect();
    let mut total = 0.0;
    for (i, a) in polys.iter().enumerate() {
        for b in &polys[i + 1..] {
            total += polygon_intersection_area(a, b);
        }
    }
    Ok(total / area)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormatAccuracy {
    pub accuracy: f64,
    pub verdicts: Vec<FormatVerdict>,
}

/// Share of corpus items whose format verdict passes.
pub fn format_accuracy<T: AsRef<[u8]>>(corpus: &[T], kind: ProgramKind) -> Result<FormatAccuracy, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let verdicts: Vec<_> = corpus.iter().map(|t| check_format(t.as_ref(), kind)).collect();
    let ok = verdicts.iter().filter(|v| v.overall).count();
    Ok(FormatAccuracy { accuracy: ok as f64 / corpus.len() as f64, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pts;
    use crate::program::{BlockElement, FootprintPolygon, Region};

    fn sq(id: &str, x: f64, y: f64, s: f64) -> BlockElement {
        BlockElement {
            id: id.into(),
            element_type: "office".into(),
            polygon: FootprintPolygon::new(pts(&[(x, y), (x + s, y), (x + s, y + s), (x, y + s)])).unwrap(),
            floor_count: None,
            facade: None,
        }
    }

    #[test]
    fn collision_examples() {
        let region = Region { width: 100.0, height: 100.0 };
        let p = BlockProgram { description: None, region, elements: vec![sq("a", 0.0, 0.0, 10.0), sq("b", 20.0, 0.0, 10.0)] };
        assert_eq!(collision_rate(&p).unwrap(), 0.0);
        let p = BlockProgram { description: None, region, elements: vec![sq("a", 0.0, 0.0, 10.0), sq("b", 0.0, 0.0, 10.0)] };
        assert!((collision_rate(&p).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn format_accuracy_counts() {
        let good = br#"[{"id": "a", "type": "office", "polygon": [[0,0],[1,0],[1,1]], "floor_count": 2, "facade": "x"}]"#;
        let corpus: Vec<&[u8]> = vec![good, good, b"{", good];
        let fa = format_accuracy(&corpus, ProgramKind::Block).unwrap();
        assert_eq!(fa.accuracy, 0.75);
        let doubled: Vec<&[u8]> = corpus.iter().chain(&corpus).copied().collect();
        assert_eq!(format_accuracy(&doubled, ProgramKind::Block).unwrap().accuracy, 0.75);
        assert_eq!(format_accuracy::<&[u8]>(&[], ProgramKind::Block), Err(MetricsError::EmptyCorpus));
    }
}
