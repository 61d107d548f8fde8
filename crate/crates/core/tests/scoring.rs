use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;

use base64::Engine;
use cityforge_core::program::{BlockElement, BlockProgram, FootprintPolygon, Region};
use cityforge_core::scoring::{
    build_preference_pairs, density_score_from_coverage, overlap_fraction, render_topdown, score_density,
    score_overlap, score_spatial, DensityBand, ExternalScorer, ExternalScorerConfig, OverlapScope, ScoringConfig,
    ScoringError, SemanticSource, SpatialScore, StubScorer, BACKGROUND_RGB, BUILDING_RGB, DEFAULT_PAIR_THRESHOLD,
    GREENSPACE_RGB,
};
use cityforge_testkit::{self as kit, rect, LayoutOptions, RASTER_CELL};
use proptest::prelude::*;

fn element(id: &str, ty: &str, r: Vec<cityforge_core::geometry::Vertex2D>) -> BlockElement {
    let green = ty == "greenspace";
    BlockElement {
        id: id.into(),
        element_type: ty.into(),
        polygon: FootprintPolygon::new(r).unwrap(),
        floor_count: (!green).then_some(4),
        facade: None,
    }
}

/// Two disjoint buildings covering 60 % of a 10 x 10 block.
fn in_band() -> BlockProgram {
    BlockProgram {
        description: None,
        region: Region { width: 10.0, height: 10.0 },
        elements: vec![
            element("a", "office", rect(0.0, 0.0, 5.0, 6.0)),
            element("b", "residential", rect(5.0, 0.0, 10.0, 6.0)),
        ],
    }
}

#[test]
fn reward_matches_raster_oracle() {
    let mut rng = kit::rng(21);
    let band = DensityBand::default();
    for _ in 0..200 {
        let p = kit::random_layout(&mut rng, LayoutOptions::default());
        let o = kit::raster_overlap_fraction(&p, RASTER_CELL);
        let s = score_overlap(&p, OverlapScope::AllElements).unwrap();
        assert!((s - (10.0 * (1.0 - o)).clamp(0.0, 10.0)).abs() <= 0.1, "{s} vs O={o}");
        assert!((overlap_fraction(&p, OverlapScope::AllElements).unwrap() - o).abs() <= 0.01);
        let d = kit::raster_coverage(&p, RASTER_CELL);
        let sd = score_density(&p, band).unwrap();
        assert!((sd - kit::density_reference(d, 0.5, 0.8)).abs() <= 0.1 + 1e-9, "{sd} vs D={d}");
        let score = score_spatial(&p, "", &StubScorer, &ScoringConfig::default()).unwrap();
        let mean = (score.s_align + score.s_plau + score.s_overlap + score.s_density) / 4.0;
        assert!((score.s_spatial - mean).abs() < 1e-12);
    }
}

#[test]
fn density_is_continuous_at_band_edges() {
    let band = DensityBand::default();
    for edge in [0.5, 0.8] {
        let below = density_score_from_coverage(edge - 1e-9, band);
        let at = density_score_from_coverage(edge, band);
        let above = density_score_from_coverage(edge + 1e-9, band);
        assert!((below - at).abs() < 1e-6 && (above - at).abs() < 1e-6);
        assert_eq!(at, 10.0);
    }
    assert_eq!(density_score_from_coverage(0.0, band), 0.0);
    assert_eq!(density_score_from_coverage(1.0, band), 0.0);
    assert_eq!(density_score_from_coverage(0.25, band), 5.0);
    assert!(DensityBand::new(0.8, 0.5).is_err());
}

#[test]
fn in_band_fixture_scores_ten() {
    let p = in_band();
    let score = score_spatial(&p, "an office and a residential building", &StubScorer, &ScoringConfig::default()).unwrap();
    assert_eq!(score.s_overlap, 10.0);
    assert_eq!(score.s_density, 10.0);
    assert_eq!(score.s_align, 10.0);
    assert_eq!(score.s_plau, 10.0);
    assert_eq!(score.semantic_source, SemanticSource::Stub);
}

#[test]
fn preference_pairs_from_three_scores() {
    let c: Vec<(f64, SpatialScore)> = [10.0, 4.0, 3.0]
        .into_iter()
        .map(|v| (v, SpatialScore::combine(v, v, v, v, None, SemanticSource::Stub)))
        .collect();
    let pairs = build_preference_pairs(&c, DEFAULT_PAIR_THRESHOLD);
    let got: Vec<(f64, f64)> = pairs.iter().map(|p| (p.chosen, p.rejected)).collect();
    assert_eq!(got, [(10.0, 4.0), (10.0, 3.0)]);
}

#[test]
fn raster_palette_and_orientation() {
    let mut p = in_band();
    p.elements[1] = element("g", "greenspace", rect(5.0, 0.0, 10.0, 6.0));
    let r = render_topdown(&p, 100);
    assert_eq!((r.width, r.height), (100, 100));
    assert_eq!(r.count(BUILDING_RGB), 3000);
    assert_eq!(r.count(GREENSPACE_RGB), 3000);
    assert_eq!(r.count(BACKGROUND_RGB), 4000);
    // North up: y = 0 is the bottom row.
    assert_eq!(r.pixel(10, 99), BUILDING_RGB);
    assert_eq!(r.pixel(10, 0), BACKGROUND_RGB);
    let png = r.to_png();
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
}

fn unused_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn unreachable_judge_fails_or_falls_back() {
    let scorer = ExternalScorer::new(ExternalScorerConfig {
        url: format!("http://127.0.0.1:{}/score", unused_port()),
        timeout_ms: 2000,
        retries: 1,
        retry_backoff_ms: 1,
    });
    let p = in_band();
    let err = score_spatial(&p, "", &scorer, &ScoringConfig::default()).unwrap_err();
    assert!(matches!(err, ScoringError::ExternalScorerUnavailable(_)));
    let config = ScoringConfig { allow_stub_fallback: true, ..ScoringConfig::default() };
    let score = score_spatial(&p, "", &scorer, &config).unwrap();
    assert_eq!(score.semantic_source, SemanticSource::Stub);
}

/// Answers one request with `body` and hands back the request body.
fn one_shot_judge(body: &'static str) -> (String, mpsc::Receiver<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/judge", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        tx.send(String::from_utf8(buf).unwrap()).unwrap();
        let mut out = stream;
        write!(out, "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}", body.len()).unwrap();
    });
    (url, rx)
}

#[test]
fn judge_wire_contract() {
    let (url, rx) = one_shot_judge(r#"{"semantic_alignment": 7.5, "global_plausibility": 6.0}"#);
    let scorer = ExternalScorer::new(ExternalScorerConfig { url, retries: 0, ..Default::default() });
    let score = score_spatial(&in_band(), "two towers", &scorer, &ScoringConfig::default()).unwrap();
    assert_eq!((score.s_align, score.s_plau), (7.5, 6.0));
    assert_eq!(score.semantic_source, SemanticSource::External);
    let sent: serde_json::Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
    assert_eq!(sent["prompt"], "two towers");
    let png = base64::engine::general_purpose::STANDARD.decode(sent["image_png_b64"].as_str().unwrap()).unwrap();
    assert_eq!(&png[..4], b"\x89PNG");
}

#[test]
fn judge_out_of_range_is_rejected() {
    let (url, _rx) = one_shot_judge(r#"{"semantic_alignment": 12, "global_plausibility": 6.0}"#);
    let scorer = ExternalScorer::new(ExternalScorerConfig { url, retries: 0, ..Default::default() });
    let err = score_spatial(&in_band(), "", &scorer, &ScoringConfig::default()).unwrap_err();
    assert!(matches!(err, ScoringError::InvalidScore(_)));
}

proptest! {
    #[test]
    fn scores_stay_in_range(seed in any::<u64>()) {
        let p = kit::random_layout(&mut kit::rng(seed), LayoutOptions::default());
        let s = score_spatial(&p, "two offices and a park", &StubScorer, &ScoringConfig::default()).unwrap();
        for v in [s.s_align, s.s_plau, s.s_overlap, s.s_density, s.s_spatial] {
            prop_assert!((0.0..=10.0).contains(&v));
        }
    }

    #[test]
    fn overlap_score_is_translation_invariant(seed in any::<u64>()) {
        let p = kit::random_layout(&mut kit::rng(seed), LayoutOptions::default());
        let mut q = p.clone();
        q.region = Region { width: p.region.width + 10.0, height: p.region.height + 10.0 };
        for e in &mut q.elements {
            let moved: Vec<_> = e.polygon.vertices().iter().map(|v| kit::v(v.x + 10.0, v.y + 10.0)).collect();
            e.polygon = FootprintPolygon::new(moved).unwrap();
        }
        let area_ratio = p.region.area() / q.region.area();
        let (op, oq) = (overlap_fraction(&p, OverlapScope::AllElements).unwrap(), overlap_fraction(&q, OverlapScope::AllElements).unwrap());
        prop_assert!((op * area_ratio - oq).abs() < 1e-9);
    }
}
