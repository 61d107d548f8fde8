//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cityforge::config::Config;
use cityforge::service::{serve, AppState, ServeOptions};
use cityforge_core::edit::{apply_diff, apply_edit, EditContext, EditError, EditVerb};
use cityforge_core::executor::{
    assemble_scene, export_glb, export_obj, extrude_footprint, ExecutorConfig, MaterialTag, Mesh, PrismMaterials,
    ScenePackage,
};
use cityforge_core::geometry::{signed_area, Vertex2D};
use cityforge_core::metrics::{collision_rate, format_accuracy, otr, otr_of_meshes, ros, RosConfig};
use cityforge_core::program::{parse_block_program, serialize_block, BlockElement, FootprintPolygon, ProgramKind};
use cityforge_core::scoring::{
    build_preference_pairs, coverage, density_score_from_coverage, overlap_fraction, score_density, score_overlap,
    score_spatial, DensityBand, OverlapScope, ScoringConfig, SemanticSource, SpatialScore, StubScorer,
};
use cityforge_testkit::{self as kit, LayoutOptions, RASTER_CELL};
use rand::Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn sample_round_trip() -> Outcome {
    let first = parse_block_program(kit::SAMPLE_BLOCK.as_bytes()).map_err(|e| e.to_string())?.program;
    first.validate().map_err(|e| e.to_string())?;
    let text = serialize_block(&first);
    let second = parse_block_program(text.as_bytes()).map_err(|e| e.to_string())?.program;
    ensure!(first == second, "re-parsed program differs");
    ensure!(serialize_block(&second) == text, "serialization is not stable");
    let m = second.element("mixed_1").ok_or("mixed_1 missing")?;
    let area = signed_area(m.polygon.vertices()).abs();
    ensure!(area == 484.0, "mixed_1 area {area}");
    ensure!(m.floor_count == Some(12), "mixed_1 floors {:?}", m.floor_count);
    Ok(format!("area {area} m2, 12 floors"))
}

fn reward_fidelity() -> Outcome {
    let mut rng = kit::rng(21);
    let band = DensityBand::default();
    let (mut worst_s, mut worst_o, mut worst_d) = (0f64, 0f64, 0f64);
    for i in 0..200 {
        let p = kit::random_layout(&mut rng, LayoutOptions::default());
        let o_raster = kit::raster_overlap_fraction(&p, RASTER_CELL);
        let s = score_overlap(&p, OverlapScope::AllElements).map_err(|e| e.to_string())?;
        let o = overlap_fraction(&p, OverlapScope::AllElements).map_err(|e| e.to_string())?;
        ensure!(s == (10.0 * (1.0 - o)).clamp(0.0, 10.0), "layout {i}: s_overlap {s} vs O {o}");
        worst_s = worst_s.max((s - (10.0 * (1.0 - o_raster)).clamp(0.0, 10.0)).abs());
        worst_o = worst_o.max((o - o_raster).abs());
        let d = coverage(&p).map_err(|e| e.to_string())?;
        let sd = score_density(&p, band).map_err(|e| e.to_string())?;
        ensure!((sd - kit::density_reference(d, 0.5, 0.8)).abs() <= 1e-9, "layout {i}: s_density {sd} at D {d}");
        worst_d = worst_d.max((d - kit::raster_coverage(&p, RASTER_CELL)).abs());
        let score = score_spatial(&p, "", &StubScorer, &ScoringConfig::default()).map_err(|e| e.to_string())?;
        let mean = (score.s_align + score.s_plau + score.s_overlap + score.s_density) / 4.0;
        ensure!((score.s_spatial - mean).abs() < 1e-12, "layout {i}: s_spatial {} vs mean {mean}", score.s_spatial);
    }
    // 1% absolute on the [0, 10] score and on the [0, 1] fractions.
    ensure!(worst_s <= 0.1, "s_overlap off the raster oracle by {worst_s}");
    ensure!(worst_o <= 0.01, "O off the raster oracle by {worst_o}");
    ensure!(worst_d <= 0.01, "D off the raster oracle by {worst_d}");
    for edge in [0.5, 0.8] {
        let at = density_score_from_coverage(edge, band);
        for x in [edge - 1e-9, edge + 1e-9] {
            let jump = (density_score_from_coverage(x, band) - at).abs();
            ensure!(jump < 1e-6, "s_density jumps by {jump} at D = {edge}");
        }
    }
    Ok(format!("max |ds_overlap| {worst_s:.2e}, max |dO| {worst_o:.2e}, max |dD| {worst_d:.2e}"))
}

fn collision_oracle() -> Outcome {
    let mut rng = kit::rng(31);
    let mut worst = 0f64;
    for i in 0..100 {
        let p = kit::random_layout(&mut rng, LayoutOptions::default());
        let exact = collision_rate(&p).map_err(|e| e.to_string())?;
        let raster = kit::raster_collision_rate(&p, RASTER_CELL);
        worst = worst.max((exact - raster).abs());
        ensure!(worst <= 0.01, "layout {i}: {exact} vs raster {raster}");
    }
    Ok(format!("max |d| {worst:.2e}"))
}

fn format_accuracy_harness() -> Outcome {
    let mut rng = kit::rng(41);
    let mut corpus: Vec<Vec<u8>> = (0..98)
        .map(|_| serialize_block(&kit::random_layout(&mut rng, LayoutOptions::default())).into_bytes())
        .collect();
    let mut broken = corpus[0].clone();
    broken.truncate(broken.len() / 2);
    corpus.push(broken);
    corpus.push(kit::BOWTIE_BLOCK.as_bytes().to_vec());
    let fa = format_accuracy(&corpus, ProgramKind::Block).map_err(|e| e.to_string())?;
    ensure!(fa.accuracy == 0.98, "accuracy {}", fa.accuracy);
    ensure!(!fa.verdicts[98].json_parsable, "truncated document parsed");
    ensure!(!fa.verdicts[99].geometry_valid, "bow-tie accepted");
    Ok(format!("accuracy {}", fa.accuracy))
}

fn glb_triangles(bytes: &[u8]) -> Result<usize, String> {
    let (doc, buffers, _) = gltf::import_slice(bytes).map_err(|e| e.to_string())?;
    let mut n = 0;
    for mesh in doc.meshes() {
        for prim in mesh.primitives() {
            let reader = prim.reader(|b| Some(&buffers[b.index()]));
            n += reader.read_indices().ok_or("primitive without indices")?.into_u32().count() / 3;
        }
    }
    Ok(n)
}

fn obj_triangles(text: &str) -> usize {
    text.lines().filter(|l| l.starts_with("f ") && l.split_whitespace().count() == 4).count()
}

fn scene_triangles(scene: &ScenePackage) -> usize {
    scene.buildings.iter().map(|b| b.shell.triangles.len() + b.attachments.triangles.len()).sum::<usize>()
        + scene.greenspaces.iter().map(|g| g.mesh.triangles.len()).sum::<usize>()
        + scene.streets.triangles.len()
        + scene.props_mesh().triangles.len()
}

fn executor_invariants() -> Outcome {
    let mut rng = kit::rng(61);
    let opts = LayoutOptions { max_elements: 8, disjoint: true, greenspace_share: 0.25 };
    let mut shells = 0;
    for i in 0..50 {
        let city = kit::random_city(&mut rng, opts);
        let config = ExecutorConfig { seed: i, ..ExecutorConfig::default() };
        let scene = assemble_scene(&city.block, &city.buildings, &config).map_err(|e| format!("city {i}: {e}"))?;
        for b in &scene.buildings {
            let e = city.block.element(&b.id).ok_or("scene building without element")?;
            ensure!(b.shell.is_closed_manifold(), "city {i} {}: shell not a closed 2-manifold", b.id);
            ensure!(b.combined().is_closed_manifold(), "city {i} {}: attachments break the manifold", b.id);
            let (lo, hi) = b.shell.bounds().ok_or("empty shell")?;
            let expected = e.floors() as f64 * config.floor_height;
            ensure!(lo[2] == 0.0 && hi[2] == expected, "city {i} {}: height {} vs {expected}", b.id, hi[2] - lo[2]);
            shells += 1;
        }
        let n = scene_triangles(&scene);
        let glb = export_glb(&scene);
        ensure!(glb_triangles(&glb)? == n, "city {i}: glb reimport triangle count differs");
        let (obj, _) = export_obj(&scene, "scene.mtl");
        ensure!(obj_triangles(&obj) == n, "city {i}: obj reimport triangle count differs");
        let again = assemble_scene(&city.block, &city.buildings, &config).map_err(|e| e.to_string())?;
        ensure!(Sha256::digest(&glb) == Sha256::digest(export_glb(&again)), "city {i}: glb hash differs for the same seed");
    }
    Ok(format!("{shells} building shells"))
}

fn shell(poly: Vec<Vertex2D>, floors: u32) -> Result<Mesh, String> {
    let e = BlockElement {
        id: "s".into(),
        element_type: "office".into(),
        polygon: FootprintPolygon::new(poly).map_err(|e| e.to_string())?,
        floor_count: Some(floors),
        facade: None,
    };
    extrude_footprint(&e, 3.0, PrismMaterials::uniform(MaterialTag::Concrete)).map_err(|e| e.to_string())
}

fn metric_orderings() -> Outcome {
    let cfg = RosConfig::default();
    let mut rng = kit::rng(51);
    for _ in 0..50 {
        let (w, h) = (rng.random_range(2.0..30.0), rng.random_range(2.0..30.0));
        let poly = if rng.random_bool(0.5) {
            kit::rect(0.0, 0.0, w, h)
        } else {
            let (cx, cy) = (w * rng.random_range(0.2..0.8), h * rng.random_range(0.2..0.8));
            vec![kit::v(0.0, 0.0), kit::v(w, 0.0), kit::v(w, cy), kit::v(cx, cy), kit::v(cx, h), kit::v(0.0, h)]
        };
        let m = shell(poly, rng.random_range(1..20))?;
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let a = ros(&m, &cfg).map_err(|e| e.to_string())?;
        let b = ros(&m.rotated_z(theta), &cfg).map_err(|e| e.to_string())?;
        ensure!((a - 1.0).abs() <= 1e-6, "ROS {a} on an axis-aligned extrusion");
        ensure!((b - 1.0).abs() <= 1e-6, "ROS {b} after rotating by {theta}");
        let g = shell(kit::random_shape(&mut rng, 20.0, 20.0), 3)?;
        let (a, b) = (ros(&g, &cfg).map_err(|e| e.to_string())?, ros(&g.rotated_z(theta), &cfg).map_err(|e| e.to_string())?);
        ensure!((a - b).abs() <= 1e-6, "ROS not rotation invariant: {a} vs {b}");
    }
    let cube = Mesh::cuboid([0.0; 3], [1.0, 2.0, 3.0], MaterialTag::Concrete);
    let base = otr(&cube).map_err(|e| e.to_string())?;
    ensure!(base == 1.0, "box OTR {base}");
    let mut s = cube;
    for k in 1..=3 {
        s = s.subdivided();
        let v = otr(&s).map_err(|e| e.to_string())?;
        ensure!(v == 4f64.powi(k), "OTR {v} after {k} subdivisions");
    }
    let city = kit::sample_city();
    let scene = assemble_scene(&city.block, &city.buildings, &ExecutorConfig::default()).map_err(|e| e.to_string())?;
    let shells: Vec<&Mesh> = scene.buildings.iter().map(|b| &b.shell).collect();
    let out = otr_of_meshes(shells.iter().copied()).map_err(|e| e.to_string())?;
    let sub: Vec<Mesh> = shells.iter().map(|m| m.subdivided()).collect();
    let out_sub = otr_of_meshes(sub.iter()).map_err(|e| e.to_string())?;
    ensure!(out < out_sub, "executor OTR {out} not below subdivided {out_sub}");
    Ok(format!("executor OTR {out:.3} < subdivided {out_sub:.3}"))
}

fn edit_closure() -> Outcome {
    let ctx = EditContext::default();
    let mut rng = kit::rng(81);
    let (mut applied, mut rejected) = (0, 0);
    for i in 0..500 {
        let city = kit::random_city(&mut rng, LayoutOptions::default());
        let command = kit::random_edit_command(&mut rng, &city);
        let r = match apply_edit(&city, &command, &ctx) {
            Ok(r) => r,
            Err(EditError::UnknownTarget(_) | EditError::InvalidArgument(_) | EditError::InfeasibleDensity { .. }) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(format!("pair {i}: {e}")),
        };
        applied += 1;
        r.program_after.validate().map_err(|e| format!("pair {i}: result does not validate: {e}"))?;
        ensure!(apply_diff(&city, &r.diff).ok().as_ref() == Some(&r.program_after), "pair {i}: diff does not replay");
        match command.verb {
            EditVerb::SetFloorCount { .. } | EditVerb::SetStyle { .. } | EditVerb::SetComponent { .. } => {
                let twice = apply_edit(&r.program_after, &command, &ctx).map_err(|e| e.to_string())?;
                ensure!(twice.program_after == r.program_after && twice.diff.is_empty(), "pair {i}: not idempotent");
            }
            EditVerb::ScaleDensity { .. } => {
                let before = collision_rate(&city.block).map_err(|e| e.to_string())?;
                let after = collision_rate(&r.program_after.block).map_err(|e| e.to_string())?;
                ensure!(after <= before + 1e-9, "pair {i}: collision {before} -> {after}");
            }
            _ => {}
        }
    }
    Ok(format!("{applied} applied, {rejected} rejected with a typed error"))
}

fn preference_pairs() -> Outcome {
    let c: Vec<(f64, SpatialScore)> = [10.0, 4.0, 3.0]
        .into_iter()
        .map(|v| (v, SpatialScore::combine(v, v, v, v, None, SemanticSource::Stub)))
        .collect();
    let got: Vec<(f64, f64)> = build_preference_pairs(&c, 5.0).iter().map(|p| (p.chosen, p.rejected)).collect();
    ensure!(got == [(10.0, 4.0), (10.0, 3.0)], "pairs {got:?}");
    Ok(format!("{got:?}"))
}

fn service_contract() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(serve(listener, AppState::new(Config::default()), ServeOptions::default(), async {
            let _ = rx.await;
        }));
        let client = reqwest::Client::new();
        let block: Value = serde_json::from_str(kit::SAMPLE_BLOCK).map_err(|e| e.to_string())?;
        let (mut ok, mut conflict) = (0, 0);
        for round in 0..25 {
            let created: Value = client
                .post(format!("{base}/sessions"))
                .json(&json!({"block": block, "seed": round}))
                .send()
                .await
                .map_err(|e| e.to_string())?
                .json()
                .await
                .map_err(|e| e.to_string())?;
            let id = created["id"].as_str().ok_or("no session id")?.to_string();
            let edit = |command: &'static str| {
                let (client, url) = (client.clone(), format!("{base}/sessions/{id}/edits"));
                tokio::spawn(async move {
                    client.post(url).json(&json!({"base_revision": 0, "command": command})).send().await.map(|r| r.status())
                })
            };
            let (a, b) = (edit("set_floor_count mixed_1 5"), edit("set_floor_count mixed_2 4"));
            let mut statuses = [a.await.unwrap().map_err(|e| e.to_string())?, b.await.unwrap().map_err(|e| e.to_string())?];
            statuses.sort();
            ensure!(statuses == [200, 409], "round {round}: statuses {statuses:?}");
            ok += 1;
            conflict += 1;
            let scene = |revision: u64| {
                let client = client.clone();
                let url = format!("{base}/sessions/{id}/scene.glb?revision={revision}");
                async move { client.get(url).send().await?.bytes().await }
            };
            for r in [0, 1] {
                let first = scene(r).await.map_err(|e| e.to_string())?;
                let second = scene(r).await.map_err(|e| e.to_string())?;
                ensure!(first == second && !first.is_empty(), "round {round}: scene bytes for revision {r} vary");
            }
        }
        let _ = tx.send(());
        server.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
        Ok(format!("{ok} x 200 and {conflict} x 409 over {ok} races"))
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("sample round-trip", Some(Duration::from_secs(1)), sample_round_trip),
        ("reward formula fidelity", Some(Duration::from_secs(30)), reward_fidelity),
        ("collision oracle", None, collision_oracle),
        ("format accuracy harness", None, format_accuracy_harness),
        ("executor invariants", Some(Duration::from_secs(120)), executor_invariants),
        ("metric orderings", None, metric_orderings),
        ("edit closure", None, edit_closure),
        ("preference pairs", None, preference_pairs),
        ("service contract", None, service_contract),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS  {name:<26} {elapsed:>10.2?}  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<26} {elapsed:>10.2?}  {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
