use serde::{Deserialize, Serialize};

use super::{collision_rate, otr_of_meshes, ros_of_meshes, MetricsError, RosConfig, RosScope};
use crate::executor::{Mesh, ScenePackage};
use crate::program::{check_format, parse_block_program, ProgramKind};

pub const CSV_HEADER: [&str; 7] = ["id", "collision_rate", "json_ok", "geom_ok", "fields_ok", "ros", "otr"];

/// One program and, optionally, the scene built from it.
#[derive(Debug, Clone)]
pub struct ReportInput<'a> {
    pub id: String,
    pub text: &'a [u8],
    pub kind: ProgramKind,
    pub scene: Option<&'a ScenePackage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatFlags {
    pub json_ok: bool,
    pub geom_ok: bool,
    pub fields_ok: bool,
    pub overall: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub id: String,
    pub collision_rate: Option<f64>,
    pub format: FormatFlags,
    pub ros: Option<f64>,
    pub otr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub items: usize,
    pub format_accuracy: f64,
    /// Means over the items where the metric is defined.
    pub collision_rate: Option<f64>,
    pub ros: Option<f64>,
    pub otr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub summary: ReportSummary,
    pub items: Vec<ReportItem>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn scene_metrics(scene: &ScenePackage, config: &RosConfig) -> (Option<f64>, Option<f64>) {
    let shells: Vec<&Mesh> = scene.buildings.iter().map(|b| &b.shell).collect();
    let ros = match config.scope {
        RosScope::Shells => ros_of_meshes(shells.iter().copied(), config),
        RosScope::FullScene => {
            let mut all: Vec<Mesh> = scene.buildings.iter().map(|b| b.combined()).collect();
            all.extend(scene.greenspaces.iter().map(|g| g.mesh.clone()));
            all.push(scene.streets.clone());
            all.push(scene.props_mesh());
            ros_of_meshes(all.iter(), config)
        }
    };
    (ros.ok(), otr_of_meshes(shells).ok())
}

impl QualityReport {
    /// Rows come out sorted by id whatever the input order.
    pub fn build(inputs: &[ReportInput<'_>], ros_config: &RosConfig) -> Result<Self, MetricsError> {
        if inputs.is_empty() {
            return Err(MetricsError::EmptyCorpus);
        }
        let mut items: Vec<ReportItem> = inputs
            .iter()
            .map(|input| {
                let v = check_format(input.text, input.kind);
                let collision_rate = match input.kind {
                    ProgramKind::Block => {
                        parse_block_program(input.text).ok().and_then(|p| collision_rate(&p.program).ok())
                    }
                    ProgramKind::Building => None,
                };
                let (ros, otr) = input.scene.map_or((None, None), |s| scene_metrics(s, ros_config));
                ReportItem {
                    id: input.id.clone(),
                    collision_rate,
                    format: FormatFlags {
                        json_ok: v.json_parsable,
                        geom_ok: v.geometry_valid,
                        fields_ok: v.fields_complete,
                        overall: v.overall,
                    },
                    ros,
                    otr,
                }
            })
            .collect();
        items.sort_by(|a, b| a.id.cmp(&b.id));
        let ok = items.iter().filter(|i| i.format.overall).count();
        let summary = ReportSummary {
            items: items.len(),
            format_accuracy: ok as f64 / items.len() as f64,
            collision_rate: mean(items.iter().map(|i| i.collision_rate)),
            ros: mean(items.iter().map(|i| i.ros)),
            otr: mean(items.iter().map(|i| i.otr)),
        };
        Ok(Self { summary, items })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record(CSV_HEADER).expect("in-memory csv");
        for i in &self.items {
            w.write_record([
                i.id.clone(),
                opt(i.collision_rate),
                i.format.json_ok.to_string(),
                i.format.geom_ok.to_string(),
                i.format.fields_ok.to_string(),
                opt(i.ros),
                opt(i.otr),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &std::path::Path) -> Result<(), MetricsError> {
        let io = |e: std::io::Error| MetricsError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.json"), self.to_json()).map_err(io)?;
        std::fs::write(dir.join("report.csv"), self.to_csv()).map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &[u8] = br#"[{"id": "a", "type": "office", "polygon": [[0,0],[10,0],[10,10],[0,10]], "floor_count": 2, "facade": "x"},
        {"id": "b", "type": "office", "polygon": [[5,5],[15,5],[15,15],[5,15]], "floor_count": 2, "facade": "x"}]"#;

    #[test]
    fn sorted_rows_and_stable_bytes() {
        let inputs = [
            ReportInput { id: "z".into(), text: b"{", kind: ProgramKind::Block, scene: None },
            ReportInput { id: "m".into(), text: P, kind: ProgramKind::Block, scene: None },
        ];
        let r = QualityReport::build(&inputs, &RosConfig::default()).unwrap();
        assert_eq!(r.items[0].id, "m");
        assert_eq!(r.summary.format_accuracy, 0.5);
        // region fits to 20 x 20; overlap 25
        assert_eq!(r.items[0].collision_rate, Some(25.0 / 400.0));
        assert_eq!(r.items[1].collision_rate, None);
        let csv = r.to_csv();
        assert!(csv.starts_with("id,collision_rate,json_ok,geom_ok,fields_ok,ros,otr\n"));
        assert_eq!(csv, QualityReport::build(&inputs, &RosConfig::default()).unwrap().to_csv());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["items"][0]["format"]["json_ok"].as_bool().unwrap());
    }
}
