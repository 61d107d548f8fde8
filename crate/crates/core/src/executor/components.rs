use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::extrude::{prism, PrismMaterials};
use super::mesh::{MaterialTag, Mesh};
use super::ExecutorError;
use crate::geometry::Vertex2D;
use crate::program::BuildingComponent;

const BUILTIN_TABLE: &str = include_str!("../../data/components.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRule {
    /// Component type the rule applies to, or `*` for every type.
    pub component_type: String,
    /// The rule fires when any of these tokens occurs in the description.
    pub keywords: Vec<String>,
    pub set: BTreeMap<String, ParamValue>,
}

/// Keyword table mapping component descriptions to parameters.
///
/// Rules are applied in file order on top of the type defaults, so a later
/// rule overrides an earlier one that sets the same parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    /// Facade keywords that pick the wall material.
    pub wall_materials: BTreeMap<String, MaterialTag>,
    pub defaults: BTreeMap<String, BTreeMap<String, ParamValue>>,
    pub rules: Vec<ComponentRule>,
}

impl Default for ComponentTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ComponentTable {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TABLE).expect("bundled component table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ExecutorError> {
        let table: ComponentTable =
            serde_json::from_str(text).map_err(|e| ExecutorError::ComponentTable(e.to_string()))?;
        let params = table.defaults.values().chain(table.rules.iter().map(|r| &r.set));
        for p in params {
            match p.get("material") {
                None => {}
                Some(ParamValue::Text(m)) if MaterialTag::parse(m).is_some() => {}
                Some(other) => {
                    return Err(ExecutorError::ComponentTable(format!("unknown material {other:?}")));
                }
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ExecutorError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExecutorError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Material of the earliest recognized keyword in the facade text.
    pub fn wall_material(&self, facade: Option<&str>) -> MaterialTag {
        facade
            .into_iter()
            .flat_map(token_list)
            .find_map(|t| self.wall_materials.get(&t).copied())
            .unwrap_or(MaterialTag::Concrete)
    }

    pub fn realize(&self, component: &BuildingComponent) -> ParametricComponent {
        let ty = component.component_type.as_str();
        let mut parameters = self.defaults.get(ty).cloned().unwrap_or_default();
        let tokens = tokens(&component.description);
        for rule in &self.rules {
            if (rule.component_type == "*" || rule.component_type == ty) && rule.keywords.iter().any(|k| tokens.contains(k))
            {
                parameters.extend(rule.set.iter().map(|(k, v)| (k.clone(), v.clone())));
            }
        }
        let material_tag = match parameters.remove("material") {
            Some(ParamValue::Text(m)) => MaterialTag::parse(&m).unwrap_or(MaterialTag::Concrete),
            _ => MaterialTag::Concrete,
        };
        ParametricComponent { component_type: ty.to_string(), parameters, material_tag }
    }
}

fn token_list(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|w| w.trim_matches('-'))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lowercased word set of a description; order and repetition do not matter.
pub fn tokens(text: &str) -> BTreeSet<String> {
    token_list(text).into_iter().collect()
}

/// A component with its parameters resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricComponent {
    pub component_type: String,
    pub parameters: BTreeMap<String, ParamValue>,
    pub material_tag: MaterialTag,
}

impl ParametricComponent {
    pub fn number(&self, key: &str, fallback: f64) -> f64 {
        match self.parameters.get(key) {
            Some(ParamValue::Number(v)) if v.is_finite() => *v,
            _ => fallback,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.parameters.get(key) {
            Some(ParamValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn is_arched(&self) -> bool {
        self.text("arch") == Some("rounded")
    }

    /// Local geometry: the profile spans `[-0.5, 0.5]` in x and y and is
    /// extruded from z = 0 to z = 1. Placement scales it to size.
    pub fn local_mesh(&self) -> Mesh {
        let profile = if self.is_arched() { arched_profile() } else { rect_profile() };
        prism(&profile, &[0.0, 1.0], PrismMaterials::uniform(self.material_tag))
            .expect("canonical profiles are convex")
    }
}

pub fn realize_component(component: &BuildingComponent, table: &ComponentTable) -> ParametricComponent {
    table.realize(component)
}

fn rect_profile() -> Vec<Vertex2D> {
    vec![Vertex2D::new(-0.5, -0.5), Vertex2D::new(0.5, -0.5), Vertex2D::new(0.5, 0.5), Vertex2D::new(-0.5, 0.5)]
}

/// Straight jambs up to mid-height, then a half ellipse to the top.
fn arched_profile() -> Vec<Vertex2D> {
    const SEGMENTS: usize = 8;
    let mut v = vec![Vertex2D::new(-0.5, -0.5), Vertex2D::new(0.5, -0.5)];
    for k in 0..=SEGMENTS {
        let t = PI * k as f64 / SEGMENTS as f64;
        v.push(Vertex2D::new(0.5 * t.cos(), 0.5 * t.sin()));
    }
    v
}
