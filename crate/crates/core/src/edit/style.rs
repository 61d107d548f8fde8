use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EditError;
use crate::program::{BuildingComponent, CityProgram};

const BUILTIN_STYLES: &str = include_str!("../../data/styles.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    /// Replacement facade text for every styled building.
    pub facade: String,
    /// Upper bound on floor_count, when the style implies low buildings.
    #[serde(default)]
    pub floor_cap: Option<u32>,
    /// Component type to description.
    #[serde(default)]
    pub components: BTreeMap<String, String>,
}

/// Style name to style, read from `styles.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StyleLexicon(BTreeMap<String, Style>);

impl Default for StyleLexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

impl StyleLexicon {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_STYLES).expect("bundled style lexicon is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, EditError> {
        let lexicon: StyleLexicon =
            serde_json::from_str(text).map_err(|e| EditError::InvalidArgument(format!("style lexicon: {e}")))?;
        for (name, style) in &lexicon.0 {
            if style.floor_cap == Some(0) {
                return Err(EditError::InvalidArgument(format!("style `{name}`: floor_cap must be >= 1")));
            }
            for (ty, d) in &style.components {
                BuildingComponent::canonical(ty, d)?;
            }
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self, EditError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EditError::InvalidArgument(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Option<&Style> {
        self.0.get(&name.trim().to_lowercase())
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.keys().map(String::as_str).collect()
    }
}

/// Rewrites one building: facade text, capped floors, styled components.
pub(crate) fn apply_style(program: &mut CityProgram, id: &str, style: &Style) -> Result<(), EditError> {
    let element = program.block.element_mut(id).ok_or_else(|| EditError::UnknownTarget(id.to_string()))?;
    element.facade = Some(style.facade.clone());
    if let (Some(cap), Some(f)) = (style.floor_cap, element.floor_count) {
        element.floor_count = Some(f.min(cap));
    }
    let building = program.buildings.entry(id.to_string()).or_default();
    if building.source_facade.is_some() {
        building.source_facade = Some(style.facade.clone());
    }
    for (ty, d) in &style.components {
        building.upsert(BuildingComponent::canonical(ty, d)?);
    }
    Ok(())
}
