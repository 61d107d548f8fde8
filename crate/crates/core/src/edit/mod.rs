//! Deterministic program edits.
//!
//! An [`EditCommand`] names a target (the block or one element) and a verb.
//! Commands come from a small text grammar
//!
//! ```text
//! command  = verb , target , { argument } ;
//! target   = "block" | element-id | "element:" , element-id ;
//! argument = key , "=" , value | value ;
//! ```
//!
//! or from the equivalent JSON `{"verb", "target", "args"}`. Values parse as
//! JSON when they can (numbers, booleans, polygons) and as strings otherwise;
//! shell-style quoting keeps multi-word values together.
//!
//! Applying a command returns the new program and a diff of JSON-pointer
//! paths keyed by element id, which [`apply_diff`] replays exactly.

mod density;
mod diff;
mod grammar;
mod style;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::program::{BlockElement, BuildingComponent, CityProgram, ProgramError};

pub use density::DensityOutcome;
pub use diff::{apply_diff, diff_programs, DiffEntry};
pub use grammar::{parse_edit_command, parse_edit_json, parse_edit_tokens, VERBS};
pub use style::{Style, StyleLexicon};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("unknown verb `{verb}`; expected one of: {}", VERBS.join(", "))]
    UnknownVerb { verb: String },
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("density {target} is unreachable without new overlap (coverage stays at {reached})")]
    InfeasibleDensity { target: f64, reached: f64 },
    #[error("diff does not apply at {path}")]
    DiffConflict { path: String },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditTarget {
    Block,
    Element(String),
}

impl EditTarget {
    pub fn parse(s: &str) -> Self {
        match s {
            "block" => Self::Block,
            other => Self::Element(other.strip_prefix("element:").unwrap_or(other).to_string()),
        }
    }

    pub fn as_text(&self) -> String {
        match self {
            Self::Block => "block".into(),
            Self::Element(id) if id == "block" => "element:block".into(),
            Self::Element(id) => id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EditVerb {
    SetFloorCount { floors: u32 },
    ScaleDensity { target: f64, allow_move: bool },
    SetStyle { style: String },
    SetComponent { component: BuildingComponent },
    AddElement { element: BlockElement },
    RemoveElement,
    RetypeElement { element_type: String },
}

impl EditVerb {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SetFloorCount { .. } => "set_floor_count",
            Self::ScaleDensity { .. } => "scale_density",
            Self::SetStyle { .. } => "set_style",
            Self::SetComponent { .. } => "set_component",
            Self::AddElement { .. } => "add_element",
            Self::RemoveElement => "remove_element",
            Self::RetypeElement { .. } => "retype_element",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditCommand {
    pub target: EditTarget,
    pub verb: EditVerb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditResult {
    pub program_after: CityProgram,
    pub diff: Vec<DiffEntry>,
    pub warnings: Vec<String>,
}

impl EditResult {
    pub fn diff_value(&self) -> Value {
        serde_json::to_value(&self.diff).expect("diff serializes")
    }

    /// `{"program_after", "diff", "warnings"}`.
    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "program_after": self.program_after.to_value(),
            "diff": self.diff_value(),
            "warnings": self.warnings,
        })
    }
}

/// Static inputs an edit may consult.
#[derive(Debug, Clone, Default)]
pub struct EditContext {
    pub styles: StyleLexicon,
}

fn element_id(target: &EditTarget, verb: &str) -> Result<String, EditError> {
    match target {
        EditTarget::Element(id) => Ok(id.clone()),
        EditTarget::Block => Err(EditError::InvalidArgument(format!("{verb} needs an element target"))),
    }
}

fn require_block(target: &EditTarget, verb: &str) -> Result<(), EditError> {
    match target {
        EditTarget::Block => Ok(()),
        EditTarget::Element(_) => Err(EditError::InvalidArgument(format!("{verb} applies to the block"))),
    }
}

fn building_mut<'a>(program: &'a mut CityProgram, id: &str) -> Result<&'a mut BlockElement, EditError> {
    match program.block.element_mut(id) {
        None => Err(EditError::UnknownTarget(id.to_string())),
        Some(e) if !e.is_building() => Err(EditError::InvalidArgument(format!("`{id}` is not a building"))),
        Some(e) => Ok(e),
    }
}

/// Applies `command` to `program`. The result always re-validates.
pub fn apply_edit(program: &CityProgram, command: &EditCommand, ctx: &EditContext) -> Result<EditResult, EditError> {
    let mut after = program.clone();
    let mut warnings = Vec::new();
    let verb = command.verb.name();
    match &command.verb {
        EditVerb::SetFloorCount { floors } => {
            if *floors == 0 {
                return Err(EditError::InvalidArgument("floor_count must be >= 1".into()));
            }
            let id = element_id(&command.target, verb)?;
            building_mut(&mut after, &id)?.floor_count = Some(*floors);
        }
        EditVerb::ScaleDensity { target, allow_move } => {
            require_block(&command.target, verb)?;
            if !(target.is_finite() && *target > 0.0 && *target <= 1.0) {
                return Err(EditError::InvalidArgument(format!("density target {target} is outside (0, 1]")));
            }
            let outcome = density::scale_density(&program.block, *target, *allow_move)?;
            after.block = outcome.program;
            warnings.extend(outcome.warnings);
        }
        EditVerb::SetStyle { style } => {
            let style = ctx
                .styles
                .get(style)
                .ok_or_else(|| {
                    EditError::InvalidArgument(format!("unknown style `{style}`; known: {}", ctx.styles.names().join(", ")))
                })?
                .clone();
            let ids: Vec<String> = match &command.target {
                EditTarget::Block => after.block.buildings().map(|e| e.id.clone()).collect(),
                EditTarget::Element(id) => {
                    building_mut(&mut after, id)?;
                    vec![id.clone()]
                }
            };
            for id in ids {
                style::apply_style(&mut after, &id, &style)?;
            }
        }
        EditVerb::SetComponent { component } => {
            let id = element_id(&command.target, verb)?;
            building_mut(&mut after, &id)?;
            after.buildings.entry(id).or_default().upsert(component.clone());
        }
        EditVerb::AddElement { element } => {
            require_block(&command.target, verb)?;
            if after.block.element(&element.id).is_some() {
                return Err(EditError::InvalidArgument(format!("element `{}` already exists", element.id)));
            }
            after.block.elements.push(element.clone());
        }
        EditVerb::RemoveElement => {
            let id = element_id(&command.target, verb)?;
            let before = after.block.elements.len();
            after.block.elements.retain(|e| e.id != id);
            if after.block.elements.len() == before {
                return Err(EditError::UnknownTarget(id));
            }
            after.buildings.remove(&id);
        }
        EditVerb::RetypeElement { element_type } => {
            let id = element_id(&command.target, verb)?;
            let ty = element_type.trim();
            if ty.is_empty() {
                return Err(EditError::InvalidArgument("type must not be empty".into()));
            }
            let e = after.block.element_mut(&id).ok_or_else(|| EditError::UnknownTarget(id.clone()))?;
            e.element_type = ty.to_string();
            if e.is_greenspace() {
                let dropped_floors = e.floor_count.take().is_some();
                let dropped_facade = e.facade.take().is_some();
                if dropped_floors || dropped_facade {
                    warnings.push(format!("{id}: floor_count and facade dropped for greenspace"));
                }
                if after.buildings.remove(&id).is_some() {
                    warnings.push(format!("{id}: building program dropped for greenspace"));
                }
            }
        }
    }
    after.validate()?;
    let diff = diff_programs(program, &after);
    Ok(EditResult { program_after: after, diff, warnings })
}
