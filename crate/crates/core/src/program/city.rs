use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::block::{block_to_value, parse_block_program};
use super::building::{building_to_value, parse_building_program};
use super::json::to_canonical_string;
use super::{BlockProgram, BuildingProgram, ProgramError};

/// A block together with the building programs of its buildings.
#[derive(Debug, Clone, PartialEq)]
pub struct CityProgram {
    pub block: BlockProgram,
    pub buildings: BTreeMap<String, BuildingProgram>,
}

impl CityProgram {
    pub fn new(block: BlockProgram) -> Self {
        Self { block, buildings: BTreeMap::new() }
    }

    /// Block invariants, plus every building program must belong to a
    /// building element.
    pub fn validate(&self) -> Result<(), ProgramError> {
        self.block.validate()?;
        for id in self.buildings.keys() {
            if !self.block.element(id).is_some_and(|e| e.is_building()) {
                return Err(ProgramError::InvalidField {
                    path: format!("/buildings/{id}"),
                    reason: "no building element with this id".into(),
                });
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("block".into(), block_to_value(&self.block));
        obj.insert(
            "buildings".into(),
            Value::Object(self.buildings.iter().map(|(k, v)| (k.clone(), building_to_value(v))).collect()),
        );
        Value::Object(obj)
    }

    pub fn to_canonical_string(&self) -> String {
        to_canonical_string(&self.to_value())
    }

    /// Reads `{"block": ..., "buildings": {id: ...}}`; `buildings` may be absent.
    pub fn from_value(v: &Value) -> Result<Self, ProgramError> {
        let obj = v.as_object().ok_or(ProgramError::UnknownForm)?;
        let block_value = obj.get("block").ok_or_else(|| ProgramError::MissingField("/block".into()))?;
        let block = parse_block_program(block_value.to_string().as_bytes())?.program;
        let mut buildings = BTreeMap::new();
        match obj.get("buildings") {
            None | Some(Value::Null) => {}
            Some(Value::Object(map)) => {
                for (id, b) in map {
                    let program = parse_building_program(b.to_string().as_bytes())?.program;
                    buildings.insert(id.clone(), program);
                }
            }
            Some(_) => {
                return Err(ProgramError::InvalidField { path: "/buildings".into(), reason: "expected an object".into() })
            }
        }
        let city = Self { block, buildings };
        city.validate()?;
        Ok(city)
    }
}
