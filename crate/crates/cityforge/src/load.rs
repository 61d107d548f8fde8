use std::path::Path;

use cityforge_core::program::{parse_block_program, parse_building_program, ProgramError};
use cityforge_core::CityProgram;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Program { path: String, source: ProgramError },
}

fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })
}

/// A city from JSON: either `{"block": ..., "buildings": {...}}` or any
/// block program form on its own.
pub fn city_from_bytes(bytes: &[u8]) -> Result<CityProgram, ProgramError> {
    if let Ok(v @ Value::Object(_)) = serde_json::from_slice::<Value>(bytes) {
        if v.get("block").is_some() {
            return CityProgram::from_value(&v);
        }
    }
    Ok(CityProgram::new(parse_block_program(bytes)?.program))
}

/// Reads a city and, from `buildings_dir`, `<id>.json` for each building
/// that has no program yet.
pub fn load_city(path: &Path, buildings_dir: Option<&Path>) -> Result<CityProgram, LoadError> {
    let bytes = read(path)?;
    let mut city =
        city_from_bytes(&bytes).map_err(|source| LoadError::Program { path: path.display().to_string(), source })?;
    if let Some(dir) = buildings_dir {
        attach_buildings(&mut city, dir)?;
    }
    Ok(city)
}

pub fn attach_buildings(city: &mut CityProgram, dir: &Path) -> Result<(), LoadError> {
    let ids: Vec<String> = city.block.buildings().map(|e| e.id.clone()).collect();
    for id in ids {
        let file = dir.join(format!("{id}.json"));
        if city.buildings.contains_key(&id) || !file.is_file() {
            continue;
        }
        let bytes = read(&file)?;
        let program = parse_building_program(&bytes)
            .map_err(|source| LoadError::Program { path: file.display().to_string(), source })?
            .program;
        city.buildings.insert(id, program);
    }
    Ok(())
}
