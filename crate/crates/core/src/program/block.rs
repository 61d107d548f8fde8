use std::collections::BTreeSet;

use serde_json::{Map, Value};

use super::json::{number, to_canonical_string};
use super::{
    is_greenspace_type, BlockElement, BlockProgram, Diagnostic, FootprintPolygon, Parsed, PolygonDefect,
    ProgramError, Region,
};
use crate::geometry::Vertex2D;

/// Side of the region assumed for an empty program without explicit bounds.
pub const DEFAULT_REGION_SIDE: f64 = 100.0;

const ELEMENT_FIELDS: &[&str] = &["id", "type", "polygon", "floor_count", "facade"];

/// Everything learned from one pass over a block document.
#[derive(Debug, Default)]
pub(crate) struct BlockReading {
    pub program: Option<BlockProgram>,
    pub errors: Vec<ProgramError>,
    pub notes: Vec<Diagnostic>,
}

pub fn parse_block_program(text: &[u8]) -> Result<Parsed<BlockProgram>, ProgramError> {
    let reading = read_block(text);
    match reading.errors.into_iter().next() {
        Some(err) => Err(err),
        None => Ok(Parsed {
            program: reading.program.expect("program exists when there are no errors"),
            notes: reading.notes,
        }),
    }
}

pub(crate) fn parse_json(text: &[u8]) -> Result<Value, ProgramError> {
    let text = std::str::from_utf8(text).map_err(|e| ProgramError::MalformedJson(format!("invalid UTF-8: {e}")))?;
    serde_json::from_str(text).map_err(|e| ProgramError::MalformedJson(e.to_string()))
}

pub(crate) fn read_block(text: &[u8]) -> BlockReading {
    let mut r = BlockReading::default();
    let value = match parse_json(text) {
        Ok(v) => v,
        Err(e) => {
            r.errors.push(e);
            return r;
        }
    };

    let mut description = None;
    let mut region_value = None;
    // (json path, element value)
    let mut raw: Vec<(String, &Value)> = Vec::new();

    let wrapper = |obj: &Map<String, Value>| obj.contains_key("layout") || obj.contains_key("elements");
    let (doc, base): (Option<&Map<String, Value>>, String) = match &value {
        Value::Array(items) => match items.first() {
            Some(Value::Object(first)) if wrapper(first) => {
                if items.len() != 1 {
                    r.errors.push(ProgramError::InvalidField {
                        path: String::new(),
                        reason: "expected exactly one layout object".into(),
                    });
                    return r;
                }
                (Some(first), "/0".to_string())
            }
            _ => {
                raw.extend(items.iter().enumerate().map(|(i, v)| (format!("/{i}"), v)));
                (None, String::new())
            }
        },
        Value::Object(obj) if wrapper(obj) => (Some(obj), String::new()),
        _ => {
            r.errors.push(ProgramError::UnknownForm);
            return r;
        }
    };

    if let Some(obj) = doc {
        match obj.get("description") {
            None | Some(Value::Null) => {}
            Some(Value::String(s)) => description = Some(s.clone()),
            Some(_) => r.errors.push(ProgramError::InvalidField {
                path: format!("{base}/description"),
                reason: "expected a string".into(),
            }),
        }
        region_value = obj.get("region").filter(|v| !v.is_null());
        if let Some(elements) = obj.get("elements") {
            match elements {
                Value::Array(items) => {
                    raw.extend(items.iter().enumerate().map(|(i, v)| (format!("{base}/elements/{i}"), v)))
                }
                _ => r.errors.push(ProgramError::InvalidField {
                    path: format!("{base}/elements"),
                    reason: "expected an array".into(),
                }),
            }
        } else {
            match obj.get("layout") {
                Some(Value::Object(layout)) => {
                    let mut found = false;
                    for key in ["buildings", "greenspaces"] {
                        match layout.get(key) {
                            None | Some(Value::Null) => {}
                            Some(Value::Array(items)) => {
                                found = true;
                                raw.extend(
                                    items.iter().enumerate().map(|(i, v)| (format!("{base}/layout/{key}/{i}"), v)),
                                );
                            }
                            Some(_) => r.errors.push(ProgramError::InvalidField {
                                path: format!("{base}/layout/{key}"),
                                reason: "expected an array".into(),
                            }),
                        }
                    }
                    if !found && r.errors.is_empty() {
                        r.errors.push(ProgramError::MissingField(format!("{base}/layout/buildings")));
                    }
                }
                _ => r.errors.push(ProgramError::InvalidField {
                    path: format!("{base}/layout"),
                    reason: "expected an object".into(),
                }),
            }
        }
    }

    let mut elements = Vec::with_capacity(raw.len());
    let mut paths = Vec::with_capacity(raw.len());
    for (path, v) in &raw {
        if let Some(e) = read_element(v, path, &mut r.errors, &mut r.notes) {
            elements.push(e);
            paths.push(path.clone());
        }
    }

    let mut seen = BTreeSet::new();
    for (e, path) in elements.iter().zip(&paths) {
        if !seen.insert(e.id.as_str()) {
            r.errors.push(ProgramError::DuplicateId { id: e.id.clone(), path: format!("{path}/id") });
        }
    }

    let region = match region_value {
        Some(v) => match read_region(v, &format!("{base}/region")) {
            Ok(region) => region,
            Err(e) => {
                r.errors.push(e);
                return r;
            }
        },
        None => Region::fit(&elements),
    };
    for (e, path) in elements.iter().zip(&paths) {
        if !e.polygon.vertices().iter().all(|v| region.contains(*v)) {
            r.errors.push(ProgramError::OutOfRegion { path: format!("{path}/polygon") });
        }
    }

    if r.errors.is_empty() {
        r.program = Some(BlockProgram { description, region, elements });
    }
    r
}

fn read_region(v: &Value, path: &str) -> Result<Region, ProgramError> {
    let side = |key: &str| -> Result<f64, ProgramError> {
        match v.get(key).and_then(Value::as_f64) {
            Some(x) if x.is_finite() && x > 0.0 => Ok(x),
            Some(_) => Err(ProgramError::InvalidField { path: format!("{path}/{key}"), reason: "must be positive".into() }),
            None => Err(ProgramError::MissingField(format!("{path}/{key}"))),
        }
    };
    if !v.is_object() {
        return Err(ProgramError::InvalidField { path: path.into(), reason: "expected an object".into() });
    }
    Ok(Region { width: side("width")?, height: side("height")? })
}

fn required_string(obj: &Map<String, Value>, key: &str, path: &str, errors: &mut Vec<ProgramError>) -> Option<String> {
    match obj.get(key) {
        None | Some(Value::Null) => {
            errors.push(ProgramError::MissingField(format!("{path}/{key}")));
            None
        }
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            errors.push(ProgramError::InvalidField { path: format!("{path}/{key}"), reason: "must not be empty".into() });
            None
        }
        Some(_) => {
            errors.push(ProgramError::InvalidField { path: format!("{path}/{key}"), reason: "expected a string".into() });
            None
        }
    }
}

fn read_polygon(
    v: Option<&Value>,
    path: &str,
    errors: &mut Vec<ProgramError>,
    notes: &mut Vec<Diagnostic>,
) -> Option<FootprintPolygon> {
    let path = format!("{path}/polygon");
    let bad = |defect| ProgramError::BadPolygon { path: path.clone(), defect };
    let items = match v {
        None | Some(Value::Null) => {
            errors.push(ProgramError::MissingField(path.clone()));
            return None;
        }
        Some(Value::Array(items)) => items,
        Some(_) => {
            errors.push(bad(PolygonDefect::MalformedVertex));
            return None;
        }
    };
    let mut vertices = Vec::with_capacity(items.len());
    for item in items {
        let xy = item.as_array().filter(|a| a.len() == 2).and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)));
        match xy {
            Some((x, y)) => vertices.push(Vertex2D::new(x, y)),
            None => {
                errors.push(bad(PolygonDefect::MalformedVertex));
                return None;
            }
        }
    }
    match FootprintPolygon::normalize(vertices) {
        Ok((polygon, info)) => {
            if info.reversed {
                notes.push(Diagnostic::note(&path, "clockwise polygon reversed to counter-clockwise"));
            }
            if info.dropped_duplicates > 0 {
                notes.push(Diagnostic::note(
                    &path,
                    format!("dropped {} repeated vertices", info.dropped_duplicates),
                ));
            }
            Some(polygon)
        }
        Err(defect) => {
            errors.push(bad(defect));
            None
        }
    }
}

fn read_element(
    v: &Value,
    path: &str,
    errors: &mut Vec<ProgramError>,
    notes: &mut Vec<Diagnostic>,
) -> Option<BlockElement> {
    let Some(obj) = v.as_object() else {
        errors.push(ProgramError::InvalidField { path: path.into(), reason: "expected an object".into() });
        return None;
    };
    let before = errors.len();
    let id = required_string(obj, "id", path, errors);
    let element_type = required_string(obj, "type", path, errors);
    let polygon = read_polygon(obj.get("polygon"), path, errors, notes);
    let greenspace = element_type.as_deref().is_some_and(is_greenspace_type);

    let floor_count = match obj.get("floor_count") {
        None | Some(Value::Null) => None,
        Some(_) if greenspace => {
            errors.push(ProgramError::BadFloorCount {
                path: format!("{path}/floor_count"),
                reason: "greenspace elements carry no floor_count".into(),
            });
            None
        }
        Some(n) => match n.as_u64().filter(|&f| f >= 1).and_then(|f| u32::try_from(f).ok()) {
            Some(f) => Some(f),
            None => {
                errors.push(ProgramError::BadFloorCount {
                    path: format!("{path}/floor_count"),
                    reason: "must be an integer >= 1".into(),
                });
                None
            }
        },
    };
    let facade = match obj.get("facade") {
        None | Some(Value::Null) => None,
        Some(_) if greenspace => {
            errors.push(ProgramError::InvalidField {
                path: format!("{path}/facade"),
                reason: "facade only applies to buildings".into(),
            });
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push(ProgramError::InvalidField { path: format!("{path}/facade"), reason: "expected a string".into() });
            None
        }
    };
    for key in obj.keys().filter(|k| !ELEMENT_FIELDS.contains(&k.as_str())) {
        notes.push(Diagnostic::note(format!("{path}/{key}"), "unknown field ignored"));
    }
    if errors.len() > before {
        return None;
    }
    Some(BlockElement { id: id?, element_type: element_type?, polygon: polygon?, floor_count, facade })
}

pub(crate) fn polygon_to_value(polygon: &FootprintPolygon) -> Value {
    Value::Array(
        polygon
            .vertices()
            .iter()
            .map(|v| Value::Array(vec![number(v.x), number(v.y)]))
            .collect(),
    )
}

pub fn element_to_value(e: &BlockElement) -> Value {
    let mut obj = Map::new();
    obj.insert("id".into(), Value::String(e.id.clone()));
    obj.insert("type".into(), Value::String(e.element_type.clone()));
    obj.insert("polygon".into(), polygon_to_value(&e.polygon));
    if let Some(f) = e.floor_count {
        obj.insert("floor_count".into(), Value::from(f));
    }
    if let Some(f) = &e.facade {
        obj.insert("facade".into(), Value::String(f.clone()));
    }
    Value::Object(obj)
}

/// Reads a single element outside of a document (used by edit diffs).
pub fn element_from_value(v: &Value) -> Result<BlockElement, ProgramError> {
    let mut errors = Vec::new();
    let mut notes = Vec::new();
    match read_element(v, "", &mut errors, &mut notes) {
        Some(e) => Ok(e),
        None => Err(errors.into_iter().next().unwrap_or(ProgramError::UnknownForm)),
    }
}

pub fn block_to_value(p: &BlockProgram) -> Value {
    let mut obj = Map::new();
    if let Some(d) = &p.description {
        obj.insert("description".into(), Value::String(d.clone()));
    }
    let mut region = Map::new();
    region.insert("width".into(), number(p.region.width));
    region.insert("height".into(), number(p.region.height));
    obj.insert("region".into(), Value::Object(region));
    obj.insert("elements".into(), Value::Array(p.elements.iter().map(element_to_value).collect()));
    Value::Object(obj)
}

/// Canonical text: `{"description"?, "region", "elements"}`.
pub fn serialize_block(p: &BlockProgram) -> String {
    to_canonical_string(&block_to_value(p))
}
