use serde_json::{Map, Value};

use super::block::parse_json;
use super::json::to_canonical_string;
use super::{BuildingComponent, BuildingProgram, Diagnostic, Parsed, ProgramError};

#[derive(Debug, Default)]
pub(crate) struct BuildingReading {
    pub program: Option<BuildingProgram>,
    pub errors: Vec<ProgramError>,
    pub notes: Vec<Diagnostic>,
}

pub fn parse_building_program(text: &[u8]) -> Result<Parsed<BuildingProgram>, ProgramError> {
    let reading = read_building(text);
    match reading.errors.into_iter().next() {
        Some(err) => Err(err),
        None => Ok(Parsed {
            program: reading.program.expect("program exists when there are no errors"),
            notes: reading.notes,
        }),
    }
}

struct Builder<'a> {
    program: BuildingProgram,
    errors: &'a mut Vec<ProgramError>,
    notes: &'a mut Vec<Diagnostic>,
}

impl Builder<'_> {
    fn push(&mut self, path: &str, component_type: &str, description: &str) {
        match BuildingComponent::canonical(component_type, description) {
            Ok(c) => {
                let ty = c.component_type.clone();
                if self.program.upsert(c) {
                    self.notes.push(Diagnostic::note(
                        path,
                        format!("duplicate component `{ty}`: last occurrence wins"),
                    ));
                }
            }
            Err(ProgramError::InvalidField { reason, .. }) => {
                self.errors.push(ProgramError::InvalidField { path: path.into(), reason })
            }
            Err(e) => self.errors.push(e),
        }
    }

    fn map_form(&mut self, map: &Map<String, Value>, base: &str) {
        for (key, value) in map {
            let path = format!("{base}/{key}");
            match value {
                Value::String(d) => self.push(&path, key, d),
                _ => self.errors.push(ProgramError::InvalidField { path, reason: "expected a string".into() }),
            }
        }
    }

    fn list_form(&mut self, items: &[Value], base: &str) {
        for (i, item) in items.iter().enumerate() {
            let path = format!("{base}/{i}");
            let Some(obj) = item.as_object() else {
                self.errors.push(ProgramError::InvalidField { path, reason: "expected an object".into() });
                continue;
            };
            let field = |key: &str| -> Result<&str, ProgramError> {
                match obj.get(key) {
                    None | Some(Value::Null) => Err(ProgramError::MissingField(format!("{path}/{key}"))),
                    Some(Value::String(s)) => Ok(s),
                    Some(_) => Err(ProgramError::InvalidField {
                        path: format!("{path}/{key}"),
                        reason: "expected a string".into(),
                    }),
                }
            };
            match (field("type"), field("description")) {
                (Ok(t), Ok(d)) => self.push(&path, t, d),
                (t, d) => self.errors.extend(t.err().into_iter().chain(d.err())),
            }
        }
    }

    fn facade(&mut self, obj: &Map<String, Value>, base: &str) {
        match obj.get("facade") {
            None | Some(Value::Null) => {}
            Some(Value::String(s)) => self.program.source_facade = Some(s.clone()),
            Some(_) => self.errors.push(ProgramError::InvalidField {
                path: format!("{base}/facade"),
                reason: "expected a string".into(),
            }),
        }
    }

    /// `{"facade": ..., "output": {"window": ...}}`, the shape the facade
    /// annotator emits.
    fn annotated(&mut self, obj: &Map<String, Value>, base: &str) {
        self.facade(obj, base);
        match obj.get("output") {
            Some(Value::Object(map)) => self.map_form(map, &format!("{base}/output")),
            _ => self.errors.push(ProgramError::InvalidField {
                path: format!("{base}/output"),
                reason: "expected an object".into(),
            }),
        }
    }
}

pub(crate) fn read_building(text: &[u8]) -> BuildingReading {
    let mut r = BuildingReading::default();
    let value = match parse_json(text) {
        Ok(v) => v,
        Err(e) => {
            r.errors.push(e);
            return r;
        }
    };
    let mut b = Builder { program: BuildingProgram::default(), errors: &mut r.errors, notes: &mut r.notes };
    match &value {
        Value::Array(items) => match items.first() {
            Some(Value::Object(first)) if first.contains_key("output") => {
                if items.len() == 1 {
                    b.annotated(first, "/0");
                } else {
                    b.errors.push(ProgramError::InvalidField {
                        path: String::new(),
                        reason: "expected exactly one annotated facade".into(),
                    });
                }
            }
            _ => b.list_form(items, ""),
        },
        Value::Object(obj) if obj.contains_key("components") => {
            b.facade(obj, "");
            match obj.get("components") {
                Some(Value::Array(items)) => b.list_form(items, "/components"),
                _ => b.errors.push(ProgramError::InvalidField {
                    path: "/components".into(),
                    reason: "expected an array".into(),
                }),
            }
        }
        Value::Object(obj) if obj.contains_key("output") => b.annotated(obj, ""),
        Value::Object(obj) => b.map_form(obj, ""),
        _ => b.errors.push(ProgramError::UnknownForm),
    }
    let program = b.program;
    if r.errors.is_empty() {
        r.program = Some(program);
    }
    r
}

pub fn building_to_value(p: &BuildingProgram) -> Value {
    let list = Value::Array(
        p.components
            .iter()
            .map(|c| {
                let mut o = Map::new();
                o.insert("type".into(), Value::String(c.component_type.clone()));
                o.insert("description".into(), Value::String(c.description.clone()));
                Value::Object(o)
            })
            .collect(),
    );
    match &p.source_facade {
        None => list,
        Some(f) => {
            let mut o = Map::new();
            o.insert("facade".into(), Value::String(f.clone()));
            o.insert("components".into(), list);
            Value::Object(o)
        }
    }
}

/// Canonical list form, wrapped as `{"facade", "components"}` when the
/// program records its source facade.
pub fn serialize_building(p: &BuildingProgram) -> String {
    to_canonical_string(&building_to_value(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "window": "expansive, glass, modern, blue-tinted",
      "door": "sleek, modern, glass, automatic",
      "roof": "flat, sleek, modern, weather-resistant"
    }"#;

    #[test]
    fn map_form() {
        let p = parse_building_program(SAMPLE.as_bytes()).unwrap().program;
        let types: Vec<_> = p.components.iter().map(|c| c.component_type.as_str()).collect();
        assert_eq!(types, ["window", "door", "roof"]);
        assert_eq!(p.component("roof").unwrap().description, "flat, sleek, modern, weather-resistant");
    }

    #[test]
    fn list_form_equals_map_form() {
        let list = r#"[{"type": "window", "description": "expansive, glass, modern, blue-tinted"},
            {"type": "door", "description": "sleek, modern, glass, automatic"},
            {"type": "roof", "description": "flat,sleek, modern,   weather-resistant"}]"#;
        assert_eq!(
            parse_building_program(list.as_bytes()).unwrap().program,
            parse_building_program(SAMPLE.as_bytes()).unwrap().program
        );
    }

    #[test]
    fn annotated_form_keeps_facade() {
        let text = r#"[{"facade": "light gray concrete.", "output": {"window": "clear glass", "door": "metal frame", "roof": "flat slab"}}]"#;
        let p = parse_building_program(text.as_bytes()).unwrap().program;
        assert_eq!(p.source_facade.as_deref(), Some("light gray concrete."));
        assert_eq!(p.components.len(), 3);
        let again = parse_building_program(serialize_building(&p).as_bytes()).unwrap().program;
        assert_eq!(again, p);
    }

    #[test]
    fn empty_and_errors() {
        assert!(parse_building_program(b"{}").unwrap().program.components.is_empty());
        assert!(parse_building_program(b"[]").unwrap().program.components.is_empty());
        assert_eq!(
            parse_building_program(br#"{"door": " "}"#).unwrap_err(),
            ProgramError::EmptyDescription("door".into())
        );
        assert_eq!(parse_building_program(b"7").unwrap_err(), ProgramError::UnknownForm);
        assert!(matches!(parse_building_program(b"[{").unwrap_err(), ProgramError::MalformedJson(_)));
        assert!(matches!(
            parse_building_program(br#"[{"type": "door"}]"#).unwrap_err(),
            ProgramError::MissingField(_)
        ));
    }

    #[test]
    fn duplicates_last_wins_and_canonicalizer_is_idempotent() {
        let text = r#"[{"type": "window", "description": "small"}, {"type": "door", "description": "oak"},
                       {"type": "Window", "description": "large,  arched"}]"#;
        let parsed = parse_building_program(text.as_bytes()).unwrap();
        assert_eq!(parsed.notes.len(), 1);
        let p = parsed.program;
        assert_eq!(p.components.len(), 2);
        assert_eq!(p.component("window").unwrap().description, "large, arched");
        let once = serialize_building(&p);
        let twice = serialize_building(&parse_building_program(once.as_bytes()).unwrap().program);
        assert_eq!(once, twice);
    }
}
