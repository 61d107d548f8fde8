use serde_json::{Map, Value};

use super::{EditCommand, EditError, EditTarget, EditVerb};
use crate::program::{element_from_value, element_to_value, BuildingComponent};

pub const VERBS: &[&str] = &[
    "set_floor_count",
    "scale_density",
    "set_style",
    "set_component",
    "add_element",
    "remove_element",
    "retype_element",
];

/// Argument names per verb, in positional order.
fn keys(verb: &str) -> &'static [&'static str] {
    match verb {
        "set_floor_count" => &["floor_count"],
        "scale_density" => &["target", "allow_move"],
        "set_style" => &["style"],
        "set_component" => &["type", "description"],
        "add_element" => &["id", "type", "polygon", "floor_count", "facade"],
        "retype_element" => &["type"],
        _ => &[],
    }
}

fn bad(msg: impl Into<String>) -> EditError {
    EditError::BadArguments(msg.into())
}

/// Arguments whose values are always taken verbatim.
const TEXT_KEYS: &[&str] = &["id", "type", "facade", "style", "description"];

fn value_of(key: &str, token: &str) -> Value {
    if TEXT_KEYS.contains(&key) {
        return Value::String(token.to_string());
    }
    serde_json::from_str(token).unwrap_or_else(|_| Value::String(token.to_string()))
}

/// Parses `verb target [key=value | value]...`.
pub fn parse_edit_command(text: &str) -> Result<EditCommand, EditError> {
    let tokens = shlex::split(text).ok_or_else(|| bad("unbalanced quotes"))?;
    parse_edit_tokens(tokens)
}

/// Same as [`parse_edit_command`] on words that were already split.
pub fn parse_edit_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Result<EditCommand, EditError> {
    let mut it = tokens.into_iter();
    let verb = it.next().ok_or_else(|| bad("empty command"))?;
    if !VERBS.contains(&verb.as_str()) {
        return Err(EditError::UnknownVerb { verb });
    }
    let target = it.next().ok_or_else(|| bad(format!("{verb}: missing target")))?;
    let accepted = keys(&verb);
    let mut args = Map::new();
    let mut positional = 0;
    for token in it {
        let named = token.split_once('=').filter(|(k, _)| accepted.contains(k));
        let (key, raw) = match named {
            Some((k, v)) => (k.to_string(), v),
            None => {
                while positional < accepted.len() && args.contains_key(accepted[positional]) {
                    positional += 1;
                }
                let key = accepted.get(positional).ok_or_else(|| bad(format!("{verb}: unexpected `{token}`")))?;
                positional += 1;
                (key.to_string(), token.as_str())
            }
        };
        if args.insert(key.clone(), value_of(&key, raw)).is_some() {
            return Err(bad(format!("{verb}: `{key}` given twice")));
        }
    }
    build(&verb, EditTarget::parse(&target), &args)
}

/// Parses the wire form `{"verb", "target", "args"}`.
pub fn parse_edit_json(value: &Value) -> Result<EditCommand, EditError> {
    let obj = value.as_object().ok_or_else(|| bad("expected an object"))?;
    let verb = obj.get("verb").and_then(Value::as_str).ok_or_else(|| bad("missing `verb`"))?;
    if !VERBS.contains(&verb) {
        return Err(EditError::UnknownVerb { verb: verb.to_string() });
    }
    let target = obj.get("target").and_then(Value::as_str).ok_or_else(|| bad("missing `target`"))?;
    let empty = Map::new();
    let args = match obj.get("args") {
        None | Some(Value::Null) => &empty,
        Some(Value::Object(m)) => m,
        Some(_) => return Err(bad("`args` must be an object")),
    };
    build(verb, EditTarget::parse(target), args)
}

fn text_arg(args: &Map<String, Value>, verb: &str, key: &str) -> Result<String, EditError> {
    match args.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(v @ (Value::Number(_) | Value::Bool(_))) => Ok(v.to_string()),
        Some(_) => Err(bad(format!("{verb}: `{key}` must be text"))),
        None => Err(bad(format!("{verb}: missing `{key}`"))),
    }
}

fn floors_arg(v: &Value, verb: &str) -> Result<u32, EditError> {
    let n = match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    };
    n.and_then(|n| u32::try_from(n).ok())
        .filter(|n| *n >= 1)
        .ok_or_else(|| bad(format!("{verb}: floor_count must be a positive integer")))
}

fn build(verb: &str, target: EditTarget, args: &Map<String, Value>) -> Result<EditCommand, EditError> {
    let accepted = keys(verb);
    if let Some(k) = args.keys().find(|k| !accepted.contains(&k.as_str())) {
        return Err(bad(format!("{verb}: unknown argument `{k}`; accepted: {}", accepted.join(", "))));
    }
    let verb = match verb {
        "set_floor_count" => {
            let v = args.get("floor_count").ok_or_else(|| bad("set_floor_count: missing `floor_count`"))?;
            EditVerb::SetFloorCount { floors: floors_arg(v, verb)? }
        }
        "scale_density" => {
            let target = match args.get("target") {
                Some(Value::Number(n)) => n.as_f64(),
                Some(Value::String(s)) => s.trim().parse().ok(),
                _ => None,
            }
            .ok_or_else(|| bad("scale_density: `target` must be a number"))?;
            let allow_move = match args.get("allow_move") {
                None => false,
                Some(Value::Bool(b)) => *b,
                Some(Value::String(s)) if matches!(s.as_str(), "yes" | "move") => true,
                Some(Value::String(s)) if s == "no" => false,
                Some(_) => return Err(bad("scale_density: `allow_move` must be true or false")),
            };
            EditVerb::ScaleDensity { target, allow_move }
        }
        "set_style" => EditVerb::SetStyle { style: text_arg(args, verb, "style")? },
        "set_component" => {
            let ty = text_arg(args, verb, "type")?;
            let d = text_arg(args, verb, "description")?;
            EditVerb::SetComponent { component: BuildingComponent::canonical(&ty, &d)? }
        }
        "add_element" => {
            let mut obj = Map::new();
            for key in keys("add_element") {
                if let Some(v) = args.get(*key) {
                    let v = match (*key, v) {
                        ("floor_count", v) => Value::from(floors_arg(v, "add_element")?),
                        (_, v) => v.clone(),
                    };
                    obj.insert(key.to_string(), v);
                }
            }
            EditVerb::AddElement { element: element_from_value(&Value::Object(obj))? }
        }
        "remove_element" => EditVerb::RemoveElement,
        "retype_element" => EditVerb::RetypeElement { element_type: text_arg(args, verb, "type")? },
        other => return Err(EditError::UnknownVerb { verb: other.to_string() }),
    };
    Ok(EditCommand { target, verb })
}

impl EditCommand {
    fn args(&self) -> Map<String, Value> {
        let mut m = Map::new();
        match &self.verb {
            EditVerb::SetFloorCount { floors } => {
                m.insert("floor_count".into(), Value::from(*floors));
            }
            EditVerb::ScaleDensity { target, allow_move } => {
                m.insert("target".into(), Value::from(*target));
                m.insert("allow_move".into(), Value::Bool(*allow_move));
            }
            EditVerb::SetStyle { style } => {
                m.insert("style".into(), Value::String(style.clone()));
            }
            EditVerb::SetComponent { component } => {
                m.insert("type".into(), Value::String(component.component_type.clone()));
                m.insert("description".into(), Value::String(component.description.clone()));
            }
            EditVerb::AddElement { element } => {
                if let Value::Object(o) = element_to_value(element) {
                    m = o;
                }
            }
            EditVerb::RemoveElement => {}
            EditVerb::RetypeElement { element_type } => {
                m.insert("type".into(), Value::String(element_type.clone()));
            }
        }
        m
    }

    /// The wire form accepted by [`parse_edit_json`].
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("verb".into(), Value::String(self.verb.name().into()));
        m.insert("target".into(), Value::String(self.target.as_text()));
        m.insert("args".into(), Value::Object(self.args()));
        Value::Object(m)
    }

    /// Text accepted by [`parse_edit_command`], all arguments named.
    pub fn to_text(&self) -> String {
        let mut words = vec![self.verb.name().to_string(), self.target.as_text()];
        for (k, v) in self.args() {
            let raw = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            words.push(format!("{k}={raw}"));
        }
        shlex::try_join(words.iter().map(String::as_str)).expect("command text has no NUL bytes")
    }
}
