use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::EditError;
use crate::program::json::number;
use crate::program::{
    building_to_value, element_from_value, element_to_value, parse_building_program, BuildingComponent,
    BuildingProgram, CityProgram, Region,
};

/// One changed location. `null` stands for "absent".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: String,
    pub before: Value,
    pub after: Value,
}

const ELEMENT_FIELDS: [&str; 4] = ["type", "polygon", "floor_count", "facade"];

fn escape(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

fn unescape(segment: &str) -> String {
    segment.replace("~1", "/").replace("~0", "~")
}

fn opt_string(s: &Option<String>) -> Value {
    s.as_ref().map_or(Value::Null, |s| Value::String(s.clone()))
}

fn region_value(r: &Region) -> Value {
    let mut m = Map::new();
    m.insert("width".into(), number(r.width));
    m.insert("height".into(), number(r.height));
    Value::Object(m)
}

fn field(v: &Value, key: &str) -> Value {
    v.get(key).cloned().unwrap_or(Value::Null)
}

fn push(out: &mut Vec<DiffEntry>, path: String, before: Value, after: Value) {
    if before != after {
        out.push(DiffEntry { path, before, after });
    }
}

/// Order that results from removing the ids missing from `after` and
/// appending the new ones in `after` order.
fn replayed_order(before: &[String], after: &[String]) -> Vec<String> {
    let mut order: Vec<String> = before.iter().filter(|id| after.contains(id)).cloned().collect();
    order.extend(after.iter().filter(|id| !before.contains(id)).cloned());
    order
}

fn ids_value(ids: &[String]) -> Value {
    Value::Array(ids.iter().cloned().map(Value::String).collect())
}

fn diff_building(out: &mut Vec<DiffEntry>, id: &str, a: &BuildingProgram, b: &BuildingProgram) {
    let base = format!("/buildings/{}", escape(id));
    push(out, format!("{base}/facade"), opt_string(&a.source_facade), opt_string(&b.source_facade));
    let desc = |p: &BuildingProgram, t: &str| {
        p.component(t).map_or(Value::Null, |c| Value::String(c.description.clone()))
    };
    let types = |p: &BuildingProgram| p.components.iter().map(|c| c.component_type.clone()).collect::<Vec<_>>();
    let (ta, tb) = (types(a), types(b));
    for t in ta.iter().chain(tb.iter().filter(|t| !ta.contains(t))) {
        push(out, format!("{base}/components/{}", escape(t)), desc(a, t), desc(b, t));
    }
    let replayed = replayed_order(&ta, &tb);
    if replayed != tb {
        out.push(DiffEntry { path: format!("{base}/component_order"), before: ids_value(&replayed), after: ids_value(&tb) });
    }
}

/// Field-level differences from `a` to `b`.
pub fn diff_programs(a: &CityProgram, b: &CityProgram) -> Vec<DiffEntry> {
    let mut out = Vec::new();
    push(&mut out, "/description".into(), opt_string(&a.block.description), opt_string(&b.block.description));
    push(&mut out, "/region".into(), region_value(&a.block.region), region_value(&b.block.region));

    let ids = |p: &CityProgram| p.block.elements.iter().map(|e| e.id.clone()).collect::<Vec<_>>();
    let (ia, ib) = (ids(a), ids(b));
    for ea in &a.block.elements {
        let path = format!("/elements/{}", escape(&ea.id));
        match b.block.element(&ea.id) {
            None => out.push(DiffEntry { path, before: element_to_value(ea), after: Value::Null }),
            Some(eb) => {
                let (va, vb) = (element_to_value(ea), element_to_value(eb));
                for f in ELEMENT_FIELDS {
                    push(&mut out, format!("{path}/{f}"), field(&va, f), field(&vb, f));
                }
            }
        }
    }
    for eb in b.block.elements.iter().filter(|e| a.block.element(&e.id).is_none()) {
        out.push(DiffEntry {
            path: format!("/elements/{}", escape(&eb.id)),
            before: Value::Null,
            after: element_to_value(eb),
        });
    }
    let replayed = replayed_order(&ia, &ib);
    if replayed != ib {
        out.push(DiffEntry { path: "/element_order".into(), before: ids_value(&replayed), after: ids_value(&ib) });
    }

    for (id, pa) in &a.buildings {
        let path = format!("/buildings/{}", escape(id));
        match b.buildings.get(id) {
            None => out.push(DiffEntry { path, before: building_to_value(pa), after: Value::Null }),
            Some(pb) => diff_building(&mut out, id, pa, pb),
        }
    }
    for (id, pb) in b.buildings.iter().filter(|(id, _)| !a.buildings.contains_key(*id)) {
        out.push(DiffEntry { path: format!("/buildings/{}", escape(id)), before: Value::Null, after: building_to_value(pb) });
    }
    out
}

fn conflict(path: &str) -> EditError {
    EditError::DiffConflict { path: path.to_string() }
}

fn check(path: &str, current: &Value, before: &Value) -> Result<(), EditError> {
    if current == before {
        Ok(())
    } else {
        Err(conflict(path))
    }
}

fn string_or_none(path: &str, v: &Value) -> Result<Option<String>, EditError> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) => Ok(Some(s.clone())),
        _ => Err(conflict(path)),
    }
}

fn reorder<T>(items: &mut Vec<T>, key: impl Fn(&T) -> &str, order: &Value, path: &str) -> Result<(), EditError> {
    let order: Vec<&str> = order
        .as_array()
        .ok_or_else(|| conflict(path))?
        .iter()
        .map(|v| v.as_str().ok_or_else(|| conflict(path)))
        .collect::<Result<_, _>>()?;
    if order.len() != items.len() {
        return Err(conflict(path));
    }
    let mut taken: Vec<Option<T>> = items.drain(..).map(Some).collect();
    for id in order {
        let slot = taken.iter().position(|t| t.as_ref().is_some_and(|t| key(t) == id)).ok_or_else(|| conflict(path))?;
        items.push(taken[slot].take().expect("slot is filled"));
    }
    Ok(())
}

fn apply_building_entry(
    program: &mut CityProgram,
    id: &str,
    rest: &[String],
    e: &DiffEntry,
) -> Result<(), EditError> {
    let path = e.path.as_str();
    if rest.is_empty() {
        let current = program.buildings.get(id).map_or(Value::Null, building_to_value);
        check(path, &current, &e.before)?;
        if e.after.is_null() {
            program.buildings.remove(id);
        } else {
            let p = parse_building_program(e.after.to_string().as_bytes())?.program;
            program.buildings.insert(id.to_string(), p);
        }
        return Ok(());
    }
    let b = program.buildings.get_mut(id).ok_or_else(|| conflict(path))?;
    match rest.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["facade"] => {
            check(path, &opt_string(&b.source_facade), &e.before)?;
            b.source_facade = string_or_none(path, &e.after)?;
        }
        ["component_order"] => {
            reorder(&mut b.components, |c: &BuildingComponent| c.component_type.as_str(), &e.after, path)?;
        }
        ["components", ty] => {
            let current = b.component(ty).map_or(Value::Null, |c| Value::String(c.description.clone()));
            check(path, &current, &e.before)?;
            match string_or_none(path, &e.after)? {
                None => b.components.retain(|c| c.component_type != *ty),
                Some(d) => {
                    b.upsert(BuildingComponent::canonical(ty, &d)?);
                }
            }
        }
        _ => return Err(conflict(path)),
    }
    Ok(())
}

fn flush(p: &mut CityProgram, pending: &mut Option<(String, Value)>) -> Result<(), EditError> {
    if let Some((id, v)) = pending.take() {
        let el = p.block.element_mut(&id).expect("pending element exists");
        *el = element_from_value(&v)?;
    }
    Ok(())
}

/// Replays `diff` on `program`, checking each `before` value on the way.
pub fn apply_diff(program: &CityProgram, diff: &[DiffEntry]) -> Result<CityProgram, EditError> {
    let mut p = program.clone();
    // Field entries of one element are applied together, since a retype can
    // be valid only once its floor_count and facade are gone too.
    let mut pending: Option<(String, Value)> = None;
    for e in diff {
        let path = e.path.as_str();
        let segs: Vec<String> = path.strip_prefix('/').ok_or_else(|| conflict(path))?.split('/').map(unescape).collect();
        let segs: Vec<&str> = segs.iter().map(String::as_str).collect();
        if let ["elements", id, f] = segs.as_slice() {
            if ELEMENT_FIELDS.contains(f) {
                if pending.as_ref().is_none_or(|(pid, _)| pid != id) {
                    flush(&mut p, &mut pending)?;
                    let el = p.block.element(id).ok_or_else(|| conflict(path))?;
                    pending = Some((id.to_string(), element_to_value(el)));
                }
                let v = &mut pending.as_mut().expect("pending was just set").1;
                check(path, &field(v, f), &e.before)?;
                let obj = v.as_object_mut().expect("element is an object");
                if e.after.is_null() {
                    obj.remove(*f);
                } else {
                    obj.insert(f.to_string(), e.after.clone());
                }
                continue;
            }
        }
        flush(&mut p, &mut pending)?;
        match segs.as_slice() {
            ["description"] => {
                check(path, &opt_string(&p.block.description), &e.before)?;
                p.block.description = string_or_none(path, &e.after)?;
            }
            ["region"] => {
                check(path, &region_value(&p.block.region), &e.before)?;
                let r: Region = serde_json::from_value(e.after.clone()).map_err(|_| conflict(path))?;
                p.block.region = r;
            }
            ["element_order"] => reorder(&mut p.block.elements, |e| e.id.as_str(), &e.after, path)?,
            ["elements", id] => {
                let current = p.block.element(id).map_or(Value::Null, element_to_value);
                check(path, &current, &e.before)?;
                p.block.elements.retain(|x| x.id != *id);
                if !e.after.is_null() {
                    p.block.elements.push(element_from_value(&e.after)?);
                }
            }
            ["buildings", id, rest @ ..] => {
                let rest: Vec<String> = rest.iter().map(|s| s.to_string()).collect();
                apply_building_entry(&mut p, id, &rest, e)?;
            }
            _ => return Err(conflict(path)),
        }
    }
    flush(&mut p, &mut pending)?;
    p.validate()?;
    Ok(p)
}
