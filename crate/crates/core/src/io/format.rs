//! JSON instance files.
//!
//! ```json
//! {
//!   "services": 1,
//!   "families": [
//!     {"id": 1, "r": [2]}
//!   ],
//!   "places": [
//!     {"id": 7, "lower": [0], "upper": [3]}
//!   ],
//!   "utilities": [
//!     [4]
//!   ],
//!   "preferences": [
//!     [[7]]
//!   ]
//! }
//! ```
//!
//! `utilities` is row-major (family by place). Each `preferences` entry lists
//! tie groups of place ids, best group first; places not listed are
//! unacceptable.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Assignment, Family, Instance, Place, PlaceId, PreferenceProfile, UtilityMatrix};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    services: usize,
    families: Vec<RawFamily>,
    places: Vec<RawPlace>,
    #[serde(default)]
    utilities: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    preferences: Option<Vec<Vec<Vec<u64>>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    id: u64,
    r: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlace {
    id: u64,
    lower: Vec<u64>,
    upper: Vec<u64>,
}

fn parse_error(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn place_index(places: &[Place]) -> Result<HashMap<u64, PlaceId>> {
    let mut index = HashMap::new();
    for (j, p) in places.iter().enumerate() {
        if index.insert(p.id, j).is_some() {
            return Err(parse_error(format!("places: duplicate id {}", p.id)));
        }
    }
    Ok(index)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))?;
    if raw.services == 0 {
        return Err(parse_error("services: must be positive"));
    }
    let families: Vec<Family> = raw.families.into_iter().map(|f| Family::new(f.id, f.r)).collect();
    let mut seen = std::collections::HashSet::new();
    if let Some(f) = families.iter().find(|f| !seen.insert(f.id)) {
        return Err(parse_error(format!("families: duplicate id {}", f.id)));
    }
    let places: Vec<Place> = raw
        .places
        .into_iter()
        .map(|p| Place::new(p.id, p.lower, p.upper))
        .collect();
    let index = place_index(&places)?;
    let preferences = match raw.preferences {
        None => None,
        Some(lists) => {
            let groups = lists
                .iter()
                .enumerate()
                .map(|(f, list)| {
                    list.iter()
                        .map(|group| {
                            group
                                .iter()
                                .map(|id| {
                                    index.get(id).copied().ok_or_else(|| {
                                        parse_error(format!("preferences[{f}]: unknown place id {id}"))
                                    })
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Some(
                PreferenceProfile::from_groups(&groups, places.len())
                    .map_err(|e| parse_error(format!("preferences: {e}")))?,
            )
        }
    };
    let utilities = raw.utilities.map(UtilityMatrix::new);
    Instance::new(raw.services, families, places, utilities, preferences).map_err(|e| parse_error(e.to_string()))
}

fn list<T: ToString>(values: &[T]) -> String {
    let items: Vec<String> = values.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn block(out: &mut String, key: &str, lines: &[String], last: bool) {
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, line) in lines.iter().enumerate() {
        let comma = if i + 1 < lines.len() { "," } else { "" };
        let _ = writeln!(out, "    {line}{comma}");
    }
    let _ = writeln!(out, "  ]{}", if last { "" } else { "," });
}

/// Canonical text of an instance; [`parse_instance`] inverts it exactly.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"services\": {},", inst.services());
    let families: Vec<String> = inst
        .families()
        .iter()
        .map(|f| format!("{{\"id\": {}, \"r\": {}}}", f.id, list(&f.requirements)))
        .collect();
    let has_utilities = inst.utilities().is_some();
    let has_preferences = inst.preferences().is_some();
    block(&mut out, "families", &families, false);
    let places: Vec<String> = inst
        .places()
        .iter()
        .map(|p| format!("{{\"id\": {}, \"lower\": {}, \"upper\": {}}}", p.id, list(&p.lower), list(&p.upper)))
        .collect();
    block(&mut out, "places", &places, !has_utilities && !has_preferences);
    if let Some(u) = inst.utilities() {
        let rows: Vec<String> = u.rows().iter().map(|r| list(r)).collect();
        block(&mut out, "utilities", &rows, !has_preferences);
    }
    if let Some(prefs) = inst.preferences() {
        let rows: Vec<String> = (0..inst.n())
            .map(|f| {
                let groups: Vec<String> = prefs
                    .groups(f)
                    .iter()
                    .map(|g| list(&g.iter().map(|&p| inst.places()[p].id).collect::<Vec<_>>()))
                    .collect();
                format!("[{}]", groups.join(", "))
            })
            .collect();
        block(&mut out, "preferences", &rows, true);
    }
    out.push_str("}\n");
    out
}

#[derive(Deserialize)]
struct RawAssignment {
    assignment: Vec<Option<u64>>,
}

/// Reads `{"assignment": [place id or null, ...]}`; other keys are ignored,
/// so a solve report can be read back directly.
pub fn parse_assignment(text: &str, inst: &Instance) -> Result<Assignment> {
    let raw: RawAssignment = serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))?;
    if raw.assignment.len() != inst.n() {
        return Err(parse_error(format!(
            "assignment: {} entries for {} families",
            raw.assignment.len(),
            inst.n()
        )));
    }
    let index = place_index(inst.places())?;
    let targets = raw
        .assignment
        .iter()
        .enumerate()
        .map(|(f, id)| match id {
            None => Ok(None),
            Some(id) => index
                .get(id)
                .map(|&j| Some(j))
                .ok_or_else(|| parse_error(format!("assignment[{f}]: unknown place id {id}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assignment::new(targets))
}

/// Place ids per family, `None` for unassigned.
pub fn assignment_ids(inst: &Instance, assignment: &Assignment) -> Vec<Option<u64>> {
    assignment
        .targets()
        .iter()
        .map(|t| t.map(|j| inst.places()[j].id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ex1;

    const EX1_TEXT: &str = include_str!("../../fixtures/ex1.json");

    #[test]
    fn worked_example_round_trips() {
        let parsed = parse_instance(EX1_TEXT).unwrap();
        assert_eq!(parsed, ex1());
        assert_eq!(serialize_instance(&parsed), EX1_TEXT);
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"services": 1, "families": [], "places": [{"id": 1, "upper": [2]}]}"#;
        let err = parse_instance(text).unwrap_err().to_string();
        assert!(err.contains("lower"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn zero_services_rejected() {
        let text = r#"{"services": 0, "families": [], "places": []}"#;
        assert!(matches!(parse_instance(text), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_references() {
        let text = r#"{"services": 1, "families": [{"id": 1, "r": [1]}], "places": [{"id": 1, "lower": [0], "upper": [2]}], "preferences": [[[9]]]}"#;
        assert!(parse_instance(text).unwrap_err().to_string().contains("unknown place id 9"));
        let dup = r#"{"services": 1, "families": [], "places": [{"id": 1, "lower": [0], "upper": [2]}, {"id": 1, "lower": [0], "upper": [2]}]}"#;
        assert!(parse_instance(dup).is_err());
    }

    #[test]
    fn assignments_use_place_ids() {
        let inst = ex1();
        let a = parse_assignment(r#"{"assignment": [1, 2, 2, 1], "note": "x"}"#, &inst).unwrap();
        assert_eq!(a, Assignment::new(vec![Some(0), Some(1), Some(1), Some(0)]));
        assert_eq!(assignment_ids(&inst, &a), vec![Some(1), Some(2), Some(2), Some(1)]);
        assert!(parse_assignment(r#"{"assignment": [1]}"#, &inst).is_err());
    }
}
