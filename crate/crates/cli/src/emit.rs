use btu_core::btu::{to_alist, to_dot};
use btu_core::search::{CensusRow, SearchResult};
use btu_core::Btu;
use serde_json::{json, Value};

use crate::commands::CliError;
use crate::Format;

pub enum Payload<'a> {
    Json(Value),
    Btu(Btu),
    Census(&'a [CensusRow]),
    Search(&'a SearchResult),
}

impl Payload<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Payload::Json(_) => "report",
            Payload::Btu(_) => "BTU",
            Payload::Census(_) => "census",
            Payload::Search(_) => "search result",
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline. `serde_json`'s map
/// type is ordered by key, so going through `Value` sorts every object.
fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("Value serialises");
    s.push('\n');
    s
}

fn search_json(res: &SearchResult) -> Value {
    let mut v = json!({
        "mode": res.mode.to_string(),
        "m": res.m,
        "r": res.r,
        "spec": res.spec.as_ref().map(|s| s.to_string()),
        "girth": res.girth,
        "perms": res.best.as_ref().map(|b| {
            b.perms().perms().iter().map(|p| p.labels().to_vec()).collect::<Vec<_>>()
        }),
        "explored": res.explored,
        "witness_rank": res.witness_rank,
        "distinct": res.distinct,
        "duplicates": res.duplicates,
        "truncated": res.truncated,
        "notes": res.notes,
    });
    if !res.census.is_empty() {
        v["census"] = serde_json::to_value(&res.census).expect("census rows serialise");
    }
    v
}

fn census_csv(rows: &[CensusRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["beta_tuple", "best_girth", "classes_seen"])
            .map_err(|e| CliError::io(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn emit(payload: &Payload<'_>, format: Format) -> Result<String, CliError> {
    let mismatch = || {
        CliError::usage(format!(
            "format {format:?} cannot express a {}",
            payload.kind()
        ))
    };
    match (payload, format) {
        (Payload::Json(v), Format::Json) => Ok(json_text(v)),
        (Payload::Btu(b), Format::Json) => Ok(json_text(&serde_json::to_value(b).expect("BTU serialises"))),
        (Payload::Btu(b), Format::Alist) => Ok(to_alist(&b.matrix())),
        (Payload::Btu(b), Format::Dot) => Ok(to_dot(b)),
        (Payload::Census(rows), Format::Csv) => census_csv(rows),
        (Payload::Census(rows), Format::Json) => {
            Ok(json_text(&serde_json::to_value(rows).expect("census rows serialise")))
        }
        (Payload::Search(res), Format::Json) => Ok(json_text(&search_json(res))),
        (Payload::Search(res), Format::Csv) if res.mode == btu_core::SearchMode::Implicit => {
            census_csv(&res.census)
        }
        (Payload::Search(res), Format::Alist | Format::Dot) => match &res.best {
            Some(b) => emit(&Payload::Btu(b.clone()), format),
            None => Err(CliError::usage("the search found no BTU to export")),
        },
        _ => Err(mismatch()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use btu_core::Partition;

    #[test]
    fn json_keys_are_sorted() {
        let text = json_text(&json!({"z": 1, "a": {"y": 2, "b": 3}}));
        assert!(text.ends_with('\n'));
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
        assert!(text.find("\"b\"").unwrap() < text.find("\"y\"").unwrap());
    }

    #[test]
    fn census_header() {
        let csv = census_csv(&[]).unwrap();
        assert_eq!(csv, "beta_tuple,best_girth,classes_seen\n");
        let rows = [CensusRow {
            beta_tuple: "2,2:4".into(),
            best_girth: Some(4),
            classes_seen: 3,
        }];
        assert_eq!(census_csv(&rows).unwrap(), "beta_tuple,best_girth,classes_seen\n\"2,2:4\",4,3\n");
    }

    #[test]
    fn mismatches_are_usage_errors() {
        let b = Btu::psi(&Partition::new(vec![3]).unwrap());
        assert_eq!(emit(&Payload::Btu(b), Format::Csv).unwrap_err().code, 2);
        assert_eq!(emit(&Payload::Json(json!({})), Format::Alist).unwrap_err().code, 2);
    }
}
