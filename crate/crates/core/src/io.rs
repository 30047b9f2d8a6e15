//! Reading and writing spaces and cross-ratio tables.
//!
//! Space JSON: `{"points": [labels], "matrix": [[entries]], "infinity": label}`
//! where entries are numbers, `"p/q"` strings or `"inf"`. Space CSV: a header
//! row of labels, then one row per point; an optional leading column of row
//! labels is allowed when the header's first cell is empty. The infinity
//! point of a CSV is the unique point whose off-diagonal entries are `inf`.
//!
//! Table JSON: `{"points": [...], "entries": [{"quad": [w,x,y,z], "M": [a,b,c]}]}`
//! with components numbers or `"inf"` / `"-inf"`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ext::ExtScalar;
use crate::scalar::Scalar;
use crate::space::FiniteSpace;
use crate::triples::{parse_ext_log, LogTriple, TRIPLE_TOL};

fn parse_entry<S: Scalar>(text: &str, location: &str) -> Result<ExtScalar<S>> {
    let t = text.trim();
    if matches!(t, "inf" | "Infinity" | "∞" | "+inf") {
        return Ok(ExtScalar::Infinite);
    }
    let v = S::parse(t).ok_or_else(|| Error::parse(location, format!("cannot read {t:?} as a distance")))?;
    if v < S::zero() {
        return Err(Error::parse(location, format!("negative distance {t}")));
    }
    Ok(ExtScalar::Finite(v))
}

fn value_entry<S: Scalar>(v: &Value, location: &str) -> Result<ExtScalar<S>> {
    match v {
        Value::Number(n) => parse_entry(&n.to_string(), location),
        Value::String(s) => parse_entry(s, location),
        other => Err(Error::parse(location, format!("expected number or string, found {other}"))),
    }
}

fn labels_field(doc: &Value) -> Result<Vec<String>> {
    let points = doc
        .get("points")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("points", "missing array of point labels"))?;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(Error::parse(format!("points[{i}]"), format!("label must be a string, found {other}"))),
        })
        .collect()
}

/// Parses a space JSON document.
pub fn space_from_json<S: Scalar>(text: &str) -> Result<FiniteSpace<S>> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let labels = labels_field(&doc)?;
    let rows = doc
        .get("matrix")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("matrix", "missing array of rows"))?;
    if rows.len() != labels.len() {
        return Err(Error::parse("matrix", format!("{} rows for {} points", rows.len(), labels.len())));
    }
    let mut matrix = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(format!("matrix[{i}]"), "row is not an array"))?;
        if row.len() != labels.len() {
            return Err(Error::parse(
                format!("matrix[{i}]"),
                format!("{} entries for {} points", row.len(), labels.len()),
            ));
        }
        matrix.push(
            row.iter()
                .enumerate()
                .map(|(j, v)| value_entry::<S>(v, &format!("matrix[{i}][{j}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let infinity = match doc.get("infinity") {
        None | Some(Value::Null) => None,
        Some(Value::String(l)) => Some(
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::parse("infinity", format!("unknown label {l:?}")))?,
        ),
        Some(other) => return Err(Error::parse("infinity", format!("expected a label, found {other}"))),
    };
    FiniteSpace::new(labels, matrix, infinity)
}

/// Parses a space CSV document.
pub fn space_from_csv<S: Scalar>(text: &str) -> Result<FiniteSpace<S>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse("line 1", e.to_string()))?
        .clone();
    let row_labels = header.get(0).is_some_and(str::is_empty);
    let labels: Vec<String> = header.iter().skip(usize::from(row_labels)).map(str::to_string).collect();
    let n = labels.len();
    let mut matrix = Vec::with_capacity(n);
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| Error::parse(format!("line {line}"), e.to_string()))?;
        let mut cells: Vec<&str> = record.iter().collect();
        if row_labels {
            let label = cells.first().copied().unwrap_or("");
            if labels.get(r).map(String::as_str) != Some(label) {
                return Err(Error::parse(format!("line {line}, column 1"), format!("row label {label:?} does not match header")));
            }
            cells.remove(0);
        }
        if cells.len() != n {
            return Err(Error::parse(format!("line {line}"), format!("{} entries for {n} points", cells.len())));
        }
        let offset = 1 + usize::from(row_labels);
        matrix.push(
            cells
                .iter()
                .enumerate()
                .map(|(c, cell)| parse_entry::<S>(cell, &format!("line {line}, column {}", c + offset)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if matrix.len() != n {
        return Err(Error::parse("end of input", format!("{} rows for {n} points", matrix.len())));
    }
    let infinite_rows: Vec<usize> = (0..n)
        .filter(|&i| n > 1 && (0..n).filter(|&j| j != i).all(|j| matrix[i][j].is_infinite()))
        .collect();
    let infinity = match infinite_rows.as_slice() {
        [w] => Some(*w),
        // Two points alone at infinite distance: no way to tell which is ∞.
        _ => None,
    };
    FiniteSpace::new(labels, matrix, infinity)
}

/// Loads a space, choosing the format by file extension.
pub fn load_space<S: Scalar>(path: &std::path::Path) -> Result<FiniteSpace<S>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => space_from_csv(&text),
        _ => space_from_json(&text),
    }
}

pub fn space_to_json<S: Scalar>(sp: &FiniteSpace<S>) -> Value {
    let n = sp.len();
    let matrix: Vec<Value> = (0..n)
        .map(|i| Value::Array((0..n).map(|j| sp.d(i, j).to_json()).collect()))
        .collect();
    let mut doc = json!({ "points": sp.labels(), "matrix": matrix });
    if let Some(w) = sp.infinity() {
        doc["infinity"] = Value::String(sp.label(w).to_string());
    }
    doc
}

pub fn space_to_csv<S: Scalar>(sp: &FiniteSpace<S>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(e.to_string());
    writer.write_record(sp.labels()).map_err(io)?;
    for i in 0..sp.len() {
        writer
            .write_record((0..sp.len()).map(|j| sp.d(i, j).to_string()))
            .map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Raw contents of a table JSON document.
#[derive(Clone, Debug)]
pub struct TableData {
    pub points: Vec<String>,
    pub entries: Vec<([usize; 4], LogTriple)>,
}

pub fn table_from_json(text: &str) -> Result<TableData> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let points = labels_field(&doc)?;
    let raw = doc
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("entries", "missing array of entries"))?;
    let mut entries = Vec::with_capacity(raw.len());
    for (k, e) in raw.iter().enumerate() {
        let at = |f: &str| format!("entries[{k}].{f}");
        let quad = e
            .get("quad")
            .and_then(Value::as_array)
            .filter(|q| q.len() == 4)
            .ok_or_else(|| Error::parse(at("quad"), "expected four point labels"))?;
        let mut q = [0usize; 4];
        for (slot, v) in quad.iter().enumerate() {
            let label = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(Error::parse(at("quad"), "labels must be strings")),
            };
            q[slot] = points
                .iter()
                .position(|p| *p == label)
                .ok_or_else(|| Error::parse(at("quad"), format!("unknown label {label:?}")))?;
        }
        let m = e
            .get("M")
            .and_then(Value::as_array)
            .filter(|m| m.len() == 3)
            .ok_or_else(|| Error::parse(at("M"), "expected three components"))?;
        let mut comps = [crate::ext::ExtLog::ZERO; 3];
        for (slot, v) in m.iter().enumerate() {
            let text = match v {
                Value::Number(n) => n.to_string(),
                Value::String(s) => s.clone(),
                _ => return Err(Error::parse(at("M"), "components must be numbers or \"inf\"/\"-inf\"")),
            };
            comps[slot] = parse_ext_log(&text)
                .ok_or_else(|| Error::parse(at("M"), format!("cannot read {text:?}")))?;
        }
        let triple = LogTriple::new(comps, TRIPLE_TOL).map_err(|e| Error::parse(at("M"), e.to_string()))?;
        entries.push((q, triple));
    }
    Ok(TableData { points, entries })
}

pub fn table_to_json(data: &TableData) -> Value {
    let entries: Vec<Value> = data
        .entries
        .iter()
        .map(|(q, m)| {
            json!({
                "quad": q.iter().map(|&i| data.points[i].clone()).collect::<Vec<_>>(),
                "M": m,
            })
        })
        .collect();
    json!({ "points": data.points, "entries": entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    const LINE: &str = r#"{"points": ["a","b","c","w"],
        "matrix": [[0, "1/2", 1.25, "inf"], ["1/2", 0, 0.75, "inf"], [1.25, 0.75, 0, "inf"], ["inf","inf","inf",0]],
        "infinity": "w"}"#;

    #[test]
    fn json_roundtrip_exact() {
        let sp: FiniteSpace<Rational> = space_from_json(LINE).unwrap();
        assert_eq!(sp.d(0, 1), &ExtScalar::Finite(ratio(1, 2)));
        assert_eq!(sp.d(0, 2), &ExtScalar::Finite(ratio(5, 4)));
        assert_eq!(sp.infinity(), Some(3));
        assert!(sp.validate().passed());
        let again: FiniteSpace<Rational> = space_from_json(&space_to_json(&sp).to_string()).unwrap();
        assert_eq!(again, sp);
    }

    #[test]
    fn csv_roundtrip_and_infinity_inference() {
        let sp: FiniteSpace<Rational> = space_from_json(LINE).unwrap();
        let text = space_to_csv(&sp).unwrap();
        let back: FiniteSpace<Rational> = space_from_csv(&text).unwrap();
        assert_eq!(back, sp);
        let labelled = ",x,y\nx,0,3\ny,3,0\n";
        let s2: FiniteSpace<f64> = space_from_csv(labelled).unwrap();
        assert_eq!(s2.d(0, 1), &ExtScalar::Finite(3.0));
        assert_eq!(s2.infinity(), None);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = r#"{"points": ["a","b"], "matrix": [[0, 1], [1, "x"]]}"#;
        let err = space_from_json::<Rational>(bad).unwrap_err();
        assert!(err.to_string().contains("matrix[1][1]"), "{err}");
        let bad_csv = "a,b\n0,1\n1,-2\n";
        let err = space_from_csv::<Rational>(bad_csv).unwrap_err();
        assert!(err.to_string().contains("line 3, column 2"), "{err}");
        let short = "a,b\n0,1\n";
        assert!(space_from_csv::<Rational>(short).is_err());
        let err = space_from_json::<Rational>("{\"points\": [").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn table_roundtrip() {
        let text = r#"{"points": ["a","b","c","d"], "entries": [
            {"quad": ["a","b","c","d"], "M": [0.5, -0.25, -0.25]},
            {"quad": ["a","a","c","d"], "M": [0, "inf", "-inf"]}]}"#;
        let t = table_from_json(text).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert_eq!(t.entries[1].1, LogTriple::boundary(0));
        let back = table_from_json(&table_to_json(&t).to_string()).unwrap();
        assert_eq!(back.entries, t.entries);
        let bad = r#"{"points": ["a"], "entries": [{"quad": ["a","a","a","z"], "M": [0,0,0]}]}"#;
        assert!(table_from_json(bad).unwrap_err().to_string().contains("entries[0].quad"));
    }
}
