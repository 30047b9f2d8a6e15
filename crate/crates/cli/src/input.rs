//! Loading inputs and resolving point labels.

use std::path::Path;

use moebius_core::io::{space_from_csv, space_from_json, table_from_json};
use moebius_core::{FiniteSpace, Scalar, TableStructure};
use serde_json::Value;

use crate::InputError;

pub enum Loaded<S> {
    Space(FiniteSpace<S>),
    Table(TableStructure),
}

/// Reads a space or table. A previous report whose result holds a `space`
/// is accepted in place of a bare space document.
pub fn load<S: Scalar>(path: &Path, tol: Option<f64>) -> Result<Loaded<S>, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let loaded = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        Loaded::Space(space_from_csv(&text)?)
    } else {
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
        let doc = match doc.pointer("/result/space") {
            Some(inner) => inner.clone(),
            None => doc,
        };
        if doc.get("entries").is_some() {
            Loaded::Table(TableStructure::from_data(table_from_json(&doc.to_string())?)?)
        } else {
            Loaded::Space(space_from_json(&doc.to_string())?)
        }
    };
    Ok(match (loaded, tol) {
        (Loaded::Space(sp), Some(t)) => Loaded::Space(sp.with_tol(t)),
        (Loaded::Table(tb), Some(t)) => Loaded::Table(tb.with_tol(t)),
        (l, None) => l,
    })
}

pub fn require_input(path: &Option<std::path::PathBuf>) -> Result<&Path, InputError> {
    path.as_deref().ok_or_else(|| InputError("this command needs --input".into()))
}

/// Indices of `names` among `labels`.
pub fn resolve(labels: &[String], names: &[String]) -> Result<Vec<usize>, InputError> {
    names
        .iter()
        .map(|n| {
            labels
                .iter()
                .position(|l| l == n.trim())
                .ok_or_else(|| InputError(format!("unknown point label {n:?}")))
        })
        .collect()
}

pub fn resolve_n<const N: usize>(labels: &[String], names: &[String], what: &str) -> Result<[usize; N], InputError> {
    let idx = resolve(labels, names)?;
    idx.try_into()
        .map_err(|_| InputError(format!("{what} needs exactly {N} comma-separated labels, got {}", names.len())))
}

pub fn parse_scalar<S: Scalar>(text: &str) -> Result<S, InputError> {
    S::parse(text.trim()).ok_or_else(|| InputError(format!("cannot read {text:?} as a number")))
}
