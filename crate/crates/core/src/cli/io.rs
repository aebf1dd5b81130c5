use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;

use crate::focal::EigenGrid;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

/// Every `*.json` grid in `dir`, sorted by file name. Grids without a label
/// take their file stem.
pub fn read_grid_dir(dir: &Path) -> Result<Vec<EigenGrid>> {
    let entries = fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        bail!("no *.json grids in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let grid: EigenGrid = read_json(p)?;
            Ok(if grid.label().is_empty() {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                grid.with_label(stem)
            } else {
                grid
            })
        })
        .collect()
}

/// Parses `a,b` into a pair of numbers.
pub fn parse_window(text: &str) -> Result<(f64, f64), String> {
    let v = parse_list(text)?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected `min,max`, got `{text}`")),
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}")))
        .collect()
}

/// Parses `key=value` for tolerance overrides.
pub fn parse_tol(text: &str) -> Result<(String, f64), String> {
    let (k, v) = text.split_once('=').ok_or_else(|| format!("expected key=value, got `{text}`"))?;
    let value = v.trim().parse::<f64>().map_err(|e| format!("bad tolerance value `{v}`: {e}"))?;
    Ok((k.trim().to_owned(), value))
}
