//! CSV ingest and output for curves, targets, feature matrices and traces.
//!
//! Curve files: the first row holds the grid points (optionally preceded by a
//! non-numeric id column name); every later row is `id, v_1, ..., v_N`.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use funsel::search::TraceEntry;
use funsel::{FeatureMatrixF64, GridF64, SampleF64};
use ndarray::Array2;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| anyhow!("{what}: cannot parse {s:?} as a number"))
}

pub fn read_curves(path: &Path) -> Result<SampleF64> {
    let ctx = || format!("reading curves from {}", path.display());
    let mut rdr = reader(path).with_context(ctx)?;
    let mut rows = rdr.records();
    let header = rows.next().ok_or_else(|| anyhow!("empty file")).with_context(ctx)?.with_context(ctx)?;
    let mut cells: Vec<&str> = header.iter().collect();
    if cells.first().is_some_and(|c| c.parse::<f64>().is_err()) {
        cells.remove(0);
    }
    let points = cells
        .iter()
        .enumerate()
        .map(|(i, c)| parse_real(c, &format!("header column {}", i + 1)))
        .collect::<Result<Vec<f64>>>()
        .with_context(ctx)?;
    let grid = GridF64::new(points).map_err(|e| anyhow!("header: {e}")).with_context(ctx)?;
    let len = grid.len();

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut bad_rows = Vec::new();
    let mut seen = HashSet::new();
    for (r, rec) in rows.enumerate() {
        let line = r + 2;
        let rec = rec.with_context(ctx)?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if rec.len() != len + 1 {
            bail!("{}: row {line} has {} values, expected id plus {len}", path.display(), rec.len().saturating_sub(1));
        }
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            bail!("{}: row {line} repeats id {id:?}", path.display());
        }
        let vals = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(c, s)| parse_real(s, &format!("row {line}, column {}", c + 2)))
            .collect::<Result<Vec<f64>>>()
            .with_context(ctx)?;
        if vals.iter().any(|v| !v.is_finite()) {
            bad_rows.push(line);
        }
        ids.push(id);
        values.extend(vals);
    }
    if !bad_rows.is_empty() {
        let list: Vec<String> = bad_rows.iter().map(|r| r.to_string()).collect();
        bail!("{}: non-finite values in rows {}", path.display(), list.join(", "));
    }
    if ids.is_empty() {
        bail!("{}: no curves after the header", path.display());
    }
    let curves = Array2::from_shape_vec((ids.len(), len), values)?;
    SampleF64::new(grid, curves, ids).map_err(|e| anyhow!("{e}")).with_context(ctx)
}

pub fn write_curves<W: Write>(sample: &SampleF64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(sample.grid().points().iter().map(|p| p.to_string()));
    w.write_record(&header)?;
    for (j, id) in sample.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(sample.curve(j).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves_file(sample: &SampleF64, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_curves(sample, f)
}

/// Reads `id,value` rows; a first row whose value does not parse is taken
/// as a header.
fn read_keyed<V>(path: &Path, parse: impl Fn(&str) -> Option<V>) -> Result<Vec<(String, V, usize)>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let line = r + 1;
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            bail!("{}: row {line} must be `id,value`", path.display());
        }
        match parse(&rec[1]) {
            Some(v) => out.push((rec[0].to_string(), v, line)),
            None if line == 1 => {}
            None => bail!("{}: row {line}: cannot parse {:?}", path.display(), &rec[1]),
        }
    }
    Ok(out)
}

/// Re-orders keyed values to follow `ids`, rejecting missing, extra and
/// repeated ids.
fn align<V: Clone>(path: &Path, rows: Vec<(String, V, usize)>, ids: &[String]) -> Result<Vec<V>> {
    let mut map: HashMap<String, V> = HashMap::new();
    for (id, v, line) in rows {
        if map.insert(id.clone(), v).is_some() {
            bail!("{}: row {line} repeats id {id:?}", path.display());
        }
    }
    let missing: Vec<&str> = ids.iter().filter(|id| !map.contains_key(*id)).map(String::as_str).collect();
    if !missing.is_empty() {
        bail!("{}: no target for curve id(s) {}", path.display(), missing.join(", "));
    }
    let known: HashSet<&String> = ids.iter().collect();
    let mut extra: Vec<&String> = map.keys().filter(|k| !known.contains(k)).collect();
    if !extra.is_empty() {
        extra.sort();
        let extra: Vec<&str> = extra.into_iter().map(String::as_str).collect();
        bail!("{}: id(s) {} have no curve", path.display(), extra.join(", "));
    }
    Ok(ids.iter().map(|id| map[id].clone()).collect())
}

pub fn read_labels(path: &Path, ids: &[String]) -> Result<Vec<i64>> {
    let rows = read_keyed(path, |s| s.parse::<i64>().ok())?;
    align(path, rows, ids)
}

pub fn read_scalar(path: &Path, ids: &[String]) -> Result<Vec<f64>> {
    let rows = read_keyed(path, |s| s.parse::<f64>().ok())?;
    if let Some((id, _, line)) = rows.iter().find(|(_, v, _)| !v.is_finite()) {
        bail!("{}: row {line} ({id}) is not finite", path.display());
    }
    align(path, rows, ids)
}

/// Functional responses on their own grid, rows re-ordered to `ids`.
pub fn read_functional(path: &Path, ids: &[String]) -> Result<SampleF64> {
    let y = read_curves(path)?;
    let rows: Vec<(String, usize, usize)> = y.ids().iter().enumerate().map(|(j, id)| (id.clone(), j, j + 2)).collect();
    let order = align(path, rows, ids)?;
    y.subset(&order).map_err(|e| anyhow!("{e}"))
}

pub fn write_feature_matrix<W: Write>(fm: &FeatureMatrixF64, ids: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(fm.specs().iter().map(|s| s.label.clone()));
    w.write_record(&header)?;
    for (j, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(fm.values().row(j).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(trace: &[TraceEntry], labels: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "phase", "subset", "labels", "rescaled", "raw"])?;
    for t in trace {
        let names: Vec<&str> = t.subset.indices().iter().map(|&i| labels[i].as_str()).collect();
        let phase = serde_json::to_value(t.phase)?.as_str().unwrap_or_default().to_string();
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            t.round.to_string(),
            phase,
            t.subset.to_string(),
            names.join(" "),
            num(t.rescaled),
            num(t.raw),
        ])?;
    }
    w.flush()?;
    Ok(())
}
