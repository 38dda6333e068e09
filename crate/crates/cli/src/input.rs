use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use coda_cube::{CellRecord, CubeSample, FactorDesign, KCube};
use nalgebra::DMatrix;

use crate::failure::{Failure, Outcome};

pub struct LoadedSample {
    pub sample: CubeSample,
    /// Whether the input carried an `id` column.
    pub has_id: bool,
}

fn reader(path: &Path) -> Outcome<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads a long-format table: one column per factor, optional `id`, and
/// `value`. Observations keep the order of their first record.
pub fn load_sample(path: &Path, design: &Arc<FactorDesign>) -> Outcome<LoadedSample> {
    let mut rdr = reader(path)?;
    let where_ = |e: &dyn std::fmt::Display| Failure::input(format!("{}: {e}", path.display()));
    let headers = rdr.headers().map_err(|e| where_(&e))?.clone();
    if headers.iter().all(str::is_empty) {
        return Err(where_(&"no records"));
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let value_col = column("value").ok_or_else(|| where_(&"line 1: missing `value` column"))?;
    let id_col = column("id");
    let factor_cols = design
        .factors()
        .iter()
        .map(|f| {
            column(f.name())
                .ok_or_else(|| where_(&format!("line 1: missing column for factor `{}`", f.name())))
        })
        .collect::<Outcome<Vec<_>>>()?;
    let known = factor_cols.len() + 1 + usize::from(id_col.is_some());
    if headers.len() != known {
        let extra: Vec<&str> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !factor_cols.contains(i) && Some(*i) != id_col && *i != value_col)
            .map(|(_, h)| h)
            .collect();
        return Err(where_(&format!(
            "line 1: unexpected column(s) {}",
            extra.join(", ")
        )));
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<CellRecord>> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| where_(&e))?;
        let line = line_of(&record);
        if record.len() != headers.len() {
            return Err(where_(&format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let raw = &record[value_col];
        let value: f64 = raw
            .parse()
            .map_err(|_| where_(&format!("line {line}: invalid value `{raw}`")))?;
        let levels: Vec<&str> = factor_cols.iter().map(|&c| &record[c]).collect();
        let mut cell = CellRecord::new(&levels, value);
        cell.line = Some(line);
        let id = id_col.map_or_else(|| "1".to_string(), |c| record[c].to_string());
        groups
            .entry(id.clone())
            .or_insert_with(|| {
                order.push(id);
                Vec::new()
            })
            .push(cell);
    }
    if order.is_empty() {
        return Err(where_(&"no records"));
    }
    let cubes = order
        .into_iter()
        .map(|id| {
            KCube::from_long_records(design.clone(), &groups[&id])
                .map(|c| c.with_id(id.clone()))
                .map_err(|e| where_(&format!("observation `{id}`: {e}")))
        })
        .collect::<Outcome<Vec<_>>>()?;
    let sample = CubeSample::new(cubes).map_err(Failure::input)?;
    Ok(LoadedSample {
        sample,
        has_id: id_col.is_some(),
    })
}

/// A log-contrast matrix: header `name` followed by cell labels (any order),
/// one named row per log-contrast. Columns are returned in canonical cell
/// order.
pub fn load_matrix(path: &Path, design: &FactorDesign) -> Outcome<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = reader(path)?;
    let where_ = |e: &dyn std::fmt::Display| Failure::input(format!("{}: {e}", path.display()));
    let headers = rdr.headers().map_err(|e| where_(&e))?.clone();
    if headers.iter().all(str::is_empty) {
        return Err(where_(&"no records"));
    }
    if headers.get(0) != Some("name") {
        return Err(where_(&"line 1: first column must be `name`"));
    }
    let cells = design.cell_count();
    let mut col_of = vec![None; cells];
    for (i, h) in headers.iter().enumerate().skip(1) {
        let flat = (0..cells)
            .find(|&f| design.cell_label(f) == h)
            .ok_or_else(|| where_(&format!("line 1: unknown cell `{h}`")))?;
        if col_of[flat].replace(i).is_some() {
            return Err(where_(&format!("line 1: duplicate cell `{h}`")));
        }
    }
    if let Some(flat) = col_of.iter().position(Option::is_none) {
        return Err(where_(&format!(
            "line 1: missing cell `{}`",
            design.cell_label(flat)
        )));
    }
    let mut names = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| where_(&e))?;
        let line = line_of(&record);
        if record.len() != headers.len() {
            return Err(where_(&format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        names.push(record[0].to_string());
        for c in col_of.iter().flatten() {
            let raw = &record[*c];
            rows.push(
                raw.parse()
                    .map_err(|_| where_(&format!("line {line}: invalid number `{raw}`")))?,
            );
        }
    }
    if names.is_empty() {
        return Err(where_(&"no records"));
    }
    let matrix = DMatrix::from_row_slice(names.len(), cells, &rows);
    Ok((names, matrix))
}
