use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::forest::ScoreReport;

use super::grid::GridCell;

/// Column holding 0/1 labels, by zero-based index or header name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidConfig("empty label column".into()));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn load_csv(path: &Path, label: Option<&LabelColumn>) -> Result<Dataset> {
    read_csv(File::open(path)?, label)
}

/// Reads numeric CSV. A first line with any non-numeric field is taken as a
/// header. Error positions are 1-based file lines and columns.
pub fn read_csv<R: Read>(reader: R, label: Option<&LabelColumn>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let Some(first) = records.next().transpose()? else {
        return Err(Error::EmptyInput);
    };
    let header: Option<Vec<String>> = first
        .iter()
        .any(|f| f.parse::<f64>().is_err())
        .then(|| first.iter().map(str::to_string).collect());
    let width = first.len();
    let label_idx = match label {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(Error::InvalidConfig(format!(
                "label column {i} out of range for {width} columns"
            )))
        }
        Some(LabelColumn::Name(name)) => {
            let names = header.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!("label column '{name}' needs a header row"))
            })?;
            Some(names.iter().position(|n| n == name).ok_or_else(|| {
                Error::InvalidConfig(format!("no column named '{name}'"))
            })?)
        }
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    let body = header.is_none().then_some(first).into_iter().map(Ok);
    for (offset, record) in body.chain(records).enumerate() {
        let record = record?;
        let row = offset + 1 + usize::from(header.is_some());
        for (c, field) in record.iter().enumerate() {
            let column = c + 1;
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidData(format!(
                    "non-finite value at row {row}, column {column}"
                )));
            }
            if Some(c) == label_idx {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Parse {
                        row,
                        column,
                        message: format!("label '{field}' is not 0 or 1"),
                    });
                }
                labels.push(v as u8);
            } else {
                values.push(v);
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::EmptyInput);
    }
    let n_cols = width - usize::from(label_idx.is_some());
    let mut ds = Dataset::new(
        Matrix::new(n_rows, n_cols, values)?,
        label_idx.map(|_| labels),
    )?;
    ds.column_names = header.map(|mut h| {
        if let Some(i) = label_idx {
            h.remove(i);
        }
        h
    });
    Ok(ds)
}

/// Writes features as `x0..x{D-1}` (or the dataset's own names) plus a `label` column when present.
pub fn write_dataset_csv<W: Write>(writer: W, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match &ds.column_names {
        Some(names) => names.clone(),
        None => (0..ds.d()).map(|j| format!("x{j}")).collect(),
    };
    if ds.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, row) in ds.rows.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = &ds.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `point_index,mass_score,density,flag` with one row per report.
pub fn write_scores_csv<W: Write>(writer: W, reports: &[ScoreReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["point_index", "mass_score", "density", "flag"])?;
    for (i, r) in reports.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.mass_score.to_string(),
            r.density.to_string(),
            u8::from(r.flag).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Cell centres `x0[,x1]` followed by `density`.
pub fn write_grid_csv<W: Write>(writer: W, cells: &[GridCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = cells.first().map_or(0, |c| c.center.len());
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    header.push("density".into());
    w.write_record(&header)?;
    for c in cells {
        let mut rec: Vec<String> = c.center.iter().map(|v| v.to_string()).collect();
        rec.push(c.density.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
