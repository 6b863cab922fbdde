//! Tabular ingestion: CSV + schema in, typed [`Dataset`] out, then numeric
//! design blocks via [`encode`].

mod encode;
mod schema;

pub use encode::{encode, encode_raw, Block, BlockLabels, Centering, EncodedDesign};
pub use schema::{ColumnKind, ColumnSpec, CovariateRole, Schema};

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Category codes index into `levels`, which keep first-appearance order.
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell rendered as text (category label or shortest round-trip number).
    pub fn label(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => format!("{}", v[row]),
            Column::Categorical { levels, codes } => levels[codes[row]].clone(),
        }
    }

    pub fn categorical_from_labels<S: AsRef<str>>(labels: &[S]) -> Column {
        let mut levels: Vec<String> = Vec::new();
        let codes = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                match levels.iter().position(|x| x == l) {
                    Some(i) => i,
                    None => {
                        levels.push(l.to_string());
                        levels.len() - 1
                    }
                }
            })
            .collect();
        Column::Categorical { levels, codes }
    }

    fn select_rows(&self, idx: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(idx.iter().map(|&i| v[i]).collect()),
            Column::Categorical { levels, codes } => Column::Categorical {
                levels: levels.clone(),
                codes: idx.iter().map(|&i| codes[i]).collect(),
            },
        }
    }
}

/// Rectangular, complete table of named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Column>,
    rows: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::dim("dataset column names", columns.len(), names.len()));
        }
        let rows = columns.first().map_or(0, Column::len);
        for (name, c) in names.iter().zip(&columns) {
            if c.len() != rows {
                return Err(Error::Dimension {
                    context: format!("dataset column '{name}'"),
                    expected: rows,
                    found: c.len(),
                });
            }
        }
        Ok(Dataset {
            names,
            columns,
            rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(_) => Err(Error::Schema(format!("column '{name}' is not numeric"))),
            None => Err(Error::Schema(format!("unknown column '{name}'"))),
        }
    }

    /// Copy with one numeric column replaced.
    pub fn with_numeric(&self, name: &str, values: Vec<f64>) -> Result<Dataset> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("unknown column '{name}'")))?;
        if values.len() != self.rows {
            return Err(Error::dim("replacement column", self.rows, values.len()));
        }
        let mut out = self.clone();
        out.columns[i] = Column::Numeric(values);
        Ok(out)
    }

    /// Copy with an extra column appended.
    pub fn with_column(&self, name: &str, column: Column) -> Result<Dataset> {
        let mut names = self.names.clone();
        let mut columns = self.columns.clone();
        names.push(name.to_string());
        columns.push(column);
        Dataset::new(names, columns)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select_rows(idx)).collect(),
            rows: idx.len(),
        }
    }

    /// Per-row group key built from the sensitive columns (joined with `|`
    /// when there are several). Rows get `"all"` when nothing is sensitive.
    pub fn group_labels(&self, schema: &Schema) -> Vec<String> {
        let sens: Vec<&Column> = schema
            .names_with_role(CovariateRole::Sensitive)
            .into_iter()
            .filter_map(|n| self.column(n))
            .collect();
        (0..self.rows)
            .map(|i| {
                if sens.is_empty() {
                    "all".to_string()
                } else {
                    sens.iter()
                        .map(|c| c.label(i))
                        .collect::<Vec<_>>()
                        .join("|")
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.names)?;
        for i in 0..self.rows {
            w.write_record(self.columns.iter().map(|c| c.label(i)))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_csv(file, schema, &path.display().to_string())
}

/// Parse CSV text against `schema`. Columns absent from the schema are
/// skipped; `source` names the input in error messages.
pub fn read_csv<R: Read>(input: R, schema: &Schema, source: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mut positions = Vec::with_capacity(schema.columns.len());
    for spec in &schema.columns {
        match header.iter().position(|h| h == &spec.name) {
            Some(p) => positions.push(p),
            None => {
                return Err(Error::MissingColumn {
                    path: source.to_string(),
                    column: spec.name.clone(),
                })
            }
        }
    }

    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); schema.columns.len()];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); schema.columns.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // data rows are 1-based after the header line
        let row = r + 1;
        for (k, (spec, &p)) in schema.columns.iter().zip(&positions).enumerate() {
            let cell = record.get(p).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Ingest {
                    path: source.to_string(),
                    row,
                    column: spec.name.clone(),
                    message: "missing value".into(),
                });
            }
            match spec.kind {
                ColumnKind::Numeric => {
                    let v: f64 = cell.parse().map_err(|_| Error::Ingest {
                        path: source.to_string(),
                        row,
                        column: spec.name.clone(),
                        message: format!("cannot parse '{cell}' as a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Ingest {
                            path: source.to_string(),
                            row,
                            column: spec.name.clone(),
                            message: format!("non-finite value '{cell}'"),
                        });
                    }
                    numeric[k].push(v);
                }
                ColumnKind::Categorical => labels[k].push(cell.to_string()),
            }
        }
    }

    let columns = schema
        .columns
        .iter()
        .enumerate()
        .map(|(k, spec)| match spec.kind {
            ColumnKind::Numeric => Column::Numeric(std::mem::take(&mut numeric[k])),
            ColumnKind::Categorical => Column::categorical_from_labels(&labels[k]),
        })
        .collect();
    Dataset::new(
        schema.columns.iter().map(|c| c.name.clone()).collect(),
        columns,
    )
}
