use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use impartial::dataset::{encode, load_csv, Dataset, EncodedDesign, Schema};
use impartial::{Error, Result};

pub struct Loaded {
    pub data: Dataset,
    pub schema: Schema,
    pub design: EncodedDesign,
}

/// Prefix plain I/O errors with the file they concern.
pub fn at(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Csv(c) if c.is_io_error() => {
            Error::Io(io::Error::other(format!("{}: {c}", path.display())))
        }
        other => other,
    }
}

pub fn load(data: &Path, schema: &Path) -> Result<Loaded> {
    let schema = Schema::from_file(schema).map_err(at(schema))?;
    let data = load_csv(data, &schema).map_err(at(data))?;
    let design = encode(&data, &schema)?;
    Ok(Loaded {
        data,
        schema,
        design,
    })
}

/// File at `path`, or stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| at(p)(e.into()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Read one prediction column: the one named `prediction` if present,
/// otherwise the last column.
pub fn read_predictions(path: &Path, expected_rows: usize) -> Result<Vec<f64>> {
    let source = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| at(path)(e.into()))?;
    let header = reader.headers()?.clone();
    let col = header
        .iter()
        .position(|h| h == "prediction")
        .unwrap_or(header.len().saturating_sub(1));
    let name = header.get(col).unwrap_or("").to_string();
    let mut values = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record.get(col).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| Error::Ingest {
            path: source.clone(),
            row: r + 1,
            column: name.clone(),
            message: format!("cannot parse '{cell}' as a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{source}, row {}", r + 1)));
        }
        values.push(v);
    }
    if values.len() != expected_rows {
        return Err(Error::Dimension {
            context: format!("prediction rows in {source}"),
            expected: expected_rows,
            found: values.len(),
        });
    }
    Ok(values)
}
