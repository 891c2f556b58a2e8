//! CSV reading driven by a [`DatasetSchema`].

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::{DatasetSchema, FeatureKind};

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    /// Trimmed cell text, one per kept row.
    pub text: Vec<String>,
    /// Parsed values for numeric feature columns.
    pub numeric: Option<Vec<f64>>,
}

/// Rows that survived the schema's filters and missing-value check,
/// restricted to the columns the schema uses.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<RawColumn>,
    pub rows: usize,
    /// Rows read from the file before any filtering.
    pub rows_read: usize,
    /// Rows rejected by a schema filter.
    pub filtered: usize,
    /// Rows dropped for a missing value in a used column.
    pub dropped_missing: usize,
}

impl RawTable {
    pub fn column(&self, name: &str) -> Result<&RawColumn> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    }
}

/// Reads `path` with `schema`. When a header name repeats, its first
/// occurrence is used.
pub fn ingest_csv(path: &Path, schema: &DatasetSchema) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(reader: R, schema: &DatasetSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.header.is_none())
        .flexible(schema.header.is_some())
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match &schema.header {
        Some(names) => csv::StringRecord::from(names.clone()),
        None => rdr.headers().map_err(|e| Error::csv("<input>", e))?.clone(),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::NoDataRows);
    }
    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        position.entry(h).or_insert(i);
    }
    let locate = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };

    let used = schema.used_columns();
    let mut columns = Vec::with_capacity(used.len());
    let mut sources = Vec::with_capacity(used.len());
    for name in &used {
        sources.push(locate(name)?);
        let numeric = schema
            .features
            .iter()
            .any(|f| f.column == *name && f.kind == FeatureKind::Numeric);
        columns.push(RawColumn {
            name: name.to_string(),
            text: Vec::new(),
            numeric: numeric.then(Vec::new),
        });
    }
    let filters = schema
        .filters
        .iter()
        .map(|f| Ok((f, locate(&f.column)?)))
        .collect::<Result<Vec<_>>>()?;

    let (mut rows_read, mut rows, mut filtered, mut dropped_missing) = (0, 0, 0, 0);
    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv("<input>", e))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows_read += 1;
        let cell = |i: usize| record.get(i).unwrap_or("");
        if !filters.iter().all(|(f, i)| {
            let c = cell(*i);
            f.keeps(c, schema.is_missing(c))
        }) {
            filtered += 1;
            continue;
        }
        if sources.iter().any(|&i| schema.is_missing(cell(i))) {
            dropped_missing += 1;
            continue;
        }
        for (col, &i) in columns.iter_mut().zip(&sources) {
            let text = cell(i);
            if let Some(values) = col.numeric.as_mut() {
                let v = text
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::ParseNumeric {
                        column: col.name.clone(),
                        row: rows_read,
                        value: text.into(),
                    })?;
                values.push(v);
            }
            col.text.push(text.into());
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::NoDataRows);
    }
    Ok(RawTable {
        columns,
        rows,
        rows_read,
        filtered,
        dropped_missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> DatasetSchema {
        DatasetSchema::parse(
            r#"
name = "toy"
data = "toy.csv"
default_sensitive = "sex"
[target]
column = "y"
positive = "1"
[[sensitive]]
name = "sex"
column = "sex"
privileged = "Male"
[[features]]
column = "age"
kind = "numeric"
[[features]]
column = "job"
kind = "categorical"
[[filters]]
column = "age"
op = "ge"
value = "18"
"#,
        )
        .unwrap()
    }

    #[test]
    fn filters_and_missing_are_counted() {
        let csv = "age,job,sex,y,age\n30,a,Male,1,99\n17,b,Female,0,1\n40,?,Male,0,1\n 50 , c ,Female,1,1\n";
        let t = ingest_reader(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(
            (t.rows_read, t.filtered, t.dropped_missing, t.rows),
            (4, 1, 1, 2)
        );
        // first `age` column wins
        assert_eq!(t.column("age").unwrap().numeric, Some(vec![30.0, 50.0]));
        assert_eq!(t.column("job").unwrap().text, vec!["a", "c"]);
    }

    #[test]
    fn missing_target_column_is_named() {
        let err = ingest_reader("age,job,sex\n30,a,Male\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(&err, Error::MissingColumn(c) if c == "y"), "{err}");
        assert!(err.to_string().contains("`y`"));
    }

    #[test]
    fn empty_inputs_have_no_data_rows() {
        for text in ["", "age,job,sex,y\n"] {
            let err = ingest_reader(text.as_bytes(), &schema()).unwrap_err();
            assert_eq!(err.to_string(), "no data rows");
        }
    }

    #[test]
    fn headerless_files_use_schema_names() {
        let mut schema = schema();
        schema.header = Some(["y", "sex", "age", "job"].map(String::from).to_vec());
        let t = ingest_reader("1, Male, 30, a\n0, Female, 40, b\n\n".as_bytes(), &schema).unwrap();
        assert_eq!(t.rows, 2);
        assert_eq!(t.column("sex").unwrap().text, vec!["Male", "Female"]);
    }

    #[test]
    fn bad_numeric_cell_is_reported() {
        let mut schema = schema();
        schema.filters.clear();
        let err = ingest_reader(
            "age,job,sex,y\n30,a,Male,1\n3O,a,Male,1\n".as_bytes(),
            &schema,
        )
        .unwrap_err();
        match err {
            Error::ParseNumeric { column, row, value } => {
                assert_eq!((column.as_str(), row, value.as_str()), ("age", 2, "3O"))
            }
            other => panic!("{other}"),
        }
    }
}
