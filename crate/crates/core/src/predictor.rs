//! The model contract consumed by the explainer, plus adapters for models
//! that live outside this crate.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use crate::data::{format_f64, DataTable};
use crate::error::{Error, Result};

/// Anything that maps feature rows to scalar predictions.
///
/// Implementations must be pure at inference time: the same rows always give
/// the same predictions, and row `i` of the output depends only on row `i`
/// of the input.
pub trait Predictor: Send + Sync {
    /// Feature columns the model consumes, in input order.
    fn feature_names(&self) -> &[String];

    /// Predicts `n_rows` rows given row-major in `rows`
    /// (`rows.len() == n_rows * feature_names().len()`).
    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> Result<Vec<f64>>;

    fn predict(&self, table: &DataTable) -> Result<Vec<f64>> {
        let matrix = feature_matrix(table, self.feature_names())?;
        let out = self.predict_rows(&matrix, table.n_rows())?;
        check_predictions(&out, table.n_rows())?;
        Ok(out)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn feature_names(&self) -> &[String] {
        (**self).feature_names()
    }
    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> Result<Vec<f64>> {
        (**self).predict_rows(rows, n_rows)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn feature_names(&self) -> &[String] {
        (**self).feature_names()
    }
    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> Result<Vec<f64>> {
        (**self).predict_rows(rows, n_rows)
    }
}

/// Checks that the table's feature columns are exactly `expected`, in order.
pub fn check_schema(table: &DataTable, expected: &[String]) -> Result<()> {
    let found = table.feature_names();
    if found != expected {
        return Err(Error::SchemaMismatch {
            expected: expected.to_vec(),
            found,
        });
    }
    Ok(())
}

/// Row-major copy of the table's feature block.
pub fn feature_matrix(table: &DataTable, expected: &[String]) -> Result<Vec<f64>> {
    check_schema(table, expected)?;
    let cols: Vec<&[f64]> = table.features().map(|c| c.values.as_slice()).collect();
    let mut out = Vec::with_capacity(table.n_rows() * cols.len());
    for i in 0..table.n_rows() {
        out.extend(cols.iter().map(|c| c[i]));
    }
    Ok(out)
}

fn check_predictions(out: &[f64], n_rows: usize) -> Result<()> {
    if out.len() != n_rows {
        return Err(Error::ShapeMismatch(format!(
            "predictor returned {} values for {} rows",
            out.len(),
            n_rows
        )));
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("prediction for row {i}")));
    }
    Ok(())
}

/// Wraps a plain function of one feature row.
pub struct FnPredictor<F> {
    names: Vec<String>,
    f: F,
}

impl<F> FnPredictor<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, f: F) -> Self {
        Self {
            names: names.into_iter().map(Into::into).collect(),
            f,
        }
    }
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn feature_names(&self) -> &[String] {
        &self.names
    }

    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> Result<Vec<f64>> {
        let p = self.names.len();
        if rows.len() != n_rows * p {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: n_rows * p,
            });
        }
        if p == 0 {
            return Ok(vec![(self.f)(&[]); n_rows]);
        }
        Ok(rows.chunks_exact(p).map(&self.f).collect())
    }
}

/// Parses a predictions CSV with header `row,prediction`, one line per row
/// index. Rows may appear in any order but every index in `0..n_rows` must be
/// present exactly once.
pub fn read_predictions_csv<R: Read>(reader: R, n_rows: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let row_col = headers.iter().position(|h| h == "row");
    let pred_col = headers.iter().position(|h| h == "prediction");
    let (Some(row_col), Some(pred_col)) = (row_col, pred_col) else {
        return Err(Error::External(
            "predictions CSV needs `row` and `prediction` columns".into(),
        ));
    };
    let mut by_row = BTreeMap::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parse_err = |column: &str| Error::Parse {
            row: line + 1,
            column: column.to_string(),
            detail: "not a number".into(),
        };
        let row: usize = record
            .get(row_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("row"))?;
        let value: f64 = record
            .get(pred_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("prediction"))?;
        if by_row.insert(row, value).is_some() {
            return Err(Error::External(format!("duplicate prediction for row {row}")));
        }
    }
    (0..n_rows)
        .map(|i| {
            by_row
                .get(&i)
                .copied()
                .ok_or_else(|| Error::External(format!("no prediction for row {i}")))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if by_row.len() != n_rows {
                Err(Error::External(format!(
                    "got {} predictions for {} rows",
                    by_row.len(),
                    n_rows
                )))
            } else {
                Ok(v)
            }
        })
}

pub fn load_predictions_csv(path: impl AsRef<Path>, n_rows: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    read_predictions_csv(std::fs::File::open(path)?, n_rows)
}

/// Writes feature rows as CSV with a leading `row` index column.
pub fn write_feature_rows<W: Write>(
    writer: W,
    names: &[String],
    rows: &[f64],
    n_rows: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("row").chain(names.iter().map(String::as_str)))?;
    let p = names.len();
    let mut record = Vec::with_capacity(p + 1);
    for i in 0..n_rows {
        record.clear();
        record.push(i.to_string());
        record.extend(rows[i * p..(i + 1) * p].iter().map(|&v| format_f64(v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// A model evaluated by an external program.
///
/// For every batch the program receives the feature rows on stdin as CSV
/// (`row,<feature...>`) and must print a predictions CSV
/// (`row,prediction`) on stdout.
#[derive(Debug, Clone)]
pub struct CommandPredictor {
    program: String,
    args: Vec<String>,
    names: Vec<String>,
}

impl CommandPredictor {
    pub fn new(program: impl Into<String>, args: Vec<String>, names: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            names,
        }
    }

    /// Splits a shell-style command line on whitespace.
    pub fn from_command_line(line: &str, names: Vec<String>) -> Result<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidConfig("empty model command".into()))?;
        Ok(Self::new(program, parts.collect(), names))
    }
}

impl Predictor for CommandPredictor {
    fn feature_names(&self) -> &[String] {
        &self.names
    }

    fn predict_rows(&self, rows: &[f64], n_rows: usize) -> Result<Vec<f64>> {
        let mut input = Vec::new();
        write_feature_rows(&mut input, &self.names, rows, n_rows)?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::External(format!("cannot start `{}`: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(&input));
        let output = child.wait_with_output()?;
        writer
            .join()
            .map_err(|_| Error::External("stdin writer panicked".into()))?
            .map_err(|e| Error::External(format!("writing to model: {e}")))?;
        if !output.status.success() {
            return Err(Error::External(format!(
                "`{}` exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        read_predictions_csv(output.stdout.as_slice(), n_rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn table() -> DataTable {
        DataTable::new(
            vec![
                Column::new("a", vec![1.0, 2.0, 3.0]),
                Column::new("b", vec![0.5, 0.0, -1.0]),
                Column::new("y", vec![0.0; 3]),
            ],
            Some("y"),
        )
        .unwrap()
    }

    #[test]
    fn fn_predictor_evaluates_rows() {
        let m = FnPredictor::new(["a", "b"], |r: &[f64]| r[0] + 10.0 * r[1]);
        assert_eq!(m.predict(&table()).unwrap(), vec![6.0, 2.0, -7.0]);
    }

    #[test]
    fn schema_mismatch_detected() {
        let m = FnPredictor::new(["b", "a"], |r: &[f64]| r[0]);
        assert!(matches!(
            m.predict(&table()),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_predictions_rejected() {
        let m = FnPredictor::new(["a", "b"], |r: &[f64]| 1.0 / (r[1]));
        assert!(matches!(m.predict(&table()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn predictions_csv_keyed_by_row() {
        let csv = "row,prediction\n2,0.3\n0,0.1\n1,0.2\n";
        assert_eq!(
            read_predictions_csv(csv.as_bytes(), 3).unwrap(),
            vec![0.1, 0.2, 0.3]
        );
        assert!(read_predictions_csv("row,prediction\n0,1\n".as_bytes(), 2).is_err());
        assert!(read_predictions_csv("row,prediction\n0,1\n0,2\n".as_bytes(), 1).is_err());
        assert!(read_predictions_csv("row,prediction\n0,1\n5,2\n".as_bytes(), 1).is_err());
        assert!(read_predictions_csv("idx,p\n0,1\n".as_bytes(), 1).is_err());
    }

    #[cfg(unix)]
    #[test]
    fn command_predictor_round_trip() {
        // sum of features via awk
        let script = r#"awk -F, 'NR==1{print "row,prediction"; next}{print $1","($2+$3)}'"#;
        let m = CommandPredictor::new(
            "sh",
            vec!["-c".into(), script.into()],
            vec!["a".into(), "b".into()],
        );
        assert_eq!(m.predict(&table()).unwrap(), vec![1.5, 2.0, 2.0]);
    }

    #[cfg(unix)]
    #[test]
    fn command_predictor_failure_is_reported() {
        let m = CommandPredictor::new("sh", vec!["-c".into(), "exit 3".into()], vec!["a".into(), "b".into()]);
        assert!(matches!(m.predict(&table()), Err(Error::External(_))));
    }
}
