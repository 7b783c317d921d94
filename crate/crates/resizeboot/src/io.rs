//! Dataset CSV input and the versioned CSV/JSON artifacts.
//!
//! Dataset files have a header row whose first column is `y`; every other
//! column is a numeric covariate. Binary responses are written `0/1` (and
//! `-1/1` is accepted on input); they are `±1` in memory.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use resizeboot_core::{Dataset, Family, Matrix};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const INTERCEPT_NAME: &str = "(intercept)";

/// A parsed dataset with its covariate names (the intercept, if added,
/// comes first).
#[derive(Debug, Clone)]
pub struct NamedDataset {
    pub data: Dataset,
    pub names: Vec<String>,
}

pub fn read_dataset_csv(path: &Path, family: Family, intercept: bool) -> Result<NamedDataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(file, path, family, intercept)
}

pub fn parse_dataset<R: Read>(reader: R, path: &Path, family: Family, intercept: bool) -> Result<NamedDataset> {
    let perr = |line: u64, message: String| CliError::Parse { path: path.to_path_buf(), line, message };
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    match headers.get(0) {
        Some("y") => {}
        Some(other) => return Err(perr(1, format!("first column must be named `y` (found `{other}`)"))),
        None => return Err(perr(1, "missing header row".into())),
    }
    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push(INTERCEPT_NAME.into());
    }
    names.extend(headers.iter().skip(1).map(String::from));
    let width = headers.len();

    let mut y = Vec::new();
    let mut xs = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            perr(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(perr(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let mut values = Vec::with_capacity(width);
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                perr(line, format!("row {}, column `{}`: cannot parse `{field}` as a number", row + 1, &headers[col]))
            })?;
            if !v.is_finite() {
                return Err(perr(
                    line,
                    format!("row {}, column `{}`: non-finite value `{field}`", row + 1, &headers[col]),
                ));
            }
            values.push(v);
        }
        let yi = encode_response(values[0], family)
            .map_err(|msg| perr(line, format!("row {}, column `y`: {msg}", row + 1)))?;
        y.push(yi);
        if intercept {
            xs.push(1.0);
        }
        xs.extend_from_slice(&values[1..]);
    }
    if y.is_empty() {
        return Err(perr(1, "no data rows".into()));
    }
    let p = names.len();
    let x = Matrix::from_row_major(y.len(), p, xs)?;
    let data = Dataset::new(x, y, family, intercept)?;
    Ok(NamedDataset { data, names })
}

fn encode_response(v: f64, family: Family) -> std::result::Result<f64, String> {
    if family.is_binary() {
        match v {
            1.0 => Ok(1.0),
            0.0 | -1.0 => Ok(-1.0),
            _ => Err(format!("response {v} is not 0/1 for the {family} family")),
        }
    } else if v >= 0.0 && v.fract() == 0.0 {
        Ok(v)
    } else {
        Err(format!("response {v} is not a non-negative integer count for the {family} family"))
    }
}

fn decode_response(v: f64, family: Family) -> f64 {
    if family.is_binary() {
        if v > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        v
    }
}

/// Default covariate names `x1..xp`.
pub fn default_names(p: usize, intercept: bool) -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(p);
    if intercept {
        names.push(INTERCEPT_NAME.into());
    }
    let k = names.len();
    names.extend((1..=p - k).map(|j| format!("x{j}")));
    names
}

/// Writes a dataset so that [`read_dataset_csv`] reproduces it exactly
/// (floats use the shortest round-trip form). An intercept column is left
/// out; read it back with `intercept = true`.
pub fn write_dataset_csv(path: &Path, named: &NamedDataset) -> Result<()> {
    let d = &named.data;
    let skip = usize::from(d.has_intercept());
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["y".to_string()];
    header.extend(named.names[skip..].iter().cloned());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(d.p() + 1);
    for i in 0..d.n() {
        rec.clear();
        rec.push(fmt_f64(decode_response(d.y()[i], d.family())));
        rec.extend(d.x().row(i)[skip..].iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// CSV with leading `# key: value` lines (always including the schema
/// version) followed by a header row and the records.
pub fn write_csv<S: AsRef<str>>(
    path: &Path,
    meta: &[(&str, String)],
    header: &[S],
    rows: &[Vec<String>],
) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io)?;
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(io)
}

/// Rows of a matrix as CSV with the given column names.
pub fn write_matrix_csv(path: &Path, names: &[String], m: &Matrix) -> Result<()> {
    let rows: Vec<Vec<String>> = m.row_iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()).collect();
    write_csv(path, &[], names, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, family: Family, intercept: bool) -> Result<NamedDataset> {
        parse_dataset(text.as_bytes(), Path::new("test.csv"), family, intercept)
    }

    #[test]
    fn binary_responses_are_signed() {
        let d = parse("y,a\n1,0.5\n0,-1\n1,2\n", Family::Logistic, false).unwrap();
        assert_eq!(d.data.n(), 3);
        assert_eq!(d.data.y(), &[1.0, -1.0, 1.0]);
        assert_eq!(d.names, vec!["a"]);
    }

    #[test]
    fn intercept_column_is_prepended() {
        let d = parse("y,a\n1,0.5\n0,-1\n1,2\n", Family::Probit, true).unwrap();
        assert_eq!(d.data.x().row(1), &[1.0, -1.0]);
        assert_eq!(d.names[0], INTERCEPT_NAME);
        assert_eq!(d.data.intercept_index(), Some(0));
    }

    #[test]
    fn negative_count_names_row() {
        let e = parse("y,a\n1,0.5\n-1,1\n2,2\n", Family::PoissonLog, false).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("row 2") && msg.contains("line 3"), "{msg}");
        assert_eq!(e.kind(), "parse");
    }

    #[test]
    fn too_few_rows() {
        let e = parse("y,a,b,c\n1,0,0,1\n0,1,0,0\n1,0,1,0\n", Family::Logistic, false).unwrap_err();
        assert!(e.to_string().contains("n >= p+1 required"), "{e}");
    }

    #[test]
    fn bad_cells_are_located() {
        let e = parse("y,a,b\n1,0,0\n0,1,nan\n1,0,1\n0,1,1\n", Family::Logistic, false).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 3") && msg.contains("column `b`"), "{msg}");
        let e = parse("y,a\n1,zz\n", Family::Logistic, false).unwrap_err();
        assert!(e.to_string().contains("cannot parse `zz`"));
        let e = parse("x,a\n1,0\n", Family::Logistic, false).unwrap_err();
        assert!(e.to_string().contains("named `y`"));
        let e = parse("y,a\n1,0,3\n", Family::Logistic, false).unwrap_err();
        assert_eq!(e.kind(), "parse");
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
