//! Owned problem data and CSV helpers.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::admm::{Pi, SccProblem};
use crate::error::{Error, Result};
use crate::family::{centered_sum_squares, default_pi, Response};
use crate::weights::{build_weights, WeightConfig, WeightGraph};

/// Data matrix with an optional supervising variable and covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Option<Response>,
    pub z: Option<Array2<f64>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Option<Response>, z: Option<Array2<f64>>) -> Result<Self> {
        let n = x.nrows();
        if let Some(y) = &y {
            if y.len() != n {
                return Err(Error::Dimension(format!(
                    "data has {n} rows but supervising variable has {} records",
                    y.len()
                )));
            }
        }
        if let Some(z) = &z {
            if z.nrows() != n {
                return Err(Error::Dimension(format!("covariates have {} rows, expected {n}", z.nrows())));
            }
        }
        Ok(Dataset { x, y, z })
    }

    pub fn unsupervised(x: Array2<f64>) -> Self {
        Dataset { x, y: None, z: None }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Rows `idx` of every component.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), idx),
            y: self.y.as_ref().map(|y| y.subset(idx)),
            z: self.z.as_ref().map(|z| z.select(Axis(0), idx)),
        }
    }

    /// Same data with the supervising variable dropped.
    pub fn without_supervision(&self) -> Dataset {
        Dataset::unsupervised(self.x.clone())
    }

    /// Null-deviance balancing weights; `π_y = 0` when unsupervised.
    pub fn default_pi(&self) -> Result<Pi> {
        match &self.y {
            Some(y) => {
                let (x, yy) = default_pi(self.x.view(), y.family(), y)?;
                Ok(Pi { x, y: yy })
            }
            None => {
                let dx = 0.5 * centered_sum_squares(self.x.view());
                if dx <= 0.0 {
                    return Err(Error::Degenerate("data matrix has zero spread about its column means".into()));
                }
                Ok(Pi { x: 1.0 / dx, y: 0.0 })
            }
        }
    }

    pub fn graph(&self, cfg: &WeightConfig) -> Result<WeightGraph> {
        build_weights(self.x.view(), self.y.as_ref(), cfg)
    }

    pub fn problem<'a>(&'a self, graph: &'a WeightGraph, pi: Pi) -> SccProblem<'a> {
        SccProblem {
            x: self.x.view(),
            y: self.y.as_ref(),
            z: self.z.as_ref().map(|z| z.view()),
            graph,
            pi,
        }
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub values: Array2<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column {name:?} not found (have {:?})", self.headers)))
    }

    pub fn column(&self, name: &str) -> Result<Array1<f64>> {
        Ok(self.values.column(self.column_index(name)?).to_owned())
    }

    pub fn columns(&self, names: &[String]) -> Result<Array2<f64>> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select(Axis(1), &idx))
    }
}

/// Reads a comma-separated numeric table with a header row. Empty or
/// non-numeric cells are errors naming the 1-based data row and column.
pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut flat = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                row: r + 1,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: headers[c].clone(),
                message: if cell.is_empty() {
                    "missing value".to_string()
                } else {
                    format!("cannot parse {cell:?} as a number")
                },
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 1,
                    column: headers[c].clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            flat.push(v);
        }
        rows += 1;
    }
    let values = Array2::from_shape_vec((rows, headers.len()), flat)
        .map_err(|e| Error::Dimension(e.to_string()))?;
    Ok(Table { headers, values })
}

pub fn load_table(path: &Path) -> Result<Table> {
    read_table(std::fs::File::open(path)?)
}

pub fn write_matrix<W: Write>(writer: W, headers: &[String], m: ArrayView2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix(path: &Path, headers: &[String], m: ArrayView2<f64>) -> Result<()> {
    write_matrix(std::fs::File::create(path)?, headers, m)
}

/// Headers `prefix1..prefixN`.
pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let m = ndarray::array![[1.5, -2.0], [0.1, 3.0]];
        let mut buf = Vec::new();
        write_matrix(&mut buf, &numbered("x", 2), m.view()).unwrap();
        let t = read_table(buf.as_slice()).unwrap();
        assert_eq!(t.headers, vec!["x1", "x2"]);
        assert_eq!(t.values, m);
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let err = read_table("a,b\n1,2\n3,oops\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_table("a\n\n1\n".as_bytes()), Ok(_) | Err(Error::Parse { .. })));
        assert!(matches!(read_table("a,b\n1,\n".as_bytes()), Err(Error::Parse { .. })));
    }
}
