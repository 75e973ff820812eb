//! Observation matrices, their measurement grids, and CSV loading.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index;

use crate::error::{ClareError, Result};
use crate::rng::{RngSpec, Stream};

/// The common ordered grid every observation is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    OneD { length: usize },
    TwoD { rows: usize, cols: usize },
}

impl Grid {
    pub fn one_d(length: usize) -> Result<Grid> {
        let g = Grid::OneD { length };
        g.validate()?;
        Ok(g)
    }

    pub fn two_d(rows: usize, cols: usize) -> Result<Grid> {
        let g = Grid::TwoD { rows, cols };
        g.validate()?;
        Ok(g)
    }

    /// Number of grid points T.
    pub fn len(&self) -> usize {
        match *self {
            Grid::OneD { length } => length,
            Grid::TwoD { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_two_d(&self) -> bool {
        matches!(self, Grid::TwoD { .. })
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Grid::OneD { length } => length >= 2,
            Grid::TwoD { rows, cols } => rows >= 2 && cols >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(ClareError::InvalidArgument(format!(
                "grid dimensions must all be >= 2, got {self:?}"
            )))
        }
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Grid::OneD { length } => write!(f, "1d:{length}"),
            Grid::TwoD { rows, cols } => write!(f, "{rows}x{cols}"),
        }
    }
}

/// N observations (rows) of length T, stored row-major.
///
/// Construction rejects non-finite entries, fewer than two rows or
/// columns, a grid that does not cover T points, and duplicate row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    grid: Grid,
    row_ids: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: Vec<f64>, n: usize, grid: Grid, row_ids: Vec<String>) -> Result<Self> {
        grid.validate()?;
        let t = grid.len();
        if n < 2 {
            return Err(ClareError::InvalidData(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if values.len() != n * t {
            return Err(ClareError::Shape {
                context: "data matrix values".into(),
                expected: n * t,
                actual: values.len(),
            });
        }
        if row_ids.len() != n {
            return Err(ClareError::Shape {
                context: "data matrix row ids".into(),
                expected: n,
                actual: row_ids.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(ClareError::InvalidData(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / t,
                pos % t
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &row_ids {
            if !seen.insert(id.as_str()) {
                return Err(ClareError::InvalidData(format!("duplicate row id {id:?}")));
            }
        }
        Ok(DataMatrix {
            values,
            n,
            grid,
            row_ids,
        })
    }

    /// Row ids default to `0..n`.
    pub fn from_rows(values: Vec<f64>, n: usize, grid: Grid) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::new(values, n, grid, ids)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let t = self.t();
        &self.values[i * t..(i + 1) * t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.t())
    }

    /// A new matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<DataMatrix> {
        let t = self.t();
        let mut values = Vec::with_capacity(indices.len() * t);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(ClareError::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(i));
            ids.push(self.row_ids[i].clone());
        }
        DataMatrix::new(values, indices.len(), self.grid, ids)
    }
}

/// Draw `n` distinct rows uniformly without replacement. Rows keep their
/// original relative order and ids.
pub fn subsample(matrix: &DataMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    if n < 2 || n > matrix.n() {
        return Err(ClareError::InvalidArgument(format!(
            "subsample size {n} must be in 2..={}",
            matrix.n()
        )));
    }
    let mut rng = RngSpec::new(seed, Stream::Subsample).rng();
    let mut picked = index::sample(&mut rng, matrix.n(), n).into_vec();
    picked.sort_unstable();
    matrix.select_rows(&picked)
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// A numeric CSV table before any grid is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// Row-major values.
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Row ids when read with an id column.
    pub ids: Vec<String>,
}

/// Read a comma-separated numeric table, one row per line. A first line
/// whose fields do not all parse as numbers is taken to be a header. When
/// `id_column` is set, the first field of every line is the row id.
pub fn read_csv_table(path: impl AsRef<Path>, id_column: bool) -> Result<CsvTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| ClareError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));

    let skip = usize::from(id_column);
    let mut values = Vec::new();
    let mut ids = Vec::new();
    let mut width: Option<usize> = None;
    let mut first = true;
    for (line_idx, record) in reader.records().enumerate() {
        let line = line_idx + 1;
        let record = record.map_err(|e| ClareError::Csv {
            path: path.into(),
            row: line,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if first {
            first = false;
            if record.iter().skip(skip).any(|f| parse_field(f).is_none()) {
                continue;
            }
        }
        let fields = record.len().saturating_sub(skip);
        match width {
            None => width = Some(fields),
            Some(w) if w != fields => {
                return Err(ClareError::Csv {
                    path: path.into(),
                    row: line,
                    column: fields.min(w) + 1,
                    message: format!("ragged row: expected {w} fields, found {fields}"),
                })
            }
            _ => {}
        }
        if id_column {
            ids.push(record[0].trim().to_string());
        }
        for (col, field) in record.iter().skip(skip).enumerate() {
            let v = parse_field(field).ok_or_else(|| ClareError::Csv {
                path: path.into(),
                row: line,
                column: col + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(ClareError::Csv {
                    path: path.into(),
                    row: line,
                    column: col + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
    }
    let cols = width.ok_or_else(|| ClareError::InvalidData(format!("{}: no data rows", path.display())))?;
    if cols == 0 {
        return Err(ClareError::InvalidData(format!("{}: no data columns", path.display())));
    }
    Ok(CsvTable {
        rows: values.len() / cols,
        values,
        cols,
        ids,
    })
}

/// Load a CSV file as a data matrix. With `grid = None` a 1D grid of the
/// file's width is used.
pub fn load_csv(path: impl AsRef<Path>, grid: Option<Grid>, id_column: bool) -> Result<DataMatrix> {
    let path = path.as_ref();
    let CsvTable { values, rows: n, cols: t, ids } = read_csv_table(path, id_column)?;
    let grid = match grid {
        Some(g) => {
            if g.len() != t {
                return Err(ClareError::Shape {
                    context: format!("{} width vs grid {g}", path.display()),
                    expected: g.len(),
                    actual: t,
                });
            }
            g
        }
        None => Grid::one_d(t)?,
    };
    if id_column {
        DataMatrix::new(values, n, grid, ids)
    } else {
        DataMatrix::from_rows(values, n, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_plain_csv() {
        let f = write_tmp("1,2,3,4\n5,6,7,8\n9,10,11,1.2e1\n");
        let m = load_csv(f.path(), Some(Grid::one_d(4).unwrap()), false).unwrap();
        assert_eq!((m.n(), m.t()), (3, 4));
        assert_eq!(m.row(2), &[9.0, 10.0, 11.0, 12.0]);
        assert_eq!(m.row_ids(), &["0", "1", "2"]);
    }

    #[test]
    fn skips_header_and_handles_crlf() {
        let f = write_tmp("a,b,c\r\n1,2,3\r\n4,5,6\r\n");
        let m = load_csv(f.path(), None, false).unwrap();
        assert_eq!((m.n(), m.t()), (2, 3));
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let f = write_tmp("1,2,3\n4,NaN,6\n");
        let err = load_csv(f.path(), None, false).unwrap_err();
        match err {
            ClareError::Csv { row, column, .. } => assert_eq!((row, column), (2, 2)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ragged_and_grid_mismatch_rejected() {
        let f = write_tmp("1,2,3\n4,5\n");
        assert!(matches!(
            load_csv(f.path(), None, false),
            Err(ClareError::Csv { row: 2, .. })
        ));
        let f = write_tmp("1,2,3\n4,5,6\n");
        assert!(load_csv(f.path(), Some(Grid::two_d(2, 2).unwrap()), false).is_err());
    }

    #[test]
    fn id_column() {
        let f = write_tmp("id,x,y\nalpha,1,2\nbeta,3,4\n");
        let m = load_csv(f.path(), None, true).unwrap();
        assert_eq!(m.row_ids(), &["alpha", "beta"]);
        assert_eq!(m.t(), 2);
        let f = write_tmp("a,1,2\na,3,4\n");
        assert!(load_csv(f.path(), None, true).is_err());
    }

    #[test]
    fn two_d_mnist_shape() {
        let row: Vec<String> = (0..784).map(|i| (i % 7).to_string()).collect();
        let line = row.join(",");
        let f = write_tmp(&format!("{line}\n{line}\n"));
        let m = load_csv(f.path(), Some(Grid::two_d(28, 28).unwrap()), false).unwrap();
        assert_eq!((m.n(), m.t()), (2, 784));
    }

    #[test]
    fn constructor_invariants() {
        let g = Grid::one_d(2).unwrap();
        assert!(DataMatrix::from_rows(vec![1.0, 2.0], 1, g).is_err());
        assert!(DataMatrix::from_rows(vec![1.0, f64::INFINITY, 0.0, 0.0], 2, g).is_err());
        assert!(Grid::one_d(1).is_err());
        assert!(Grid::two_d(1, 5).is_err());
    }

    fn ramp(n: usize) -> DataMatrix {
        let values = (0..n * 3).map(|v| v as f64).collect();
        DataMatrix::from_rows(values, n, Grid::one_d(3).unwrap()).unwrap()
    }

    #[test]
    fn subsample_ladder() {
        let full = ramp(306);
        let mut current = full.clone();
        for n in [153, 76, 38] {
            current = subsample(&current, n, 11).unwrap();
            assert_eq!(current.n(), n);
        }
        let ids: HashSet<_> = full.row_ids().iter().collect();
        assert!(current.row_ids().iter().all(|id| ids.contains(id)));
    }

    #[test]
    fn subsample_full_and_determinism() {
        let m = ramp(20);
        assert_eq!(subsample(&m, 20, 3).unwrap(), m);
        assert_eq!(subsample(&m, 7, 3).unwrap(), subsample(&m, 7, 3).unwrap());
        assert_ne!(subsample(&m, 7, 3).unwrap(), subsample(&m, 7, 4).unwrap());
        assert!(subsample(&m, 1, 3).is_err());
        assert!(subsample(&m, 21, 3).is_err());
    }
}
