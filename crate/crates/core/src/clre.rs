//! The CLRE little-endian binary container.
//!
//! Matrix files (version 1):
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `b"CLRE"`                    |
//! | 4      | 4    | version, u32 = 1                   |
//! | 8      | 8    | N, u64                             |
//! | 16     | 8    | T, u64                             |
//! | 24     | 1    | grid kind, u8 (1 = 1D, 2 = 2D)     |
//! | 25     | 8    | grid rows, u64 (0 for 1D)          |
//! | 33     | 8    | grid cols, u64 (0 for 1D)          |
//! | 41     | 8·NT | f64 values, row-major              |
//!
//! Version 2 files hold a serialized codec; see `learners::codec`.

use std::path::Path;

use crate::data::{DataMatrix, Grid};
use crate::error::{ClareError, Result};

pub const MAGIC: &[u8; 4] = b"CLRE";
pub const MATRIX_VERSION: u32 = 1;
pub const CODEC_VERSION: u32 = 2;
pub const HEADER_LEN: usize = 41;

/// A matrix as stored on disk, without [`DataMatrix`] validation. Loss
/// surfaces and latent matrices may have a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub rows: usize,
    pub cols: usize,
    pub grid: Option<Grid>,
    pub values: Vec<f64>,
}

impl RawMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new(version: u32) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&version.to_le_bytes());
        Writer { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for v in vs {
            self.f64(*v);
        }
    }

    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    /// A float64 tensor: rank u8, dims u64 × rank, then the values.
    pub fn tensor(&mut self, dims: &[usize], vs: &[f64]) {
        debug_assert_eq!(dims.iter().product::<usize>(), vs.len());
        self.u8(dims.len() as u8);
        for d in dims {
            self.u64(*d as u64);
        }
        self.f64s(vs);
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic and returns the version alongside the reader.
    pub fn open(buf: &'a [u8]) -> Result<(Self, u32)> {
        if buf.len() < 8 {
            return Err(ClareError::Format(
                "inconsistent length: file shorter than the CLRE preamble".into(),
            ));
        }
        if &buf[..4] != MAGIC {
            return Err(ClareError::Format(format!(
                "bad magic {:?}, expected \"CLRE\"",
                String::from_utf8_lossy(&buf[..4])
            )));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        Ok((Reader { buf, pos: 8 }, version))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(ClareError::Format(format!(
                "inconsistent length: need {n} bytes at offset {}, file has {}",
                self.pos,
                self.buf.len()
            ))),
        }
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| ClareError::Format(format!("size {v} too large")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            ClareError::Format("inconsistent length: size overflow".into())
        })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| ClareError::Format(e.to_string()))
    }

    pub fn tensor(&mut self) -> Result<(Vec<usize>, Vec<f64>)> {
        let rank = self.u8()? as usize;
        let dims = (0..rank).map(|_| self.usize()).collect::<Result<Vec<_>>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| ClareError::Format("inconsistent length: tensor too large".into()))?;
        Ok((dims, self.f64s(len)?))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(ClareError::Format(format!(
                "inconsistent length: {} trailing bytes",
                self.buf.len() - self.pos
            )))
        }
    }
}

pub fn encode_matrix(rows: usize, cols: usize, grid: Option<Grid>, values: &[f64]) -> Vec<u8> {
    let mut w = Writer::new(MATRIX_VERSION);
    w.buf.reserve(HEADER_LEN - 8 + values.len() * 8);
    w.u64(rows as u64);
    w.u64(cols as u64);
    match grid {
        Some(Grid::TwoD { rows: r, cols: c }) => {
            w.u8(2);
            w.u64(r as u64);
            w.u64(c as u64);
        }
        _ => {
            w.u8(1);
            w.u64(0);
            w.u64(0);
        }
    }
    w.f64s(values);
    w.buf
}

pub fn decode_matrix(buf: &[u8]) -> Result<RawMatrix> {
    let (mut r, version) = Reader::open(buf)?;
    if version != MATRIX_VERSION {
        return Err(ClareError::Format(format!(
            "unsupported version {version}{}",
            if version == CODEC_VERSION {
                " (file holds a codec, not a matrix)"
            } else {
                ""
            }
        )));
    }
    let rows = r.usize()?;
    let cols = r.usize()?;
    let kind = r.u8()?;
    let grid_rows = r.usize()?;
    let grid_cols = r.usize()?;
    let grid = match kind {
        1 => None,
        2 => {
            if grid_rows.checked_mul(grid_cols) != Some(cols) {
                return Err(ClareError::Format(format!(
                    "2D grid {grid_rows}x{grid_cols} does not cover T={cols}"
                )));
            }
            Some(Grid::two_d(grid_rows, grid_cols)?)
        }
        k => return Err(ClareError::Format(format!("unknown grid kind {k}"))),
    };
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN));
    if expected != Some(buf.len()) {
        return Err(ClareError::Format(format!(
            "inconsistent length: header declares {rows}x{cols}, file has {} bytes",
            buf.len()
        )));
    }
    let values = r.f64s(rows * cols)?;
    r.finish()?;
    Ok(RawMatrix {
        rows,
        cols,
        grid,
        values,
    })
}

pub fn write_raw(path: impl AsRef<Path>, m: &RawMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_matrix(m.rows, m.cols, m.grid, &m.values))
        .map_err(|e| ClareError::io(path, e))
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawMatrix> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| ClareError::io(path, e))?;
    decode_matrix(&buf)
}

pub fn save_binary(matrix: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let grid = matrix.grid().is_two_d().then(|| matrix.grid());
    std::fs::write(path, encode_matrix(matrix.n(), matrix.t(), grid, matrix.values()))
        .map_err(|e| ClareError::io(path, e))
}

/// Row ids of the loaded matrix are `0..N`.
pub fn load_binary(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let raw = read_raw(path)?;
    let grid = match raw.grid {
        Some(g) => g,
        None => Grid::one_d(raw.cols)?,
    };
    DataMatrix::from_rows(raw.values, raw.rows, grid)
}
