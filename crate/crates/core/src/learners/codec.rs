use std::path::Path;
use std::sync::Arc;

use crate::clre::{Reader, Writer, CODEC_VERSION};
use crate::data::Grid;
use crate::error::{ClareError, Result};
use crate::loss::sq_corr_loss;

use super::ae::AeModel;
use super::dwt::DwtModel;
use super::pca::PcaModel;
use super::user::UserCodec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pca,
    Dwt,
    Ae,
    User,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Dwt => "dwt",
            Method::Ae => "ae",
            Method::User => "user",
        }
    }

    fn tag(self) -> u8 {
        match self {
            Method::Pca => 1,
            Method::Dwt => 2,
            Method::Ae => 3,
            Method::User => 4,
        }
    }
}

#[derive(Clone)]
pub enum Model {
    Pca(PcaModel),
    Dwt(DwtModel),
    Ae(AeModel),
    User(Arc<dyn UserCodec>),
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::Pca(m) => f.debug_tuple("Pca").field(m).finish(),
            Model::Dwt(m) => f.debug_tuple("Dwt").field(m).finish(),
            Model::Ae(m) => f.debug_tuple("Ae").field(m).finish(),
            Model::User(_) => f.write_str("User(..)"),
        }
    }
}

/// A fitted encode/decode pair between R^T and R^K.
#[derive(Debug, Clone)]
pub struct Codec {
    method: Method,
    k: usize,
    grid: Grid,
    model: Model,
}

impl Codec {
    pub fn new(k: usize, grid: Grid, model: Model) -> Self {
        let method = match model {
            Model::Pca(_) => Method::Pca,
            Model::Dwt(_) => Method::Dwt,
            Model::Ae(_) => Method::Ae,
            Model::User(_) => Method::User,
        };
        Codec {
            method,
            k,
            grid,
            model,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("encode input", self.t(), x.len())?;
        let z = match &self.model {
            Model::Pca(m) => m.encode(x),
            Model::Dwt(m) => m.encode(x)?,
            Model::Ae(m) => m.encode(x),
            Model::User(u) => u.encode(x),
        };
        check_len("encode output", self.k, z.len())?;
        Ok(z)
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_len("decode input", self.k, z.len())?;
        let x = match &self.model {
            Model::Pca(m) => m.decode(z),
            Model::Dwt(m) => m.decode(z)?,
            Model::Ae(m) => m.decode(z),
            Model::User(u) => u.decode(z),
        };
        check_len("decode output", self.t(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClareError::Numerical(format!(
                "{} codec produced a non-finite reconstruction",
                self.method.name()
            )));
        }
        Ok(x)
    }

    /// `decode(encode(x))`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x)?)
    }

    /// Squared-correlation loss of the reconstruction of `x`.
    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        sq_corr_loss(x, &self.reconstruct(x)?)
    }

    /// Serialize into a version-2 CLRE container.
    ///
    /// Layout after the 8-byte preamble: method u8, K u64, grid kind u8,
    /// grid rows u64, grid cols u64 (T and 0 for 1D), then the
    /// method-specific section. Tensors are rank u8, dims u64 × rank, then
    /// row-major f64 values.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(CODEC_VERSION);
        w.u8(self.method.tag());
        w.u64(self.k as u64);
        match self.grid {
            Grid::OneD { length } => {
                w.u8(1);
                w.u64(length as u64);
                w.u64(0);
            }
            Grid::TwoD { rows, cols } => {
                w.u8(2);
                w.u64(rows as u64);
                w.u64(cols as u64);
            }
        }
        match &self.model {
            Model::Pca(m) => m.write(&mut w),
            Model::Dwt(m) => m.write(&mut w),
            Model::Ae(m) => m.write(&mut w),
            Model::User(_) => {
                return Err(ClareError::InvalidArgument(
                    "user codecs cannot be serialized".into(),
                ))
            }
        }
        Ok(w.buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Codec> {
        let (mut r, version) = Reader::open(buf)?;
        if version != CODEC_VERSION {
            return Err(ClareError::Format(format!(
                "unsupported version {version} for a codec file"
            )));
        }
        let tag = r.u8()?;
        let k = r.usize()?;
        let kind = r.u8()?;
        let (a, b) = (r.usize()?, r.usize()?);
        let grid = match kind {
            1 => Grid::one_d(a)?,
            2 => Grid::two_d(a, b)?,
            other => return Err(ClareError::Format(format!("unknown grid kind {other}"))),
        };
        let model = match tag {
            1 => Model::Pca(PcaModel::read(&mut r, grid.len(), k)?),
            2 => Model::Dwt(DwtModel::read(&mut r, grid, k)?),
            3 => Model::Ae(AeModel::read(&mut r, grid.len(), k)?),
            other => return Err(ClareError::Format(format!("unknown codec method {other}"))),
        };
        r.finish()?;
        Ok(Codec::new(k, grid, model))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| ClareError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Codec> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| ClareError::io(path, e))?;
        Codec::from_bytes(&buf)
    }
}

fn check_len(context: &str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(ClareError::Shape {
            context: context.into(),
            expected,
            actual,
        })
    }
}

/// Reads a tensor and checks its shape.
pub(crate) fn read_tensor(r: &mut Reader<'_>, dims: &[usize], what: &str) -> Result<Vec<f64>> {
    let (got, values) = r.tensor()?;
    if got != dims {
        return Err(ClareError::Format(format!(
            "{what}: expected shape {dims:?}, found {got:?}"
        )));
    }
    Ok(values)
}
