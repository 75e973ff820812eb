//! Orthonormal discrete wavelet transform with periodic boundaries.
//!
//! The pyramid algorithm filters and downsamples by two at each level. For
//! an input `x` of even length `M` and a filter of length `L`, level
//! outputs are
//!
//! ```text
//! W[t] = Σ_l g[l] · x[(2t + 1 - l) mod M]      (detail)
//! V[t] = Σ_l h[l] · x[(2t + 1 - l) mod M]      (approximation)
//! ```
//!
//! and the inverse is the exact adjoint of that map.
//!
//! 1D coefficient ordering: level-1 details, level-2 details, ..., level-J
//! details, then the level-J approximation.
//!
//! 2D coefficients use the Mallat layout of the padded image, flattened
//! row-major: each level transforms the rows then the columns of the
//! current approximation block, which then occupies the top-left quarter.

use crate::data::Grid;
use crate::error::{ClareError, Result};

const FILTER_TOL: f64 = 1e-12;

/// Daubechies least-asymmetric scaling filter of length 8.
const LA8_LOWPASS: [f64; 8] = [
    -0.075_765_714_789_356_68,
    -0.029_635_527_645_960_39,
    0.497_618_667_632_562_9,
    0.803_738_751_805_386,
    0.297_857_795_605_605_05,
    -0.099_219_543_576_956_36,
    -0.012_603_967_262_263_83,
    0.032_223_100_604_078_15,
];

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    pub name: String,
}

impl WaveletFilter {
    /// Builds the quadrature-mirror pair `g[l] = (-1)^l h[L-1-l]` and checks
    /// the orthonormality conditions.
    pub fn from_lowpass(name: &str, lowpass: &[f64]) -> Result<Self> {
        let n = lowpass.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(ClareError::InvalidArgument(format!(
                "wavelet filter length must be even and >= 2, got {n}"
            )));
        }
        let highpass = (0..n)
            .map(|l| {
                let v = lowpass[n - 1 - l];
                if l % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let f = WaveletFilter {
            lowpass: lowpass.to_vec(),
            highpass,
            name: name.to_string(),
        };
        f.check()?;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    fn check(&self) -> Result<()> {
        let h = &self.lowpass;
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > FILTER_TOL {
            return Err(ClareError::InvalidArgument(format!(
                "lowpass sums to {sum}, expected sqrt(2)"
            )));
        }
        for shift in (0..h.len()).step_by(2) {
            let dot: f64 = h.iter().zip(&h[shift..]).map(|(a, b)| a * b).sum();
            let want = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - want).abs() > FILTER_TOL {
                return Err(ClareError::InvalidArgument(format!(
                    "lowpass is not orthonormal at shift {shift}: {dot}"
                )));
            }
        }
        Ok(())
    }
}

pub fn la8_filter() -> WaveletFilter {
    WaveletFilter::from_lowpass("la8", &LA8_LOWPASS).expect("LA8 coefficients are orthonormal")
}

/// Zero padding of a length-T axis up to the next power of two, split as
/// `ceil(extra/2)` zeros on the left and `floor(extra/2)` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPadding {
    pub original_length: usize,
    pub padded_length: usize,
    pub left: usize,
    pub right: usize,
}

impl DyadicPadding {
    pub fn new(original_length: usize) -> Result<Self> {
        if original_length < 2 {
            return Err(ClareError::InvalidArgument(format!(
                "cannot pad a signal of length {original_length}"
            )));
        }
        let padded_length = original_length.next_power_of_two();
        let extra = padded_length - original_length;
        Ok(DyadicPadding {
            original_length,
            padded_length,
            left: extra.div_ceil(2),
            right: extra / 2,
        })
    }

    pub fn pad(&self, signal: &[f64]) -> Vec<f64> {
        debug_assert_eq!(signal.len(), self.original_length);
        let mut out = vec![0.0; self.padded_length];
        out[self.left..self.left + self.original_length].copy_from_slice(signal);
        out
    }

    pub fn unpad<'a>(&self, padded: &'a [f64]) -> &'a [f64] {
        &padded[self.left..self.left + self.original_length]
    }
}

pub fn pad_to_dyadic(signal: &[f64]) -> Result<(Vec<f64>, DyadicPadding)> {
    let p = DyadicPadding::new(signal.len())?;
    Ok((p.pad(signal), p))
}

/// log2 of a power of two.
pub fn max_levels(dyadic_len: usize) -> usize {
    dyadic_len.trailing_zeros() as usize
}

pub fn default_levels(dyadic_len: usize) -> usize {
    max_levels(dyadic_len).min(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffLayout {
    OneD { len: usize },
    TwoD { rows: usize, cols: usize },
}

impl CoeffLayout {
    pub fn len(&self) -> usize {
        match *self {
            CoeffLayout::OneD { len } => len,
            CoeffLayout::TwoD { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub values: Vec<f64>,
    pub levels: usize,
    pub layout: CoeffLayout,
}

fn check_dyadic(len: usize, levels: usize) -> Result<()> {
    if len < 2 || !len.is_power_of_two() {
        return Err(ClareError::InvalidArgument(format!(
            "transform length {len} is not a power of two >= 2"
        )));
    }
    if levels == 0 || levels > max_levels(len) {
        return Err(ClareError::InvalidArgument(format!(
            "levels must be in 1..={} for length {len}, got {levels}",
            max_levels(len)
        )));
    }
    Ok(())
}

/// One analysis step: `input` of even length M into `approx` and `detail`
/// of length M/2 each.
fn analysis_step(input: &[f64], filter: &WaveletFilter, approx: &mut [f64], detail: &mut [f64]) {
    let m = input.len();
    let (h, g) = (&filter.lowpass, &filter.highpass);
    for t in 0..m / 2 {
        let mut u = 2 * t + 1;
        let mut v = h[0] * input[u];
        let mut w = g[0] * input[u];
        for l in 1..h.len() {
            u = if u == 0 { m - 1 } else { u - 1 };
            v += h[l] * input[u];
            w += g[l] * input[u];
        }
        approx[t] = v;
        detail[t] = w;
    }
}

/// Adjoint of [`analysis_step`]; `out` has length 2·approx.len().
fn synthesis_step(approx: &[f64], detail: &[f64], filter: &WaveletFilter, out: &mut [f64]) {
    let m = out.len();
    out.fill(0.0);
    let (h, g) = (&filter.lowpass, &filter.highpass);
    for t in 0..m / 2 {
        let (v, w) = (approx[t], detail[t]);
        let mut u = 2 * t + 1;
        out[u] += h[0] * v + g[0] * w;
        for l in 1..h.len() {
            u = if u == 0 { m - 1 } else { u - 1 };
            out[u] += h[l] * v + g[l] * w;
        }
    }
}

pub fn dwt_1d(signal: &[f64], filter: &WaveletFilter, levels: usize) -> Result<WaveletCoeffs> {
    let n = signal.len();
    check_dyadic(n, levels)?;
    let mut values = vec![0.0; n];
    let mut current = signal.to_vec();
    let mut offset = 0;
    for _ in 0..levels {
        let half = current.len() / 2;
        let mut approx = vec![0.0; half];
        analysis_step(&current, filter, &mut approx, &mut values[offset..offset + half]);
        offset += half;
        current = approx;
    }
    values[offset..].copy_from_slice(&current);
    Ok(WaveletCoeffs {
        values,
        levels,
        layout: CoeffLayout::OneD { len: n },
    })
}

pub fn idwt_1d(coeffs: &WaveletCoeffs, filter: &WaveletFilter) -> Result<Vec<f64>> {
    let n = match coeffs.layout {
        CoeffLayout::OneD { len } => len,
        CoeffLayout::TwoD { .. } => {
            return Err(ClareError::InvalidArgument(
                "idwt_1d given 2D coefficients".into(),
            ))
        }
    };
    if coeffs.values.len() != n {
        return Err(ClareError::Shape {
            context: "wavelet coefficient vector".into(),
            expected: n,
            actual: coeffs.values.len(),
        });
    }
    check_dyadic(n, coeffs.levels)?;
    let approx_len = n >> coeffs.levels;
    let mut current = coeffs.values[n - approx_len..].to_vec();
    let mut end = n - approx_len;
    for _ in 0..coeffs.levels {
        let half = current.len();
        let detail = &coeffs.values[end - half..end];
        let mut out = vec![0.0; 2 * half];
        synthesis_step(&current, detail, filter, &mut out);
        end -= half;
        current = out;
    }
    Ok(current)
}

fn check_2d(rows: usize, cols: usize, levels: usize) -> Result<()> {
    check_dyadic(rows, 1)?;
    check_dyadic(cols, 1)?;
    check_dyadic(rows.min(cols), levels)
}

/// Forward transform of a row-major `rows × cols` image with dyadic sides.
pub fn dwt_2d(
    image: &[f64],
    rows: usize,
    cols: usize,
    filter: &WaveletFilter,
    levels: usize,
) -> Result<WaveletCoeffs> {
    check_2d(rows, cols, levels)?;
    if image.len() != rows * cols {
        return Err(ClareError::Shape {
            context: "2D wavelet input".into(),
            expected: rows * cols,
            actual: image.len(),
        });
    }
    let mut data = image.to_vec();
    let (mut r, mut c) = (rows, cols);
    let mut line = vec![0.0; rows.max(cols)];
    let mut out = vec![0.0; rows.max(cols)];
    for _ in 0..levels {
        for i in 0..r {
            let row = &mut data[i * cols..i * cols + c];
            line[..c].copy_from_slice(row);
            let (a, d) = out[..c].split_at_mut(c / 2);
            analysis_step(&line[..c], filter, a, d);
            row.copy_from_slice(&out[..c]);
        }
        for j in 0..c {
            for i in 0..r {
                line[i] = data[i * cols + j];
            }
            let (a, d) = out[..r].split_at_mut(r / 2);
            analysis_step(&line[..r], filter, a, d);
            for i in 0..r {
                data[i * cols + j] = out[i];
            }
        }
        r /= 2;
        c /= 2;
    }
    Ok(WaveletCoeffs {
        values: data,
        levels,
        layout: CoeffLayout::TwoD { rows, cols },
    })
}

pub fn idwt_2d(coeffs: &WaveletCoeffs, filter: &WaveletFilter) -> Result<Vec<f64>> {
    let (rows, cols) = match coeffs.layout {
        CoeffLayout::TwoD { rows, cols } => (rows, cols),
        CoeffLayout::OneD { .. } => {
            return Err(ClareError::InvalidArgument(
                "idwt_2d given 1D coefficients".into(),
            ))
        }
    };
    check_2d(rows, cols, coeffs.levels)?;
    if coeffs.values.len() != rows * cols {
        return Err(ClareError::Shape {
            context: "2D wavelet coefficients".into(),
            expected: rows * cols,
            actual: coeffs.values.len(),
        });
    }
    let mut data = coeffs.values.clone();
    let mut line = vec![0.0; rows.max(cols)];
    let mut out = vec![0.0; rows.max(cols)];
    for level in (0..coeffs.levels).rev() {
        let (r, c) = (rows >> level, cols >> level);
        for j in 0..c {
            for i in 0..r {
                line[i] = data[i * cols + j];
            }
            let (a, d) = line[..r].split_at(r / 2);
            synthesis_step(a, d, filter, &mut out[..r]);
            for i in 0..r {
                data[i * cols + j] = out[i];
            }
        }
        for i in 0..r {
            let row = &mut data[i * cols..i * cols + c];
            line[..c].copy_from_slice(row);
            let (a, d) = line[..c].split_at(c / 2);
            synthesis_step(a, d, filter, &mut out[..c]);
            row.copy_from_slice(&out[..c]);
        }
    }
    Ok(data)
}

/// Pads observations on a [`Grid`] to dyadic size and moves them to and
/// from the wavelet domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTransform {
    pub filter: WaveletFilter,
    pub levels: usize,
    pub grid: Grid,
    /// One entry per axis: `[length]` for 1D, `[rows, cols]` for 2D.
    pub padding: Vec<DyadicPadding>,
}

impl SignalTransform {
    /// `levels = None` uses `min(4, log2(shortest padded axis))`.
    pub fn new(grid: Grid, filter: WaveletFilter, levels: Option<usize>) -> Result<Self> {
        let padding = match grid {
            Grid::OneD { length } => vec![DyadicPadding::new(length)?],
            Grid::TwoD { rows, cols } => vec![DyadicPadding::new(rows)?, DyadicPadding::new(cols)?],
        };
        let shortest = padding.iter().map(|p| p.padded_length).min().unwrap();
        let levels = levels.unwrap_or_else(|| default_levels(shortest));
        check_dyadic(shortest, levels)?;
        Ok(SignalTransform {
            filter,
            levels,
            grid,
            padding,
        })
    }

    /// Number of wavelet coefficients per observation.
    pub fn coeff_len(&self) -> usize {
        self.padding.iter().map(|p| p.padded_length).product()
    }

    fn pad(&self, x: &[f64]) -> Vec<f64> {
        match self.padding[..] {
            [p] => p.pad(x),
            [pr, pc] => {
                let mut out = vec![0.0; pr.padded_length * pc.padded_length];
                for (i, row) in x.chunks_exact(pc.original_length).enumerate() {
                    let start = (i + pr.left) * pc.padded_length + pc.left;
                    out[start..start + pc.original_length].copy_from_slice(row);
                }
                out
            }
            _ => unreachable!(),
        }
    }

    fn unpad(&self, padded: &[f64]) -> Vec<f64> {
        match self.padding[..] {
            [p] => p.unpad(padded).to_vec(),
            [pr, pc] => {
                let mut out = Vec::with_capacity(pr.original_length * pc.original_length);
                for i in 0..pr.original_length {
                    let start = (i + pr.left) * pc.padded_length + pc.left;
                    out.extend_from_slice(&padded[start..start + pc.original_length]);
                }
                out
            }
            _ => unreachable!(),
        }
    }

    fn layout(&self) -> CoeffLayout {
        match self.padding[..] {
            [p] => CoeffLayout::OneD {
                len: p.padded_length,
            },
            [pr, pc] => CoeffLayout::TwoD {
                rows: pr.padded_length,
                cols: pc.padded_length,
            },
            _ => unreachable!(),
        }
    }

    /// Pad then transform.
    pub fn analyze(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.grid.len() {
            return Err(ClareError::Shape {
                context: "wavelet analysis input".into(),
                expected: self.grid.len(),
                actual: x.len(),
            });
        }
        let padded = self.pad(x);
        let coeffs = match self.layout() {
            CoeffLayout::OneD { .. } => dwt_1d(&padded, &self.filter, self.levels)?,
            CoeffLayout::TwoD { rows, cols } => {
                dwt_2d(&padded, rows, cols, &self.filter, self.levels)?
            }
        };
        Ok(coeffs.values)
    }

    /// Inverse transform then strip the padding.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let c = WaveletCoeffs {
            values: coeffs.to_vec(),
            levels: self.levels,
            layout: self.layout(),
        };
        let padded = match c.layout {
            CoeffLayout::OneD { .. } => idwt_1d(&c, &self.filter)?,
            CoeffLayout::TwoD { .. } => idwt_2d(&c, &self.filter)?,
        };
        Ok(self.unpad(&padded))
    }
}
