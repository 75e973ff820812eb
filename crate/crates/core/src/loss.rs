//! Per-observation information loss.
//!
//! The selection criterion uses [`sq_corr_loss`], the complement of the
//! squared Pearson correlation taken over the grid points of a single
//! observation. [`press`] is kept as a diagnostic.

use crate::error::{ClareError, Result};

fn check_pair(x: &[f64], xhat: &[f64]) -> Result<()> {
    if x.len() != xhat.len() {
        return Err(ClareError::Shape {
            context: "loss arguments".into(),
            expected: x.len(),
            actual: xhat.len(),
        });
    }
    if x.len() < 2 {
        return Err(ClareError::InvalidArgument(format!(
            "loss needs at least 2 grid points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(xhat).any(|v| !v.is_finite()) {
        return Err(ClareError::InvalidArgument("non-finite loss argument".into()));
    }
    Ok(())
}

/// `1 - rho^2(x, xhat)`, in `[0, 1]`. Defined as exactly 1 when either
/// vector has zero variance.
pub fn sq_corr_loss(x: &[f64], xhat: &[f64]) -> Result<f64> {
    check_pair(x, xhat)?;
    let t = x.len() as f64;
    let mx = x.iter().sum::<f64>() / t;
    let my = xhat.iter().sum::<f64>() / t;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(xhat) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(1.0);
    }
    let rho2 = (sxy * sxy) / (sxx * syy);
    Ok((1.0 - rho2).clamp(0.0, 1.0))
}

/// Residual sum of squares `Σ (x - xhat)^2`.
pub fn press(x: &[f64], xhat: &[f64]) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(ClareError::Shape {
            context: "press arguments".into(),
            expected: x.len(),
            actual: xhat.len(),
        });
    }
    Ok(x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Loss functions that can drive an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    SqCorr,
    Press,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::SqCorr => "sq_corr",
            LossKind::Press => "press",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sq_corr" | "1-rho2" => Some(LossKind::SqCorr),
            "press" => Some(LossKind::Press),
            _ => None,
        }
    }

    pub fn eval(self, x: &[f64], xhat: &[f64]) -> Result<f64> {
        match self {
            LossKind::SqCorr => sq_corr_loss(x, xhat),
            LossKind::Press => press(x, xhat),
        }
    }
}

/// For a row-centered `x` and a `T × K` row-major `basis` whose columns are
/// orthonormal with zero mean, projects `x` onto the basis and returns
/// `|sq_corr_loss(x, xhat) - press(x, xhat) / ‖x‖²|`. The two agree up to
/// rounding whenever the preconditions hold.
pub fn check_press_identity(x: &[f64], basis: &[f64], k: usize) -> Result<f64> {
    let t = x.len();
    if basis.len() != t * k {
        return Err(ClareError::Shape {
            context: "identity basis".into(),
            expected: t * k,
            actual: basis.len(),
        });
    }
    const TOL: f64 = 1e-10;
    let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if (x.iter().sum::<f64>() / t as f64).abs() > 1e-12 * scale {
        return Err(ClareError::InvalidArgument("x is not centered".into()));
    }
    for a in 0..k {
        let col_mean: f64 = (0..t).map(|i| basis[i * k + a]).sum::<f64>() / t as f64;
        if col_mean.abs() > TOL {
            return Err(ClareError::InvalidArgument(format!(
                "basis column {a} has mean {col_mean}"
            )));
        }
        for b in 0..=a {
            let dot: f64 = (0..t).map(|i| basis[i * k + a] * basis[i * k + b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            if (dot - want).abs() > TOL {
                return Err(ClareError::InvalidArgument(format!(
                    "basis columns {a},{b} not orthonormal: {dot}"
                )));
            }
        }
    }
    let scores: Vec<f64> = (0..k)
        .map(|a| (0..t).map(|i| basis[i * k + a] * x[i]).sum())
        .collect();
    let xhat: Vec<f64> = (0..t)
        .map(|i| (0..k).map(|a| basis[i * k + a] * scores[a]).sum())
        .collect();
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    Ok((sq_corr_loss(x, &xhat)? - press(x, &xhat)? / norm2).abs())
}
