use crate::error::{ClareError, Result};

/// The `ceil(q·N)`-th order statistic (1-based) of `values`.
///
/// A fraction of at least `q` of the values is then less than or equal to
/// the result. `q·N` within 1e-9 of an integer is treated as that integer
/// so that e.g. `q = 0.07, N = 100` selects the 7th value.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(ClareError::InvalidArgument("quantile of an empty sample".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(ClareError::InvalidArgument(format!(
            "quantile level {q} must be in (0, 1]"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[order_index(sorted.len(), q)])
}

/// 0-based index of the `ceil(q·n)`-th order statistic.
pub(crate) fn order_index(n: usize, q: f64) -> usize {
    let x = q * n as f64;
    let r = x.round();
    let rank = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (rank as usize).clamp(1, n) - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(empirical_quantile(&v, 0.95).unwrap(), 95.0);
        assert_eq!(empirical_quantile(&v, 0.07).unwrap(), 7.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 100.0);
        assert_eq!(empirical_quantile(&v, 1e-9).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&[4.2], 0.3).unwrap(), 4.2);
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
    }

    #[test]
    fn errors() {
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&[1.0], 0.0).is_err());
        assert!(empirical_quantile(&[1.0], 1.5).is_err());
        assert!(empirical_quantile(&[1.0], f64::NAN).is_err());
    }
}
