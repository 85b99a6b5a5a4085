//! Small descriptive-statistics helpers shared across modules.

use crate::error::{Error, Result};

/// Quantile of already-sorted data using linear interpolation between order
/// statistics (position `p * (n - 1)`, zero-indexed; "type 7").
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("quantile level {p} outside [0, 1]")));
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Sorts a copy of `values` and returns the requested type-7 quantiles.
pub fn quantiles(values: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sort_floats(&mut sorted);
    levels.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

pub fn median(values: &[f64]) -> Result<f64> {
    Ok(quantiles(values, &[0.5])?[0])
}

/// Total-order sort; NaN values sort last.
pub fn sort_floats(values: &mut [f64]) {
    values.sort_by(|a, b| a.total_cmp(b));
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divides by n).
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_examples() {
        let q = quantiles(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(q, vec![2.0, 3.0, 4.0]);
        let q = quantiles(&[40.0, 10.0, 30.0, 20.0], &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(q, vec![17.5, 25.0, 32.5]);
        let q = quantiles(&[7.0], &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(q, vec![7.0, 7.0, 7.0]);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(median(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn population_std_divides_by_n() {
        assert!((population_std(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(population_std(&[0.5; 4]), 0.0);
    }
}
