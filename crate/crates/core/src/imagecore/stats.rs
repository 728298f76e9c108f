use super::SaliencyMap;
use crate::error::{Error, Result};

/// Nearest-rank percentile: the `ceil(p/100 * n)`-th smallest value, with
/// `p = 0` giving the minimum. Always returns an element of `values`.
pub fn percentile_value(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("percentile of an empty list"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid(format!("percentile {p} outside [0,100]")));
    }
    let n = values.len();
    let rank = ((p * n as f64) / 100.0).ceil() as usize;
    let idx = rank.clamp(1, n) - 1;
    let mut scratch = values.to_vec();
    let (_, v, _) = scratch.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*v)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// `(v - min) / (max - min)`; a flat input maps to all zeros.
pub fn minmax_normalize_values(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() || hi <= lo {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}

pub fn minmax_normalize(map: &SaliencyMap) -> SaliencyMap {
    SaliencyMap::from_raw(map.width(), map.height(), minmax_normalize_values(map.values()))
}
