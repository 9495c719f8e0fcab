//! Shape statistics of per-iteration loss curves.

use crate::metrics::LossSurface;

/// `final / minimum` of a curve; infinite when the minimum is zero and the
/// curve ends above it, `None` for an empty curve.
pub fn rebound_ratio(values: &[f64]) -> Option<f64> {
    let last = *values.last()?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Some(if min > 0.0 {
        last / min
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        1.0
    })
}

/// 1-based iteration of the first minimum.
pub fn argmin_iteration(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// Iteration of minimum loss for each history level `0..levels`.
pub fn onset_iterations(surface: &LossSurface, levels: usize) -> Vec<usize> {
    (0..levels.min(surface.levels()))
        .filter_map(|h| argmin_iteration(&surface.column(h)))
        .collect()
}

/// Running median over windows of three; the two end points are kept.
pub fn median3(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in 1..values.len().saturating_sub(1) {
        let mut w = [values[i - 1], values[i], values[i + 1]];
        w.sort_by(f64::total_cmp);
        out[i] = w[1];
    }
    out
}

pub fn is_non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

/// First index `i > start` with `values[i] > values[i - 1] · (1 + rel_tol)`.
pub fn first_rise(values: &[f64], start: usize, rel_tol: f64) -> Option<usize> {
    (start + 1..values.len()).find(|&i| values[i] > values[i - 1] * (1.0 + rel_tol))
}
