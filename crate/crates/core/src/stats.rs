//! Small numeric helpers shared by the analysis code.

/// Trapezoid rule on a uniform grid.
pub fn trapezoid_uniform(ys: &[f64], dx: f64) -> f64 {
    match ys.len() {
        0 | 1 => 0.0,
        n => dx * (ys[1..n - 1].iter().sum::<f64>() + 0.5 * (ys[0] + ys[n - 1])),
    }
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Evenly spaced grid including both end points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let dx = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + dx * i as f64).collect()
        }
    }
}

/// Linear-interpolated quantile (type 7) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Interquartile range.
pub fn iqr(values: &[f64]) -> Option<f64> {
    Some(quantile(values, 0.75)? - quantile(values, 0.25)?)
}
