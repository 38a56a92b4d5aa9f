//! Small statistics helpers for Monte Carlo summaries.

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `events` successes out of `trials`.
pub fn wilson_interval(events: usize, trials: usize, z: f64) -> (f64, f64) {
    assert!(trials > 0 && events <= trials);
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // guard the endpoints against rounding so the interval always holds p
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// `b + 3 sqrt(b (1 - b) / replicates)`: the largest empirical frequency
/// consistent with a probability bound `b` at three standard errors.
pub fn domination_tolerance(bound: f64, replicates: usize) -> f64 {
    let b = bound.clamp(0.0, 1.0);
    b + 3.0 * (b * (1.0 - b) / replicates as f64).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
