//! Least-squares exponential rate fits.

/// Fits `q(t) ~ C e^{-r t}` on samples with `t >= t_start` and returns `r`.
/// `None` when fewer than two positive samples fall in the window.
pub fn fit_decay_rate(times: &[f64], q: &[f64], t_start: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(q)
        .filter(|(&t, &v)| t >= t_start - 1e-12 && v > 0.0 && v.is_finite())
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}
