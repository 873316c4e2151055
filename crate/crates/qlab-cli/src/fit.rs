//! Power-law fitting of decay curves on log-log axes.

use anyhow::{bail, Result};

#[derive(Debug, Clone, serde::Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    /// false when the fitted exponent is indistinguishable from zero
    pub decaying: bool,
}

/// Ordinary least squares on (ln t, ln y) over the points strictly inside the
/// window; the exponent is the slope.
pub fn power_law_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t > window.0 && *t < window.1)
        .cloned()
        .collect();
    if pts.len() < 5 {
        bail!(
            "power-law fit needs at least 5 points inside ({}, {}), got {}",
            window.0,
            window.1,
            pts.len()
        );
    }
    if let Some((t, y)) = pts.iter().find(|(_, y)| *y <= 0.0) {
        bail!("nonpositive value y = {y} at t = {t} inside the fit window");
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|(t, y)| (t.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = logs.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot <= 1e-30 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        window,
        r_squared,
        decaying: slope <= -1e-3,
    })
}
