//! Optimality gaps against offline reference values.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("reference value must be positive, got {0}")]
    NonPositiveReference(f64),
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Percentage gap of `z` to a positive reference `z_cp`.
pub fn gap_cp(z_cp: f64, z: f64) -> Result<f64, MetricsError> {
    if !(z_cp > 0.0) {
        return Err(MetricsError::NonPositiveReference(z_cp));
    }
    Ok(100.0 * (z_cp - z) / z_cp)
}

/// Percentage gap of `z` to a MIP incumbent; absent for a zero incumbent.
/// Negative values mean the policy beat the incumbent.
pub fn gap_mip(z_mip: f64, z: f64) -> Option<f64> {
    if z_mip == 0.0 {
        None
    } else {
        Some(100.0 * (z_mip - z) / z_mip)
    }
}

/// Gap of summed policy profits to summed references.
pub fn agg_gap(sum_mip: f64, sum_policy: f64) -> Result<f64, MetricsError> {
    gap_cp(sum_mip, sum_policy)
}

/// Mean and sample standard deviation (absent below two values).
pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let sd = if values.len() >= 2 { Some((m2 / (n - 1.0)).sqrt()) } else { None };
    (mean, sd)
}
