use crate::imgcore::{ensure_same_dims, Image};

use super::MetricsError;

/// Full-reference quality of `y` against `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// Mean squared error in squared intensity units.
    pub mse: f64,
    /// Decibels; `+inf` iff `mse == 0`.
    pub psnr: f64,
    /// Single-window structural similarity over the whole image.
    pub ssim: f64,
}

/// MSE, PSNR and SSIM between two images of the same shape and bit depth.
///
/// SSIM uses global statistics (one window covering the image), population
/// variance and covariance, and the constants `c1 = (0.01 L)^2`,
/// `c2 = (0.03 L)^2` with `L = max_value`. Values will not match
/// sliding-window SSIM implementations.
pub fn image_quality(x: &Image, y: &Image) -> Result<QualityReport, MetricsError> {
    ensure_same_dims(x.dims(), y.dims())?;
    if x.max_value() != y.max_value() {
        return Err(MetricsError::MaxValueMismatch(x.max_value(), y.max_value()));
    }
    let (a, b) = (x.data(), y.data());
    let n = a.len() as f64;
    let mse = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / n;
    let max = f64::from(x.max_value());
    let psnr = if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max * max / mse).log10()
    };

    let mu_x = a.iter().sum::<f64>() / n;
    let mu_y = b.iter().sum::<f64>() / n;
    let var_x = a.iter().map(|p| (p - mu_x) * (p - mu_x)).sum::<f64>() / n;
    let var_y = b.iter().map(|q| (q - mu_y) * (q - mu_y)).sum::<f64>() / n;
    let cov = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p - mu_x) * (q - mu_y))
        .sum::<f64>()
        / n;
    let c1 = (0.01 * max).powi(2);
    let c2 = (0.03 * max).powi(2);
    let ssim = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
        / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
    Ok(QualityReport { mse, psnr, ssim })
}
