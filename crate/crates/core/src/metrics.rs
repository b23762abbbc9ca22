//! Reconstruction-quality metrics: RMSE and SSIM between velocity models.

use ndarray::Array2;

use crate::{Error, Result};

/// SSIM parameterization. Defaults follow the original SSIM convention
/// with the dynamic range set to the velocity box width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            window: 7,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 3.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "SSIM window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0 && self.sigma > 0.0) {
            return Err(Error::InvalidConfig(
                "SSIM constants must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_dims(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// sqrt(mean((a - b)^2)).
pub fn rmse(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.len() as f64;
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / n).sqrt())
}

/// Mean of local SSIM over sliding Gaussian-weighted windows that lie
/// fully inside the grid.
pub fn ssim(a: &Array2<f64>, b: &Array2<f64>, cfg: &MetricConfig) -> Result<f64> {
    check_dims(a, b)?;
    cfg.validate()?;
    let (nz, nx) = a.dim();
    if nz < cfg.window || nx < cfg.window {
        return Err(Error::DimensionMismatch(format!(
            "grid {nz}x{nx} smaller than SSIM window {}",
            cfg.window
        )));
    }
    let w = cfg.window;
    let half = w / 2;
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);

    // normalized 2D Gaussian window
    let mut weights = Array2::zeros((w, w));
    let mut sum = 0.0;
    for i in 0..w {
        for j in 0..w {
            let dz = i as f64 - half as f64;
            let dx = j as f64 - half as f64;
            let g = (-(dz * dz + dx * dx) / (2.0 * cfg.sigma * cfg.sigma)).exp();
            weights[[i, j]] = g;
            sum += g;
        }
    }
    weights /= sum;

    let mut total = 0.0;
    let mut count = 0usize;
    for ci in half..nz - half {
        for cj in half..nx - half {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for i in 0..w {
                for j in 0..w {
                    let wt = weights[[i, j]];
                    mu_a += wt * a[[ci + i - half, cj + j - half]];
                    mu_b += wt * b[[ci + i - half, cj + j - half]];
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for i in 0..w {
                for j in 0..w {
                    let wt = weights[[i, j]];
                    let da = a[[ci + i - half, cj + j - half]] - mu_a;
                    let db = b[[ci + i - half, cj + j - half]] - mu_b;
                    var_a += wt * da * da;
                    var_b += wt * db * db;
                    cov += wt * da * db;
                }
            }
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}
