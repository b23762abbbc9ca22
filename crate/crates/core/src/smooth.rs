//! Separable Gaussian smoothing with symmetric (reflect) boundary handling.

use ndarray::Array2;

use crate::model::VelocityModel;
use crate::Result;

/// Gaussian kernel truncated at +/- 4 sigma, renormalized to sum 1.
fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Symmetric reflection of an arbitrary index into [0, n), edge sample
/// included (…, 1, 0 | 0, 1, …, n-1 | n-1, n-2, …).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - 1 - j;
    }
    j as usize
}

fn convolve_axis(data: &Array2<f64>, k: &[f64], along_rows: bool) -> Array2<f64> {
    let (nz, nx) = data.dim();
    let radius = (k.len() - 1) as isize / 2;
    let mut out = Array2::zeros((nz, nx));
    for i in 0..nz {
        for j in 0..nx {
            let mut acc = 0.0;
            for (t, &w) in k.iter().enumerate() {
                let off = t as isize - radius;
                let v = if along_rows {
                    data[[i, reflect(j as isize + off, nx)]]
                } else {
                    data[[reflect(i as isize + off, nz), j]]
                };
                acc += w * v;
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Smooths a model with a separable Gaussian of standard deviation
/// `sigma` grid points. `sigma = 0` is the identity.
pub fn gaussian_smooth(model: &VelocityModel, sigma: f64) -> Result<VelocityModel> {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return Ok(model.clone());
    }
    let k = kernel(sigma);
    let pass1 = convolve_axis(model.values(), &k, true);
    let pass2 = convolve_axis(&pass1, &k, false);
    model.with_values(pass2)
}
