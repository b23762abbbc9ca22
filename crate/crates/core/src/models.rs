//! Procedurally generated 50 x 100 ground-truth velocity models:
//! a salt-style model (high-velocity blob in a layered background) and
//! an overthrust-style model (faulted dipping layers). Both are
//! piecewise constant with velocities inside [1.5, 4.5] km/s.

use ndarray::Array2;

use crate::model::VelocityModel;
use crate::Result;

pub const MODEL_NZ: usize = 50;
pub const MODEL_NX: usize = 100;
pub const MODEL_SPACING: f64 = 10.0;

/// Layered background with an irregular high-velocity salt body.
pub fn salt() -> Result<VelocityModel> {
    let mut v = Array2::zeros((MODEL_NZ, MODEL_NX));
    for i in 0..MODEL_NZ {
        let background = match i {
            0..=9 => 1.6,
            10..=19 => 2.1,
            20..=31 => 2.7,
            32..=41 => 3.2,
            _ => 3.8,
        };
        for j in 0..MODEL_NX {
            v[[i, j]] = background;
        }
    }
    // salt body: ellipse with a bumpy outline, centered mid-grid
    let (cz, cx) = (26.0, 52.0);
    let (rz, rx) = (11.0, 26.0);
    for i in 0..MODEL_NZ {
        for j in 0..MODEL_NX {
            let dz = (i as f64 - cz) / rz;
            let dx = (j as f64 - cx) / rx;
            let bump = 0.12 * (0.35 * j as f64).sin() + 0.08 * (0.5 * i as f64).cos();
            if dz * dz + dx * dx <= 1.0 + bump {
                v[[i, j]] = 4.4;
            }
        }
    }
    VelocityModel::new(MODEL_SPACING, MODEL_SPACING, v)
}

/// Dipping layers cut by two normal faults with vertical throw.
pub fn overthrust() -> Result<VelocityModel> {
    let layers = [1.6, 2.0, 2.4, 2.8, 3.3, 3.8, 4.3];
    let thickness = 8.0;
    let mut v = Array2::zeros((MODEL_NZ, MODEL_NX));
    for i in 0..MODEL_NZ {
        for j in 0..MODEL_NX {
            // gentle dip plus fault throws
            let mut depth = i as f64 - 0.08 * j as f64;
            if j >= 35 {
                depth += 5.0;
            }
            if j >= 70 {
                depth -= 7.0;
            }
            let layer = (depth / thickness).floor().clamp(0.0, 6.0) as usize;
            v[[i, j]] = layers[layer];
        }
    }
    VelocityModel::new(MODEL_SPACING, MODEL_SPACING, v)
}
