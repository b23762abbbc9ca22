use ndarray::Array2;

use crate::{Error, Result};

/// 2D acoustic velocity model on a regular grid.
///
/// Values are stored depth-major: `values[[iz, ix]]` is the velocity in
/// km/s at depth index `iz` and lateral index `ix`. Spacings are in
/// meters.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    nz: usize,
    nx: usize,
    dz: f64,
    dx: f64,
    values: Array2<f64>,
}

impl VelocityModel {
    pub fn new(dz: f64, dx: f64, values: Array2<f64>) -> Result<Self> {
        let (nz, nx) = values.dim();
        if nz < 2 || nx < 2 {
            return Err(Error::InvalidModel(format!(
                "grid must be at least 2x2, got {nz}x{nx}"
            )));
        }
        if !(dz > 0.0) || !(dx > 0.0) {
            return Err(Error::InvalidModel(format!(
                "spacings must be positive, got dz={dz}, dx={dx}"
            )));
        }
        if let Some(((iz, ix), &v)) = values
            .indexed_iter()
            .find(|(_, &v)| !v.is_finite() || v <= 0.0)
        {
            return Err(Error::InvalidModel(format!(
                "velocity at ({iz},{ix}) is {v}; values must be finite and positive"
            )));
        }
        Ok(Self { nz, nx, dz, dx, values })
    }

    /// Constant-velocity model, mostly for tests.
    pub fn homogeneous(nz: usize, nx: usize, dz: f64, dx: f64, v: f64) -> Result<Self> {
        Self::new(dz, dx, Array2::from_elem((nz, nx), v))
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.nz * self.nx
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Physical extent (depth, lateral) in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            (self.nz - 1) as f64 * self.dz,
            (self.nx - 1) as f64 * self.dx,
        )
    }

    pub fn max_velocity(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min_velocity(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Replaces the values, keeping grid metadata. Fails if the new
    /// array has a different shape or invalid entries.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (self.nz, self.nx) {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{}, got {}x{}",
                self.nz,
                self.nx,
                values.dim().0,
                values.dim().1
            )));
        }
        Self::new(self.dz, self.dx, values)
    }
}

/// Uniform time sampling for sources, traces and wavefields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAxis {
    nt: usize,
    dt: f64,
}

impl TimeAxis {
    pub fn new(nt: usize, dt: f64) -> Result<Self> {
        if nt < 2 {
            return Err(Error::InvalidConfig(format!("nt must be >= 2, got {nt}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { nt, dt })
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of the i-th sample.
    pub fn at(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Total record length in seconds.
    pub fn duration(&self) -> f64 {
        (self.nt - 1) as f64 * self.dt
    }
}
