//! Acquisition geometry: sources, receivers, source wavelet, gathers,
//! and the absorbing sponge boundary.

use ndarray::Array3;

use crate::model::{TimeAxis, VelocityModel};
use crate::{Error, Result};

/// Ricker source signature parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceWavelet {
    /// Peak frequency in Hz.
    pub peak_frequency: f64,
    /// Time shift of the wavelet peak in seconds.
    pub delay: f64,
}

impl SourceWavelet {
    pub fn ricker(peak_frequency: f64, delay: f64) -> Result<Self> {
        if !(peak_frequency > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "peak frequency must be positive, got {peak_frequency}"
            )));
        }
        if delay < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "wavelet delay must be nonnegative, got {delay}"
            )));
        }
        Ok(Self { peak_frequency, delay })
    }
}

/// Positions are (x, z) in meters measured from the top-left grid corner.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionGeometry {
    pub sources: Vec<(f64, f64)>,
    pub receivers: Vec<(f64, f64)>,
    pub wavelet: SourceWavelet,
    pub time: TimeAxis,
}

impl AcquisitionGeometry {
    pub fn new(
        sources: Vec<(f64, f64)>,
        receivers: Vec<(f64, f64)>,
        wavelet: SourceWavelet,
        time: TimeAxis,
    ) -> Result<Self> {
        if sources.is_empty() || receivers.is_empty() {
            return Err(Error::InvalidGeometry(
                "need at least one source and one receiver".into(),
            ));
        }
        Ok(Self { sources, receivers, wavelet, time })
    }

    /// Checks that every source and receiver lies inside the physical
    /// extent of `model`.
    pub fn validate_against(&self, model: &VelocityModel) -> Result<()> {
        let (depth, width) = model.extent();
        for (label, positions) in [("source", &self.sources), ("receiver", &self.receivers)] {
            for &(x, z) in positions.iter() {
                if x < 0.0 || x > width || z < 0.0 || z > depth {
                    return Err(Error::InvalidGeometry(format!(
                        "{label} at ({x}, {z}) m outside grid extent {width} x {depth} m"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evenly spaced surface acquisition: `n_sources` and `n_receivers`
    /// spread across the full lateral extent at depth `surface_depth`.
    pub fn surface_spread(
        model: &VelocityModel,
        n_sources: usize,
        n_receivers: usize,
        surface_depth: f64,
        wavelet: SourceWavelet,
        time: TimeAxis,
    ) -> Result<Self> {
        let (_, width) = model.extent();
        let line = |n: usize| -> Vec<(f64, f64)> {
            (0..n)
                .map(|i| {
                    let x = if n == 1 {
                        width / 2.0
                    } else {
                        width * i as f64 / (n - 1) as f64
                    };
                    (x, surface_depth)
                })
                .collect()
        };
        let geom = Self::new(line(n_sources), line(n_receivers), wavelet, time)?;
        geom.validate_against(model)?;
        Ok(geom)
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }
}

/// Observed or simulated traces, indexed `[shot, time, receiver]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotGatherSet {
    data: Array3<f64>,
    dt: f64,
}

impl ShotGatherSet {
    pub fn new(data: Array3<f64>, dt: f64) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gather sample {v}")));
        }
        Ok(Self { data, dt })
    }

    /// Checks the data cube against an acquisition geometry.
    pub fn matches(&self, geometry: &AcquisitionGeometry) -> Result<()> {
        let want = (
            geometry.n_sources(),
            geometry.time.nt(),
            geometry.n_receivers(),
        );
        if self.data.dim() != want {
            return Err(Error::DimensionMismatch(format!(
                "gather is {:?}, geometry expects {:?}",
                self.data.dim(),
                want
            )));
        }
        Ok(())
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.data.dim()
    }
}

/// Cerjan-style absorbing layer: per-layer multiplicative damping
/// factors applied to the wavefield every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SpongeBoundary {
    width: usize,
    profile: Vec<f64>,
    damp_top: bool,
}

impl SpongeBoundary {
    /// `profile[i]` damps the layer `i` cells in from the outer edge:
    /// exp(-(0.015 (width - i))^2).
    pub fn cerjan(width: usize) -> Self {
        let profile = (0..width)
            .map(|i| {
                let a = 0.015 * (width - i) as f64;
                (-a * a).exp()
            })
            .collect();
        Self { width, profile, damp_top: true }
    }

    /// Leaves the top edge undamped (free surface).
    pub fn with_free_surface(mut self) -> Self {
        self.damp_top = false;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn damp_top(&self) -> bool {
        self.damp_top
    }

    /// Damping factor for a cell `dist` layers in from the outer edge of
    /// the padded grid; 1.0 outside the sponge.
    pub fn factor(&self, dist: usize) -> f64 {
        if dist < self.width {
            self.profile[dist]
        } else {
            1.0
        }
    }
}
