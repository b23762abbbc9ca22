//! TV- and box-constrained full-waveform inversion at desk scale.
//!
//! The crate reconstructs 2D subsurface velocity models from synthetic
//! seismic data. It contains a finite-difference acoustic wave engine,
//! adjoint-state misfit gradients, the proximal operators of the TV and
//! box constraints, a primal-dual splitting solver together with a plain
//! gradient-descent baseline, image-quality metrics (RMSE/SSIM), and an
//! experiment harness that drives the whole pipeline from a config file.

pub mod error;
pub mod model;
pub mod io;
pub mod smooth;
pub mod geometry;
pub mod wave;
pub mod gradient;
pub mod proximal;
pub mod solver;
pub mod metrics;
pub mod models;
pub mod harness;

pub use error::Error;
pub use model::{TimeAxis, VelocityModel};
pub use geometry::{AcquisitionGeometry, ShotGatherSet, SourceWavelet, SpongeBoundary};
pub use proximal::{ConstraintSpec, GradientField};
pub use solver::{IterationTrace, SolverConfig};
pub use metrics::MetricConfig;

pub type Result<T> = std::result::Result<T, Error>;
