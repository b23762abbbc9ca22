//! 2D constant-density acoustic wave propagation: 2nd-order leapfrog in
//! time, 4th-order centered stencil in space, Cerjan sponge absorbing
//! layers. Velocities arrive in km/s and are converted to m/s here.

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::geometry::{AcquisitionGeometry, ShotGatherSet, SourceWavelet, SpongeBoundary};
use crate::model::{TimeAxis, VelocityModel};
use crate::{Error, Result};

/// Stability margin for the 4th-order spatial stencil.
pub const CFL_FACTOR: f64 = 0.4;

const KM_PER_S_TO_M_PER_S: f64 = 1000.0;

/// Samples the Ricker wavelet on the time axis:
/// w(t) = (1 - 2 pi^2 f^2 (t-t0)^2) exp(-pi^2 f^2 (t-t0)^2).
pub fn ricker(time: &TimeAxis, wavelet: &SourceWavelet) -> Vec<f64> {
    let f = wavelet.peak_frequency;
    (0..time.nt())
        .map(|i| {
            let tau = time.at(i) - wavelet.delay;
            let a = (std::f64::consts::PI * f * tau).powi(2);
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect()
}

/// Returns whether `time.dt()` satisfies the CFL bound for `model`,
/// together with the largest stable dt rounded down to 1 microsecond.
pub fn check_cfl(model: &VelocityModel, time: &TimeAxis) -> (bool, f64) {
    let limit = cfl_limit(model);
    let suggestion = (limit / 1e-6).floor() * 1e-6;
    (time.dt() <= limit, suggestion)
}

fn cfl_limit(model: &VelocityModel) -> f64 {
    let v_max = model.max_velocity() * KM_PER_S_TO_M_PER_S;
    CFL_FACTOR * model.dz().min(model.dx()) / v_max
}

/// A point term entering the wave equation: bilinear cell weights plus a
/// per-time-step amplitude series.
#[derive(Debug, Clone)]
pub(crate) struct SourceTerm {
    pub weights: Vec<(usize, usize, f64)>,
    pub series: Vec<f64>,
}

/// Per-shot time stepper on the sponge-padded grid.
pub(crate) struct Propagator {
    pz: usize,
    px: usize,
    pad_top: usize,
    pad: usize,
    nz: usize,
    nx: usize,
    dz: f64,
    dx: f64,
    dt: f64,
    nt: usize,
    /// (v dt)^2 per padded cell.
    c2: Vec<f64>,
    /// Per-cell sponge damping factor.
    damp: Vec<f64>,
}

impl Propagator {
    pub fn new(
        model: &VelocityModel,
        time: &TimeAxis,
        boundary: &SpongeBoundary,
    ) -> Result<Self> {
        let (ok, _) = check_cfl(model, time);
        if !ok {
            return Err(Error::CflViolation {
                dt: time.dt(),
                limit: cfl_limit(model),
            });
        }
        let (nz, nx) = (model.nz(), model.nx());
        let pad = boundary.width();
        let pad_top = if boundary.damp_top() { pad } else { 0 };
        let pz = nz + pad_top + pad;
        let px = nx + 2 * pad;
        let dt = time.dt();

        let mut c2 = vec![0.0; pz * px];
        let mut damp = vec![1.0; pz * px];
        for i in 0..pz {
            for j in 0..px {
                // velocity extended into the padding by edge replication
                let iz = i.saturating_sub(pad_top).min(nz - 1);
                let ix = j.saturating_sub(pad).min(nx - 1);
                let v = model.values()[[iz, ix]] * KM_PER_S_TO_M_PER_S;
                c2[i * px + j] = (v * dt).powi(2);

                // distance in layers from the nearest damped outer edge
                let mut dist = usize::MAX;
                if pad_top > 0 {
                    dist = dist.min(i);
                }
                dist = dist.min(pz - 1 - i).min(j).min(px - 1 - j);
                damp[i * px + j] = boundary.factor(dist);
            }
        }
        Ok(Self {
            pz,
            px,
            pad_top,
            pad,
            nz,
            nx,
            dz: model.dz(),
            dx: model.dx(),
            dt,
            nt: time.nt(),
            c2,
            damp,
        })
    }

    /// Bilinear weights of a physical position (x, z) in meters over the
    /// four surrounding padded-grid cells.
    pub fn bilinear(&self, x: f64, z: f64) -> Vec<(usize, usize, f64)> {
        let fz = z / self.dz + self.pad_top as f64;
        let fx = x / self.dx + self.pad as f64;
        let i0 = (fz.floor() as usize).min(self.pz - 2);
        let j0 = (fx.floor() as usize).min(self.px - 2);
        let wz = fz - i0 as f64;
        let wx = fx - j0 as f64;
        let mut w = vec![
            (i0, j0, (1.0 - wz) * (1.0 - wx)),
            (i0, j0 + 1, (1.0 - wz) * wx),
            (i0 + 1, j0, wz * (1.0 - wx)),
            (i0 + 1, j0 + 1, wz * wx),
        ];
        w.retain(|&(_, _, v)| v != 0.0);
        w
    }

    /// Runs the leapfrog recursion. Returns the nt x R receiver traces
    /// and, when `store` is set, the wavefield restricted to the
    /// physical grid at every time step.
    pub fn run(
        &self,
        sources: &[SourceTerm],
        receivers: &[Vec<(usize, usize, f64)>],
        store: bool,
    ) -> (Array2<f64>, Option<Vec<Array2<f64>>>) {
        let (pz, px) = (self.pz, self.px);
        let n = pz * px;
        let mut prev = vec![0.0f64; n];
        let mut cur = vec![0.0f64; n];
        let mut next = vec![0.0f64; n];
        let cell_area = self.dx * self.dz;

        let mut traces = Array2::zeros((self.nt, receivers.len()));
        let mut fields: Vec<Array2<f64>> = if store {
            Vec::with_capacity(self.nt)
        } else {
            Vec::new()
        };
        if store {
            fields.push(self.extract_physical(&cur));
        }

        let inv_dz2 = 1.0 / (self.dz * self.dz);
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        // 4th-order second-derivative coefficients
        const C0: f64 = -5.0 / 2.0;
        const C1: f64 = 4.0 / 3.0;
        const C2: f64 = -1.0 / 12.0;

        for step in 0..self.nt - 1 {
            for i in 2..pz - 2 {
                let row = i * px;
                for j in 2..px - 2 {
                    let idx = row + j;
                    let u = cur[idx];
                    let d2x = (C0 * u
                        + C1 * (cur[idx - 1] + cur[idx + 1])
                        + C2 * (cur[idx - 2] + cur[idx + 2]))
                        * inv_dx2;
                    let d2z = (C0 * u
                        + C1 * (cur[idx - px] + cur[idx + px])
                        + C2 * (cur[idx - 2 * px] + cur[idx + 2 * px]))
                        * inv_dz2;
                    next[idx] = 2.0 * u - prev[idx] + self.c2[idx] * (d2x + d2z);
                }
            }
            // point terms: dt^2 v^2 / (dx dz) times the series sample
            for src in sources {
                let amp = src.series[step];
                if amp != 0.0 {
                    for &(i, j, w) in &src.weights {
                        let idx = i * px + j;
                        next[idx] += self.c2[idx] * amp * w / cell_area;
                    }
                }
            }
            // sponge damping on both the new and the current field
            for idx in 0..n {
                next[idx] *= self.damp[idx];
                cur[idx] *= self.damp[idx];
            }
            for (r, weights) in receivers.iter().enumerate() {
                let mut acc = 0.0;
                for &(i, j, w) in weights {
                    acc += w * next[i * px + j];
                }
                traces[[step + 1, r]] = acc;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            if store {
                fields.push(self.extract_physical(&cur));
            }
        }
        (traces, if store { Some(fields) } else { None })
    }

    pub fn extract_physical(&self, field: &[f64]) -> Array2<f64> {
        Array2::from_shape_fn((self.nz, self.nx), |(i, j)| {
            field[(i + self.pad_top) * self.px + j + self.pad]
        })
    }

    /// Misfit value, residual, and the exact discrete velocity gradient
    /// (per km/s) for one shot against `observed` (nt x R).
    ///
    /// The recursion is u_{n+1} = D(2 + CL)u_n - D^2 u_{n-1} + DCs_n with
    /// D = diag(damp), C = diag((v dt)^2), so the misfit gradient follows
    /// from the transpose recursion
    ///   phi_m = D(2 + LC)phi_{m+1} - D^2 phi_{m+2} - D R^T r_m
    /// (note LC, not CL, and plain receiver weights without the C/area
    /// source scaling), paired with the stored forward history:
    ///   dE/dC_k = -sum_n phi_{n+1,k} (D^{-1}u_{n+1} - 2u_n + D u_{n-1})_k / C_k.
    /// Padded cells replicate edge velocities, so their sensitivities are
    /// folded back onto the physical cells they copy.
    pub fn shot_gradient(
        &self,
        source: &SourceTerm,
        receivers: &[Vec<(usize, usize, f64)>],
        observed: ndarray::ArrayView2<f64>,
    ) -> (f64, Array2<f64>, Array2<f64>) {
        let (pz, px, nt) = (self.pz, self.px, self.nt);
        let n = pz * px;
        let cell_area = self.dx * self.dz;

        // forward sweep, storing the full padded history
        let mut hist: Vec<Vec<f64>> = Vec::with_capacity(nt);
        let mut traces = Array2::zeros((nt, receivers.len()));
        {
            let mut prev = vec![0.0f64; n];
            let mut cur = vec![0.0f64; n];
            let mut next = vec![0.0f64; n];
            hist.push(cur.clone());
            for step in 0..nt - 1 {
                self.stencil_forward(&cur, &prev, &mut next);
                let amp = source.series[step];
                if amp != 0.0 {
                    for &(i, j, w) in &source.weights {
                        let idx = i * px + j;
                        next[idx] += self.c2[idx] * amp * w / cell_area;
                    }
                }
                for idx in 0..n {
                    next[idx] *= self.damp[idx];
                    cur[idx] *= self.damp[idx];
                }
                for (r, weights) in receivers.iter().enumerate() {
                    let mut acc = 0.0;
                    for &(i, j, w) in weights {
                        acc += w * next[i * px + j];
                    }
                    traces[[step + 1, r]] = acc;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
                hist.push(cur.clone());
            }
        }

        let residual = &traces - &observed;
        let value = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();

        // transpose sweep; step k produces phi_{nt-1-(k+1)}, which pairs
        // with the forward difference stencil at physical time nt-2-k
        let mut corr = vec![0.0f64; n];
        {
            let mut prev = vec![0.0f64; n];
            let mut cur = vec![0.0f64; n];
            let mut next = vec![0.0f64; n];
            let mut scratch = vec![0.0f64; n];
            for k in 0..nt - 1 {
                self.stencil_transpose(&cur, &prev, &mut next, &mut scratch);
                for (r, weights) in receivers.iter().enumerate() {
                    let amp = residual[[nt - 1 - k, r]];
                    if amp != 0.0 {
                        for &(i, j, w) in weights {
                            next[i * px + j] -= w * amp;
                        }
                    }
                }
                for idx in 0..n {
                    next[idx] *= self.damp[idx];
                    cur[idx] *= self.damp[idx];
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);

                let m = nt - 2 - k;
                let (up, uc) = (&hist[m + 1], &hist[m]);
                if m == 0 {
                    for idx in 0..n {
                        corr[idx] += cur[idx] * up[idx] / self.damp[idx];
                    }
                } else {
                    let um = &hist[m - 1];
                    for idx in 0..n {
                        let delta = up[idx] / self.damp[idx] - 2.0 * uc[idx]
                            + self.damp[idx] * um[idx];
                        corr[idx] += cur[idx] * delta;
                    }
                }
            }
        }

        // dE/dv_kms = -(2/v) * 1000 * corr, folded onto physical cells
        let mut grad = Array2::<f64>::zeros((self.nz, self.nx));
        for i in 0..pz {
            for j in 0..px {
                let iz = i.saturating_sub(self.pad_top).min(self.nz - 1);
                let ix = j.saturating_sub(self.pad).min(self.nx - 1);
                let idx = i * px + j;
                let v = self.c2[idx].sqrt() / self.dt;
                grad[[iz, ix]] -= 2000.0 / v * corr[idx];
            }
        }
        (value, residual, grad)
    }

    /// next = 2 cur - prev + C L cur on the interior band.
    fn stencil_forward(&self, cur: &[f64], prev: &[f64], next: &mut [f64]) {
        let (pz, px) = (self.pz, self.px);
        let inv_dz2 = 1.0 / (self.dz * self.dz);
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        const C0: f64 = -5.0 / 2.0;
        const C1: f64 = 4.0 / 3.0;
        const C2: f64 = -1.0 / 12.0;
        for i in 2..pz - 2 {
            let row = i * px;
            for j in 2..px - 2 {
                let idx = row + j;
                let u = cur[idx];
                let d2x = (C0 * u
                    + C1 * (cur[idx - 1] + cur[idx + 1])
                    + C2 * (cur[idx - 2] + cur[idx + 2]))
                    * inv_dx2;
                let d2z = (C0 * u
                    + C1 * (cur[idx - px] + cur[idx + px])
                    + C2 * (cur[idx - 2 * px] + cur[idx + 2 * px]))
                    * inv_dz2;
                next[idx] = 2.0 * u - prev[idx] + self.c2[idx] * (d2x + d2z);
            }
        }
    }

    /// next = 2 cur - prev + L(C cur) on the interior band: the transpose
    /// of [`Self::stencil_forward`] given that L is symmetric.
    fn stencil_transpose(
        &self,
        cur: &[f64],
        prev: &[f64],
        next: &mut [f64],
        scaled: &mut [f64],
    ) {
        let (pz, px) = (self.pz, self.px);
        for idx in 0..pz * px {
            scaled[idx] = self.c2[idx] * cur[idx];
        }
        let inv_dz2 = 1.0 / (self.dz * self.dz);
        let inv_dx2 = 1.0 / (self.dx * self.dx);
        const C0: f64 = -5.0 / 2.0;
        const C1: f64 = 4.0 / 3.0;
        const C2: f64 = -1.0 / 12.0;
        for i in 2..pz - 2 {
            let row = i * px;
            for j in 2..px - 2 {
                let idx = row + j;
                let d2x = (C0 * scaled[idx]
                    + C1 * (scaled[idx - 1] + scaled[idx + 1])
                    + C2 * (scaled[idx - 2] + scaled[idx + 2]))
                    * inv_dx2;
                let d2z = (C0 * scaled[idx]
                    + C1 * (scaled[idx - px] + scaled[idx + px])
                    + C2 * (scaled[idx - 2 * px] + scaled[idx + 2 * px]))
                    * inv_dz2;
                next[idx] = 2.0 * cur[idx] - prev[idx] + d2x + d2z;
            }
        }
    }
}

/// Forward-modeled data plus, on request, the stored source wavefields
/// (physical-grid history per shot) for adjoint imaging.
pub struct ForwardOutput {
    pub gather: ShotGatherSet,
    pub wavefields: Option<Vec<Vec<Array2<f64>>>>,
}

/// Forward modeling with the geometry's Ricker wavelet.
pub fn forward(
    model: &VelocityModel,
    geometry: &AcquisitionGeometry,
    boundary: &SpongeBoundary,
) -> Result<ShotGatherSet> {
    let source = ricker(&geometry.time, &geometry.wavelet);
    Ok(forward_with_source(model, geometry, boundary, &source, false)?.gather)
}

/// Forward modeling with an explicit source time series, optionally
/// storing the per-shot wavefield history. Shots run in parallel and
/// results are assembled in source order.
pub fn forward_with_source(
    model: &VelocityModel,
    geometry: &AcquisitionGeometry,
    boundary: &SpongeBoundary,
    source_series: &[f64],
    store_wavefields: bool,
) -> Result<ForwardOutput> {
    geometry.validate_against(model)?;
    if source_series.len() != geometry.time.nt() {
        return Err(Error::DimensionMismatch(format!(
            "source series has {} samples, time axis has {}",
            source_series.len(),
            geometry.time.nt()
        )));
    }
    let prop = Propagator::new(model, &geometry.time, boundary)?;
    let receiver_weights: Vec<_> = geometry
        .receivers
        .iter()
        .map(|&(x, z)| prop.bilinear(x, z))
        .collect();

    let per_shot: Vec<(Array2<f64>, Option<Vec<Array2<f64>>>)> = geometry
        .sources
        .par_iter()
        .map(|&(x, z)| {
            let src = SourceTerm {
                weights: prop.bilinear(x, z),
                series: source_series.to_vec(),
            };
            prop.run(&[src], &receiver_weights, store_wavefields)
        })
        .collect();

    let (ns, nt, nr) = (
        geometry.n_sources(),
        geometry.time.nt(),
        geometry.n_receivers(),
    );
    let mut data = Array3::zeros((ns, nt, nr));
    let mut wavefields = store_wavefields.then(Vec::new);
    for (s, (traces, fields)) in per_shot.into_iter().enumerate() {
        data.slice_mut(ndarray::s![s, .., ..]).assign(&traces);
        if let (Some(all), Some(f)) = (wavefields.as_mut(), fields) {
            all.push(f);
        }
    }
    Ok(ForwardOutput {
        gather: ShotGatherSet::new(data, geometry.time.dt())?,
        wavefields,
    })
}

/// Default time axis for a model: dt from the CFL suggestion, shrunk so
/// the record length divides into an integer number of steps.
pub fn default_time_axis(model: &VelocityModel, record_length: f64) -> Result<TimeAxis> {
    let (_, suggestion) = check_cfl(model, &TimeAxis::new(2, 1.0)?);
    let steps = (record_length / suggestion).ceil() as usize;
    TimeAxis::new(steps + 1, record_length / steps as f64)
}

/// Time axis that stays CFL-stable up to the given velocity (km/s) on
/// the model's grid, regardless of the model's own maximum. Data meant
/// to drive an inversion should be sampled this way so intermediate
/// iterates above the true maximum still simulate stably.
pub fn time_axis_for_vmax(
    model: &VelocityModel,
    record_length: f64,
    vmax_kms: f64,
) -> Result<TimeAxis> {
    if !(vmax_kms > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "velocity bound must be positive, got {vmax_kms}"
        )));
    }
    let limit = CFL_FACTOR * model.dz().min(model.dx()) / (vmax_kms * KM_PER_S_TO_M_PER_S);
    let suggestion = (limit / 1e-6).floor() * 1e-6;
    let steps = (record_length / suggestion).ceil() as usize;
    TimeAxis::new(steps + 1, record_length / steps as f64)
}
