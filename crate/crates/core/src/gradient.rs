//! Misfit evaluation and its gradient via the adjoint-state method:
//! residuals are propagated time-reversed from the receivers and
//! correlated (zero lag) with the second time derivative of the stored
//! source wavefield.

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::geometry::{AcquisitionGeometry, ShotGatherSet, SpongeBoundary};
use crate::model::VelocityModel;
use crate::wave::{self, Propagator, SourceTerm};
use crate::{Error, Result};

/// Misfit value, the residual gather, and the velocity gradient in
/// (misfit units) per km/s.
pub struct MisfitReport {
    pub value: f64,
    pub residual: ShotGatherSet,
    pub gradient: Array2<f64>,
}

/// E(m) = 1/2 sum over (shot, time, receiver) of (u_obs - u_cal)^2,
/// with the geometry's unit-amplitude Ricker source.
pub fn evaluate_misfit(
    model: &VelocityModel,
    geometry: &AcquisitionGeometry,
    boundary: &SpongeBoundary,
    observed: &ShotGatherSet,
) -> Result<f64> {
    let source = wave::ricker(&geometry.time, &geometry.wavelet);
    evaluate_misfit_with_source(model, geometry, boundary, observed, &source)
}

/// Same as [`evaluate_misfit`] with an explicit source time series.
pub fn evaluate_misfit_with_source(
    model: &VelocityModel,
    geometry: &AcquisitionGeometry,
    boundary: &SpongeBoundary,
    observed: &ShotGatherSet,
    source_series: &[f64],
) -> Result<f64> {
    observed.matches(geometry)?;
    let out = wave::forward_with_source(model, geometry, boundary, source_series, false)?;
    Ok(0.5
        * observed
            .data()
            .iter()
            .zip(out.gather.data().iter())
            .map(|(o, c)| (o - c) * (o - c))
            .sum::<f64>())
}

/// Adjoint-state gradient with the geometry's unit-amplitude Ricker
/// source.
pub fn misfit_gradient(
    model: &VelocityModel,
    geometry: &AcquisitionGeometry,
    boundary: &SpongeBoundary,
    observed: &ShotGatherSet,
) -> Result<MisfitReport> {
    let source = wave::ricker(&geometry.time, &geometry.wavelet);
    misfit_gradient_with_source(model, geometry, boundary, observed, &source)
}

/// Per shot: forward-model and store the wavefield, back-propagate the
/// residual time-reversed from the receivers through the exact transpose
/// of the discrete stepper, and correlate with the stored history (the
/// discrete counterpart of the lambda * d2u/dt2 imaging condition).
/// Shots are processed independently and summed in fixed source order.
pub fn misfit_gradient_with_source(
    model: &VelocityModel,
    geometry: &AcquisitionGeometry,
    boundary: &SpongeBoundary,
    observed: &ShotGatherSet,
    source_series: &[f64],
) -> Result<MisfitReport> {
    observed.matches(geometry)?;
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
    let dt = geometry.time.dt();
    let (nz, nx) = (model.nz(), model.nx());

    let per_shot: Vec<(f64, Array2<f64>, Array2<f64>)> = geometry
        .sources
        .par_iter()
        .enumerate()
        .map(|(s, &(x, z))| {
            let src = SourceTerm {
                weights: prop.bilinear(x, z),
                series: source_series.to_vec(),
            };
            let obs = observed.data().slice(ndarray::s![s, .., ..]);
            prop.shot_gradient(&src, &receiver_weights, obs)
        })
        .collect();

    let mut value = 0.0;
    let mut gradient = Array2::<f64>::zeros((nz, nx));
    let mut residual = Array3::<f64>::zeros(observed.data().dim());
    for (s, (v, r, g)) in per_shot.into_iter().enumerate() {
        value += v;
        gradient += &g;
        residual.slice_mut(ndarray::s![s, .., ..]).assign(&r);
    }
    if let Some(g) = gradient.iter().find(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient contains {g}")));
    }
    Ok(MisfitReport {
        value,
        residual: ShotGatherSet::new(residual, dt)?,
        gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SourceWavelet;
    use crate::model::TimeAxis;
    use ndarray::Array3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn setup(nz: usize, nx: usize, n_src: usize, record: f64) -> (VelocityModel, AcquisitionGeometry, SpongeBoundary) {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let values = ndarray::Array2::from_shape_fn((nz, nx), |(i, _)| {
            2.0 + 0.5 * (i as f64 / nz as f64) + rng.gen_range(-0.05..0.05)
        });
        let model = VelocityModel::new(10.0, 10.0, values).unwrap();
        // CFL headroom for the perturbed models the tests build
        let fast = model.with_values(model.values() + 0.25).unwrap();
        let time = wave::default_time_axis(&fast, record).unwrap();
        let wavelet = SourceWavelet::ricker(12.0, 0.06).unwrap();
        let (_, width) = model.extent();
        let sources = (0..n_src)
            .map(|i| (width * (i + 1) as f64 / (n_src + 1) as f64, 10.0))
            .collect();
        let receivers = (0..nx / 2)
            .map(|i| (width * i as f64 / (nx / 2 - 1) as f64, 10.0))
            .collect();
        let geom = AcquisitionGeometry::new(sources, receivers, wavelet, time).unwrap();
        (model, geom, SpongeBoundary::cerjan(20))
    }

    #[test]
    fn zero_residual_zero_misfit_and_gradient() {
        let (model, geom, sponge) = setup(14, 20, 1, 0.2);
        let observed = wave::forward(&model, &geom, &sponge).unwrap();
        let e = evaluate_misfit(&model, &geom, &sponge, &observed).unwrap();
        assert_eq!(e, 0.0);
        let rep = misfit_gradient(&model, &geom, &sponge, &observed).unwrap();
        assert!(rep.gradient.iter().all(|&g| g == 0.0));
        assert_eq!(rep.value, 0.0);
    }

    #[test]
    fn single_sample_residual() {
        let (model, geom, sponge) = setup(14, 20, 1, 0.2);
        let sim = wave::forward(&model, &geom, &sponge).unwrap();
        let c = 0.25;
        let mut data = sim.data().clone();
        data[[0, 50, 3]] += c;
        let observed = ShotGatherSet::new(data, sim.dt()).unwrap();
        let e = evaluate_misfit(&model, &geom, &sponge, &observed).unwrap();
        assert!((e - 0.5 * c * c).abs() < 1e-14);
        // doubling the residual quadruples E
        let mut data2 = sim.data().clone();
        data2[[0, 50, 3]] += 2.0 * c;
        let obs2 = ShotGatherSet::new(data2, sim.dt()).unwrap();
        let e2 = evaluate_misfit(&model, &geom, &sponge, &obs2).unwrap();
        assert!((e2 - 4.0 * e).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (model, geom, sponge) = setup(14, 20, 1, 0.2);
        let bad = ShotGatherSet::new(Array3::zeros((2, 5, 3)), geom.time.dt()).unwrap();
        assert!(evaluate_misfit(&model, &geom, &sponge, &bad).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (model, geom, sponge) = setup(12, 16, 1, 0.2);
        // observed data from a perturbed model so the residual is nonzero
        let true_model = model
            .with_values(model.values() + 0.1)
            .unwrap();
        let observed = wave::forward(&true_model, &geom, &sponge).unwrap();
        let rep = misfit_gradient(&model, &geom, &sponge, &observed).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gmax = rep.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let eps = 1e-3;
        for _ in 0..6 {
            let i = rng.gen_range(2..10);
            let j = rng.gen_range(2..14);
            let fd = {
                let mut plus = model.values().clone();
                plus[[i, j]] += eps;
                let mut minus = model.values().clone();
                minus[[i, j]] -= eps;
                let ep = evaluate_misfit(
                    &model.with_values(plus).unwrap(),
                    &geom,
                    &sponge,
                    &observed,
                )
                .unwrap();
                let em = evaluate_misfit(
                    &model.with_values(minus).unwrap(),
                    &geom,
                    &sponge,
                    &observed,
                )
                .unwrap();
                (ep - em) / (2.0 * eps)
            };
            let adj = rep.gradient[[i, j]];
            let denom = fd.abs().max(0.05 * gmax);
            assert!(
                (adj - fd).abs() / denom < 1e-2,
                "pixel ({i},{j}): adjoint {adj:.6e} vs FD {fd:.6e}"
            );
        }
    }

    #[test]
    fn shot_additivity_bitwise() {
        let (model, geom, sponge) = setup(12, 16, 2, 0.2);
        let true_model = model.with_values(model.values() + 0.08).unwrap();
        let observed = wave::forward(&true_model, &geom, &sponge).unwrap();
        let full = misfit_gradient(&model, &geom, &sponge, &observed).unwrap();

        let mut summed = ndarray::Array2::<f64>::zeros(full.gradient.dim());
        for s in 0..2 {
            let g1 = AcquisitionGeometry::new(
                vec![geom.sources[s]],
                geom.receivers.clone(),
                geom.wavelet,
                geom.time,
            )
            .unwrap();
            let obs1 = ShotGatherSet::new(
                observed
                    .data()
                    .slice(ndarray::s![s..s + 1, .., ..])
                    .to_owned(),
                observed.dt(),
            )
            .unwrap();
            let rep = misfit_gradient(&model, &g1, &sponge, &obs1).unwrap();
            summed += &rep.gradient;
        }
        assert_eq!(full.gradient, summed);
    }

    #[test]
    fn directional_derivative_improves_with_smaller_eps() {
        let (model, geom, sponge) = setup(10, 14, 1, 0.18);
        let true_model = model.with_values(model.values() + 0.1).unwrap();
        let observed = wave::forward(&true_model, &geom, &sponge).unwrap();
        let rep = misfit_gradient(&model, &geom, &sponge, &observed).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dir = ndarray::Array2::from_shape_fn(model.values().dim(), |_| {
            rng.gen_range(-1.0..1.0)
        });
        let inner: f64 = rep.gradient.iter().zip(dir.iter()).map(|(g, p)| g * p).sum();
        let mut errors = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let ep = evaluate_misfit(
                &model.with_values(model.values() + &(&dir * eps)).unwrap(),
                &geom,
                &sponge,
                &observed,
            )
            .unwrap();
            let em = evaluate_misfit(
                &model.with_values(model.values() - &(&dir * eps)).unwrap(),
                &geom,
                &sponge,
                &observed,
            )
            .unwrap();
            let fd = (ep - em) / (2.0 * eps);
            errors.push(((fd - inner) / inner.abs()).abs());
        }
        // error shrinks (or stays at the simulation-noise floor) as eps does
        assert!(
            errors[2] <= errors[0] || errors[2] < 1e-4,
            "errors {errors:?}"
        );
        assert!(errors[2] < 1e-2, "errors {errors:?}");
    }
}
