//! Experiment orchestration: config file handling, data synthesis,
//! noise, initial-model smoothing, inversions, and the alpha sweep.
//! Everything is seeded and reduction orders are fixed, so identical
//! configs produce identical output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{AcquisitionGeometry, ShotGatherSet, SourceWavelet, SpongeBoundary};
use crate::gradient;
use crate::io;
use crate::metrics::{self, MetricConfig};
use crate::model::{TimeAxis, VelocityModel};
use crate::smooth;
use crate::solver::{self, Objective, SolverConfig};
use crate::wave;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pds,
    Gd,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pds" => Ok(Method::Pds),
            "gd" => Ok(Method::Gd),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}, expected pds or gd"
            ))),
        }
    }
}

/// Resolved experiment parameters. Loaded from a flat key = value file;
/// command-line flags override file values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ground_truth: PathBuf,
    pub output_dir: PathBuf,
    pub n_sources: usize,
    pub n_receivers: usize,
    pub frequency: f64,
    pub delay: f64,
    pub record_length: f64,
    /// Scales the unit-peak Ricker source; sets the amplitude units of
    /// the synthesized data (and thereby the effect of variance-1 noise).
    pub amplitude: f64,
    pub noise_variance: f64,
    pub noise_seed: u64,
    pub method: Method,
    pub gamma1: f64,
    pub gamma2: f64,
    pub iterations: usize,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub snapshot_every: usize,
    pub seed: u64,
    pub sponge_width: usize,
    pub free_surface: bool,
    pub smooth_sigma: f64,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ground_truth: PathBuf::from("data/salt.tvfw"),
            output_dir: PathBuf::from("runs"),
            n_sources: 20,
            n_receivers: 101,
            frequency: 10.0,
            delay: 0.1,
            record_length: 1.0,
            amplitude: 100.0,
            noise_variance: 1.0,
            noise_seed: 7,
            method: Method::Pds,
            gamma1: 1e-4,
            gamma2: 1e2,
            iterations: 1000,
            alpha: 350.0,
            alphas: (0..13).map(|i| 100.0 + 50.0 * i as f64).collect(),
            lower: 1.5,
            upper: 4.5,
            snapshot_every: 0,
            seed: 1234,
            sponge_width: 40,
            free_surface: false,
            smooth_sigma: 80.0,
            ssim_window: 7,
            ssim_sigma: 1.5,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one key/value pair, the same syntax as the config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("cannot parse {key} = {v:?}")))
        }
        match key {
            "ground_truth" => self.ground_truth = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "sources" => self.n_sources = parse(key, value)?,
            "receivers" => self.n_receivers = parse(key, value)?,
            "frequency" => self.frequency = parse(key, value)?,
            "delay" => self.delay = parse(key, value)?,
            "record_length" => self.record_length = parse(key, value)?,
            "amplitude" => self.amplitude = parse(key, value)?,
            "noise_variance" => self.noise_variance = parse(key, value)?,
            "noise_seed" => self.noise_seed = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "gamma1" => self.gamma1 = parse(key, value)?,
            "gamma2" => self.gamma2 = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "alphas" => {
                self.alphas = value
                    .split(',')
                    .map(|s| parse("alphas", s.trim()))
                    .collect::<Result<_>>()?
            }
            "lower" => self.lower = parse(key, value)?,
            "upper" => self.upper = parse(key, value)?,
            "snapshot_every" => self.snapshot_every = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "sponge_width" => self.sponge_width = parse(key, value)?,
            "free_surface" => self.free_surface = parse(key, value)?,
            "smooth_sigma" => self.smooth_sigma = parse(key, value)?,
            "ssim_window" => self.ssim_window = parse(key, value)?,
            "ssim_sigma" => self.ssim_sigma = parse(key, value)?,
            "ssim_k1" => self.ssim_k1 = parse(key, value)?,
            "ssim_k2" => self.ssim_k2 = parse(key, value)?,
            other => {
                return Err(Error::InvalidConfig(format!("unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            window: self.ssim_window,
            sigma: self.ssim_sigma,
            k1: self.ssim_k1,
            k2: self.ssim_k2,
            dynamic_range: self.upper - self.lower,
        }
    }

    pub fn boundary(&self) -> SpongeBoundary {
        let b = SpongeBoundary::cerjan(self.sponge_width);
        if self.free_surface {
            b.with_free_surface()
        } else {
            b
        }
    }

    fn solver_config(&self, alpha: f64) -> Result<SolverConfig> {
        Ok(SolverConfig {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            iterations: self.iterations,
            constraint: crate::proximal::ConstraintSpec::new(alpha, self.lower, self.upper)?,
            snapshot_every: self.snapshot_every,
            seed: self.seed,
        })
    }

    /// The full resolved configuration as manifest text, fixed key order.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ground_truth = {}", self.ground_truth.display());
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "sources = {}", self.n_sources);
        let _ = writeln!(s, "receivers = {}", self.n_receivers);
        let _ = writeln!(s, "frequency = {}", self.frequency);
        let _ = writeln!(s, "delay = {}", self.delay);
        let _ = writeln!(s, "record_length = {}", self.record_length);
        let _ = writeln!(s, "amplitude = {}", self.amplitude);
        let _ = writeln!(s, "noise_variance = {}", self.noise_variance);
        let _ = writeln!(s, "noise_seed = {}", self.noise_seed);
        let _ = writeln!(
            s,
            "method = {}",
            match self.method {
                Method::Pds => "pds",
                Method::Gd => "gd",
            }
        );
        let _ = writeln!(s, "gamma1 = {}", self.gamma1);
        let _ = writeln!(s, "gamma2 = {}", self.gamma2);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let alphas: Vec<String> = self.alphas.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(s, "alphas = {}", alphas.join(","));
        let _ = writeln!(s, "lower = {}", self.lower);
        let _ = writeln!(s, "upper = {}", self.upper);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sponge_width = {}", self.sponge_width);
        let _ = writeln!(s, "free_surface = {}", self.free_surface);
        let _ = writeln!(s, "smooth_sigma = {}", self.smooth_sigma);
        let _ = writeln!(s, "ssim_window = {}", self.ssim_window);
        let _ = writeln!(s, "ssim_sigma = {}", self.ssim_sigma);
        let _ = writeln!(s, "ssim_k1 = {}", self.ssim_k1);
        let _ = writeln!(s, "ssim_k2 = {}", self.ssim_k2);
        s
    }

    fn write_manifest(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("manifest.txt"), self.manifest())?;
        Ok(())
    }

    /// Acquisition geometry on the given model: sources and receivers at
    /// equal intervals on the surface, one grid point below the top row.
    pub fn geometry(&self, model: &VelocityModel, time: TimeAxis) -> Result<AcquisitionGeometry> {
        let wavelet = SourceWavelet::ricker(self.frequency, self.delay)?;
        AcquisitionGeometry::surface_spread(
            model,
            self.n_sources,
            self.n_receivers,
            model.dz(),
            wavelet,
            time,
        )
    }

    fn scaled_source(&self, time: &TimeAxis) -> Vec<f64> {
        let wavelet = SourceWavelet::ricker(self.frequency, self.delay).expect("validated");
        wave::ricker(time, &wavelet)
            .into_iter()
            .map(|v| v * self.amplitude)
            .collect()
    }
}

/// Wave-equation misfit adapter for the solvers.
pub struct WaveObjective {
    template: VelocityModel,
    geometry: AcquisitionGeometry,
    boundary: SpongeBoundary,
    observed: ShotGatherSet,
    source: Vec<f64>,
}

impl WaveObjective {
    pub fn new(
        template: VelocityModel,
        geometry: AcquisitionGeometry,
        boundary: SpongeBoundary,
        observed: ShotGatherSet,
        source: Vec<f64>,
    ) -> Result<Self> {
        observed.matches(&geometry)?;
        Ok(Self { template, geometry, boundary, observed, source })
    }
}

impl Objective for WaveObjective {
    fn eval_grad(&mut self, values: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        let model = self.template.with_values(values.clone())?;
        let report = gradient::misfit_gradient_with_source(
            &model,
            &self.geometry,
            &self.boundary,
            &self.observed,
            &self.source,
        )?;
        Ok((report.value, report.gradient))
    }
}

/// Synthesizes observed data from the ground truth and writes it as a
/// TVFG gather next to a manifest. Returns the gather path.
pub fn cmd_forward(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let model = io::read_grid(&cfg.ground_truth)?;
    // CFL headroom: the gradient-descent baseline has no box projection,
    // so iterates may exceed the true model's maximum velocity; sample
    // the data finely enough that such excursions still simulate stably
    let vmax = model.max_velocity().max(cfg.upper) * 1.3;
    let time = wave::time_axis_for_vmax(&model, cfg.record_length, vmax)?;
    let geometry = cfg.geometry(&model, time)?;
    let source = cfg.scaled_source(&time);
    let out = wave::forward_with_source(&model, &geometry, &cfg.boundary(), &source, false)?;
    cfg.write_manifest(&cfg.output_dir)?;
    let path = cfg.output_dir.join("observed.tvfg");
    io::write_gather(out.gather.data(), time.dt(), &path)?;
    Ok(path)
}

/// Adds i.i.d. Gaussian noise (mean 0, given variance) to a gather file.
pub fn cmd_noise(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    variance: f64,
    seed: u64,
) -> Result<()> {
    if variance < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be >= 0, got {variance}"
        )));
    }
    let mut gather = io::read_gather(input)?;
    if variance > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, variance.sqrt())
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for v in gather.data.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    io::write_gather(&gather.data, gather.dt, output)
}

/// Gaussian-smooths a grid file (the paper's initial-model recipe).
pub fn cmd_smooth(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    sigma: f64,
) -> Result<()> {
    let model = io::read_grid(input)?;
    let smoothed = smooth::gaussian_smooth(&model, sigma)?;
    io::write_grid(&smoothed, output)
}

/// RMSE and SSIM between two grid files.
pub fn cmd_metrics(
    a: impl AsRef<Path>,
    b: impl AsRef<Path>,
    metric_cfg: &MetricConfig,
) -> Result<(f64, f64)> {
    let ma = io::read_grid(a)?;
    let mb = io::read_grid(b)?;
    Ok((
        metrics::rmse(ma.values(), mb.values())?,
        metrics::ssim(ma.values(), mb.values(), metric_cfg)?,
    ))
}

/// Result of one inversion run.
pub struct InvertOutcome {
    pub final_model: VelocityModel,
    pub trace: solver::IterationTrace,
    pub run_dir: PathBuf,
}

/// Runs one inversion (PDS or GD per config) against an observed gather
/// and initial model, writing final model, trace CSV, snapshots, and the
/// manifest under `run_dir`.
pub fn cmd_invert(
    cfg: &ExperimentConfig,
    observed_path: impl AsRef<Path>,
    initial_path: impl AsRef<Path>,
    run_dir: impl AsRef<Path>,
) -> Result<InvertOutcome> {
    let run_dir = run_dir.as_ref().to_path_buf();
    std::fs::create_dir_all(&run_dir)?;
    cfg.write_manifest(&run_dir)?;

    let initial = io::read_grid(initial_path)?;
    let gather_file = io::read_gather(observed_path)?;
    let (ns, nt, nr) = gather_file.data.dim();
    if ns != cfg.n_sources || nr != cfg.n_receivers {
        return Err(Error::DimensionMismatch(format!(
            "gather has {ns} sources x {nr} receivers, config expects {} x {}",
            cfg.n_sources, cfg.n_receivers
        )));
    }
    let time = TimeAxis::new(nt, gather_file.dt)?;
    let geometry = cfg.geometry(&initial, time)?;
    let observed = ShotGatherSet::new(gather_file.data, gather_file.dt)?;
    let source = cfg.scaled_source(&time);

    let ground_truth = if cfg.ground_truth.exists() {
        Some(io::read_grid(&cfg.ground_truth)?)
    } else {
        None
    };

    let mut objective = WaveObjective::new(
        initial.clone(),
        geometry,
        cfg.boundary(),
        observed,
        source,
    )?;
    let solver_cfg = cfg.solver_config(cfg.alpha)?;
    let snapshot_dir = (cfg.snapshot_every > 0).then(|| run_dir.join("snapshots"));
    if let Some(d) = &snapshot_dir {
        std::fs::create_dir_all(d)?;
    }
    let (final_model, trace) = match cfg.method {
        Method::Pds => solver::pds_solve(
            &initial,
            &mut objective,
            &solver_cfg,
            ground_truth.as_ref(),
            cfg.metric_config(),
            snapshot_dir.as_deref(),
        )?,
        Method::Gd => solver::gd_solve(
            &initial,
            &mut objective,
            &solver_cfg,
            ground_truth.as_ref(),
            cfg.metric_config(),
            snapshot_dir.as_deref(),
        )?,
    };
    io::write_grid(&final_model, run_dir.join("final.tvfw"))?;
    trace.write_csv(run_dir.join("trace.csv"))?;
    Ok(InvertOutcome { final_model, trace, run_dir })
}

/// One row of the sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub alpha: Option<f64>,
    pub rmse: f64,
    pub ssim: f64,
}

/// Runs PDS for every alpha in the config plus the GD baseline once,
/// writing one summary row per run. The summary is flushed after each
/// run so a failure preserves the partial file.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    observed_path: impl AsRef<Path>,
    initial_path: impl AsRef<Path>,
) -> Result<(PathBuf, Vec<SweepRow>)> {
    if cfg.alphas.is_empty() {
        return Err(Error::InvalidConfig("alpha list must not be empty".into()));
    }
    let ground_truth = io::read_grid(&cfg.ground_truth)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    cfg.write_manifest(&cfg.output_dir)?;
    let summary_path = cfg.output_dir.join("summary.csv");
    let mut summary = String::from("method,alpha,rmse,ssim\n");
    std::fs::write(&summary_path, &summary)?;
    let metric_cfg = cfg.metric_config();
    let mut rows = Vec::new();

    let one = |cfg: &ExperimentConfig, label: String| -> Result<SweepRow> {
        let outcome = cmd_invert(
            cfg,
            observed_path.as_ref(),
            initial_path.as_ref(),
            cfg.output_dir.join(&label),
        )?;
        Ok(SweepRow {
            method: cfg.method,
            alpha: (cfg.method == Method::Pds).then_some(cfg.alpha),
            rmse: metrics::rmse(outcome.final_model.values(), ground_truth.values())?,
            ssim: metrics::ssim(outcome.final_model.values(), ground_truth.values(), &metric_cfg)?,
        })
    };

    for &alpha in &cfg.alphas {
        let mut run_cfg = cfg.clone();
        run_cfg.method = Method::Pds;
        run_cfg.alpha = alpha;
        let row = one(&run_cfg, format!("pds_alpha_{alpha}"))?;
        summary.push_str(&format!("pds,{},{},{}\n", alpha, row.rmse, row.ssim));
        std::fs::write(&summary_path, &summary)?;
        rows.push(row);
    }
    let mut gd_cfg = cfg.clone();
    gd_cfg.method = Method::Gd;
    let row = one(&gd_cfg, "gd_baseline".into())?;
    summary.push_str(&format!("gd,,{},{}\n", row.rmse, row.ssim));
    std::fs::write(&summary_path, &summary)?;
    rows.push(row);
    Ok((summary_path, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        let cfg = ExperimentConfig::default();
        std::fs::write(&path, cfg.manifest()).unwrap();
        let back = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn config_rejects_unknown_key() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("iterations", "abc").is_err());
        assert!(cfg.set("method", "newton").is_err());
    }

    #[test]
    fn noise_zero_variance_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let data = ndarray::Array3::from_shape_fn((2, 10, 3), |(s, t, r)| {
            (s + t + r) as f64 * 0.25
        });
        let a = dir.path().join("a.tvfg");
        let b = dir.path().join("b.tvfg");
        io::write_gather(&data, 0.001, &a).unwrap();
        cmd_noise(&a, &b, 0.0, 9).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn noise_sample_mean_near_zero() {
        let dir = tempfile::tempdir().unwrap();
        let data = ndarray::Array3::zeros((4, 200, 25));
        let a = dir.path().join("a.tvfg");
        let b = dir.path().join("b.tvfg");
        io::write_gather(&data, 0.001, &a).unwrap();
        cmd_noise(&a, &b, 1.0, 123).unwrap();
        let noisy = io::read_gather(&b).unwrap();
        let m = noisy.data.len() as f64;
        let mean = noisy.data.iter().sum::<f64>() / m;
        // law of large numbers: |mean| < 3 sigma / sqrt(M)
        assert!(mean.abs() < 3.0 / m.sqrt(), "mean = {mean}");
        let var = noisy.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
        assert!((var - 1.0).abs() < 0.05, "variance = {var}");
    }

    #[test]
    fn forward_writes_expected_shape_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let gt = dir.path().join("gt.tvfw");
        io::write_grid(&models::salt().unwrap(), &gt).unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.ground_truth = gt;
        cfg.output_dir = dir.path().join("out");
        cfg.n_sources = 2;
        cfg.n_receivers = 11;
        cfg.record_length = 0.2;
        let p1 = cmd_forward(&cfg).unwrap();
        let g = io::read_gather(&p1).unwrap();
        assert_eq!(g.data.dim().0, 2);
        assert_eq!(g.data.dim().2, 11);
        let bytes1 = std::fs::read(&p1).unwrap();
        let p2 = cmd_forward(&cfg).unwrap();
        assert_eq!(bytes1, std::fs::read(&p2).unwrap());
        assert!(cfg.output_dir.join("manifest.txt").exists());
    }

    #[test]
    fn smooth_wraps_gaussian() {
        let dir = tempfile::tempdir().unwrap();
        let gt = dir.path().join("gt.tvfw");
        let out = dir.path().join("init.tvfw");
        let model = models::salt().unwrap();
        io::write_grid(&model, &gt).unwrap();
        cmd_smooth(&gt, &out, 0.0).unwrap();
        assert_eq!(io::read_grid(&out).unwrap(), io::read_grid(&gt).unwrap());
        cmd_smooth(&gt, &out, 80.0).unwrap();
        let smoothed = io::read_grid(&out).unwrap();
        assert!(smoothed.min_velocity() >= model.min_velocity() - 1e-6);
        assert!(smoothed.max_velocity() <= model.max_velocity() + 1e-6);
    }

    #[test]
    fn sweep_rejects_empty_alpha_list() {
        let mut cfg = ExperimentConfig::default();
        cfg.alphas.clear();
        assert!(cmd_sweep(&cfg, "x.tvfg", "y.tvfw").is_err());
    }
}
