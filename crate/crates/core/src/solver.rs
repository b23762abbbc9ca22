//! The primal-dual splitting solver for TV- and box-constrained FWI and
//! the unconstrained gradient-descent baseline.
//!
//! Per iteration the PDS loop performs exactly one gradient evaluation
//! and one l1,2-ball projection, with no inner loops:
//!
//! ```text
//! m~     <- m - g1 (grad E(m) + D^T y)
//! m_next <- P_box(m~)
//! y~     <- y + g2 D (2 m_next - m)
//! y_next <- y~ - g2 P_ball(y~ / g2)
//! ```

use std::path::Path;
use std::time::Instant;

use ndarray::Array2;

use crate::io;
use crate::metrics::{self, MetricConfig};
use crate::model::VelocityModel;
use crate::proximal::{self, ConstraintSpec, GradientField};
use crate::{Error, Result};

/// Misfit-and-gradient callable the solvers iterate on. The production
/// implementation wraps the wave-equation adjoint; tests may inject a
/// quadratic stub.
pub trait Objective {
    fn eval_grad(&mut self, values: &Array2<f64>) -> Result<(f64, Array2<f64>)>;
}

impl<F> Objective for F
where
    F: FnMut(&Array2<f64>) -> Result<(f64, Array2<f64>)>,
{
    fn eval_grad(&mut self, values: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        self(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub iterations: usize,
    pub constraint: ConstraintSpec,
    /// Write a model snapshot every this many iterations; 0 disables.
    pub snapshot_every: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step sizes must be positive, got gamma1={}, gamma2={}",
                self.gamma1, self.gamma2
            )));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// One logged solver iteration. `iter` 0 describes the initial model.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub misfit: f64,
    pub tv: f64,
    pub box_violations: usize,
    pub rmse: Option<f64>,
    pub ssim: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("iter,E,tv,box_violations,rmse,ssim,wall_ms\n");
        for r in &self.records {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.iter,
                r.misfit,
                r.tv,
                r.box_violations,
                opt(r.rmse),
                opt(r.ssim),
                r.wall_ms
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Advisory PDS step-size check: g1 g2 ||D||^2 <= 1 with ||D||^2 <= 8.
/// Heuristic only, since the FWI misfit is nonconvex.
pub fn check_stepsizes(gamma1: f64, gamma2: f64, operator_norm_sq: f64) -> Result<bool> {
    if !(gamma1 > 0.0 && gamma2 > 0.0 && operator_norm_sq > 0.0) {
        return Err(Error::InvalidConfig(
            "step sizes and operator norm must be positive".into(),
        ));
    }
    Ok(gamma1 * gamma2 * operator_norm_sq <= 1.0)
}

struct RunState<'a> {
    ground_truth: Option<&'a VelocityModel>,
    metric_cfg: MetricConfig,
    snapshot_dir: Option<&'a Path>,
    start: Instant,
    trace: IterationTrace,
}

impl<'a> RunState<'a> {
    fn new(
        ground_truth: Option<&'a VelocityModel>,
        metric_cfg: MetricConfig,
        snapshot_dir: Option<&'a Path>,
    ) -> Self {
        Self {
            ground_truth,
            metric_cfg,
            snapshot_dir,
            start: Instant::now(),
            trace: IterationTrace::default(),
        }
    }

    fn record(&mut self, iter: usize, misfit: f64, m: &Array2<f64>, l: f64, u: f64) -> Result<()> {
        let tv = proximal::l12_norm(&proximal::diff_apply(m));
        let box_violations = m.iter().filter(|&&v| v < l || v > u).count();
        let (mut rmse, mut ssim) = (None, None);
        if let Some(gt) = self.ground_truth {
            rmse = Some(metrics::rmse(m, gt.values())?);
            ssim = Some(metrics::ssim(m, gt.values(), &self.metric_cfg)?);
        }
        self.trace.records.push(IterationRecord {
            iter,
            misfit,
            tv,
            box_violations,
            rmse,
            ssim,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }

    fn snapshot(
        &self,
        iter: usize,
        every: usize,
        template: &VelocityModel,
        m: &Array2<f64>,
    ) -> Result<()> {
        if let Some(dir) = self.snapshot_dir {
            if every > 0 && iter % every == 0 {
                let model = template.with_values(m.clone())?;
                io::write_grid(&model, dir.join(format!("snapshot_{iter:06}.tvfw")))?;
            }
        }
        Ok(())
    }
}

fn check_finite(e: f64, grad: &Array2<f64>) -> Result<()> {
    if !e.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(
            "misfit or gradient is non-finite; the simulation is unstable".into(),
        ));
    }
    Ok(())
}

/// TV- and box-constrained FWI by primal-dual splitting. The initial
/// model is projected onto the box once; every later primal iterate is
/// box-feasible by construction. Returns the final model and the trace.
pub fn pds_solve(
    initial: &VelocityModel,
    objective: &mut dyn Objective,
    config: &SolverConfig,
    ground_truth: Option<&VelocityModel>,
    metric_cfg: MetricConfig,
    snapshot_dir: Option<&Path>,
) -> Result<(VelocityModel, IterationTrace)> {
    config.validate()?;
    let ConstraintSpec { alpha, lower, upper } = config.constraint;
    let mut state = RunState::new(ground_truth, metric_cfg, snapshot_dir);

    let mut m = proximal::project_box(initial.values(), lower, upper);
    let mut y = GradientField::zeros(m.dim().0, m.dim().1);

    for k in 0..config.iterations {
        let (e, grad) = objective.eval_grad(&m)?;
        check_finite(e, &grad)?;
        if k == 0 {
            state.record(0, e, &m, lower, upper)?;
            state.snapshot(0, config.snapshot_every, initial, &m)?;
        }

        let descent = &grad + &proximal::diff_adjoint(&y);
        let m_tilde = &m - &(descent * config.gamma1);
        let m_next = proximal::project_box(&m_tilde, lower, upper);

        let overshoot = &(&m_next * 2.0) - &m;
        let y_tilde = y.add(&proximal::diff_apply(&overshoot).scale(config.gamma2));
        y = proximal::prox_conjugate(
            |f| proximal::project_l12_ball(f, alpha),
            config.gamma2,
            &y_tilde,
        );
        m = m_next;

        state.record(k + 1, e, &m, lower, upper)?;
        state.snapshot(k + 1, config.snapshot_every, initial, &m)?;
    }
    Ok((initial.with_values(m)?, state.trace))
}

/// Standard unconstrained FWI baseline: m <- m - g1 grad E(m).
pub fn gd_solve(
    initial: &VelocityModel,
    objective: &mut dyn Objective,
    config: &SolverConfig,
    ground_truth: Option<&VelocityModel>,
    metric_cfg: MetricConfig,
    snapshot_dir: Option<&Path>,
) -> Result<(VelocityModel, IterationTrace)> {
    config.validate()?;
    let ConstraintSpec { lower, upper, .. } = config.constraint;
    let mut state = RunState::new(ground_truth, metric_cfg, snapshot_dir);
    let mut m = initial.values().clone();

    for k in 0..config.iterations {
        let (e, grad) = objective.eval_grad(&m)?;
        check_finite(e, &grad)?;
        if k == 0 {
            state.record(0, e, &m, lower, upper)?;
            state.snapshot(0, config.snapshot_every, initial, &m)?;
        }
        m = &m - &(grad * config.gamma1);
        state.record(k + 1, e, &m, lower, upper)?;
        state.snapshot(k + 1, config.snapshot_every, initial, &m)?;
    }
    Ok((initial.with_values(m)?, state.trace))
}
