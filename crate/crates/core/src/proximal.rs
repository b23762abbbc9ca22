//! The discrete difference operator, mixed norms, and the projections
//! used by the primal-dual solver: box clamping, the sorted-threshold
//! l1-ball projection, the grouped l1,2-ball projection built on it,
//! and the Moreau identity for the dual update.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;

use crate::{Error, Result};

/// Upper bound on the squared operator norm of the forward-difference
/// operator with zero boundary rows/columns.
pub const DIFF_OPERATOR_NORM_SQ: f64 = 8.0;

static L12_PROJECTION_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of `project_l12_ball` invocations since process start.
/// Supports structural tests that count projections per solver iteration.
pub fn l12_projection_call_count() -> u64 {
    L12_PROJECTION_CALLS.load(Ordering::Relaxed)
}

/// Image of the difference operator: per-pixel horizontal and vertical
/// forward differences. The last column of `dh` and last row of `dv`
/// are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub dh: Array2<f64>,
    pub dv: Array2<f64>,
}

impl GradientField {
    pub fn zeros(nz: usize, nx: usize) -> Self {
        Self {
            dh: Array2::zeros((nz, nx)),
            dv: Array2::zeros((nz, nx)),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.dh.dim()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { dh: &self.dh * a, dv: &self.dv * a }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dh: &self.dh + &other.dh, dv: &self.dv + &other.dv }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { dh: &self.dh - &other.dh, dv: &self.dv - &other.dv }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.dh
            .iter()
            .zip(other.dh.iter())
            .chain(self.dv.iter().zip(other.dv.iter()))
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// TV budget and velocity box bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ConstraintSpec {
    pub fn new(alpha: f64, lower: f64, upper: f64) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(upper > lower && lower > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "box bounds must satisfy u > l > 0, got l={lower}, u={upper}"
            )));
        }
        Ok(Self { alpha, lower, upper })
    }
}

/// Forward differences: dh[i,j] = m[i,j+1] - m[i,j], dv[i,j] = m[i+1,j] - m[i,j],
/// zero at the last column/row.
pub fn diff_apply(m: &Array2<f64>) -> GradientField {
    let (nz, nx) = m.dim();
    let mut field = GradientField::zeros(nz, nx);
    for i in 0..nz {
        for j in 0..nx {
            if j + 1 < nx {
                field.dh[[i, j]] = m[[i, j + 1]] - m[[i, j]];
            }
            if i + 1 < nz {
                field.dv[[i, j]] = m[[i + 1, j]] - m[[i, j]];
            }
        }
    }
    field
}

/// Exact adjoint of `diff_apply` (negative divergence with matching
/// boundary truncation).
pub fn diff_adjoint(field: &GradientField) -> Array2<f64> {
    let (nz, nx) = field.dim();
    let mut out = Array2::zeros((nz, nx));
    for i in 0..nz {
        for j in 0..nx {
            if j + 1 < nx {
                let d = field.dh[[i, j]];
                out[[i, j]] -= d;
                out[[i, j + 1]] += d;
            }
            if i + 1 < nz {
                let d = field.dv[[i, j]];
                out[[i, j]] -= d;
                out[[i + 1, j]] += d;
            }
        }
    }
    out
}

/// Mixed l1,2 norm: sum over pixels of sqrt(dh^2 + dv^2).
pub fn l12_norm(field: &GradientField) -> f64 {
    field
        .dh
        .iter()
        .zip(field.dv.iter())
        .map(|(h, v)| h.hypot(*v))
        .sum()
}

/// Elementwise clamp onto [l, u].
pub fn project_box(values: &Array2<f64>, l: f64, u: f64) -> Array2<f64> {
    values.mapv(|x| x.clamp(l, u))
}

/// Euclidean projection of a nonnegative vector onto the l1 ball of the
/// given radius by sort and threshold, O(n log n).
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius >= 0.0, "radius must be nonnegative");
    let sum: f64 = v.iter().sum();
    if sum <= radius {
        return v.to_vec();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (k + 1) as f64;
        if u - t <= 0.0 {
            break;
        }
        theta = t;
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection onto the l1,2 ball of radius `alpha`: project the vector
/// of per-pixel group norms onto the l1 ball, then rescale each group.
/// Groups with zero norm stay zero.
pub fn project_l12_ball(field: &GradientField, alpha: f64) -> GradientField {
    L12_PROJECTION_CALLS.fetch_add(1, Ordering::Relaxed);
    let (nz, nx) = field.dim();
    let norms: Vec<f64> = field
        .dh
        .iter()
        .zip(field.dv.iter())
        .map(|(h, v)| h.hypot(*v))
        .collect();
    if norms.iter().sum::<f64>() <= alpha {
        return field.clone();
    }
    let projected = project_l1_ball(&norms, alpha);
    let mut out = GradientField::zeros(nz, nx);
    for (idx, ((h, v), (&n, &p))) in field
        .dh
        .iter()
        .zip(field.dv.iter())
        .zip(norms.iter().zip(projected.iter()))
        .enumerate()
    {
        if n > 0.0 {
            let s = p / n;
            let (i, j) = (idx / nx, idx % nx);
            out.dh[[i, j]] = h * s;
            out.dv[[i, j]] = v * s;
        }
    }
    out
}

/// Moreau identity: prox of the conjugate, prox_{g f*}(x) = x - g prox_{f/g}(x/g).
/// `prox_scaled` must compute prox_{f/gamma}; for indicator functions it
/// is the plain projection, independent of gamma.
pub fn prox_conjugate<F>(prox_scaled: F, gamma: f64, x: &GradientField) -> GradientField
where
    F: Fn(&GradientField) -> GradientField,
{
    assert!(gamma > 0.0, "gamma must be positive");
    x.sub(&prox_scaled(&x.scale(1.0 / gamma)).scale(gamma))
}
