//! Projected back projection: `x̂ = P_K((1/m)·Φᵀy)`.
//!
//! A single non-iterative step. `y` may come from any observation map, the
//! quantized one or the plain linear one.

use crate::error::{check_len, Error, Result};
use crate::models::{Signal, SignalModel};
use crate::quantize::QuantizedMap;
use crate::sensing::{norm, SensingOperator};

/// `(1/m)·Φᵀy`.
pub fn back_project(op: &SensingOperator, y: &[f64]) -> Result<Vec<f64>> {
    let mut a = op.apply_adjoint(y)?;
    let inv_m = 1.0 / op.m() as f64;
    a.iter_mut().for_each(|v| *v *= inv_m);
    Ok(a)
}

/// Projects the back projection of `y` onto `model`.
pub fn reconstruct(map: &QuantizedMap, y: &[f64], model: &SignalModel) -> Result<Signal> {
    reconstruct_with(map.op(), y, model)
}

/// [`reconstruct`] for a bare operator.
pub fn reconstruct_with(op: &SensingOperator, y: &[f64], model: &SignalModel) -> Result<Signal> {
    check_len(op.n(), model.dim())?;
    model.project(&back_project(op, y)?)
}

/// `‖x - x̂‖₂` (Frobenius norm for matrices).
pub fn reconstruction_error(x: &Signal, xhat: &Signal) -> Result<f64> {
    if x.len() != xhat.len() || x.shape != xhat.shape {
        return Err(Error::ShapeMismatch(format!(
            "{} values {:?} vs {} values {:?}",
            x.len(),
            x.shape,
            xhat.len(),
            xhat.shape
        )));
    }
    Ok(distance(&x.data, &xhat.data))
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// `a` restricted to `supp(x) ∪ supp(x̂)`, zero elsewhere.
pub fn restrict_to_joint_support(a: &[f64], x: &[f64], xhat: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(x.iter().zip(xhat))
        .map(|(&ai, (&xi, &hi))| if xi != 0.0 || hi != 0.0 { ai } else { 0.0 })
        .collect()
}

/// Both sides of `‖x - x̂‖ ≤ 2‖x - a_T‖` for a sparse reconstruction,
/// `a` the back projection and `T` the joint support of `x` and `x̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBound {
    pub error: f64,
    pub bound: f64,
}

impl SupportBound {
    pub fn compute(x: &[f64], xhat: &[f64], a: &[f64]) -> Self {
        let a_t = restrict_to_joint_support(a, x, xhat);
        Self {
            error: distance(x, xhat),
            bound: 2.0 * distance(x, &a_t),
        }
    }

    pub fn holds(&self) -> bool {
        // the two sides coincide when a_T is exactly k-sparse
        self.error <= self.bound * (1.0 + 1e-12) + 1e-15
    }
}

/// `‖x̂ - a‖ ≤ ‖x - a‖`: the projection is at least as close to `a` as `x` is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionBound {
    pub estimate_gap: f64,
    pub signal_gap: f64,
}

impl ProjectionBound {
    pub fn compute(x: &[f64], xhat: &[f64], a: &[f64]) -> Self {
        Self {
            estimate_gap: distance(xhat, a),
            signal_gap: distance(x, a),
        }
    }

    pub fn holds(&self) -> bool {
        self.estimate_gap <= self.signal_gap * (1.0 + 1e-10) + 1e-12
    }
}

/// Unit vector along `x - x̂`, or `None` if they coincide.
pub fn error_direction(x: &[f64], xhat: &[f64]) -> Option<Vec<f64>> {
    let d: Vec<f64> = x.iter().zip(xhat).map(|(a, b)| a - b).collect();
    let nrm = norm(&d);
    (nrm > 0.0).then(|| d.into_iter().map(|v| v / nrm).collect())
}
