use nalgebra::DVector;

use super::{LineSearchParams, Objective};
use crate::error::{Error, Result};

/// Accepted step of a line search along `x - h p`.
#[derive(Debug, Clone)]
pub struct Step {
    pub h: f64,
    pub x: DVector<f64>,
    pub value: f64,
    /// Gradient at the new point, when the search evaluated it.
    pub gradient: Option<DVector<f64>>,
    /// Trial steps rejected before acceptance.
    pub backtracks: usize,
    /// Whether the curvature condition holds (always true for Armijo).
    pub curvature: bool,
}

fn slope(p: &DVector<f64>, grad: &DVector<f64>) -> Result<f64> {
    let s = p.dot(grad);
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::InvalidDirection)
    }
}

/// Largest `h = h0 alpha^j` with `f(x - h p) < f(x) - beta h p.grad`.
/// Trial points outside the admissible set count as rejections.
pub fn armijo<O: Objective + ?Sized>(
    obj: &mut O,
    x: &DVector<f64>,
    fx: f64,
    grad: &DVector<f64>,
    p: &DVector<f64>,
    params: &LineSearchParams,
) -> Result<Step> {
    let s = slope(p, grad)?;
    let mut h = params.initial_step;
    for j in 0..=params.max_backtracks {
        let xt = x - p * h;
        if obj.is_admissible(&xt) {
            let ft = obj.value(&xt)?;
            if ft < fx - params.beta * h * s {
                return Ok(Step { h, x: xt, value: ft, gradient: None, backtracks: j, curvature: true });
            }
        }
        h *= params.alpha;
    }
    Err(Error::LineSearchFailure { backtracks: params.max_backtracks + 1 })
}

/// Step satisfying the Armijo condition and `p.grad f(x - h p) <= gamma p.grad f(x)`.
///
/// Starts at `h0`, shrinks by `alpha` until sufficient decrease holds, expands
/// by doubling while the curvature condition fails, and bisects once the step
/// is bracketed. If the trial budget runs out after some Armijo point was
/// found, that point is returned with `curvature = false`.
pub fn wolfe<O: Objective + ?Sized>(
    obj: &mut O,
    x: &DVector<f64>,
    fx: f64,
    grad: &DVector<f64>,
    p: &DVector<f64>,
    params: &LineSearchParams,
) -> Result<Step> {
    let s = slope(p, grad)?;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut h = params.initial_step;
    let mut fallback: Option<Step> = None;
    for j in 0..=params.max_backtracks {
        let xt = x - p * h;
        let mut sufficient = false;
        if obj.is_admissible(&xt) {
            let ft = obj.value(&xt)?;
            if ft < fx - params.beta * h * s {
                sufficient = true;
                let (_, gt) = obj.gradient(&xt)?;
                let st = p.dot(&gt);
                let step = Step { h, x: xt, value: ft, gradient: Some(gt), backtracks: j, curvature: false };
                if st <= params.gamma * s {
                    return Ok(Step { curvature: true, ..step });
                }
                fallback = Some(step);
            }
        }
        if sufficient {
            lo = h;
            h = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * h };
        } else {
            hi = h;
            h = if lo > 0.0 { 0.5 * (lo + hi) } else { h * params.alpha };
        }
    }
    fallback.ok_or(Error::LineSearchFailure { backtracks: params.max_backtracks + 1 })
}
