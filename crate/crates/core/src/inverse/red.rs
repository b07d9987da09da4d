use serde::Serialize;

use super::InverseProblemSpec;
use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Consecutive residual increases treated as divergence.
pub const DIVERGENCE_WINDOW: usize = 10;

/// `½ xᵀ(x − f(x, α))`.
pub fn red_regularizer(x: &Signal, f: &dyn Denoiser, alpha: f64) -> Result<f64> {
    let fx = f.denoise(x, alpha)?;
    Ok(0.5 * x.dot(&x.sub(&fx)?)?)
}

fn objective_with(spec: &InverseProblemSpec, x: &Signal, fx: &Signal) -> Result<f64> {
    let misfit = spec.operator.apply(x)?.sub(&spec.y)?;
    let reg = 0.5 * x.dot(&x.sub(fx)?)?;
    Ok(0.5 * misfit.dot(&misfit)? + spec.lambda * reg)
}

/// `½‖Hx − y‖² + λ·½ xᵀ(x − f(x, α))`.
pub fn red_objective(x: &Signal, spec: &InverseProblemSpec) -> Result<f64> {
    let fx = spec.denoiser.denoise(x, spec.alpha)?;
    objective_with(spec, x, &fx)
}

/// `Hᵀ(Hx − y) + λ(x − f(x, α))`.
pub fn red_objective_gradient(x: &Signal, spec: &InverseProblemSpec) -> Result<Signal> {
    let data = spec.operator.adjoint(&spec.operator.apply(x)?.sub(&spec.y)?)?;
    let fx = spec.denoiser.denoise(x, spec.alpha)?;
    data.lincomb(1.0, &x.sub(&fx)?, spec.lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub estimate: Signal,
    pub iterations: usize,
    /// `‖x_{k+1} − x_k‖_∞` at the last iteration.
    pub residual: f64,
    /// Objective at each iterate `x_0 … x_{k−1}`.
    pub objective_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
}

fn iterate<S>(x0: &Signal, max_iter: usize, tol: f64, mut step: S) -> Result<SolveResult>
where
    S: FnMut(&Signal) -> Result<(Signal, f64)>,
{
    if !(tol >= 0.0) {
        return Err(Error::invalid("tol", "must be nonnegative"));
    }
    let mut x = x0.clone();
    let mut objective_trace = Vec::new();
    let mut residual_trace: Vec<f64> = Vec::new();
    let mut growth = 0;
    for k in 1..=max_iter {
        let (next, objective) = step(&x)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { step: k });
        }
        let residual = next.max_abs_diff(&x)?;
        growth = match residual_trace.last() {
            Some(&prev) if residual > prev => growth + 1,
            _ => 0,
        };
        objective_trace.push(objective);
        residual_trace.push(residual);
        x = next;
        if residual <= tol {
            return Ok(SolveResult {
                estimate: x,
                iterations: k,
                residual,
                objective_trace,
                residual_trace,
            });
        }
        if growth >= DIVERGENCE_WINDOW {
            return Err(Error::Diverged {
                iteration: k,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        what: "fixed-point iteration",
        iterations: max_iter,
        residual: residual_trace.last().copied().unwrap_or(f64::NAN),
    })
}

/// `x_{k+1} = b + M f(x_k, α)` with `b = (HᵀH + λI)⁻¹Hᵀy` and
/// `M = λ(HᵀH + λI)⁻¹`, each solve done by conjugate gradients.
pub fn red_fixed_point(
    spec: &InverseProblemSpec,
    x0: &Signal,
    max_iter: usize,
    tol: f64,
) -> Result<SolveResult> {
    if x0.len() != spec.operator.input_shape().len() {
        return Err(Error::shape(spec.operator.input_shape(), x0.shape()));
    }
    let b = spec.solve_regularized_normal(&spec.back_projection()?)?;
    iterate(x0, max_iter, tol, |x| {
        let fx = spec.denoiser.denoise(x, spec.alpha)?;
        let objective = objective_with(spec, x, &fx)?;
        let m_fx = spec.solve_regularized_normal(&fx.scale(spec.lambda))?;
        Ok((b.add(&m_fx)?, objective))
    })
}

/// `x_{k+1} = y/(1+λ) + λ/(1+λ)·f(x_k, α)`; the trace holds the objective
/// with `H = I`.
pub fn bridge_iterate(
    y: &Signal,
    f: &dyn Denoiser,
    alpha: f64,
    lambda: f64,
    x0: &Signal,
    max_iter: usize,
    tol: f64,
) -> Result<SolveResult> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    y.check_same_len(x0)?;
    let (a, c) = (1.0 / (1.0 + lambda), lambda / (1.0 + lambda));
    iterate(x0, max_iter, tol, |x| {
        let fx = f.denoise(x, alpha)?;
        let misfit = x.sub(y)?;
        let objective = 0.5 * misfit.dot(&misfit)? + lambda * 0.5 * x.dot(&x.sub(&fx)?)?;
        Ok((y.lincomb(a, &fx, c)?, objective))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GibbsEnergy {
    /// `½ xᵀ(x − f(x, α))`.
    pub residual_form: f64,
    /// `½ xᵀ J_f(x) x`.
    pub jacobian_form: f64,
    /// `‖J_f(x) x − f(x)‖ / max(‖f(x)‖, tiny)`; zero for locally homogeneous maps.
    pub homogeneity_gap: f64,
}

/// Both energy expressions; `J_f x` is exact when the denoiser supplies a
/// vector-Jacobian product, otherwise a central difference along `x`.
pub fn gibbs_energy_from_regularizer(x: &Signal, f: &dyn Denoiser, alpha: f64) -> Result<GibbsEnergy> {
    let fx = f.denoise(x, alpha)?;
    let jx = match f.vjp(x, alpha, x) {
        Some(r) => r?,
        None => {
            let h = super::FD_VJP_STEP;
            let plus = f.denoise(&x.scale(1.0 + h), alpha)?;
            let minus = f.denoise(&x.scale(1.0 - h), alpha)?;
            plus.lincomb(0.5 / h, &minus, -0.5 / h)?
        }
    };
    Ok(GibbsEnergy {
        residual_form: 0.5 * x.dot(&x.sub(&fx)?)?,
        jacobian_form: 0.5 * x.dot(&jx)?,
        homogeneity_gap: jx.sub(&fx)?.norm() / fx.norm().max(f64::MIN_POSITIVE),
    })
}
