//! Linear inverse problems `y = Hx + e` regularized by a denoiser.

mod cg;
mod dps;
mod operator;
mod red;

pub use cg::{conjugate_gradient, CG_TOL};
pub use dps::{dps_sample, dps_step, guidance_gradient, DpsOptions, StepWeight, FD_VJP_STEP};
pub use operator::{ForwardOperator, OperatorSpec};
pub use red::{
    bridge_iterate, gibbs_energy_from_regularizer, red_fixed_point, red_objective,
    red_objective_gradient, red_regularizer, GibbsEnergy, SolveResult, DIVERGENCE_WINDOW,
};

use crate::denoiser::DenoiserHandle;
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Clone, Debug)]
pub struct InverseProblemSpec {
    pub y: Signal,
    pub operator: ForwardOperator,
    pub lambda: f64,
    pub denoiser: DenoiserHandle,
    pub alpha: f64,
    pub noise_sigma: f64,
}

impl InverseProblemSpec {
    pub fn new(
        y: Signal,
        operator: ForwardOperator,
        lambda: f64,
        denoiser: DenoiserHandle,
        alpha: f64,
        noise_sigma: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be nonnegative"));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma", "must be nonnegative"));
        }
        if y.len() != operator.output_shape().len() {
            return Err(Error::shape(operator.output_shape(), y.shape()));
        }
        if let Some(n) = denoiser.declared_dim() {
            if n != operator.input_shape().len() {
                return Err(Error::shape(operator.input_shape(), n));
            }
        }
        Ok(InverseProblemSpec {
            y,
            operator,
            lambda,
            denoiser,
            alpha,
            noise_sigma,
        })
    }

    /// `Hᵀy` reshaped to the unknown's shape.
    pub fn back_projection(&self) -> Result<Signal> {
        self.operator.adjoint(&self.y)
    }

    /// Solves `(HᵀH + λI) x = r` by conjugate gradients.
    pub fn solve_regularized_normal(&self, r: &Signal) -> Result<Signal> {
        let lambda = self.lambda;
        let h = &self.operator;
        let max_iter = 10 * r.len() + 100;
        conjugate_gradient(|v| h.normal(v)?.lincomb(1.0, v, lambda), r, None, CG_TOL, max_iter)
    }
}
