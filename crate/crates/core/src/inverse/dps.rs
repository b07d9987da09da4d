use serde::{Deserialize, Serialize};

use super::{ForwardOperator, InverseProblemSpec};
use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::flow::{flow_update, initial_state, NoiseSchedule};
use crate::noise::RngSeed;
use crate::signal::Signal;

/// Step for directional-difference Jacobian products.
pub const FD_VJP_STEP: f64 = 1e-4;

/// How the guidance weight `ρ_t` is chosen at each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepWeight {
    Constant { rho: f64 },
    /// One weight per step, from `α_T` downward.
    Explicit { rho: Vec<f64> },
    /// `ρ / (2‖H f(x_t) − y‖)`.
    ResidualNormalized { rho: f64 },
    /// `1 / (2(σ² + τ²α_t/(τ² + α_t)))`, the exact weight for a Gaussian prior
    /// of variance `τ²` observed through identity with noise variance `σ²`.
    GaussianCalibrated { noise_var: f64, prior_var: f64 },
}

impl Default for StepWeight {
    fn default() -> Self {
        StepWeight::ResidualNormalized { rho: 1.0 }
    }
}

impl StepWeight {
    fn validate(&self, steps: usize) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        let valid = match self {
            StepWeight::Constant { rho } | StepWeight::ResidualNormalized { rho } => ok(*rho),
            StepWeight::Explicit { rho } => {
                if rho.len() != steps {
                    return Err(Error::shape(steps, rho.len()));
                }
                rho.iter().all(|&v| ok(v))
            }
            StepWeight::GaussianCalibrated {
                noise_var,
                prior_var,
            } => ok(*noise_var) && *prior_var > 0.0 && prior_var.is_finite(),
        };
        if !valid {
            return Err(Error::invalid("rho", "weights must be finite and nonnegative"));
        }
        Ok(())
    }

    fn at(&self, step: usize, alpha_t: f64, residual_norm: f64) -> f64 {
        match self {
            StepWeight::Constant { rho } => *rho,
            StepWeight::Explicit { rho } => rho[step],
            StepWeight::ResidualNormalized { rho } => {
                if residual_norm > 0.0 {
                    rho / (2.0 * residual_norm)
                } else {
                    0.0
                }
            }
            StepWeight::GaussianCalibrated {
                noise_var,
                prior_var,
            } => 0.5 / (noise_var + prior_var * alpha_t / (prior_var + alpha_t)),
        }
    }

    fn needs_residual(&self) -> bool {
        matches!(self, StepWeight::ResidualNormalized { .. })
    }

    fn is_zero_at(&self, step: usize) -> bool {
        match self {
            StepWeight::Constant { rho } | StepWeight::ResidualNormalized { rho } => *rho == 0.0,
            StepWeight::Explicit { rho } => rho[step] == 0.0,
            StepWeight::GaussianCalibrated { .. } => false,
        }
    }
}

/// `J_fᵀ Hᵀ(H f − y)` at `x`, returned with `‖H f − y‖`. Without an exact
/// product the Jacobian is taken as symmetric and probed along the residual
/// direction.
pub fn guidance_gradient(
    f: &dyn Denoiser,
    x: &Signal,
    fx: &Signal,
    alpha: f64,
    h: &ForwardOperator,
    y: &Signal,
) -> Result<(Signal, f64)> {
    let r = h.apply(fx)?.sub(y)?;
    let rnorm = r.norm();
    let v = h.adjoint(&r)?;
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return Ok((v, rnorm));
    }
    let g = match f.vjp(x, alpha, &v) {
        Some(g) => g?,
        None => {
            let dir = v.scale(FD_VJP_STEP / vnorm);
            let plus = f.denoise(&x.add(&dir)?, alpha)?;
            let minus = f.denoise(&x.sub(&dir)?, alpha)?;
            plus.lincomb(0.5 * vnorm / FD_VJP_STEP, &minus, -0.5 * vnorm / FD_VJP_STEP)?
        }
    };
    Ok((g, rnorm))
}

/// One guided step. With a zero weight this is exactly the unguided flow step.
pub fn dps_step(
    spec: &InverseProblemSpec,
    x: &Signal,
    alpha_t: f64,
    alpha_prev: f64,
    weight: &StepWeight,
    step: usize,
) -> Result<Signal> {
    let f = spec.denoiser.as_ref();
    let e = f.denoise(x, alpha_t)?;
    let base = flow_update(x, &e, alpha_t, alpha_prev)?;
    if weight.is_zero_at(step) {
        return Ok(base);
    }
    let (g, rnorm) = guidance_gradient(f, x, &e, alpha_t, &spec.operator, &spec.y)?;
    let rho = weight.at(step, alpha_t, if weight.needs_residual() { rnorm } else { 0.0 });
    // ½(α_t − α_p)·ρ_t·∇‖H f − y‖², with ∇‖H f − y‖² = 2g.
    base.lincomb(1.0, &g, -(alpha_t - alpha_prev) * rho)
}

/// Posterior sample from stream `stream` of `seed`; the initial state matches
/// the one used by the unguided sampler for the same stream.
pub fn dps_sample(
    spec: &InverseProblemSpec,
    schedule: &NoiseSchedule,
    weight: &StepWeight,
    seed: RngSeed,
    stream: u64,
) -> Result<Signal> {
    weight.validate(schedule.steps())?;
    let mut x = initial_state(spec.operator.input_shape(), schedule.alpha_max(), seed, stream);
    for (k, w) in schedule.alphas().windows(2).enumerate() {
        x = dps_step(spec, &x, w[0], w[1], weight, k)?;
        if !x.is_finite() {
            return Err(Error::NonFinite { step: k + 1 });
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpsOptions {
    #[serde(default)]
    pub weight: StepWeight,
    pub samples: usize,
}
