//! Score/Tweedie conversions, noise schedules and the deterministic
//! probability-flow sampler.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::noise::{GaussianStream, RngSeed};
use crate::signal::{Shape, Signal};

/// `α_T` below this multiple of the target variance triggers a warning.
pub const ALPHA_T_WARN_RATIO: f64 = 25.0;

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(name, "must be positive and finite"));
    }
    Ok(())
}

/// `(f(x, α) − x) / α`.
pub fn score_from_denoiser(f: &dyn Denoiser, x: &Signal, alpha: f64) -> Result<Signal> {
    positive("alpha", alpha)?;
    let fx = f.denoise(x, alpha)?;
    fx.lincomb(1.0 / alpha, x, -1.0 / alpha)
}

/// `x + α·s(x, α)`.
pub fn tweedie_denoise_from_score<S>(score: S, x: &Signal, alpha: f64) -> Result<Signal>
where
    S: Fn(&Signal, f64) -> Result<Signal>,
{
    positive("alpha", alpha)?;
    let s = score(x, alpha)?;
    x.lincomb(1.0, &s, alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleForm {
    Geometric,
    LinearSigma,
    Explicit,
}

/// Strictly decreasing noise levels `α_T > … > α_0 > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseSchedule {
    alphas: Vec<f64>,
    form: ScheduleForm,
}

impl NoiseSchedule {
    pub fn explicit(alphas: Vec<f64>) -> Result<Self> {
        Self::checked(alphas, ScheduleForm::Explicit)
    }

    fn checked(alphas: Vec<f64>, form: ScheduleForm) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("schedule", "empty"));
        }
        for &a in &alphas {
            positive("schedule", a)?;
        }
        if alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("schedule", "must be strictly decreasing"));
        }
        Ok(NoiseSchedule { alphas, form })
    }

    fn endpoints(alpha_max: f64, alpha_min: f64, steps: usize) -> Result<()> {
        positive("alpha_max", alpha_max)?;
        positive("alpha_min", alpha_min)?;
        if steps > 0 && alpha_min >= alpha_max {
            return Err(Error::invalid("alpha_min", "must be below alpha_max"));
        }
        Ok(())
    }

    /// Geometric in `α` from `alpha_max` down to `alpha_min` in `steps` steps.
    pub fn geometric(alpha_max: f64, alpha_min: f64, steps: usize) -> Result<Self> {
        Self::endpoints(alpha_max, alpha_min, steps)?;
        let ratio = (alpha_min / alpha_max).ln();
        let alphas = (0..=steps)
            .map(|k| match k {
                0 => alpha_max,
                k if k == steps => alpha_min,
                k => alpha_max * (ratio * k as f64 / steps as f64).exp(),
            })
            .collect();
        Self::checked(alphas, ScheduleForm::Geometric)
    }

    /// Linear in `σ = √α`.
    pub fn linear_sigma(alpha_max: f64, alpha_min: f64, steps: usize) -> Result<Self> {
        Self::endpoints(alpha_max, alpha_min, steps)?;
        let (hi, lo) = (alpha_max.sqrt(), alpha_min.sqrt());
        let alphas = (0..=steps)
            .map(|k| match k {
                0 => alpha_max,
                k if k == steps => alpha_min,
                k => {
                    let s = hi + (lo - hi) * k as f64 / steps as f64;
                    s * s
                }
            })
            .collect();
        Self::checked(alphas, ScheduleForm::LinearSigma)
    }

    /// Default: 200 geometric steps spanning a ratio of 10⁶ below `alpha_max`.
    pub fn default_for(alpha_max: f64) -> Result<Self> {
        Self::geometric(alpha_max, alpha_max * 1e-6, 200)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn form(&self) -> ScheduleForm {
        self.form
    }

    pub fn steps(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alpha_max(&self) -> f64 {
        self.alphas[0]
    }

    pub fn alpha_min(&self) -> f64 {
        self.alphas[self.alphas.len() - 1]
    }
}

/// Config form of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Geometric {
        alpha_max: f64,
        alpha_min: f64,
        steps: usize,
    },
    LinearSigma {
        alpha_max: f64,
        alpha_min: f64,
        steps: usize,
    },
    Explicit {
        alphas: Vec<f64>,
    },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<NoiseSchedule> {
        match self {
            ScheduleSpec::Geometric {
                alpha_max,
                alpha_min,
                steps,
            } => NoiseSchedule::geometric(*alpha_max, *alpha_min, *steps),
            ScheduleSpec::LinearSigma {
                alpha_max,
                alpha_min,
                steps,
            } => NoiseSchedule::linear_sigma(*alpha_max, *alpha_min, *steps),
            ScheduleSpec::Explicit { alphas } => NoiseSchedule::explicit(alphas.clone()),
        }
    }
}

fn check_step(alpha_t: f64, alpha_prev: f64) -> Result<()> {
    positive("alpha_t", alpha_t)?;
    positive("alpha_prev", alpha_prev)?;
    if alpha_prev > alpha_t {
        return Err(Error::invalid("alpha_prev", "must not exceed alpha_t"));
    }
    Ok(())
}

/// One step given the conditional mean `e = E[x₀|x_t]`:
/// `((α_t + α_p)/2α_t)·x + ((α_t − α_p)/2α_t)·e`.
pub fn flow_update(x: &Signal, e: &Signal, alpha_t: f64, alpha_prev: f64) -> Result<Signal> {
    check_step(alpha_t, alpha_prev)?;
    let a = (alpha_t + alpha_prev) / (2.0 * alpha_t);
    let b = (alpha_t - alpha_prev) / (2.0 * alpha_t);
    x.lincomb(a, e, b)
}

pub fn flow_step(x: &Signal, alpha_t: f64, alpha_prev: f64, f: &dyn Denoiser) -> Result<Signal> {
    check_step(alpha_t, alpha_prev)?;
    if alpha_prev == alpha_t {
        return Ok(x.clone());
    }
    let e = f.denoise(x, alpha_t)?;
    flow_update(x, &e, alpha_t, alpha_prev)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub seed: u64,
    pub stream: u64,
    pub alphas: Vec<f64>,
    /// `x_T, …, x_0`.
    pub states: Vec<Signal>,
    /// Denoiser output at each step.
    pub denoised: Vec<Signal>,
}

/// Draws `x_T ~ N(0, α_T I)` from stream `stream` of `seed`.
pub fn initial_state(shape: Shape, alpha_t: f64, seed: RngSeed, stream: u64) -> Signal {
    let mut data = vec![0.0; shape.len()];
    GaussianStream::new(seed, stream).fill_normal(&mut data, alpha_t.sqrt());
    Signal::zeros(shape).like(data)
}

/// Integrates the flow from `x_T` down the schedule.
pub fn run_flow(
    f: &dyn Denoiser,
    schedule: &NoiseSchedule,
    x_t: Signal,
    mut trace: Option<&mut FlowTrace>,
) -> Result<Signal> {
    let mut x = x_t;
    if let Some(t) = trace.as_deref_mut() {
        t.states.push(x.clone());
    }
    for (step, w) in schedule.alphas().windows(2).enumerate() {
        let e = f.denoise(&x, w[0])?;
        x = flow_update(&x, &e, w[0], w[1])?;
        if !x.is_finite() {
            return Err(Error::NonFinite { step: step + 1 });
        }
        if let Some(t) = trace.as_deref_mut() {
            t.states.push(x.clone());
            t.denoised.push(e);
        }
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlowOptions {
    /// Known target variance, used only for the `α_T` warning.
    pub target_variance: Option<f64>,
    pub keep_trace: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowOutput {
    pub samples: Vec<Signal>,
    pub traces: Vec<FlowTrace>,
    pub warnings: Vec<String>,
}

pub fn alpha_t_warning(alpha_t: f64, target_variance: Option<f64>) -> Option<String> {
    let v = target_variance?;
    (alpha_t < ALPHA_T_WARN_RATIO * v).then(|| {
        format!(
            "alpha_T = {alpha_t} is below {ALPHA_T_WARN_RATIO}x the target variance {v}; \
             initial states may not be well mixed"
        )
    })
}

/// Sample `i` uses stream `i` of `seed`, so results do not depend on thread layout.
pub fn sample_probability_flow(
    f: &dyn Denoiser,
    schedule: &NoiseSchedule,
    n_samples: usize,
    shape: Shape,
    seed: RngSeed,
    opts: FlowOptions,
) -> Result<FlowOutput> {
    let warnings: Vec<String> = alpha_t_warning(schedule.alpha_max(), opts.target_variance)
        .into_iter()
        .collect();
    for w in &warnings {
        warn!("{w}");
    }
    let runs = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let x_t = initial_state(shape, schedule.alpha_max(), seed, i);
            let mut trace = opts.keep_trace.then(|| FlowTrace {
                seed: seed.0,
                stream: i,
                alphas: schedule.alphas().to_vec(),
                states: Vec::new(),
                denoised: Vec::new(),
            });
            let x = run_flow(f, schedule, x_t, trace.as_mut())?;
            Ok((x, trace))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = FlowOutput {
        samples: Vec::with_capacity(n_samples),
        traces: Vec::new(),
        warnings,
    };
    for (x, t) in runs {
        out.samples.push(x);
        out.traces.extend(t);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceRecursion {
    pub value: f64,
    pub relative_excess: f64,
}

/// `Var[x_prev | x₀] = α_p + (α_p − α_t)² / (4α_t)` for one flow step.
pub fn variance_recursion_check(alpha_t: f64, alpha_prev: f64) -> Result<VarianceRecursion> {
    positive("alpha_t", alpha_t)?;
    positive("alpha_prev", alpha_prev)?;
    let d = alpha_prev - alpha_t;
    let value = alpha_prev + d * d / (4.0 * alpha_t);
    Ok(VarianceRecursion {
        value,
        relative_excess: (value - alpha_prev) / alpha_prev,
    })
}
