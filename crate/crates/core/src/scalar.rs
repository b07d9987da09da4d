//! Closed-form scalar Bayesian denoisers.
//!
//! For additive Gaussian noise of variance `alpha`, the noisy marginal is the
//! prior blurred by `N(0, alpha)`. Both supported priors have closed-form
//! marginals, so the score `d/dx log P(x, alpha)` is exact and the MMSE
//! denoiser follows from Tweedie's formula `x + alpha·score`. The MAP
//! denoiser is the proximal map `argmin_u (u − x)²/2 − alpha·log p(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{log_ndtr, log_sum_exp, mills};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Mixture of scalar Gaussians. Weights must already sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != variances.len() {
            return Err(Error::invalid(
                "gmm",
                "weights, means and variances must be non-empty and equally long",
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("gmm.w", "weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "gmm.w",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("gmm.var", "variances must be positive"));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("gmm.mu", "means must be finite"));
        }
        Ok(GaussianMixture {
            weights,
            means,
            variances,
        })
    }

    pub fn single(mean: f64, variance: f64) -> Result<Self> {
        GaussianMixture::new(vec![1.0], vec![mean], vec![variance])
    }

    /// Two equally weighted components at `±mean`.
    pub fn symmetric_pair(mean: f64, variance: f64) -> Result<Self> {
        GaussianMixture::new(vec![0.5, 0.5], vec![-mean, mean], vec![variance, variance])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((&w, &m), &v)| (w, m, v))
    }

    /// Log-weights of each blurred component at `x`.
    fn log_terms(&self, x: f64, alpha: f64) -> Vec<f64> {
        self.components()
            .map(|(w, m, v)| {
                let s = v + alpha;
                w.ln() - 0.5 * (LN_2PI + s.ln()) - 0.5 * (x - m) * (x - m) / s
            })
            .collect()
    }

    /// Posterior component responsibilities at noisy value `x`.
    pub fn responsibilities(&self, x: f64, alpha: f64) -> Vec<f64> {
        let terms = self.log_terms(x, alpha);
        let lse = log_sum_exp(&terms);
        terms.iter().map(|t| (t - lse).exp()).collect()
    }

    /// Responsibility-weighted conjugate posterior means
    /// `Σ r_k (τ_k² x + alpha·μ_k) / (τ_k² + alpha)`.
    pub fn posterior_mean(&self, x: f64, alpha: f64) -> f64 {
        self.responsibilities(x, alpha)
            .iter()
            .zip(self.components())
            .map(|(r, (_, m, v))| r * (v * x + alpha * m) / (v + alpha))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.components().map(|(w, m, _)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.components()
            .map(|(w, m, v)| w * (v + (m - mu) * (m - mu)))
            .sum()
    }
}

/// Prior on clean scalar values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRepr", into = "PriorRepr")]
pub enum ScalarPrior {
    /// Density `exp(−|u|/scale) / (2·scale)`.
    Laplacian { scale: f64 },
    GaussianMixture(GaussianMixture),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum PriorRepr {
    Laplacian {
        scale: f64,
    },
    Gmm {
        w: Vec<f64>,
        mu: Vec<f64>,
        var: Vec<f64>,
    },
}

impl TryFrom<PriorRepr> for ScalarPrior {
    type Error = Error;

    fn try_from(r: PriorRepr) -> Result<Self> {
        match r {
            PriorRepr::Laplacian { scale } => ScalarPrior::laplacian(scale),
            PriorRepr::Gmm { w, mu, var } => {
                Ok(ScalarPrior::GaussianMixture(GaussianMixture::new(w, mu, var)?))
            }
        }
    }
}

impl From<ScalarPrior> for PriorRepr {
    fn from(p: ScalarPrior) -> Self {
        match p {
            ScalarPrior::Laplacian { scale } => PriorRepr::Laplacian { scale },
            ScalarPrior::GaussianMixture(g) => PriorRepr::Gmm {
                w: g.weights,
                mu: g.means,
                var: g.variances,
            },
        }
    }
}

impl ScalarPrior {
    pub fn laplacian(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", "must be positive"));
        }
        Ok(ScalarPrior::Laplacian { scale })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Ok(ScalarPrior::GaussianMixture(GaussianMixture::single(
            mean, variance,
        )?))
    }

    /// `ln p(u)` of the clean prior.
    pub fn log_density(&self, u: f64) -> f64 {
        match self {
            ScalarPrior::Laplacian { scale } => -u.abs() / scale - (2.0 * scale).ln(),
            ScalarPrior::GaussianMixture(g) => log_sum_exp(&g.log_terms(u, 0.0)),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ScalarPrior::Laplacian { scale } => 2.0 * scale * scale,
            ScalarPrior::GaussianMixture(g) => g.variance(),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    Ok(())
}

/// Soft thresholding `sign(x)·max(|x| − alpha, 0)`: the MAP denoiser for an
/// L1 penalty.
pub fn map_l1(x: f64, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha", "must be nonnegative"));
    }
    Ok(soft_threshold(x, alpha))
}

pub(crate) fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Huber function, the Moreau envelope of `|·|` scaled by `alpha`. Its
/// derivative is the residual `x − map_l1(x, alpha)`.
pub fn huber_envelope(x: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let a = x.abs();
    Ok(if a <= alpha {
        0.5 * x * x
    } else {
        alpha * a - 0.5 * alpha * alpha
    })
}

/// Log-space pieces of the Laplacian marginal:
/// `P(x) ∝ e^{alpha/2b²} [e^{−x/b} Φ((x − alpha/b)/s) + e^{x/b} Φ(−(x + alpha/b)/s)]`.
struct LaplaceTerms {
    a: f64,
    b: f64,
    za: f64,
    zb: f64,
}

fn laplace_terms(x: f64, alpha: f64, scale: f64) -> LaplaceTerms {
    let s = alpha.sqrt();
    let shift = alpha / scale;
    let za = (x - shift) / s;
    let zb = -(x + shift) / s;
    LaplaceTerms {
        a: -x / scale + log_ndtr(za),
        b: x / scale + log_ndtr(zb),
        za,
        zb,
    }
}

/// `ln P(x, alpha)`, the log-density of `prior ⊛ N(0, alpha)` at `x`.
pub fn marginal_log_density(x: f64, alpha: f64, prior: &ScalarPrior) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(match prior {
        ScalarPrior::Laplacian { scale } => {
            let t = laplace_terms(x, alpha, *scale);
            -(2.0 * scale).ln() + alpha / (2.0 * scale * scale) + log_sum_exp(&[t.a, t.b])
        }
        ScalarPrior::GaussianMixture(g) => log_sum_exp(&g.log_terms(x, alpha)),
    })
}

/// Score `d/dx ln P(x, alpha)`, in closed form.
pub fn score_scalar(x: f64, alpha: f64, prior: &ScalarPrior) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(match prior {
        // The Gaussian-density terms of the derivative cancel exactly, leaving
        // a logistic blend of the two exponential tails.
        ScalarPrior::Laplacian { scale } => {
            let t = laplace_terms(x, alpha, *scale);
            (0.5 * (t.b - t.a)).tanh() / scale
        }
        ScalarPrior::GaussianMixture(g) => g
            .responsibilities(x, alpha)
            .iter()
            .zip(g.components())
            .map(|(r, (_, m, v))| r * (m - x) / (v + alpha))
            .sum(),
    })
}

/// `d/dx score(x, alpha)`. The MMSE denoiser's slope is
/// `1 + alpha·score_derivative`, and `alpha` times that slope is the
/// posterior variance.
pub fn score_derivative(x: f64, alpha: f64, prior: &ScalarPrior) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(match prior {
        ScalarPrior::Laplacian { scale } => {
            let s = alpha.sqrt();
            let t = laplace_terms(x, alpha, *scale);
            let da = -1.0 / scale + mills(t.za) / s;
            let db = 1.0 / scale - mills(t.zb) / s;
            let th = (0.5 * (t.b - t.a)).tanh();
            0.5 * (1.0 - th * th) * (db - da) / scale
        }
        ScalarPrior::GaussianMixture(g) => {
            let r = g.responsibilities(x, alpha);
            let mut mean_g = 0.0;
            let mut mean_g2 = 0.0;
            let mut mean_inv = 0.0;
            for (rk, (_, m, v)) in r.iter().zip(g.components()) {
                let s = v + alpha;
                let gk = (m - x) / s;
                mean_g += rk * gk;
                mean_g2 += rk * gk * gk;
                mean_inv += rk / s;
            }
            mean_g2 - mean_g * mean_g - mean_inv
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarDenoiseResult {
    pub estimate: f64,
    pub score: f64,
    pub marginal_log_density: f64,
}

/// Posterior mean `E[u | x]` via Tweedie's formula.
pub fn mmse_denoise(x: f64, alpha: f64, prior: &ScalarPrior) -> Result<ScalarDenoiseResult> {
    let score = score_scalar(x, alpha, prior)?;
    Ok(ScalarDenoiseResult {
        estimate: x + alpha * score,
        score,
        marginal_log_density: marginal_log_density(x, alpha, prior)?,
    })
}

const MAP_GRID: usize = 2048;
const MAP_TOL: f64 = 1e-10;

/// Posterior mode `argmin_u (u − x)²/2 − alpha·ln p(u)`.
///
/// Laplacian priors use the closed-form soft threshold at `alpha/scale`.
/// Mixtures are minimized over `[min(x, μ_min), max(x, μ_max)]`, outside of
/// which the objective is monotone: a grid scan picks the best cell and a
/// golden-section search refines it.
pub fn map_denoise(x: f64, alpha: f64, prior: &ScalarPrior) -> Result<f64> {
    check_alpha(alpha)?;
    match prior {
        ScalarPrior::Laplacian { scale } => Ok(soft_threshold(x, alpha / scale)),
        ScalarPrior::GaussianMixture(g) => {
            if g.weights.len() == 1 {
                let (m, v) = (g.means[0], g.variances[0]);
                return Ok((v * x + alpha * m) / (v + alpha));
            }
            let objective = |u: f64| 0.5 * (u - x) * (u - x) - alpha * prior.log_density(u);
            let lo = g.means.iter().cloned().fold(x, f64::min);
            let hi = g.means.iter().cloned().fold(x, f64::max);
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::Bracketing(format!("bracket [{lo}, {hi}]")));
            }
            if hi - lo <= MAP_TOL {
                return Ok(0.5 * (lo + hi));
            }
            let step = (hi - lo) / MAP_GRID as f64;
            let mut best = (lo, objective(lo));
            let mut best_i = 0;
            for i in 1..=MAP_GRID {
                let u = lo + step * i as f64;
                let v = objective(u);
                if !v.is_finite() {
                    return Err(Error::Bracketing(format!("objective not finite at {u}")));
                }
                if v < best.1 {
                    best = (u, v);
                    best_i = i;
                }
            }
            let a = lo + step * best_i.saturating_sub(1) as f64;
            let b = lo + step * (best_i + 1).min(MAP_GRID) as f64;
            Ok(golden_section(objective, a, b, MAP_TOL))
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
