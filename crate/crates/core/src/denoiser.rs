//! A uniform call contract for denoiser families `f(x, α)`.
//!
//! Every denoiser here maps `(Signal, α)` to a `Signal` of the same shape and
//! treats `α = 0` as the identity. Denoisers whose Jacobian is available in
//! closed form (linear maps and separable scalar maps) also expose exact
//! vector-Jacobian products.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    apply_pseudo_linear, nlm_denoise, nlm_weights, KernelKind, PatchConfig, SearchWindow,
    SinkhornOptions, Symmetrization, WeightMatrix,
};
use crate::scalar::{self, ScalarPrior};
use crate::signal::Signal;

pub trait Denoiser: Send + Sync {
    fn name(&self) -> String;

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal>;

    /// Required element count, or `None` for any size.
    fn declared_dim(&self) -> Option<usize> {
        None
    }

    /// Exact `J_fᵀ v` at `(x, α)` when the Jacobian is known in closed form.
    fn vjp(&self, _x: &Signal, _alpha: f64, _v: &Signal) -> Option<Result<Signal>> {
        None
    }
}

pub type DenoiserHandle = Arc<dyn Denoiser>;

impl fmt::Debug for dyn Denoiser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Denoiser({})", self.name())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "must be finite and nonnegative"));
    }
    Ok(())
}

fn check_dim(d: &dyn Denoiser, x: &Signal) -> Result<()> {
    match d.declared_dim() {
        Some(n) if n != x.len() => Err(Error::shape(n, x.len())),
        _ => Ok(()),
    }
}

pub struct Identity;

impl Denoiser for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        check_alpha(alpha)?;
        Ok(x.clone())
    }

    fn vjp(&self, _x: &Signal, _alpha: f64, v: &Signal) -> Option<Result<Signal>> {
        Some(Ok(v.clone()))
    }
}

/// Element-wise scalar denoisers.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarDenoiser {
    /// Soft thresholding at `α`.
    SoftThreshold,
    Mmse(ScalarPrior),
    Map(ScalarPrior),
}

impl ScalarDenoiser {
    fn apply(&self, v: f64, alpha: f64) -> Result<f64> {
        if alpha == 0.0 {
            return Ok(v);
        }
        match self {
            ScalarDenoiser::SoftThreshold => scalar::map_l1(v, alpha),
            ScalarDenoiser::Mmse(p) => Ok(scalar::mmse_denoise(v, alpha, p)?.estimate),
            ScalarDenoiser::Map(p) => scalar::map_denoise(v, alpha, p),
        }
    }

    /// `df/dx` at `v`, when known in closed form.
    fn slope(&self, v: f64, alpha: f64) -> Option<Result<f64>> {
        if alpha == 0.0 {
            return Some(Ok(1.0));
        }
        match self {
            ScalarDenoiser::SoftThreshold => Some(Ok(if v.abs() > alpha { 1.0 } else { 0.0 })),
            ScalarDenoiser::Mmse(p) => {
                Some(scalar::score_derivative(v, alpha, p).map(|d| 1.0 + alpha * d))
            }
            ScalarDenoiser::Map(ScalarPrior::Laplacian { scale }) => {
                Some(Ok(if v.abs() > alpha / scale { 1.0 } else { 0.0 }))
            }
            ScalarDenoiser::Map(ScalarPrior::GaussianMixture(g)) if g.weights().len() == 1 => {
                let t = g.variances()[0];
                Some(Ok(t / (t + alpha)))
            }
            ScalarDenoiser::Map(_) => None,
        }
    }
}

impl Denoiser for ScalarDenoiser {
    fn name(&self) -> String {
        match self {
            ScalarDenoiser::SoftThreshold => "map_l1".into(),
            ScalarDenoiser::Mmse(_) => "mmse".into(),
            ScalarDenoiser::Map(_) => "map".into(),
        }
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        check_alpha(alpha)?;
        let data = x
            .as_slice()
            .iter()
            .map(|&v| self.apply(v, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(x.like(data))
    }

    fn vjp(&self, x: &Signal, alpha: f64, v: &Signal) -> Option<Result<Signal>> {
        if x.len() != v.len() {
            return Some(Err(Error::shape(x.shape(), v.shape())));
        }
        let mut out = Vec::with_capacity(x.len());
        for (&xi, &vi) in x.as_slice().iter().zip(v.as_slice()) {
            match self.slope(xi, alpha)? {
                Ok(s) => out.push(s * vi),
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(x.like(out)))
    }
}

/// A fixed linear map `x ↦ W x`, independent of `α`.
pub struct LinearDenoiser {
    matrix: DMatrix<f64>,
    name: String,
}

impl LinearDenoiser {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::shape(matrix.shape(), "square"));
        }
        Ok(LinearDenoiser {
            matrix,
            name: "linear".into(),
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn from_weights(w: &WeightMatrix) -> Self {
        LinearDenoiser {
            matrix: w.matrix.to_nalgebra(),
            name: "linear".into(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

fn mat_apply(m: &DMatrix<f64>, x: &Signal, transpose: bool) -> Signal {
    let v = DVector::from_column_slice(x.as_slice());
    let out = if transpose { m.tr_mul(&v) } else { m * v };
    x.like(out.as_slice().to_vec())
}

impl Denoiser for LinearDenoiser {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn declared_dim(&self) -> Option<usize> {
        Some(self.matrix.nrows())
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        check_alpha(alpha)?;
        check_dim(self, x)?;
        Ok(mat_apply(&self.matrix, x, false))
    }

    fn vjp(&self, x: &Signal, _alpha: f64, v: &Signal) -> Option<Result<Signal>> {
        if let Err(e) = check_dim(self, x).and_then(|_| check_dim(self, v)) {
            return Some(Err(e));
        }
        Some(Ok(mat_apply(&self.matrix, v, true)))
    }
}

/// Kernel denoiser settings shared by the adaptive and frozen variants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSettings {
    pub kind: KernelKind,
    pub patch: PatchConfig,
    pub symmetrization: Symmetrization,
    pub sinkhorn: SinkhornOptions,
}

impl KernelSettings {
    pub fn new(kind: KernelKind, patch: PatchConfig, symmetrization: Symmetrization) -> Self {
        KernelSettings {
            kind,
            patch,
            symmetrization,
            sinkhorn: SinkhornOptions::default(),
        }
    }
}

/// Adaptive non-local means: `W` is recomputed from the input itself.
pub struct NlmDenoiser {
    pub settings: KernelSettings,
}

impl Denoiser for NlmDenoiser {
    fn name(&self) -> String {
        format!("nlm[{:?},{:?}]", self.settings.kind, self.settings.symmetrization).to_lowercase()
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        check_alpha(alpha)?;
        let s = &self.settings;
        if alpha == 0.0 {
            return nlm_denoise(x, alpha, &s.patch, s.kind, s.symmetrization);
        }
        let w = nlm_weights(x, alpha, &s.patch, s.kind, s.symmetrization, s.sinkhorn)?;
        apply_pseudo_linear(&w, x)
    }
}

/// Kernel weights frozen at a guide signal: `x ↦ W(guide, α)·x`, linear in
/// `x` for each `α`.
pub struct FrozenKernelDenoiser {
    guide: Signal,
    settings: KernelSettings,
}

impl FrozenKernelDenoiser {
    pub fn new(guide: Signal, settings: KernelSettings) -> Self {
        FrozenKernelDenoiser { guide, settings }
    }

    pub fn weights(&self, alpha: f64) -> Result<WeightMatrix> {
        let s = &self.settings;
        nlm_weights(&self.guide, alpha, &s.patch, s.kind, s.symmetrization, s.sinkhorn)
    }
}

impl Denoiser for FrozenKernelDenoiser {
    fn name(&self) -> String {
        format!(
            "frozen_nlm[{:?},{:?}]",
            self.settings.kind, self.settings.symmetrization
        )
        .to_lowercase()
    }

    fn declared_dim(&self) -> Option<usize> {
        Some(self.guide.len())
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        check_alpha(alpha)?;
        check_dim(self, x)?;
        if alpha == 0.0 {
            return Ok(x.clone());
        }
        apply_pseudo_linear(&self.weights(alpha)?, x)
    }

    fn vjp(&self, x: &Signal, alpha: f64, v: &Signal) -> Option<Result<Signal>> {
        if alpha == 0.0 {
            return Some(Ok(v.clone()));
        }
        let run = || -> Result<Signal> {
            check_dim(self, x)?;
            let w = self.weights(alpha)?;
            let mut out = vec![0.0; v.len()];
            for (i, j, wij) in w.matrix.triplets() {
                out[j] += wij * v.as_slice()[i];
            }
            Ok(v.like(out))
        };
        Some(run())
    }
}

/// `Σ a_k f_k(x, c_k·α)` with `Σ a_k = 1`.
pub struct AffineCombination {
    terms: Vec<(f64, f64, DenoiserHandle)>,
}

impl AffineCombination {
    /// Terms are `(coefficient, alpha scale, denoiser)`. Coefficient signs are
    /// unrestricted.
    pub fn new(terms: Vec<(f64, f64, DenoiserHandle)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("coefficients", "need at least one denoiser"));
        }
        let total: f64 = terms.iter().map(|t| t.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "coefficients",
                format!("sum to {total}, expected 1"),
            ));
        }
        if terms.iter().any(|t| !(t.1 >= 0.0 && t.1.is_finite())) {
            return Err(Error::invalid("alpha scale", "must be nonnegative"));
        }
        Ok(AffineCombination { terms })
    }
}

impl Denoiser for AffineCombination {
    fn name(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, _, f)| format!("{a}*{}", f.name()))
            .collect();
        format!("affine({})", parts.join("+"))
    }

    fn declared_dim(&self) -> Option<usize> {
        self.terms.iter().find_map(|t| t.2.declared_dim())
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        check_alpha(alpha)?;
        let mut acc = vec![0.0; x.len()];
        for (a, c, f) in &self.terms {
            let y = f.denoise(x, c * alpha)?;
            x.check_same_len(&y)?;
            for (s, v) in acc.iter_mut().zip(y.as_slice()) {
                *s += a * v;
            }
        }
        Ok(x.like(acc))
    }

    fn vjp(&self, x: &Signal, alpha: f64, v: &Signal) -> Option<Result<Signal>> {
        let mut acc = vec![0.0; v.len()];
        for (a, c, f) in &self.terms {
            match f.vjp(x, c * alpha, v)? {
                Ok(y) => {
                    for (s, yv) in acc.iter_mut().zip(y.as_slice()) {
                        *s += a * yv;
                    }
                }
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(v.like(acc)))
    }
}

/// Wraps a closure as a denoiser.
pub struct FnDenoiser<F> {
    name: String,
    f: F,
}

impl<F> FnDenoiser<F>
where
    F: Fn(&Signal, f64) -> Result<Signal> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnDenoiser {
            name: name.into(),
            f,
        }
    }
}

impl<F> Denoiser for FnDenoiser<F>
where
    F: Fn(&Signal, f64) -> Result<Signal> + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn denoise(&self, x: &Signal, alpha: f64) -> Result<Signal> {
        (self.f)(x, alpha)
    }
}

fn default_sinkhorn() -> SinkhornOptions {
    SinkhornOptions::default()
}

/// Serializable denoiser description, as used in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DenoiserSpec {
    Identity {},
    MapL1 {},
    Mmse {
        prior: ScalarPrior,
    },
    Map {
        prior: ScalarPrior,
    },
    Nlm {
        kernel: KernelKind,
        patch_radius: usize,
        search_radius: SearchWindow,
        #[serde(default)]
        symmetrization: Symmetrization,
        #[serde(default = "default_sinkhorn")]
        sinkhorn: SinkhornOptions,
    },
}

impl DenoiserSpec {
    pub fn build(&self) -> Result<DenoiserHandle> {
        Ok(match self {
            DenoiserSpec::Identity {} => Arc::new(Identity),
            DenoiserSpec::MapL1 {} => Arc::new(ScalarDenoiser::SoftThreshold),
            DenoiserSpec::Mmse { prior } => Arc::new(ScalarDenoiser::Mmse(prior.clone())),
            DenoiserSpec::Map { prior } => Arc::new(ScalarDenoiser::Map(prior.clone())),
            DenoiserSpec::Nlm {
                kernel,
                patch_radius,
                search_radius,
                symmetrization,
                sinkhorn,
            } => Arc::new(NlmDenoiser {
                settings: KernelSettings {
                    kind: *kernel,
                    patch: PatchConfig::new(*patch_radius, *search_radius)?,
                    symmetrization: *symmetrization,
                    sinkhorn: *sinkhorn,
                },
            }),
        })
    }
}
