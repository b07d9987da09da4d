use serde::{Deserialize, Serialize};

use super::{build_kernel_matrix, KernelKind, KernelMatrix, PatchConfig, SquareMatrix};
use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stochasticity {
    Row,
    Doubly,
}

/// A pseudo-linear weight matrix together with its verified structure.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    pub matrix: SquareMatrix,
    pub stochasticity: Stochasticity,
    pub symmetric: bool,
}

impl WeightMatrix {
    fn new(matrix: SquareMatrix, stochasticity: Stochasticity) -> Self {
        let symmetric = matrix.max_asymmetry() == 0.0;
        WeightMatrix {
            matrix,
            stochasticity,
            symmetric,
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn max_row_imbalance(&self) -> f64 {
        imbalance(&self.matrix.row_sums())
    }

    pub fn max_col_imbalance(&self) -> f64 {
        imbalance(&self.matrix.col_sums())
    }

    /// `i,j,value` lines, one per stored entry.
    pub fn to_csv_triplets(&self) -> String {
        let mut s = String::from("i,j,value\n");
        for (i, j, v) in self.matrix.triplets() {
            s.push_str(&format!("{i},{j},{v:.16e}\n"));
        }
        s
    }
}

fn imbalance(sums: &[f64]) -> f64 {
    sums.iter().fold(0.0_f64, |m, s| m.max((s - 1.0).abs()))
}

/// `W = D⁻¹K` with `d_i = Σ_j K_ij`.
pub fn normalize_rows(k: &KernelMatrix) -> Result<(WeightMatrix, Vec<f64>)> {
    let d = k.matrix.row_sums();
    if let Some(i) = d.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::invalid("K", format!("row {i} sums to zero")));
    }
    let w = k.matrix.map_entries(|i, _, v| v / d[i]);
    Ok((WeightMatrix::new(w, Stochasticity::Row), d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkhornOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SinkhornOutcome {
    pub weights: WeightMatrix,
    pub iterations: usize,
    pub imbalance: f64,
}

/// Symmetric Sinkhorn balancing: finds `d > 0` with `diag(d)·K·diag(d)`
/// doubly stochastic.
///
/// Uses the damped symmetric iterate `d ← sqrt(d / (K d))`, whose fixed point
/// satisfies `d_i (K d)_i = 1`. Entries are formed as `K_ij·(d_i d_j)` so the
/// result is exactly symmetric whenever `K` is.
pub fn sinkhorn_symmetrize(k: &KernelMatrix, opts: SinkhornOptions) -> Result<SinkhornOutcome> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if k.matrix.max_asymmetry() != 0.0 {
        return Err(Error::invalid("K", "Sinkhorn symmetrization needs a symmetric K"));
    }
    if !(k.matrix.min_entry() >= 0.0) {
        return Err(Error::invalid("K", "entries must be nonnegative"));
    }
    let n = k.n();
    let mut d = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let kd = k.matrix.matvec(&d)?;
        residual = d
            .iter()
            .zip(&kd)
            .fold(0.0_f64, |m, (a, b)| m.max((a * b - 1.0).abs()));
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            let w = k.matrix.map_entries(|i, j, v| v * (d[i] * d[j]));
            let weights = WeightMatrix::new(w, Stochasticity::Doubly);
            let imbalance = weights.max_row_imbalance().max(weights.max_col_imbalance());
            return Ok(SinkhornOutcome {
                weights,
                iterations: it,
                imbalance,
            });
        }
        if it == opts.max_iter {
            break;
        }
        for (di, s) in d.iter_mut().zip(&kd) {
            *di = (*di / s).sqrt();
        }
    }
    Err(Error::NotConverged {
        what: "Sinkhorn balancing",
        iterations: opts.max_iter,
        residual,
    })
}

/// First-order symmetrization `W = I + β(K − D)` with `β⁻¹ = mean(d)`.
/// Rows of `K − D` sum to zero, so rows of `W` sum to one.
pub fn taylor_symmetrize(k: &KernelMatrix, d: &[f64]) -> Result<WeightMatrix> {
    if d.len() != k.n() {
        return Err(Error::shape(k.n(), d.len()));
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::invalid("d", "mean row sum must be positive"));
    }
    let beta = 1.0 / mean;
    let w = k.matrix.map_entries(|i, j, v| {
        if i == j {
            1.0 + beta * (v - d[i])
        } else {
            beta * v
        }
    });
    Ok(WeightMatrix::new(w, Stochasticity::Row))
}

pub fn apply_pseudo_linear(w: &WeightMatrix, x: &Signal) -> Result<Signal> {
    Ok(x.like(w.matrix.matvec(x.as_slice())?))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetrization {
    #[default]
    None,
    Sinkhorn,
    Taylor,
}

/// Weight matrix `W(x, α)` for the requested symmetrization.
pub fn nlm_weights(
    x: &Signal,
    alpha: f64,
    cfg: &PatchConfig,
    kind: KernelKind,
    symmetrization: Symmetrization,
    sinkhorn: SinkhornOptions,
) -> Result<WeightMatrix> {
    let k = build_kernel_matrix(x, kind, alpha, cfg)?;
    Ok(match symmetrization {
        Symmetrization::None => normalize_rows(&k)?.0,
        Symmetrization::Sinkhorn => sinkhorn_symmetrize(&k, sinkhorn)?.weights,
        Symmetrization::Taylor => {
            let d = k.matrix.row_sums();
            taylor_symmetrize(&k, &d)?
        }
    })
}

/// Non-local means: kernel matrix, optional symmetrization, normalization and
/// application. `α = 0` is the identity (the delta limit of the Gaussian and
/// exponential kernels); the Cauchy kernel has no such limit and rejects it.
pub fn nlm_denoise(
    x: &Signal,
    alpha: f64,
    cfg: &PatchConfig,
    kind: KernelKind,
    symmetrization: Symmetrization,
) -> Result<Signal> {
    if alpha == 0.0 && kind != KernelKind::Cauchy {
        return Ok(x.clone());
    }
    let w = nlm_weights(x, alpha, cfg, kind, symmetrization, SinkhornOptions::default())?;
    apply_pseudo_linear(&w, x)
}
