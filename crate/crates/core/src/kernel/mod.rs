//! Pseudo-linear kernel denoisers `f(x, α) = W(x, α)·x`.
//!
//! Affinities between patches come from one of the isotropic positive-definite
//! kernels below; the kernel matrix `K` is symmetric by construction. Row
//! normalization `W = D⁻¹K` gives the usual non-local means weights, which are
//! row-stochastic but not symmetric. Two symmetrizations are provided:
//! Sinkhorn balancing (symmetric and doubly stochastic) and the first-order
//! Taylor form `I + β(K − D)` with `β⁻¹ = mean(d)`.

mod matrix;
mod symmetrize;

pub use matrix::{RowIter, SquareMatrix};
pub use symmetrize::{
    apply_pseudo_linear, nlm_denoise, nlm_weights, normalize_rows, sinkhorn_symmetrize,
    taylor_symmetrize, SinkhornOptions, SinkhornOutcome, Stochasticity, Symmetrization,
    WeightMatrix,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(−‖xᵢ − xⱼ‖² / α)`
    Gaussian,
    /// `exp(−‖xᵢ − xⱼ‖₁ / α)`
    Exponential,
    /// `1 / (1 + α‖xᵢ − xⱼ‖²)`; note that α multiplies here, so its spread
    /// shrinks as α grows.
    Cauchy,
}

impl KernelKind {
    /// The patch distance each kernel consumes.
    pub fn distance_norm(self) -> DistanceNorm {
        match self {
            KernelKind::Gaussian | KernelKind::Cauchy => DistanceNorm::SquaredL2,
            KernelKind::Exponential => DistanceNorm::L1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceNorm {
    SquaredL2,
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SearchRepr", into = "SearchRepr")]
pub enum SearchWindow {
    /// Neighbors within this Chebyshev radius (per axis); sparse storage.
    Radius(usize),
    /// Every pixel; dense storage.
    Full,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SearchRepr {
    Radius(usize),
    Keyword(String),
}

impl TryFrom<SearchRepr> for SearchWindow {
    type Error = Error;

    fn try_from(r: SearchRepr) -> Result<Self> {
        match r {
            SearchRepr::Radius(0) => Err(Error::invalid("search_radius", "must be at least 1")),
            SearchRepr::Radius(s) => Ok(SearchWindow::Radius(s)),
            SearchRepr::Keyword(k) if k == "full" => Ok(SearchWindow::Full),
            SearchRepr::Keyword(k) => Err(Error::invalid(
                "search_radius",
                format!("expected an integer or \"full\", got {k:?}"),
            )),
        }
    }
}

impl From<SearchWindow> for SearchRepr {
    fn from(w: SearchWindow) -> Self {
        match w {
            SearchWindow::Radius(s) => SearchRepr::Radius(s),
            SearchWindow::Full => SearchRepr::Keyword("full".into()),
        }
    }
}

/// Patch and search-window geometry. Patches are `(2r+1)`-wide windows
/// (squares for 2D signals) with edge replication at the borders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub patch_radius: usize,
    pub search_radius: SearchWindow,
}

impl PatchConfig {
    pub fn new(patch_radius: usize, search_radius: SearchWindow) -> Result<Self> {
        if search_radius == SearchWindow::Radius(0) {
            return Err(Error::invalid("search_radius", "must be at least 1"));
        }
        Ok(PatchConfig {
            patch_radius,
            search_radius,
        })
    }

    pub fn pixel(search_radius: SearchWindow) -> Self {
        PatchConfig {
            patch_radius: 0,
            search_radius,
        }
    }
}

/// Extracts the edge-replicated patch centred on flat index `i`.
fn extract_patch(x: &Signal, i: usize, r: usize, out: &mut Vec<f64>) {
    let (rows, cols) = x.shape().grid();
    let (ri, ci) = ((i / cols) as isize, (i % cols) as isize);
    let r = r as isize;
    // 1D signals are a single row: patches extend along columns only.
    let vr = if rows == 1 { 0 } else { r };
    let data = x.as_slice();
    out.clear();
    for dy in -vr..=vr {
        let y = (ri + dy).clamp(0, rows as isize - 1) as usize;
        for dx in -r..=r {
            let xx = (ci + dx).clamp(0, cols as isize - 1) as usize;
            out.push(data[y * cols + xx]);
        }
    }
}

fn distance(a: &[f64], b: &[f64], norm: DistanceNorm) -> f64 {
    match norm {
        DistanceNorm::SquaredL2 => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum(),
        DistanceNorm::L1 => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum(),
    }
}

/// Distance between the patches centred on `i` and `j`. With
/// `patch_radius = 0` this is the pixel difference (squared for L2).
pub fn patch_distance(
    x: &Signal,
    i: usize,
    j: usize,
    cfg: &PatchConfig,
    norm: DistanceNorm,
) -> Result<f64> {
    for idx in [i, j] {
        if idx >= x.len() {
            return Err(Error::IndexOutOfRange {
                index: idx,
                len: x.len(),
            });
        }
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    extract_patch(x, i, cfg.patch_radius, &mut a);
    extract_patch(x, j, cfg.patch_radius, &mut b);
    Ok(distance(&a, &b, norm))
}

/// Evaluates a kernel on the distance it consumes (see
/// [`KernelKind::distance_norm`]).
pub fn kernel_value(d: f64, kind: KernelKind, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "kernel bandwidth must be positive"));
    }
    if !(d >= 0.0) {
        return Err(Error::invalid("d", "distance must be nonnegative"));
    }
    Ok(match kind {
        KernelKind::Gaussian | KernelKind::Exponential => (-d / alpha).exp(),
        KernelKind::Cauchy => 1.0 / (1.0 + alpha * d),
    })
}

/// Symmetric kernel matrix over all pixel pairs in the search window.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    pub matrix: SquareMatrix,
    pub alpha: f64,
    pub kind: KernelKind,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

fn neighbors(i: usize, rows: usize, cols: usize, s: usize) -> impl Iterator<Item = usize> {
    let (ri, ci) = (i / cols, i % cols);
    let r0 = ri.saturating_sub(s);
    let r1 = (ri + s).min(rows - 1);
    let c0 = ci.saturating_sub(s);
    let c1 = (ci + s).min(cols - 1);
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| r * cols + c))
}

/// `K_ij = kernel(patch_distance(i, j))`. Entries outside the search window
/// are structural zeros. Rows are computed in parallel; each entry depends
/// only on its own pair, so the result is schedule-independent.
pub fn build_kernel_matrix(
    x: &Signal,
    kind: KernelKind,
    alpha: f64,
    cfg: &PatchConfig,
) -> Result<KernelMatrix> {
    if x.is_empty() {
        return Err(Error::invalid("x", "signal is empty"));
    }
    kernel_value(0.0, kind, alpha)?;
    let n = x.len();
    let norm = kind.distance_norm();
    let patches: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut p = Vec::new();
            extract_patch(x, i, cfg.patch_radius, &mut p);
            p
        })
        .collect();
    let k = |i: usize, j: usize| -> f64 {
        let d = distance(&patches[i], &patches[j], norm);
        match kind {
            KernelKind::Gaussian | KernelKind::Exponential => (-d / alpha).exp(),
            KernelKind::Cauchy => 1.0 / (1.0 + alpha * d),
        }
    };
    let matrix = match cfg.search_radius {
        SearchWindow::Full => {
            let data: Vec<f64> = (0..n)
                .into_par_iter()
                .flat_map_iter(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| k(i, j))
                .collect();
            SquareMatrix::dense(n, data)?
        }
        SearchWindow::Radius(s) => {
            let (rows, cols) = x.shape().grid();
            let rows_vec: Vec<Vec<(usize, f64)>> = (0..n)
                .into_par_iter()
                .map(|i| neighbors(i, rows, cols, s).map(|j| (j, k(i, j))).collect())
                .collect();
            SquareMatrix::from_rows(n, rows_vec)?
        }
    };
    Ok(KernelMatrix {
        matrix,
        alpha,
        kind,
    })
}
