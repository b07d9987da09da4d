//! Sampled verification of the ideal-denoiser properties.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::denoiser::{AffineCombination, Denoiser, DenoiserHandle};
use crate::error::{Error, Result};
use crate::kernel::WeightMatrix;
use crate::noise::{GaussianStream, RngSeed};
use crate::signal::Signal;

/// Largest dimension for which a dense Jacobian is formed.
pub const JACOBIAN_LIMIT: usize = 4096;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub passed: bool,
    pub worst_metric: f64,
    pub test_points: usize,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PropertyReport {
    fn judge(property: &str, worst: f64, test_points: usize, tolerance: f64) -> Self {
        PropertyReport {
            property: property.into(),
            passed: worst <= tolerance,
            worst_metric: if worst.is_nan() { f64::INFINITY } else { worst },
            test_points,
            tolerance,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

fn nudge(x: &Signal, j: usize, delta: f64) -> Signal {
    let mut data = x.as_slice().to_vec();
    data[j] += delta;
    x.like(data)
}

/// Central-difference Jacobian; column `j` is `(f(x + h e_j) − f(x − h e_j)) / 2h`.
pub fn jacobian_fd(f: &dyn Denoiser, x: &Signal, alpha: f64, h: f64) -> Result<DMatrix<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "must be positive"));
    }
    let n = x.len();
    if n > JACOBIAN_LIMIT {
        return Err(Error::DimensionGuard {
            dim: n,
            limit: JACOBIAN_LIMIT,
        });
    }
    let columns = (0..n)
        .into_par_iter()
        .map(|j| {
            let plus = f.denoise(&nudge(x, j, h), alpha)?;
            let minus = f.denoise(&nudge(x, j, -h), alpha)?;
            x.check_same_len(&plus)?;
            Ok(plus
                .as_slice()
                .iter()
                .zip(minus.as_slice())
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| columns[j][i]))
}

/// True when no element sits within `10h` of a soft-threshold kink at `±α`.
pub fn clear_of_kinks(x: &Signal, alpha: f64, h: f64) -> bool {
    x.as_slice()
        .iter()
        .all(|&v| (v - alpha).abs() > 10.0 * h && (v + alpha).abs() > 10.0 * h)
}

pub fn check_identity(f: &dyn Denoiser, points: &[Signal], tol: f64) -> Result<PropertyReport> {
    let mut worst = 0.0f64;
    for x in points {
        let y = f.denoise(x, 0.0)?;
        worst = worst.max(y.max_abs_diff(x)?);
    }
    Ok(PropertyReport::judge("identity", worst, points.len(), tol))
}

/// Symmetry of the full map's Jacobian, measured as
/// `‖J − Jᵀ‖_max / max(1, ‖J‖_max)`.
pub fn check_symmetry(
    f: &dyn Denoiser,
    x: &Signal,
    alpha: f64,
    h: f64,
    tol: f64,
) -> Result<PropertyReport> {
    let j = jacobian_fd(f, x, alpha, h)?;
    let asym = (&j - j.transpose()).amax();
    let metric = asym / j.amax().max(1.0);
    Ok(PropertyReport::judge("symmetry", metric, 1, tol)
        .with_note(format!("map Jacobian; absolute asymmetry {asym:.3e}")))
}

/// Symmetry of a frozen weight matrix, as opposed to the map it induces.
pub fn check_weight_symmetry(w: &WeightMatrix, tol: f64) -> PropertyReport {
    let scale = w
        .matrix
        .triplets()
        .iter()
        .fold(0.0f64, |m, t| m.max(t.2.abs()))
        .max(1.0);
    let asym = w.matrix.max_asymmetry();
    PropertyReport::judge("weight_symmetry", asym / scale, 1, tol)
        .with_note(format!("frozen W; absolute asymmetry {asym:.3e}"))
}

/// Midpoint-rule line integral of `f` around a closed polyline.
pub fn loop_integral(
    f: &dyn Denoiser,
    vertices: &[Signal],
    alpha: f64,
    n_segments: usize,
) -> Result<(f64, f64)> {
    if vertices.len() < 3 {
        return Err(Error::invalid("loop", "need at least three vertices"));
    }
    if n_segments == 0 {
        return Err(Error::invalid("n_segments", "must be at least 1"));
    }
    let first = &vertices[0];
    if first.max_abs_diff(&vertices[vertices.len() - 1])? != 0.0 {
        return Err(Error::invalid("loop", "first and last vertex differ"));
    }
    let mut integral = 0.0;
    let mut length = 0.0;
    for pair in vertices.windows(2) {
        let step = pair[1].sub(&pair[0])?;
        length += step.norm();
        let ds = step.scale(1.0 / n_segments as f64);
        for k in 0..n_segments {
            let t = (k as f64 + 0.5) / n_segments as f64;
            let mid = pair[0].lincomb(1.0, &step, t)?;
            integral += f.denoise(&mid, alpha)?.dot(&ds)?;
        }
    }
    if length == 0.0 {
        return Err(Error::invalid("loop", "zero length"));
    }
    Ok((integral, length))
}

/// Passes when `|∮ f·dx| ≤ tol · length`.
pub fn check_conservative(
    f: &dyn Denoiser,
    vertices: &[Signal],
    alpha: f64,
    n_segments: usize,
    tol: f64,
) -> Result<PropertyReport> {
    let (integral, length) = loop_integral(f, vertices, alpha, n_segments)?;
    Ok(
        PropertyReport::judge("conservative", integral.abs() / length, vertices.len() - 1, tol)
            .with_note(format!("loop integral {integral:.6e}, length {length:.6e}")),
    )
}

/// A closed square loop in the plane of coordinates `(i, j)` around `x`.
pub fn square_loop(x: &Signal, i: usize, j: usize, side: f64) -> Result<Vec<Signal>> {
    if i >= x.len() || j >= x.len() || i == j {
        return Err(Error::invalid("loop", "need two distinct coordinates"));
    }
    let corner = |a: f64, b: f64| {
        let mut d = x.as_slice().to_vec();
        d[i] += a * side;
        d[j] += b * side;
        x.like(d)
    };
    Ok(vec![
        corner(-0.5, -0.5),
        corner(0.5, -0.5),
        corner(0.5, 0.5),
        corner(-0.5, 0.5),
        corner(-0.5, -0.5),
    ])
}

/// Random pairs `(c + s·z₁, c + s·z₂)` with standard normal `z`.
pub fn sample_pairs(center: &Signal, spread: f64, count: usize, seed: RngSeed) -> Vec<(Signal, Signal)> {
    let mut rng = GaussianStream::new(seed, 0);
    let mut draw = || {
        let data = center
            .as_slice()
            .iter()
            .map(|&c| c + spread * rng.standard_normal())
            .collect();
        center.like(data)
    };
    (0..count).map(|_| (draw(), draw())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// Largest observed ratio; a lower bound on the true constant.
    pub lower_bound: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

pub fn estimate_lipschitz(
    f: &dyn Denoiser,
    alpha: f64,
    pairs: &[(Signal, Signal)],
) -> Result<LipschitzEstimate> {
    if pairs.is_empty() {
        return Err(Error::invalid("pairs", "need at least one pair"));
    }
    let mut est = LipschitzEstimate {
        lower_bound: 0.0,
        pairs_used: 0,
        pairs_skipped: 0,
    };
    for (x, y) in pairs {
        let d = x.sub(y)?.norm();
        if d == 0.0 {
            est.pairs_skipped += 1;
            continue;
        }
        let r = f.denoise(x, alpha)?.sub(&f.denoise(y, alpha)?)?.norm() / d;
        est.lower_bound = est.lower_bound.max(r);
        est.pairs_used += 1;
    }
    Ok(est)
}

/// Lipschitz estimate as a report; passes when finite and within `bound`.
pub fn check_lipschitz(
    f: &dyn Denoiser,
    alpha: f64,
    pairs: &[(Signal, Signal)],
    bound: Option<f64>,
) -> Result<PropertyReport> {
    let est = estimate_lipschitz(f, alpha, pairs)?;
    let tol = bound.unwrap_or(f64::MAX);
    Ok(
        PropertyReport::judge("lipschitz", est.lower_bound, est.pairs_used, tol).with_note(format!(
            "sampled lower bound; {} coincident pairs skipped",
            est.pairs_skipped
        )),
    )
}

/// Measures `‖(f((1+ε)x) − f(x))/ε − f(x)‖ / ‖f(x)‖`.
pub fn check_homogeneity(
    f: &dyn Denoiser,
    x: &Signal,
    alpha: f64,
    eps: f64,
    tol: f64,
) -> Result<PropertyReport> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let fx = f.denoise(x, alpha)?;
    let fs = f.denoise(&x.scale(1.0 + eps), alpha)?;
    let dev = fs.lincomb(1.0 / eps, &fx, -1.0 / eps - 1.0)?.norm();
    let scale = fx.norm();
    let metric = if scale > 0.0 {
        dev / scale
    } else if dev == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(PropertyReport::judge("homogeneity", metric, 1, tol))
}

/// `Σ a_k f_k(x, α)`; the coefficients must sum to one.
pub fn affine_combine(fs: &[DenoiserHandle], a: &[f64]) -> Result<DenoiserHandle> {
    if fs.len() != a.len() {
        return Err(Error::shape(fs.len(), a.len()));
    }
    let terms = a
        .iter()
        .zip(fs)
        .map(|(&c, f)| (c, 1.0, f.clone()))
        .collect();
    Ok(Arc::new(AffineCombination::new(terms)?))
}
