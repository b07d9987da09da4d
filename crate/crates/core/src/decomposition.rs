//! Multiscale decomposition by iterated denoising, recombination, and
//! residual-based anomaly detection.

use log::warn;
use serde::Serialize;

use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::special::two_sided_p;

/// Consistency constant turning a Gaussian MAD into a standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub base: Signal,
    /// `r_k = f^k(x) − f^{k+1}(x)`, finest first.
    pub residuals: Vec<Signal>,
    pub alpha: f64,
    pub denoiser: String,
}

impl Decomposition {
    pub fn depth(&self) -> usize {
        self.residuals.len()
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.residuals.iter().map(Signal::norm).collect()
    }
}

pub fn decompose(f: &dyn Denoiser, x: &Signal, alpha: f64, n: usize) -> Result<Decomposition> {
    if n == 0 {
        return Err(Error::invalid("n", "depth must be at least 1"));
    }
    let mut current = x.clone();
    let mut residuals = Vec::with_capacity(n);
    for _ in 0..n {
        let next = f.denoise(&current, alpha)?;
        residuals.push(current.sub(&next)?);
        current = next;
    }
    Ok(Decomposition {
        base: current,
        residuals,
        alpha,
        denoiser: f.name(),
    })
}

/// `β_base·base + Σ β_k r_k`, summed finest to coarsest then the base.
pub fn recombine(d: &Decomposition, beta_base: f64, betas: &[f64]) -> Result<Signal> {
    if betas.len() != d.depth() {
        return Err(Error::shape(d.depth(), betas.len()));
    }
    let mut acc = vec![0.0; d.base.len()];
    for (r, &b) in d.residuals.iter().zip(betas) {
        d.base.check_same_len(r)?;
        for (s, v) in acc.iter_mut().zip(r.as_slice()) {
            *s += b * v;
        }
    }
    for (s, v) in acc.iter_mut().zip(d.base.as_slice()) {
        *s += beta_base * v;
    }
    Ok(d.base.like(acc))
}

pub fn reconstruct(d: &Decomposition) -> Result<Signal> {
    recombine(d, 1.0, &vec![1.0; d.depth()])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub mask: Vec<bool>,
    pub z_scores: Vec<f64>,
    pub sigma_estimate: f64,
    pub fdr_q: f64,
    /// Largest p-value declared significant, if any.
    pub p_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl AnomalyReport {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Benjamini–Hochberg rejection set at level `q`; returns the mask and the
/// largest rejected p-value.
pub fn benjamini_hochberg(p: &[f64], q: f64) -> (Vec<bool>, Option<f64>) {
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|(rank, &i)| p[i] <= (rank + 1) as f64 * q / n as f64)
        .map(|(_, &i)| p[i]);
    let mask = match cutoff {
        Some(t) => p.iter().map(|&v| v <= t).collect(),
        None => vec![false; n],
    };
    (mask, cutoff)
}

/// Flags elements of `x − f(x, α)` that are unlikely under a Gaussian model
/// with MAD-estimated scale, controlling the false discovery rate at `q`.
pub fn detect_anomalies(x: &Signal, f: &dyn Denoiser, alpha: f64, fdr_q: f64) -> Result<AnomalyReport> {
    if !(fdr_q > 0.0 && fdr_q < 1.0) {
        return Err(Error::invalid("fdr_q", "must lie in (0, 1)"));
    }
    let r = x.sub(&f.denoise(x, alpha)?)?;
    let mut buf = r.as_slice().to_vec();
    let center = median(&mut buf);
    let mut dev: Vec<f64> = r.as_slice().iter().map(|v| (v - center).abs()).collect();
    let sigma = MAD_SCALE * median(&mut dev);
    let n = r.len();
    if !(sigma > 0.0) {
        let msg = "residual has zero robust scale; no anomalies reported".to_string();
        warn!("{msg}");
        return Ok(AnomalyReport {
            mask: vec![false; n],
            z_scores: vec![0.0; n],
            sigma_estimate: 0.0,
            fdr_q,
            p_threshold: None,
            warning: Some(msg),
        });
    }
    let z: Vec<f64> = r.as_slice().iter().map(|v| v / sigma).collect();
    let p: Vec<f64> = z.iter().map(|&v| two_sided_p(v)).collect();
    let (mask, p_threshold) = benjamini_hochberg(&p, fdr_q);
    Ok(AnomalyReport {
        mask,
        z_scores: z,
        sigma_estimate: sigma,
        fdr_q,
        p_threshold,
        warning: None,
    })
}
