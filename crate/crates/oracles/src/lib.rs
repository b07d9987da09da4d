//! Reference computations that share no code with `denoise-core`: brute-force
//! quadrature, dense linear algebra and closed forms.

use nalgebra::{DMatrix, DVector};

// Gauss-Kronrod 7/15 nodes and weights as tabulated in QUADPACK.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]` to absolute error
/// `tol`, distributed over subintervals in proportion to their width.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let density = tol / (b - a);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(f, lo, hi);
        if err <= density * (hi - lo) || err <= 1e3 * f64::EPSILON * v.abs() || depth >= 40 {
            total += v;
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((lo, m, depth + 1));
            stack.push((m, hi, depth + 1));
        }
    }
    total
}

/// Integrates over `[lo, hi]` split at the given interior points.
pub fn integrate_split(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|w| integrate(f, w[0], w[1], tol)).sum()
}

/// Posterior mean of `u` given `x = u + N(0, α)` for a prior with log-density
/// `log_prior`, by quadrature around `center` with breakpoints `breaks`.
pub fn posterior_mean_quadrature(
    log_prior: &dyn Fn(f64) -> f64,
    x: f64,
    alpha: f64,
    center: f64,
    breaks: &[f64],
) -> f64 {
    let log_joint = |u: f64| log_prior(u) - (x - u) * (x - u) / (2.0 * alpha);
    let shift = log_joint(center);
    let half = 40.0 * alpha.sqrt() + 1.0;
    let (lo, hi) = (center.min(x) - half, center.max(x) + half);
    let mut br = breaks.to_vec();
    br.push(center);
    br.push(x);
    let scale = integrate_split(&|u| (log_joint(u) - shift).exp(), lo, hi, &br, 1e-6);
    let den = integrate_split(&|u| (log_joint(u) - shift).exp(), lo, hi, &br, 1e-14 * scale);
    let num = integrate_split(&|u| u * (log_joint(u) - shift).exp(), lo, hi, &br, 1e-14 * scale * (1.0 + x.abs()));
    num / den
}

pub fn laplace_log_prior(scale: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| -u.abs() / scale - (2.0 * scale).ln()
}

/// `sign(x)·max(|x| − t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// `t·min_u(|u| + (x − u)²/2t)`: `x²/2` inside `[−t, t]`, `t|x| − t²/2` outside.
pub fn huber(x: f64, t: f64) -> f64 {
    if x.abs() <= t {
        0.5 * x * x
    } else {
        t * x.abs() - 0.5 * t * t
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn mixture_cdf(x: f64, w: &[f64], mu: &[f64], var: &[f64]) -> f64 {
    w.iter()
        .zip(mu)
        .zip(var)
        .map(|((w, m), v)| w * normal_cdf((x - m) / v.sqrt()))
        .sum()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Dense LU solve.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("singular system")
        .as_slice()
        .to_vec()
}

/// Circulant matrix of a centered 1D kernel: `(Cx)_i = Σ_a k_a x_{i − (a − c)}`.
pub fn circulant(n: usize, taps: &[f64]) -> DMatrix<f64> {
    let c = (taps.len() / 2) as isize;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (a, &t) in taps.iter().enumerate() {
            let j = (i as isize - (a as isize - c)).rem_euclid(n as isize) as usize;
            m[(i, j)] += t;
        }
    }
    m
}

/// Exact terminal state of the probability flow for an `N(0, τ²)` target.
pub fn gaussian_flow_map(x_t: f64, tau2: f64, alpha_t: f64, alpha_0: f64) -> f64 {
    x_t * ((tau2 + alpha_0) / (tau2 + alpha_t)).sqrt()
}

/// Conjugate posterior mean for a scalar Gaussian prior and identity observation.
pub fn conjugate_posterior_mean(y: f64, prior_mean: f64, prior_var: f64, noise_var: f64) -> f64 {
    (prior_var * y + noise_var * prior_mean) / (prior_var + noise_var)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Symmetric matrix balancing by alternating row and column scaling, run to
/// a fixed iteration count.
pub fn sinkhorn_knopp(k: &DMatrix<f64>, iterations: usize) -> DMatrix<f64> {
    let n = k.nrows();
    let mut r = DVector::from_element(n, 1.0);
    let mut c = DVector::from_element(n, 1.0);
    for _ in 0..iterations {
        let kc = k * &c;
        r = kc.map(|v| 1.0 / v);
        let ktr = k.tr_mul(&r);
        c = ktr.map(|v| 1.0 / v);
    }
    DMatrix::from_fn(n, n, |i, j| r[i] * k[(i, j)] * c[j])
}
