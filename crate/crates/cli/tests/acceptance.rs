//! Acceptance suite. One line per criterion; exits non-zero if any fails.
//!
//! Run with `cargo test -p denoise-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use denoise_core::decomposition::{decompose, detect_anomalies, reconstruct};
use denoise_core::denoiser::{
    Denoiser, DenoiserHandle, FrozenKernelDenoiser, KernelSettings, LinearDenoiser, NlmDenoiser,
    ScalarDenoiser,
};
use denoise_core::flow::{
    initial_state, run_flow, sample_probability_flow, variance_recursion_check, FlowOptions,
    NoiseSchedule,
};
use denoise_core::inverse::{
    bridge_iterate, dps_sample, red_fixed_point, ForwardOperator, InverseProblemSpec, StepWeight,
};
use denoise_core::io::{encode_csv, encode_pgm, PgmFormat};
use denoise_core::kernel::{
    build_kernel_matrix, sinkhorn_symmetrize, taylor_symmetrize, KernelKind, KernelMatrix,
    PatchConfig, SearchWindow, SinkhornOptions, SquareMatrix, Symmetrization,
};
use denoise_core::noise::{add_awgn, GaussianStream, NoiseSpec, RngSeed};
use denoise_core::properties::{check_symmetry, clear_of_kinks};
use denoise_core::scalar::{map_l1, mmse_denoise, score_scalar, GaussianMixture, ScalarPrior};
use denoise_core::{Shape, Signal};
use denoise_oracles::{
    circulant, conjugate_posterior_mean, dense_solve, gaussian_flow_map, huber, ks_critical_1pct,
    ks_statistic, laplace_log_prior, mixture_cdf, posterior_mean_quadrature, soft_threshold,
};
use nalgebra::{DMatrix, DVector};

struct Outcome {
    passed: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = GaussianStream::new(RngSeed(seed), 0);
    (0..n).map(|_| rng.standard_normal()).collect()
}

/// Posterior mean under a Gaussian mixture, from the joint density directly.
fn mixture_posterior_mean(x: f64, alpha: f64, w: &[f64], mu: &[f64], var: &[f64]) -> f64 {
    let logs: Vec<f64> = (0..w.len())
        .map(|k| {
            let s = var[k] + alpha;
            w[k].ln() - 0.5 * (2.0 * std::f64::consts::PI * s).ln() - (x - mu[k]).powi(2) / (2.0 * s)
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..w.len() {
        let p = (logs[k] - top).exp();
        num += p * (var[k] * x + alpha * mu[k]) / (var[k] + alpha);
        den += p;
    }
    num / den
}

fn c01_tweedie() -> Outcome {
    let mut rng = GaussianStream::new(RngSeed(101), 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = 1 + (rng.uniform() * 4.0) as usize;
        let raw: Vec<f64> = (0..k).map(|_| 0.1 + rng.uniform()).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mu: Vec<f64> = (0..k).map(|_| 3.0 * rng.standard_normal()).collect();
        let var: Vec<f64> = (0..k).map(|_| 0.05 + 2.0 * rng.uniform()).collect();
        let alpha = 0.01 + 5.0 * rng.uniform();
        let x = 4.0 * rng.standard_normal();
        let prior = ScalarPrior::GaussianMixture(GaussianMixture::new(w.clone(), mu.clone(), var.clone()).unwrap());
        let tweedie = x + alpha * score_scalar(x, alpha, &prior).unwrap();
        let mmse = mixture_posterior_mean(x, alpha, &w, &mu, &var);
        let f = ScalarDenoiser::Mmse(prior);
        let via_map = f.denoise(&Signal::from_vec(vec![x]).unwrap(), alpha).unwrap().as_slice()[0];
        worst = worst.max((mmse - tweedie).abs()).max((mmse - via_map).abs());
    }
    outcome(worst <= 1e-9, format!("max |mmse - (x + a*score)| = {worst:.2e} (tol 1e-9)"))
}

fn c02_soft_threshold() -> Outcome {
    let alpha = 0.7;
    let h = 1e-6;
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let x = -5.0 + 10.0 * i as f64 / 9_999.0;
        let got = map_l1(x, alpha).unwrap();
        if got != x.signum() * (x.abs() - alpha).max(0.0) {
            mismatches += 1;
        }
        let d = (huber(x + h, alpha) - huber(x - h, alpha)) / (2.0 * h);
        worst = worst.max((got - (x - d)).abs());
    }
    outcome(
        mismatches == 0 && worst <= 1e-6,
        format!("{mismatches} mismatches on 10^4 grid; max |f - (x - huber')| = {worst:.2e} (tol 1e-6)"),
    )
}

fn c03_laplacian_quadrature() -> Outcome {
    let prior = ScalarPrior::laplacian(1.0).unwrap();
    let lp = laplace_log_prior(1.0);
    let mut worst: f64 = 0.0;
    for &alpha in &[0.25, 1.0, 4.0] {
        for i in 0..=200 {
            let x = -10.0 + 0.1 * i as f64;
            let oracle = posterior_mean_quadrature(&lp, x, alpha, soft_threshold(x, alpha), &[0.0]);
            worst = worst.max((mmse_denoise(x, alpha, &prior).unwrap().estimate - oracle).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |closed form - quadrature| = {worst:.2e} (tol 1e-6)"))
}

fn test_image(n: usize, seed: u64) -> Signal {
    let clean: Vec<f64> = (0..n * n)
        .map(|i| {
            let (r, c) = (i / n, i % n);
            if (r / 8 + c / 8) % 2 == 0 { 0.3 } else { 0.7 }
        })
        .collect();
    add_awgn(&Signal::from_grid(n, n, clean).unwrap(), NoiseSpec::from_sigma(0.05).unwrap(), RngSeed(seed))
}

fn nlm(patch: PatchConfig, sym: Symmetrization) -> DenoiserHandle {
    Arc::new(NlmDenoiser { settings: KernelSettings::new(KernelKind::Gaussian, patch, sym) })
}

fn c04_reconstruction() -> Outcome {
    let x = test_image(64, 4);
    let patch = PatchConfig::new(1, SearchWindow::Radius(2)).unwrap();
    let lap = ScalarPrior::laplacian(0.3).unwrap();
    let all: Vec<(DenoiserHandle, f64)> = vec![
        (nlm(patch, Symmetrization::None), 0.01),
        (nlm(patch, Symmetrization::Sinkhorn), 0.01),
        (nlm(patch, Symmetrization::Taylor), 0.01),
        (Arc::new(ScalarDenoiser::SoftThreshold), 0.05),
        (Arc::new(ScalarDenoiser::Mmse(lap.clone())), 0.01),
        (Arc::new(ScalarDenoiser::Map(lap)), 0.01),
    ];
    let mut worst: f64 = 0.0;
    for (f, alpha) in &all {
        for n in [1, 3, 5] {
            let d = decompose(f.as_ref(), &x, *alpha, n).unwrap();
            worst = worst.max(reconstruct(&d).unwrap().max_abs_diff(&x).unwrap());
        }
    }
    outcome(worst <= 1e-12, format!("max reconstruction error = {worst:.2e} over 6 denoisers x 3 depths (tol 1e-12)"))
}

fn c05_sinkhorn() -> Outcome {
    let two = KernelMatrix {
        matrix: SquareMatrix::dense(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap(),
        alpha: 1.0,
        kind: KernelKind::Gaussian,
    };
    let w2 = sinkhorn_symmetrize(&two, SinkhornOptions::default()).unwrap().weights.matrix;
    let expected = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
    let got2 = [w2.get(0, 0), w2.get(0, 1), w2.get(1, 0), w2.get(1, 1)];
    let err2 = max_abs(&got2, &expected);

    let x = test_image(32, 5);
    let k = build_kernel_matrix(&x, KernelKind::Gaussian, 0.01, &PatchConfig::new(1, SearchWindow::Full).unwrap()).unwrap();
    let w = sinkhorn_symmetrize(&k, SinkhornOptions::default()).unwrap().weights;
    let (rows, cols, asym) = (w.max_row_imbalance(), w.max_col_imbalance(), w.matrix.max_asymmetry());
    outcome(
        err2 <= 1e-10 && rows <= 1e-8 && cols <= 1e-8 && asym == 0.0,
        format!("2x2 error {err2:.2e}; N=1024 row {rows:.2e}, col {cols:.2e}, asymmetry {asym:e}"),
    )
}

fn c06_taylor() -> Outcome {
    let mut rng = GaussianStream::new(RngSeed(6), 0);
    let n = 32;
    let (mut asym, mut rows): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = 0.05 + rng.uniform();
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        let k = KernelMatrix { matrix: SquareMatrix::dense(n, data).unwrap(), alpha: 1.0, kind: KernelKind::Gaussian };
        let w = taylor_symmetrize(&k, &k.matrix.row_sums()).unwrap();
        asym = asym.max(w.matrix.max_asymmetry());
        rows = rows.max(w.max_row_imbalance());
    }
    let rounding = 8.0 * n as f64 * f64::EPSILON;
    outcome(
        asym == 0.0 && rows <= rounding,
        format!("20 kernels: asymmetry {asym:e}, row imbalance {rows:.2e} (rounding bound {rounding:.2e})"),
    )
}

fn c07_symmetry_ground_truth() -> Outcome {
    let x = test_image(16, 7);
    let alpha = 0.01;
    let patch = PatchConfig::new(1, SearchWindow::Radius(3)).unwrap();
    let tol = 1e-6;
    let adaptive = check_symmetry(nlm(patch, Symmetrization::None).as_ref(), &x, alpha, 1e-5, tol).unwrap();
    let mut frozen = Vec::new();
    for sym in [Symmetrization::Sinkhorn, Symmetrization::Taylor] {
        let f = FrozenKernelDenoiser::new(x.clone(), KernelSettings::new(KernelKind::Gaussian, patch, sym));
        frozen.push(check_symmetry(&f, &x, alpha, 1e-5, tol).unwrap());
    }
    let z = Signal::from_vec(normals(32, 77).iter().map(|v| 2.0 * v).collect()).unwrap();
    let lap = ScalarPrior::laplacian(1.0).unwrap();
    let gmm = ScalarPrior::GaussianMixture(GaussianMixture::symmetric_pair(2.0, 0.1).unwrap());
    let scalars = [
        ScalarDenoiser::Mmse(lap.clone()),
        ScalarDenoiser::Mmse(gmm.clone()),
        ScalarDenoiser::Map(lap),
        ScalarDenoiser::Map(gmm),
    ];
    let kinks_clear = clear_of_kinks(&z, 0.5, 1e-5);
    let scalar: Vec<_> = scalars.iter().map(|f| check_symmetry(f, &z, 0.5, 1e-5, tol).unwrap()).collect();
    let worst_ok = frozen.iter().chain(&scalar).map(|r| r.worst_metric).fold(0.0, f64::max);
    outcome(
        !adaptive.passed && kinks_clear && frozen.iter().chain(&scalar).all(|r| r.passed),
        format!(
            "row-normalized NLM asymmetry {:.2e} (must fail); frozen Sinkhorn/Taylor and 4 scalar maps max {worst_ok:.2e} (tol 1e-6)",
            adaptive.worst_metric
        ),
    )
}

fn gaussian_flow_error(steps: usize, samples: u64) -> f64 {
    let tau2 = 1.0;
    let f = ScalarDenoiser::Mmse(ScalarPrior::gaussian(0.0, tau2).unwrap());
    let sched = NoiseSchedule::geometric(100.0 * tau2, 1e-4 * tau2, steps).unwrap();
    (0..samples)
        .map(|i| {
            let x_t = initial_state(Shape::D1(1), sched.alpha_max(), RngSeed(8), i);
            let start = x_t.as_slice()[0];
            let end = run_flow(&f, &sched, x_t, None).unwrap().as_slice()[0];
            let exact = gaussian_flow_map(start, tau2, sched.alpha_max(), sched.alpha_min());
            ((end - exact) / exact).abs()
        })
        .fold(0.0, f64::max)
}

fn c08_gaussian_flow() -> Outcome {
    let e: Vec<f64> = [200, 400, 800].iter().map(|&s| gaussian_flow_error(s, 1000)).collect();
    let ratios = [e[0] / e[1], e[1] / e[2]];
    let halves = ratios.iter().all(|r| (1.8..=2.2).contains(r));
    outcome(
        e[0] <= 1e-3 && halves,
        format!(
            "relative error {:.3e} at 200 steps (tol 1e-3), {:.3e} at 400, {:.3e} at 800; ratios {:.3}, {:.3}",
            e[0], e[1], e[2], ratios[0], ratios[1]
        ),
    )
}

fn c09_variance_recursion() -> Outcome {
    let v = variance_recursion_check(1.0, 0.99).unwrap().value;
    let steps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let xs: Vec<f64> = steps.iter().map(|s: &f64| s.ln()).collect();
    let ys: Vec<f64> = steps
        .iter()
        .map(|s| variance_recursion_check(1.0, 1.0 - s).unwrap().relative_excess.ln())
        .collect();
    let slope = denoise_oracles::slope(&xs, &ys);
    let exact = (v - 0.990025).abs() <= f64::EPSILON;
    outcome(exact && (slope - 2.0).abs() <= 0.1, format!("value {v:.17} (0.990025); log-log slope {slope:.4} (2 +/- 0.1)"))
}

fn c10_gmm_sampling() -> Outcome {
    let g = GaussianMixture::symmetric_pair(2.0, 0.1).unwrap();
    let var = g.variance();
    let f = ScalarDenoiser::Mmse(ScalarPrior::GaussianMixture(g));
    let sched = NoiseSchedule::geometric(100.0 * var, 1e-4 * var, 1000).unwrap();
    let n = 10_000;
    let opts = FlowOptions { target_variance: Some(var), keep_trace: false };
    let out = sample_probability_flow(&f, &sched, n, Shape::D1(1), RngSeed(10), opts).unwrap();
    let xs: Vec<f64> = out.samples.iter().map(|s| s.as_slice()[0]).collect();
    let pos = xs.iter().filter(|&&x| x > 0.0).count() as f64 / n as f64;
    let se = (0.25 / n as f64).sqrt();
    let ks = ks_statistic(&xs, &|x| mixture_cdf(x, &[0.5, 0.5], &[-2.0, 2.0], &[0.1, 0.1]));
    let crit = ks_critical_1pct(n);
    outcome(
        (pos - 0.5).abs() <= 3.0 * se && ks < crit,
        format!("positive mode {:.2}% (50 +/- {:.2}); KS {ks:.4} (critical {crit:.4})", 100.0 * pos, 300.0 * se),
    )
}

fn c11_red_dense() -> Outcome {
    let n = 256;
    let taps = [0.1, 0.2, 0.4, 0.2, 0.1];
    let h = circulant(n, &taps);
    let w = circulant(n, &[0.25, 0.5, 0.25]);
    let lambda = 0.5;
    let y = Signal::from_vec(normals(n, 11)).unwrap();
    let f: DenoiserHandle = Arc::new(LinearDenoiser::new(w.clone()).unwrap());
    let op = ForwardOperator::convolution(Shape::D1(n), taps.to_vec(), (1, 5)).unwrap();
    let spec = InverseProblemSpec::new(y.clone(), op, lambda, f.clone(), 0.1, 0.0).unwrap();
    let red = red_fixed_point(&spec, &spec.back_projection().unwrap(), 20_000, 1e-13).unwrap();
    let a = h.transpose() * &h + lambda * (DMatrix::identity(n, n) - &w);
    let rhs = h.transpose() * DVector::from_column_slice(y.as_slice());
    let oracle = dense_solve(&a, rhs.as_slice());
    let err = max_abs(red.estimate.as_slice(), &oracle);

    let ident = InverseProblemSpec::new(y.clone(), ForwardOperator::identity(y.shape()), lambda, f.clone(), 0.1, 0.0).unwrap();
    let fixed = red_fixed_point(&ident, &y, 20_000, 1e-13).unwrap();
    let bridge = bridge_iterate(&y, f.as_ref(), 0.1, lambda, &y, 20_000, 1e-13).unwrap();
    let gap = fixed.estimate.max_abs_diff(&bridge.estimate).unwrap();
    outcome(
        err <= 1e-8 && gap <= 1e-10,
        format!("deblurring vs dense solve {err:.2e} (tol 1e-8) in {} iterations; bridge vs RED {gap:.2e} (tol 1e-10)", red.iterations),
    )
}

fn c12_dps() -> Outcome {
    let (tau2, s2, y): (f64, f64, f64) = (1.0, 0.5, 1.0);
    let f: DenoiserHandle = Arc::new(ScalarDenoiser::Mmse(ScalarPrior::gaussian(0.0, tau2).unwrap()));
    let spec = InverseProblemSpec::new(
        Signal::from_vec(vec![y]).unwrap(),
        ForwardOperator::identity(Shape::D1(1)),
        1.0,
        f.clone(),
        0.0,
        s2.sqrt(),
    )
    .unwrap();
    let sched = NoiseSchedule::geometric(1e4, 1e-4, 200).unwrap();
    let weight = StepWeight::GaussianCalibrated { noise_var: s2, prior_var: tau2 };
    let runs = 1000;
    let xs: Vec<f64> = (0..runs)
        .map(|i| dps_sample(&spec, &sched, &weight, RngSeed(12), i).unwrap().as_slice()[0])
        .collect();
    let mean = xs.iter().sum::<f64>() / runs as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
    let se = sd / (runs as f64).sqrt();
    let target = conjugate_posterior_mean(y, 0.0, tau2, s2);

    let zero = StepWeight::Constant { rho: 0.0 };
    let flow = sample_probability_flow(f.as_ref(), &sched, 50, Shape::D1(1), RngSeed(12), FlowOptions::default()).unwrap();
    let identical = flow.samples.iter().enumerate().all(|(i, s)| {
        let d = dps_sample(&spec, &sched, &zero, RngSeed(12), i as u64).unwrap();
        d.as_slice().iter().zip(s.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits())
    });
    outcome(
        (mean - target).abs() <= 3.0 * se && identical,
        format!(
            "posterior mean {mean:.4} vs {target:.4} (3 SE = {:.4}); rho=0 bit-identical to flow: {identical}",
            3.0 * se
        ),
    )
}

fn c13_anomaly() -> Outcome {
    let sigma = 0.05;
    let q = 0.1;
    let f = NlmDenoiser {
        settings: KernelSettings::new(KernelKind::Gaussian, PatchConfig::pixel(SearchWindow::Radius(3)), Symmetrization::None),
    };
    let alpha = 100.0 * sigma * sigma;
    let noisy = |seed: u64| {
        add_awgn(&Signal::filled(Shape::D2 { rows: 32, cols: 32 }, 0.5), NoiseSpec::from_sigma(sigma).unwrap(), RngSeed(seed))
    };
    // Under the null every discovery is false, so a trial's FDP is 0 or 1.
    let mut fdp = 0.0;
    let mut detected = 0;
    for t in 0..10 {
        if detect_anomalies(&noisy(100 + t), &f, alpha, q).unwrap().count() > 0 {
            fdp += 0.1;
        }
        let mut x = noisy(200 + t);
        let at = 16 * 32 + 16;
        x.as_mut_slice()[at] += 10.0 * sigma;
        if detect_anomalies(&x, &f, alpha, q).unwrap().mask[at] {
            detected += 1;
        }
    }
    outcome(
        fdp <= 2.0 * q && detected == 10,
        format!("mean FDP {fdp:.2} (limit {:.2}); spike detected in {detected}/10 trials", 2.0 * q),
    )
}

const NLM_JSON: &str = r#"{"kind":"nlm","kernel":"gaussian","patch_radius":1,"search_radius":2}"#;

fn cli_configs() -> Vec<(&'static str, String)> {
    vec![
        ("denoise", format!(r#"{{"input":"img.pgm","denoiser":{NLM_JSON},"alpha":0.02,"add_noise":0.05,"output":"denoised.csv"}}"#)),
        ("decompose", format!(r#"{{"input":"img.pgm","denoiser":{NLM_JSON},"alpha":0.02,"levels":3}}"#)),
        ("recombine", format!(r#"{{"input":"img.pgm","denoiser":{NLM_JSON},"alpha":0.02,"beta_base":1,"betas":[2,1]}}"#)),
        ("verify", r#"{"denoiser":{"kind":"mmse","prior":{"laplacian":{"scale":1}}},"alpha":0.5,"dim":8,"test_points":4}"#.into()),
        ("sample", r#"{"prior":{"gmm":{"w":[0.5,0.5],"mu":[-2,2],"var":[0.1,0.1]}},"samples":100}"#.into()),
        ("solve", r#"{"measurement":"y.csv","operator":{"kind":"convolution","taps":[0.25,0.5,0.25],"taps_shape":[1,3]},"method":"red","lambda":0.5,"denoiser":{"kind":"mmse","prior":{"laplacian":{"scale":1}}},"alpha":0.1}"#.into()),
        ("anomaly", format!(r#"{{"input":"img.pgm","denoiser":{NLM_JSON},"alpha":0.05,"add_noise":0.02}}"#)),
    ]
}

fn run_cli(dir: &Path, config: &Path, out: &str, cmd: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_denoise"))
        .current_dir(dir)
        .args(["--seed", "14", "--config"])
        .arg(config)
        .args(["--out-dir", out, cmd])
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{cmd}: {}", String::from_utf8_lossy(&o.stderr).trim()));
    }
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.join(out))
        .map_err(|e| e.to_string())?
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn c14_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("img.pgm"), encode_pgm(&test_image(16, 14), PgmFormat::Binary)).unwrap();
    fs::write(root.join("y.csv"), encode_csv(&Signal::from_vec(normals(48, 14)).unwrap())).unwrap();
    let mut files = 0;
    for (cmd, cfg) in cli_configs() {
        let path = root.join(format!("{cmd}.json"));
        fs::write(&path, cfg).unwrap();
        let runs = (run_cli(root, &path, &format!("{cmd}_1"), cmd), run_cli(root, &path, &format!("{cmd}_2"), cmd));
        match runs {
            (Ok(a), Ok(b)) if a == b => files += a.len(),
            (Ok(_), Ok(_)) => return outcome(false, format!("{cmd}: outputs differ between runs")),
            (Err(e), _) | (_, Err(e)) => return outcome(false, e),
        }
    }
    outcome(true, format!("7 subcommands run twice; {files} output files byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, Option<u64>); 14] = [
        ("tweedie identity", c01_tweedie, Some(1)),
        ("soft-threshold exactness", c02_soft_threshold, Some(1)),
        ("laplacian mmse vs quadrature", c03_laplacian_quadrature, Some(10)),
        ("perfect reconstruction", c04_reconstruction, Some(30)),
        ("sinkhorn symmetrization", c05_sinkhorn, Some(5)),
        ("taylor symmetrization", c06_taylor, None),
        ("property harness ground truth", c07_symmetry_ground_truth, Some(60)),
        ("gaussian probability flow", c08_gaussian_flow, Some(30)),
        ("variance recursion", c09_variance_recursion, None),
        ("gmm sampling", c10_gmm_sampling, Some(120)),
        ("red fixed point vs dense solve", c11_red_dense, Some(30)),
        ("dps conjugate check", c12_dps, Some(120)),
        ("anomaly calibration", c13_anomaly, Some(30)),
        ("cli determinism", c14_determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut r = check();
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            if elapsed > Duration::from_secs(*limit) {
                r.passed = false;
                r.detail.push_str(&format!("; over the {limit} s budget"));
            }
        }
        if !r.passed {
            failed += 1;
        }
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {} [{:.2} s]", i + 1, r.detail, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
