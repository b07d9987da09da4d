use std::path::{Path, PathBuf};

use denoise_core::decomposition::{self, Decomposition};
use denoise_core::denoiser::{DenoiserHandle, DenoiserSpec, ScalarDenoiser};
use denoise_core::flow::{sample_probability_flow, FlowOptions, NoiseSchedule};
use denoise_core::inverse::{
    bridge_iterate, dps_sample, red_fixed_point, InverseProblemSpec, SolveResult,
};
use denoise_core::io::{read_signal, write_atomic, write_signal};
use denoise_core::kernel::{KernelKind, SearchWindow, SinkhornOptions, Symmetrization};
use denoise_core::metrics::{mse, psnr};
use denoise_core::noise::{add_awgn, GaussianStream, NoiseSpec, RngSeed};
use denoise_core::properties::{
    check_conservative, check_homogeneity, check_identity, check_lipschitz, check_symmetry,
    sample_pairs, square_loop, PropertyReport, DEFAULT_STEP, DEFAULT_SYMMETRY_TOL,
};
use denoise_core::scalar::ScalarPrior;
use denoise_core::{Shape, Signal};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{self, GridShape, OutputFormat, PropertyName, SolveMethod};
use crate::manifest;
use crate::CliError;

pub struct Context {
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Context {
    fn load<T: serde::de::DeserializeOwned>(&self) -> Result<(T, PathBuf), CliError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Validation("this command needs --config".into()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config::load(path)?, base))
    }

    fn out(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Validation(format!("{}: {e}", self.out_dir.display())))?;
        Ok(self.out_dir.join(name))
    }
}

fn read_input(base: &Path, path: &Path, shape: Option<GridShape>) -> Result<Signal, CliError> {
    let s = read_signal(&config::resolve(base, path))?;
    match shape {
        Some(g) => Ok(Signal::new(s.into_vec(), Shape::D2 { rows: g.rows, cols: g.cols })?),
        None => Ok(s),
    }
}

fn maybe_noise(x: Signal, sigma: Option<f64>, seed: u64) -> Result<Signal, CliError> {
    match sigma {
        Some(s) => Ok(add_awgn(&x, NoiseSpec::from_sigma(s)?, RngSeed(seed))),
        None => Ok(x),
    }
}

fn output_name(name: &Option<String>, default: &str) -> String {
    name.clone().unwrap_or_else(|| default.to_string())
}

pub fn denoise(ctx: &Context) -> Result<(), CliError> {
    let (cfg, base): (config::DenoiseConfig, _) = ctx.load()?;
    let f = cfg.denoiser.build()?;
    let x = maybe_noise(read_input(&base, &cfg.input, cfg.shape)?, cfg.add_noise, ctx.seed)?;
    let y = f.denoise(&x, cfg.alpha)?;
    let name = output_name(&cfg.output, "denoised.pgm");
    write_signal(&ctx.out(&name)?, &y)?;
    let mut summary = json!({ "denoiser": f.name(), "change_mse": mse(&x, &y)? });
    if let Some(r) = &cfg.reference {
        let clean = read_input(&base, r, cfg.shape)?;
        summary["psnr_input"] = json!(psnr(&clean, &x, 1.0)?);
        summary["psnr_output"] = json!(psnr(&clean, &y, 1.0)?);
    }
    manifest::write(&ctx.out_dir, "denoise", ctx.seed, manifest::config_value(&cfg)?, vec![name], summary)
}

fn decompose_input(
    base: &Path,
    input: &Path,
    shape: Option<GridShape>,
    spec: &DenoiserSpec,
    alpha: f64,
    levels: usize,
) -> Result<(Signal, Decomposition), CliError> {
    let f = spec.build()?;
    let x = read_input(base, input, shape)?;
    let d = decomposition::decompose(f.as_ref(), &x, alpha, levels)?;
    Ok((x, d))
}

pub fn decompose(ctx: &Context) -> Result<(), CliError> {
    let (cfg, base): (config::DecomposeConfig, _) = ctx.load()?;
    let (x, d) = decompose_input(&base, &cfg.input, cfg.shape, &cfg.denoiser, cfg.alpha, cfg.levels)?;
    let ext = cfg.format.unwrap_or(OutputFormat::Csv).ext();
    let mut outputs = vec![format!("base.{ext}")];
    write_signal(&ctx.out(&outputs[0])?, &d.base)?;
    for (k, r) in d.residuals.iter().enumerate() {
        let name = format!("residual_{k}.{ext}");
        write_signal(&ctx.out(&name)?, r)?;
        outputs.push(name);
    }
    let err = decomposition::reconstruct(&d)?.max_abs_diff(&x)?;
    let summary = json!({
        "denoiser": d.denoiser,
        "levels": d.depth(),
        "residual_norms": d.residual_norms(),
        "reconstruction_error": err,
    });
    manifest::write(&ctx.out_dir, "decompose", ctx.seed, manifest::config_value(&cfg)?, outputs, summary)
}

pub fn recombine(ctx: &Context) -> Result<(), CliError> {
    let (cfg, base): (config::RecombineConfig, _) = ctx.load()?;
    let (x, d) = decompose_input(&base, &cfg.input, cfg.shape, &cfg.denoiser, cfg.alpha, cfg.betas.len())?;
    let y = decomposition::recombine(&d, cfg.beta_base, &cfg.betas)?;
    let name = output_name(&cfg.output, "recombined.csv");
    write_signal(&ctx.out(&name)?, &y)?;
    let summary = json!({ "denoiser": d.denoiser, "change_mse": mse(&x, &y)? });
    manifest::write(&ctx.out_dir, "recombine", ctx.seed, manifest::config_value(&cfg)?, vec![name], summary)
}

fn named_denoiser(name: &str) -> Result<DenoiserSpec, CliError> {
    if name.trim_start().starts_with('{') {
        return serde_json::from_str(name).map_err(|e| CliError::Validation(format!("--denoiser: {e}")));
    }
    let laplacian = || ScalarPrior::laplacian(1.0);
    let nlm = |symmetrization| DenoiserSpec::Nlm {
        kernel: KernelKind::Gaussian,
        patch_radius: 1,
        search_radius: SearchWindow::Radius(3),
        symmetrization,
        sinkhorn: SinkhornOptions::default(),
    };
    Ok(match name {
        "identity" => DenoiserSpec::Identity {},
        "map_l1" => DenoiserSpec::MapL1 {},
        "mmse" => DenoiserSpec::Mmse { prior: laplacian()? },
        "map" => DenoiserSpec::Map { prior: laplacian()? },
        "nlm" => nlm(Symmetrization::None),
        "nlm_sinkhorn" => nlm(Symmetrization::Sinkhorn),
        "nlm_taylor" => nlm(Symmetrization::Taylor),
        other => return Err(CliError::Validation(format!("unknown denoiser `{other}`"))),
    })
}

/// Seeded test points `0.5 + 2z`, nudged off soft-threshold kinks at `±α`.
fn test_points(dim: usize, count: usize, alpha: f64, seed: u64) -> Vec<Signal> {
    let mut rng = GaussianStream::new(RngSeed(seed), 0);
    let margin = 10.0 * DEFAULT_STEP;
    (0..count)
        .map(|_| {
            let data = (0..dim)
                .map(|_| {
                    let mut v = 0.5 + 2.0 * rng.standard_normal();
                    for kink in [alpha, -alpha] {
                        if (v - kink).abs() <= margin {
                            v = kink + 2.0 * margin * (v - kink).signum();
                        }
                    }
                    v
                })
                .collect();
            Signal::from_vec(data).expect("finite test point")
        })
        .collect()
}

fn merge(property: &str, reports: Vec<PropertyReport>, tolerance: f64) -> PropertyReport {
    let worst = reports.iter().map(|r| r.worst_metric).fold(0.0, f64::max);
    PropertyReport {
        property: property.into(),
        passed: reports.iter().all(|r| r.passed),
        worst_metric: worst,
        test_points: reports.iter().map(|r| r.test_points).sum(),
        tolerance,
        note: reports.iter().rev().find_map(|r| r.note.clone()),
    }
}

fn run_verify(cfg: &config::VerifyConfig, f: &DenoiserHandle, seed: u64) -> Result<Vec<PropertyReport>, CliError> {
    if cfg.dim < 2 || cfg.test_points == 0 {
        return Err(CliError::Validation("verify needs dim ≥ 2 and at least one test point".into()));
    }
    let points = test_points(cfg.dim, cfg.test_points, cfg.alpha, seed);
    let mut out = Vec::new();
    for p in &cfg.properties {
        let rep = match p {
            PropertyName::Identity => check_identity(f.as_ref(), &points, 1e-12)?,
            PropertyName::Symmetry => {
                let reps = points
                    .iter()
                    .map(|x| check_symmetry(f.as_ref(), x, cfg.alpha, DEFAULT_STEP, DEFAULT_SYMMETRY_TOL))
                    .collect::<Result<Vec<_>, _>>()?;
                merge("symmetry", reps, DEFAULT_SYMMETRY_TOL)
            }
            PropertyName::Conservative => {
                let tol = 1e-4;
                let reps = points
                    .iter()
                    .enumerate()
                    .map(|(k, x)| {
                        let lp = square_loop(x, k % cfg.dim, (k + 1) % cfg.dim, 0.25)?;
                        check_conservative(f.as_ref(), &lp, cfg.alpha, 32, tol)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                merge("conservative", reps, tol)
            }
            PropertyName::Lipschitz => {
                let center = Signal::from_vec(vec![0.5; cfg.dim])?;
                let pairs = sample_pairs(&center, 1.0, 200, RngSeed(seed.wrapping_add(1)));
                check_lipschitz(f.as_ref(), cfg.alpha, &pairs, cfg.lipschitz_bound)?
            }
            PropertyName::Homogeneity => {
                let tol = 1e-3;
                let reps = points
                    .iter()
                    .map(|x| check_homogeneity(f.as_ref(), x, cfg.alpha, 1e-3, tol))
                    .collect::<Result<Vec<_>, _>>()?;
                merge("homogeneity", reps, tol)
            }
        };
        out.push(rep);
    }
    Ok(out)
}

pub fn verify(ctx: &Context, denoiser: Option<String>, alpha: Option<f64>) -> Result<(), CliError> {
    let mut cfg: config::VerifyConfig = match &ctx.config {
        Some(_) => ctx.load()?.0,
        None => config::VerifyConfig {
            denoiser: DenoiserSpec::Identity {},
            alpha: 0.0,
            dim: 16,
            test_points: 8,
            properties: vec![
                PropertyName::Identity,
                PropertyName::Symmetry,
                PropertyName::Conservative,
                PropertyName::Lipschitz,
            ],
            lipschitz_bound: None,
        },
    };
    if ctx.config.is_none() && denoiser.is_none() {
        return Err(CliError::Validation("verify needs --denoiser or --config".into()));
    }
    if let Some(d) = denoiser {
        cfg.denoiser = named_denoiser(&d)?;
    }
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    if !(cfg.alpha >= 0.0 && cfg.alpha.is_finite()) {
        return Err(CliError::Validation("alpha must be finite and nonnegative".into()));
    }
    let f = cfg.denoiser.build()?;
    let reports = run_verify(&cfg, &f, ctx.seed)?;
    let text = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Validation(e.to_string()))?;
    println!("{text}");
    let name = "verify.json".to_string();
    manifest::write_json(&ctx.out(&name)?, &reports)?;
    let passed = reports.iter().filter(|r| r.passed).count();
    let summary = json!({ "denoiser": f.name(), "passed": passed, "total": reports.len() });
    manifest::write(&ctx.out_dir, "verify", ctx.seed, manifest::config_value(&cfg)?, vec![name], summary)
}

fn rows_csv(rows: &[Signal]) -> String {
    let mut s = String::new();
    for r in rows {
        let line: Vec<String> = r.as_slice().iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn sample(ctx: &Context) -> Result<(), CliError> {
    let (cfg, _): (config::SampleConfig, _) = ctx.load()?;
    if cfg.dim == 0 {
        return Err(CliError::Validation("dim must be at least 1".into()));
    }
    let var = cfg.prior.variance();
    let schedule = match &cfg.schedule {
        Some(s) => s.build()?,
        None => NoiseSchedule::default_for(100.0 * var)?,
    };
    let f = ScalarDenoiser::Mmse(cfg.prior.clone());
    let opts = FlowOptions {
        target_variance: Some(var),
        keep_trace: false,
    };
    let out = sample_probability_flow(&f, &schedule, cfg.samples, Shape::D1(cfg.dim), RngSeed(ctx.seed), opts)?;
    let name = "samples.csv".to_string();
    write_atomic(&ctx.out(&name)?, rows_csv(&out.samples).as_bytes())?;
    let n = (out.samples.len() * cfg.dim).max(1) as f64;
    let all = out.samples.iter().flat_map(|s| s.as_slice().iter().copied());
    let mean = all.clone().sum::<f64>() / n;
    let second = all.map(|v| v * v).sum::<f64>() / n;
    let summary = json!({
        "schedule": schedule,
        "target_variance": var,
        "sample_mean": mean,
        "sample_variance": second - mean * mean,
        "warnings": out.warnings,
    });
    manifest::write(&ctx.out_dir, "sample", ctx.seed, manifest::config_value(&cfg)?, vec![name], summary)
}

#[derive(Serialize)]
struct SolveReport {
    method: SolveMethod,
    iterations: usize,
    residual: f64,
    objective_trace: Vec<f64>,
    residual_trace: Vec<f64>,
}

impl SolveReport {
    fn from(method: SolveMethod, r: &SolveResult) -> Self {
        SolveReport {
            method,
            iterations: r.iterations,
            residual: r.residual,
            objective_trace: r.objective_trace.clone(),
            residual_trace: r.residual_trace.clone(),
        }
    }
}

pub fn solve(ctx: &Context) -> Result<(), CliError> {
    let (cfg, base): (config::SolveConfig, _) = ctx.load()?;
    let y = read_input(&base, &cfg.measurement, None)?;
    let shape = match cfg.shape {
        Some(g) => Shape::D2 { rows: g.rows, cols: g.cols },
        None => y.shape(),
    };
    let op = cfg.operator.build(shape)?;
    let y = Signal::new(y.into_vec(), op.output_shape())?;
    let spec = InverseProblemSpec::new(y, op, cfg.lambda, cfg.denoiser.build()?, cfg.alpha, cfg.noise_sigma)?;
    let name = output_name(&cfg.output, "estimate.csv");
    let mut outputs = vec![name.clone(), "solve.json".to_string()];
    let summary: Value;
    match cfg.method {
        SolveMethod::Red | SolveMethod::Bridge => {
            let x0 = spec.back_projection()?;
            let r = if cfg.method == SolveMethod::Red {
                red_fixed_point(&spec, &x0, cfg.max_iter, cfg.tol)?
            } else {
                if !matches!(spec.operator, denoise_core::inverse::ForwardOperator::Identity { .. }) {
                    return Err(CliError::Validation("bridge iteration needs the identity operator".into()));
                }
                bridge_iterate(&spec.y, spec.denoiser.as_ref(), cfg.alpha, cfg.lambda, &x0, cfg.max_iter, cfg.tol)?
            };
            write_signal(&ctx.out(&name)?, &r.estimate)?;
            manifest::write_json(&ctx.out("solve.json")?, &SolveReport::from(cfg.method, &r))?;
            summary = json!({ "iterations": r.iterations, "residual": r.residual });
        }
        SolveMethod::Dps => {
            let dps = cfg
                .dps
                .as_ref()
                .ok_or_else(|| CliError::Validation("method `dps` needs a `dps` section".into()))?;
            if dps.samples == 0 {
                return Err(CliError::Validation("dps.samples must be at least 1".into()));
            }
            let schedule = dps.schedule.build()?;
            let samples = (0..dps.samples as u64)
                .map(|i| dps_sample(&spec, &schedule, &dps.weight, RngSeed(ctx.seed), i))
                .collect::<Result<Vec<_>, _>>()?;
            let mut mean = vec![0.0; shape.len()];
            for s in &samples {
                for (m, v) in mean.iter_mut().zip(s.as_slice()) {
                    *m += v / samples.len() as f64;
                }
            }
            let estimate = Signal::new(mean, shape)?;
            write_signal(&ctx.out(&name)?, &estimate)?;
            write_atomic(&ctx.out("dps_samples.csv")?, rows_csv(&samples).as_bytes())?;
            outputs[1] = "dps_samples.csv".into();
            summary = json!({ "samples": samples.len(), "steps": schedule.steps() });
        }
    }
    manifest::write(&ctx.out_dir, "solve", ctx.seed, manifest::config_value(&cfg)?, outputs, summary)
}

pub fn anomaly(ctx: &Context) -> Result<(), CliError> {
    let (cfg, base): (config::AnomalyConfig, _) = ctx.load()?;
    let f = cfg.denoiser.build()?;
    let x = maybe_noise(read_input(&base, &cfg.input, cfg.shape)?, cfg.add_noise, ctx.seed)?;
    let rep = decomposition::detect_anomalies(&x, f.as_ref(), cfg.alpha, cfg.fdr_q)?;
    let mask = x.like(rep.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect());
    write_signal(&ctx.out("mask.pgm")?, &mask)?;
    manifest::write_json(&ctx.out("anomaly.json")?, &rep)?;
    let summary = json!({
        "denoiser": f.name(),
        "flagged": rep.count(),
        "sigma_estimate": rep.sigma_estimate,
        "residual_model": "gaussian, MAD scale",
    });
    manifest::write(
        &ctx.out_dir,
        "anomaly",
        ctx.seed,
        manifest::config_value(&cfg)?,
        vec!["mask.pgm".into(), "anomaly.json".into()],
        summary,
    )
}
