use denoise_core::denoiser::{KernelSettings, NlmDenoiser, ScalarDenoiser};
use denoise_core::kernel::{KernelKind, PatchConfig, SearchWindow, Symmetrization};
use denoise_core::noise::{add_awgn, NoiseSpec, RngSeed};
use denoise_core::properties::{
    check_conservative, check_homogeneity, check_identity, check_lipschitz, sample_pairs,
    square_loop,
};
use denoise_core::scalar::{GaussianMixture, ScalarPrior};
use denoise_core::Signal;

fn noisy_ramp(n: usize) -> Signal {
    let u = Signal::from_vec((0..n).map(|i| i as f64 / n as f64).collect()).unwrap();
    add_awgn(&u, NoiseSpec::from_sigma(0.05).unwrap(), RngSeed(3))
}

#[test]
fn gmm_mmse_is_conservative_on_a_loop() {
    let f = ScalarDenoiser::Mmse(ScalarPrior::GaussianMixture(GaussianMixture::symmetric_pair(2.0, 0.1).unwrap()));
    let x = Signal::from_vec(vec![0.3, -0.8, 1.7, 2.2]).unwrap();
    for (i, j) in [(0, 1), (1, 2), (2, 3)] {
        let lp = square_loop(&x, i, j, 0.4).unwrap();
        let rep = check_conservative(&f, &lp, 0.5, 64, 1e-4).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}

#[test]
fn taylor_nlm_small_bandwidth_identity() {
    let f = NlmDenoiser {
        settings: KernelSettings::new(
            KernelKind::Gaussian,
            PatchConfig::new(1, SearchWindow::Radius(3)).unwrap(),
            Symmetrization::Taylor,
        ),
    };
    let x = noisy_ramp(40);
    // Identity at α = 0 and in the small-bandwidth limit.
    assert!(check_identity(&f, std::slice::from_ref(&x), 0.0).unwrap().passed);
    let y = denoise_core::denoiser::Denoiser::denoise(&f, &x, 1e-8).unwrap();
    assert!(y.max_abs_diff(&x).unwrap() <= 1e-5);
}

#[test]
fn nlm_homogeneity_is_measured() {
    let f = NlmDenoiser {
        settings: KernelSettings::new(
            KernelKind::Gaussian,
            PatchConfig::new(1, SearchWindow::Radius(3)).unwrap(),
            Symmetrization::None,
        ),
    };
    let rep = check_homogeneity(&f, &noisy_ramp(32), 0.01, 1e-3, 1e-3).unwrap();
    assert!(rep.worst_metric.is_finite());
    assert_eq!(rep.passed, rep.worst_metric <= rep.tolerance);
}

#[test]
fn soft_threshold_lipschitz_report() {
    let x = Signal::from_vec(vec![0.0; 8]).unwrap();
    let pairs = sample_pairs(&x, 2.0, 1000, RngSeed(1));
    let rep = check_lipschitz(&ScalarDenoiser::SoftThreshold, 1.0, &pairs, Some(1.0)).unwrap();
    assert!(rep.passed && rep.test_points == 1000, "{rep:?}");
}
