use std::sync::Arc;

use proptest::prelude::*;

use denoise_core::decomposition::{decompose, recombine, reconstruct};
use denoise_core::denoiser::{Denoiser, DenoiserHandle, Identity, LinearDenoiser, ScalarDenoiser};
use denoise_core::flow::{flow_step, score_from_denoiser, tweedie_denoise_from_score};
use denoise_core::inverse::ForwardOperator;
use denoise_core::kernel::{sinkhorn_symmetrize, KernelKind, KernelMatrix, SinkhornOptions, SquareMatrix};
use denoise_core::properties::{affine_combine, check_identity, jacobian_fd};
use denoise_core::scalar::{GaussianMixture, ScalarPrior};
use denoise_core::{Shape, Signal};
use nalgebra::DMatrix;

fn signal(max_len: usize) -> impl Strategy<Value = Signal> {
    prop::collection::vec(-5.0f64..5.0, 2..max_len).prop_map(|v| Signal::from_vec(v).unwrap())
}

fn scalar_denoiser() -> impl Strategy<Value = ScalarDenoiser> {
    prop_oneof![
        Just(ScalarDenoiser::SoftThreshold),
        (0.2f64..3.0).prop_map(|b| ScalarDenoiser::Mmse(ScalarPrior::laplacian(b).unwrap())),
        (0.5f64..3.0, 0.05f64..1.0).prop_map(|(m, v)| {
            ScalarDenoiser::Mmse(ScalarPrior::GaussianMixture(GaussianMixture::symmetric_pair(m, v).unwrap()))
        }),
        (0.2f64..3.0).prop_map(|b| ScalarDenoiser::Map(ScalarPrior::laplacian(b).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_reconstructs(x in signal(40), f in scalar_denoiser(), alpha in 0.01f64..2.0, n in 1usize..6) {
        let d = decompose(&f, &x, alpha, n).unwrap();
        let r = reconstruct(&d).unwrap();
        prop_assert!(r.max_abs_diff(&x).unwrap() <= 1e-12);
        prop_assert_eq!(recombine(&d, 1.0, &vec![1.0; n]).unwrap(), r);
    }

    #[test]
    fn convolution_adjoint(taps in prop::collection::vec(-1.0f64..1.0, 1..7), x in signal(30), z in signal(30)) {
        let n = x.len().min(z.len()).max(taps.len());
        let pad = |s: &Signal| Signal::from_vec((0..n).map(|i| s.as_slice().get(i).copied().unwrap_or(0.3)).collect()).unwrap();
        let (x, z) = (pad(&x), pad(&z));
        let k = taps.len();
        let h = ForwardOperator::convolution(Shape::D1(n), taps, (1, k)).unwrap();
        let lhs = h.apply(&x).unwrap().dot(&z).unwrap();
        let rhs = x.dot(&h.adjoint(&z).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn sinkhorn_is_doubly_stochastic(n in 2usize..10, seed in prop::collection::vec(0.05f64..1.0, 100)) {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                data[i * n + j] = seed[(i * 10 + j) % 100];
                data[j * n + i] = data[i * n + j];
            }
        }
        let k = KernelMatrix { matrix: SquareMatrix::dense(n, data).unwrap(), alpha: 1.0, kind: KernelKind::Gaussian };
        let out = sinkhorn_symmetrize(&k, SinkhornOptions::default()).unwrap();
        prop_assert_eq!(out.weights.matrix.max_asymmetry(), 0.0);
        prop_assert!(out.weights.max_row_imbalance() <= 1e-8);
        prop_assert!(out.weights.max_col_imbalance() <= 1e-8);
    }

    #[test]
    fn affine_identity_closure(a in -3.0f64..3.0, f in scalar_denoiser(), x in signal(20)) {
        let fs: Vec<DenoiserHandle> = vec![Arc::new(f), Arc::new(Identity)];
        let g = affine_combine(&fs, &[a, 1.0 - a]).unwrap();
        prop_assert!(check_identity(g.as_ref(), &[x], 1e-14).unwrap().passed);
    }

    #[test]
    fn soft_threshold_non_expansive(x in signal(20), y in signal(20), alpha in 0.0f64..3.0) {
        let n = x.len().min(y.len());
        let cut = |s: &Signal| Signal::from_vec(s.as_slice()[..n].to_vec()).unwrap();
        let (x, y) = (cut(&x), cut(&y));
        let f = ScalarDenoiser::SoftThreshold;
        let d = f.denoise(&x, alpha).unwrap().sub(&f.denoise(&y, alpha).unwrap()).unwrap().norm();
        prop_assert!(d <= x.sub(&y).unwrap().norm() + 1e-12);
    }

    #[test]
    fn linear_jacobian_independent_of_step(entries in prop::collection::vec(-1.0f64..1.0, 16), h in 1e-6f64..1e-4) {
        let m = DMatrix::from_row_slice(4, 4, &entries);
        let f = LinearDenoiser::new(m.clone()).unwrap();
        let x = Signal::from_vec(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        prop_assert!((jacobian_fd(&f, &x, 0.1, h).unwrap() - m).amax() < 1e-7);
    }

    #[test]
    fn tweedie_round_trip(x in signal(20), f in scalar_denoiser(), alpha in 0.01f64..4.0) {
        let direct = f.denoise(&x, alpha).unwrap();
        let back = tweedie_denoise_from_score(|v, a| score_from_denoiser(&f, v, a), &x, alpha).unwrap();
        prop_assert!(back.max_abs_diff(&direct).unwrap() <= 1e-12 * (1.0 + x.max_abs()));
    }

    #[test]
    fn identity_flow_step_is_stationary(x in signal(20), at in 0.1f64..10.0, frac in 0.0f64..1.0) {
        let ap = at * (0.01 + 0.99 * frac);
        let y = flow_step(&x, at, ap, &Identity).unwrap();
        prop_assert!(y.max_abs_diff(&x).unwrap() <= 1e-15 * x.max_abs().max(1.0) * 4.0);
    }
}
