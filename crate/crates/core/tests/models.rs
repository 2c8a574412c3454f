use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use marcsinh::functions::feature_map;
use marcsinh::mlp::{mlp_fit, mlp_predict, mlp_predict_proba, Network, OutputTransform};
use marcsinh::svm::{svc_fit, svc_predict};
use marcsinh::{ActivationKind, Dataset, DerivativeMode, Error, KernelKind, Matrix, MlpConfig, SvmConfig};

/// Three noisy clusters in 4-d, deterministic from `seed`.
fn blobs(n_per_class: usize, seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let centres = [[0.0, 0.0, 0.0, 0.0], [4.0, 4.0, 0.0, 1.0], [-4.0, 3.0, 2.0, -1.0]];
    let n = n_per_class * 3;
    let mut x = Matrix::zeros((n, 4));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        for j in 0..4 {
            x[[i, j]] = centres[c][j] + rng.random_range(-1.0..1.0);
        }
        y.push(c);
    }
    Dataset::new("blobs", x, y, vec!["a".into(), "b".into(), "c".into()]).unwrap()
}

#[test]
fn svm_fit_is_deterministic() {
    let d = blobs(20, 1);
    for name in KernelKind::ALL_NAMES {
        let cfg = SvmConfig::new(KernelKind::from_name(name, 0.1).unwrap());
        let (a, b) = (svc_fit(&d, &cfg), svc_fit(&d, &cfg));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a, b, "{name}");
                assert_eq!(svc_predict(&a, &d.x).unwrap(), svc_predict(&b, &d.x).unwrap());
            }
            (Err(Error::DidNotConverge { .. }), Err(Error::DidNotConverge { .. })) => {}
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn svm_separable_blobs_are_learned() {
    let d = blobs(15, 2);
    let model = svc_fit(&d, &SvmConfig::new(KernelKind::Linear)).unwrap();
    assert_eq!(model.pairs.len(), 3);
    assert_eq!(svc_predict(&model, &d.x).unwrap(), d.y);
}

#[test]
fn svm_rejects_wrong_width_and_single_class() {
    let d = blobs(5, 3);
    let model = svc_fit(&d, &SvmConfig::new(KernelKind::Linear)).unwrap();
    assert!(matches!(svc_predict(&model, &Matrix::zeros((2, 3))), Err(Error::DimensionMismatch(_))));
    let one = Dataset::new("one", array![[1.0], [2.0]], vec![0, 0], vec!["a".into()]).unwrap();
    assert!(svc_fit(&one, &SvmConfig::new(KernelKind::Linear)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn marcsinh_kernel_equals_linear_on_mapped_features(seed in 0u64..1000, n in 6usize..24) {
        let d = blobs(n / 3 + 2, seed);
        let mapped = Dataset::new("mapped", d.x.mapv(feature_map), d.y.clone(), d.class_names.clone()).unwrap();
        let test = blobs(4, seed + 1).x;
        let a = svc_fit(&d, &SvmConfig::new(KernelKind::MArcsinh));
        let b = svc_fit(&mapped, &SvmConfig::new(KernelKind::Linear));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(
                svc_predict(&a, &test).unwrap(),
                svc_predict(&b, &test.mapv(feature_map)).unwrap()
            ),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn predictions_are_proba_argmax(seed in 0u64..1000, k in 2usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (width, transform) = if k == 2 { (1, OutputTransform::Logistic) } else { (k, OutputTransform::Softmax) };
        let network = Network::glorot(&[3, 5, width], ActivationKind::Tanh, transform, &mut rng);
        let model = marcsinh::MlpModel {
            network,
            class_names: (0..k).map(|c| c.to_string()).collect(),
            loss_curve: vec![],
            converged: false,
        };
        let x = Matrix::from_shape_simple_fn((10, 3), || rng.random_range(-5.0..5.0));
        let p = mlp_predict_proba(&model, &x).unwrap();
        let labels = mlp_predict(&model, &x).unwrap();
        for (row, &label) in p.rows().into_iter().zip(&labels) {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&v| v <= row[label]));
        }
    }
}

#[test]
fn mlp_is_deterministic_and_seed_sensitive() {
    let d = blobs(20, 4);
    let mut cfg = MlpConfig::new(ActivationKind::M_ARCSINH);
    cfg.max_iter = 40;
    let a = mlp_fit(&d, &cfg).unwrap();
    let b = mlp_fit(&d, &cfg).unwrap();
    assert_eq!(a.loss_curve, b.loss_curve);
    assert_eq!(mlp_predict(&a, &d.x).unwrap(), mlp_predict(&b, &d.x).unwrap());

    cfg.seed = 2;
    let c = mlp_fit(&d, &cfg).unwrap();
    assert_ne!(a.network.layers[0].weights, c.network.layers[0].weights);
}

#[test]
fn mlp_loss_goes_down_and_shapes_chain() {
    let d = blobs(30, 5);
    let mut cfg = MlpConfig::new(ActivationKind::Relu);
    cfg.hidden_sizes = vec![8, 6];
    let m = mlp_fit(&d, &cfg).unwrap();
    let dims: Vec<(usize, usize)> = m.network.layers.iter().map(|l| l.weights.dim()).collect();
    assert_eq!(dims, vec![(4, 8), (8, 6), (6, 3)]);
    assert!(m.loss_curve.len() <= cfg.max_iter);
    assert!(m.loss_curve.last().unwrap() < m.loss_curve.first().unwrap());
}

#[test]
fn strong_l2_shrinks_weights_below_initialisation() {
    let d = blobs(20, 6);
    let mut cfg = MlpConfig::new(ActivationKind::Tanh);
    cfg.max_iter = 1;
    cfg.learning_rate = 1e-12;
    let untrained = mlp_fit(&d, &cfg).unwrap().network.weight_norm_sq();

    let mut cfg = MlpConfig::new(ActivationKind::Tanh);
    cfg.l2_alpha = 1e6;
    cfg.max_iter = 100;
    let trained = mlp_fit(&d, &cfg).unwrap().network.weight_norm_sq();
    assert!(trained < untrained, "{trained} vs {untrained}");
}

#[test]
fn output_evaluated_derivative_handles_zero_inputs() {
    let mut x = Array2::zeros((12, 3));
    for i in 6..12 {
        x[[i, 0]] = 1.0;
    }
    let y: Vec<usize> = (0..12).map(|i| usize::from(i >= 6)).collect();
    let d = Dataset::new("zeros", x, y, vec!["a".into(), "b".into()]).unwrap();
    for mode in [DerivativeMode::PaperFaithful, DerivativeMode::Exact] {
        let m = mlp_fit(&d, &MlpConfig::new(ActivationKind::MArcsinh { mode })).unwrap();
        assert!(m.loss_curve.iter().all(|l| l.is_finite()));
        let p = mlp_predict_proba(&m, &d.x).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn derivative_modes_train_differently() {
    let d = blobs(20, 7);
    let fit = |mode| {
        let mut cfg = MlpConfig::new(ActivationKind::MArcsinh { mode });
        cfg.max_iter = 5;
        mlp_fit(&d, &cfg).unwrap().loss_curve
    };
    assert_ne!(fit(DerivativeMode::PaperFaithful), fit(DerivativeMode::Exact));
}
