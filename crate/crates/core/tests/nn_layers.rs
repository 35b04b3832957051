use ofdm_nn_core::nn::*;
use ofdm_nn_core::rng::SimRng;
use proptest::prelude::*;

const H: f64 = 1e-3;

fn random(shape: &[usize], rng: &mut SimRng) -> RealTensor {
    let n = shape.iter().product();
    RealTensor::new(shape, (0..n).map(|_| rng.gaussian()).collect()).unwrap()
}

/// Largest analytic vs central-difference deviation, relative to the
/// largest numeric gradient magnitude.
fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(1e-8f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max)
        / scale
}

fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let v = x[i];
            x[i] = v + H;
            let up = f(&x);
            x[i] = v - H;
            let dn = f(&x);
            x[i] = v;
            (up - dn) / (2.0 * H)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn affine_gradients_match_finite_differences() {
    let mut rng = SimRng::new(1);
    let (b, i, o) = (8, 8, 8);
    let x = random(&[b, i], &mut rng);
    let w = random(&[o, i], &mut rng).into_data();
    let bias = random(&[o], &mut rng).into_data();
    let layer = AffineLayer::new(i, o, w.clone(), bias.clone()).unwrap();
    let probe = random(&[b, o], &mut rng);
    let g = layer.backward(&x, &probe).unwrap();

    let loss_x = |xv: &[f64]| {
        let xt = RealTensor::new(&[b, i], xv.to_vec()).unwrap();
        dot(layer.forward(&xt).unwrap().data(), probe.data())
    };
    assert!(rel_error(g.dx.data(), &numeric_grad(x.data(), loss_x)) < 1e-4);
    let loss_w = |wv: &[f64]| {
        let l = AffineLayer::new(i, o, wv.to_vec(), bias.clone()).unwrap();
        dot(l.forward(&x).unwrap().data(), probe.data())
    };
    assert!(rel_error(&g.dw, &numeric_grad(&w, loss_w)) < 1e-4);
    let loss_b = |bv: &[f64]| {
        let l = AffineLayer::new(i, o, w.clone(), bv.to_vec()).unwrap();
        dot(l.forward(&x).unwrap().data(), probe.data())
    };
    assert!(rel_error(&g.db, &numeric_grad(&bias, loss_b)) < 1e-4);
}

#[test]
fn batchnorm_train_output_is_standardized() {
    let mut rng = SimRng::new(2);
    let x = random(&[64, 6], &mut rng);
    let mut bn = BatchNormLayer::identity(6);
    let (y, _) = bn.forward(&x, BnMode::Train).unwrap();
    let (mean, var) = bn.batch_stats(&y).unwrap();
    for c in 0..6 {
        assert!(mean[c].abs() < 1e-6);
        // Biased variance with eps in the denominator.
        assert!((var[c] - 1.0).abs() < 1e-4, "var {}", var[c]);
    }
}

#[test]
fn batchnorm_gradients_match_finite_differences() {
    let mut rng = SimRng::new(3);
    let (b, c) = (8, 8);
    let x = random(&[b, c], &mut rng);
    let mut bn = BatchNormLayer::identity(c);
    bn.gamma = random(&[c], &mut rng).into_data();
    bn.beta = random(&[c], &mut rng).into_data();
    let probe = random(&[b, c], &mut rng);
    let (_, cache) = bn.clone().forward(&x, BnMode::Train).unwrap();
    let g = bn.backward(&cache, &probe).unwrap();

    let base = bn.clone();
    let loss_x = |xv: &[f64]| {
        let xt = RealTensor::new(&[b, c], xv.to_vec()).unwrap();
        let (y, _) = base.clone().forward(&xt, BnMode::Train).unwrap();
        dot(y.data(), probe.data())
    };
    assert!(rel_error(g.dx.data(), &numeric_grad(x.data(), loss_x)) < 1e-4);
    let loss_g = |gv: &[f64]| {
        let mut l = base.clone();
        l.gamma = gv.to_vec();
        dot(l.forward(&x, BnMode::Train).unwrap().0.data(), probe.data())
    };
    assert!(rel_error(&g.dgamma, &numeric_grad(&bn.gamma, loss_g)) < 1e-4);
    let loss_b = |bv: &[f64]| {
        let mut l = base.clone();
        l.beta = bv.to_vec();
        dot(l.forward(&x, BnMode::Train).unwrap().0.data(), probe.data())
    };
    assert!(rel_error(&g.dbeta, &numeric_grad(&bn.beta, loss_b)) < 1e-4);
}

#[test]
fn batchnorm_rejects_single_sample_batches() {
    let mut bn = BatchNormLayer::identity(3);
    let x = RealTensor::new(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap();
    assert!(bn.forward(&x, BnMode::Train).is_err());
    assert!(bn.forward(&x, BnMode::Eval).is_ok());
}

#[test]
fn mixconv_gradients_match_finite_differences() {
    let mut rng = SimRng::new(4);
    let (b, l) = (3, 5);
    let x = random(&[b, 4, l], &mut rng);
    let w = random(&[2, 4], &mut rng).into_data();
    let bias = random(&[2], &mut rng).into_data();
    let layer = MixConvLayer::new(4, 2, w.clone(), bias.clone()).unwrap();
    let probe = random(&[b, 2, l], &mut rng);
    let g = layer.backward(&x, &probe).unwrap();
    let loss_x = |xv: &[f64]| {
        let xt = RealTensor::new(&[b, 4, l], xv.to_vec()).unwrap();
        dot(layer.forward(&xt).unwrap().data(), probe.data())
    };
    assert!(rel_error(g.dx.data(), &numeric_grad(x.data(), loss_x)) < 1e-4);
    let loss_w = |wv: &[f64]| {
        let m = MixConvLayer::new(4, 2, wv.to_vec(), bias.clone()).unwrap();
        dot(m.forward(&x).unwrap().data(), probe.data())
    };
    assert!(rel_error(&g.dw, &numeric_grad(&w, loss_w)) < 1e-4);
}

#[test]
fn activation_gradients_match_finite_differences() {
    let mut rng = SimRng::new(5);
    // Keep LeakyReLU inputs away from the kink.
    let x: Vec<f64> = (0..32)
        .map(|_| {
            let v = rng.gaussian();
            if v.abs() < 0.01 { 0.5 } else { v }
        })
        .collect();
    let probe: Vec<f64> = (0..32).map(|_| rng.gaussian()).collect();
    let a = leaky_relu_backward(&x, &probe, LEAKY_SLOPE);
    let n = numeric_grad(&x, |v| dot(&leaky_relu(v, LEAKY_SLOPE), &probe));
    assert!(rel_error(&a, &n) < 1e-4);

    let p = sigmoid(&x);
    let a = sigmoid_backward(&p, &probe);
    let n = numeric_grad(&x, |v| dot(&sigmoid(v), &probe));
    assert!(rel_error(&a, &n) < 1e-4);
}

#[test]
fn bce_reference_values() {
    let (l, _) = bce_loss(&[0.5; 10], &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    assert!((l - core::f64::consts::LN_2).abs() < 1e-12);
    let (l, _) = bce_loss(&[1.0, 0.0], &[1.0, 0.0]);
    assert!(l <= 1e-7 + 1e-12);
    // Clamping keeps a confident wrong answer finite.
    let (l, _) = bce_loss(&[0.0], &[1.0]);
    assert!(l.is_finite() && l > 15.0);
}

#[test]
fn bce_gradients_match_finite_differences() {
    let mut rng = SimRng::new(6);
    let p: Vec<f64> = (0..16).map(|_| rng.uniform(0.05, 0.95)).collect();
    let t: Vec<f64> = (0..16).map(|_| rng.bit() as f64).collect();
    let (_, dp) = bce_loss(&p, &t);
    assert!(rel_error(&dp, &numeric_grad(&p, |v| bce_loss(v, &t).0)) < 1e-4);

    let z: Vec<f64> = (0..16).map(|_| 2.0 * rng.gaussian()).collect();
    let (lz, dz) = bce_with_logits(&z, &t);
    assert!(rel_error(&dz, &numeric_grad(&z, |v| bce_with_logits(v, &t).0)) < 1e-4);
    // Same loss as the probability form.
    let (lp, _) = bce_loss(&sigmoid(&z), &t);
    assert!((lz - lp).abs() < 1e-9);
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let cfg = AdamConfig::default();
    let mut st = AdamState::new(cfg, &[3]);
    let mut p = vec![1.0, -2.0, 0.5];
    let g = vec![0.3, -4.0, 1e-3];
    st.step(&mut [&mut p[..]], &[&g[..]]).unwrap();
    // Bias correction makes the first update ±lr·g/(|g|+eps').
    for (after, (before, gi)) in p.iter().zip([1.0, -2.0, 0.5].iter().zip(&g)) {
        let expect = before - cfg.lr * gi / (gi.abs() + cfg.eps);
        assert!((after - expect).abs() < 1e-9);
    }
}

#[test]
fn adam_minimizes_a_quadratic() {
    let mut st = AdamState::new(AdamConfig { lr: 0.05, ..AdamConfig::default() }, &[2]);
    let mut p = vec![3.0, -2.0];
    for _ in 0..2000 {
        let g: Vec<f64> = p.iter().map(|v| 2.0 * (v - 1.0)).collect();
        st.step(&mut [&mut p[..]], &[&g[..]]).unwrap();
    }
    assert!(p.iter().all(|v| (v - 1.0).abs() < 1e-3), "{p:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gemm_variants_agree_with_naive(m in 1usize..9, k in 1usize..9, n in 1usize..9, seed in 0u64..1000) {
        let mut rng = SimRng::new(seed);
        let a: Vec<f64> = (0..m * k).map(|_| rng.gaussian()).collect();
        let b: Vec<f64> = (0..k * n).map(|_| rng.gaussian()).collect();
        let mut naive = vec![0.0; m * n];
        for i in 0..m { for j in 0..n { for t in 0..k { naive[i * n + j] += a[i * k + t] * b[t * n + j]; } } }
        let mut c = vec![0.0; m * n];
        gemm::matmul(&a, &b, &mut c, m, k, n, false);
        prop_assert!(c.iter().zip(&naive).all(|(x, y)| (x - y).abs() < 1e-9));
        // A·Bᵀ with B transposed explicitly.
        let mut bt = vec![0.0; n * k];
        for t in 0..k { for j in 0..n { bt[j * k + t] = b[t * n + j]; } }
        let mut c2 = vec![0.0; m * n];
        gemm::matmul_a_bt(&a, &bt, &mut c2, m, k, n, false);
        prop_assert!(c2.iter().zip(&naive).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn leaky_relu_is_identity_on_positives(v in proptest::collection::vec(0.0f64..100.0, 1..20)) {
        prop_assert_eq!(leaky_relu(&v, LEAKY_SLOPE), v);
    }

    #[test]
    fn sigmoid_is_bounded_and_finite(v in proptest::collection::vec(-1e4f64..1e4, 1..20)) {
        for p in sigmoid(&v) {
            prop_assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        }
    }
}
