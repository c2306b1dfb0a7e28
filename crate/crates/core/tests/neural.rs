use costa_core::neural::{
    architecture, fit_model, load_model, save_model, train, Dataset, MlpNetwork, TrainConfig,
};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

// Sign pattern of every hidden pre-activation and its distance to a kink.
fn activation_pattern(net: &MlpNetwork, x: ArrayView2<f64>) -> (Vec<bool>, f64) {
    let mut a = x.to_owned();
    let mut signs = Vec::new();
    let mut smallest = f64::INFINITY;
    let last = net.layers().len() - 1;
    for (i, l) in net.layers().iter().enumerate() {
        let mut z = a.dot(&l.weights);
        z += &l.bias;
        if i < last {
            signs.extend(z.iter().map(|v| *v < 0.0));
            smallest = z.iter().fold(smallest, |m, v| m.min(v.abs()));
            z.mapv_inplace(|v| if v < 0.0 { 0.01 * v } else { v });
        }
        a = z;
    }
    (signs, smallest)
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut net = MlpNetwork::he_uniform(&architecture(16, 16), &mut rng).unwrap();
    for l in net.layers_mut() {
        l.bias.mapv_inplace(|_| rng.gen_range(-0.1..0.1));
    }
    let x = random_matrix(4, 16, &mut rng);
    let y = random_matrix(4, 16, &mut rng);
    let (_, grads) = net.gradient(x.view(), y.view()).unwrap();
    // The loss is quadratic in any one parameter between kinks, so a
    // moderate step carries no truncation error.
    let h = 1e-3;
    let mut checked = 0;
    while checked < 20 {
        let li = rng.gen_range(0..net.layers().len());
        let use_bias = rng.gen_bool(0.2);
        let (r, c) = {
            let w = &net.layers()[li].weights;
            (rng.gen_range(0..w.nrows()), rng.gen_range(0..w.ncols()))
        };
        let analytic = if use_bias { grads[li].bias[c] } else { grads[li].weights[[r, c]] };
        let shifted = |delta: f64| {
            let mut n = net.clone();
            let l = &mut n.layers_mut()[li];
            if use_bias {
                l.bias[c] += delta;
            } else {
                l.weights[[r, c]] += delta;
            }
            n
        };
        let (plus, minus) = (shifted(h), shifted(-h));
        let (sp, dp) = activation_pattern(&plus, x.view());
        let (sm, dm) = activation_pattern(&minus, x.view());
        if sp != sm || dp.min(dm) < 1e-6 {
            continue;
        }
        let numeric = (plus.loss(x.view(), y.view()).unwrap() - minus.loss(x.view(), y.view()).unwrap()) / (2.0 * h);
        let scale = analytic.abs().max(numeric.abs()).max(1e-8);
        assert!((analytic - numeric).abs() / scale < 1e-5, "layer {li}: {analytic} vs {numeric}");
        checked += 1;
    }
}

#[test]
fn overfits_a_small_smooth_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(10, 3, &mut rng);
    let w = random_matrix(3, 2, &mut rng);
    let data = Dataset::new(x.clone(), x.dot(&w)).unwrap();
    let net = MlpNetwork::he_uniform(&[3, 16, 16, 2], &mut rng).unwrap();
    let mut cfg = TrainConfig::new(3e-3, 0);
    cfg.batch_size = 10;
    cfg.patience = 200;
    cfg.max_epochs = 5000;
    let (net, report) = train(net, &data, &data, &cfg).unwrap();
    let mse = net.loss(data.inputs.view(), data.targets.view()).unwrap();
    assert!(mse < 1e-6, "final mse {mse:e} after {} epochs", report.epochs());
}

#[test]
fn frozen_validation_stops_after_patience_plus_one_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = Dataset::new(random_matrix(8, 2, &mut rng), random_matrix(8, 1, &mut rng)).unwrap();
    let net = MlpNetwork::he_uniform(&[2, 4, 1], &mut rng).unwrap();
    // Updates far below one ulp leave the parameters, and so the loss, unchanged.
    let mut cfg = TrainConfig::new(1e-300, 0);
    cfg.patience = 7;
    let (_, report) = train(net, &data, &data, &cfg).unwrap();
    assert_eq!(report.epochs(), 8);
    assert_eq!(report.best_epoch, 1);
    assert!(report.stopped_early);
}

#[test]
fn returns_best_snapshot_not_last() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let train_set = Dataset::new(random_matrix(64, 4, &mut rng), random_matrix(64, 2, &mut rng)).unwrap();
    let val_set = Dataset::new(random_matrix(16, 4, &mut rng), random_matrix(16, 2, &mut rng)).unwrap();
    let net = MlpNetwork::he_uniform(&[4, 32, 32, 2], &mut rng).unwrap();
    let mut cfg = TrainConfig::new(1e-2, 1);
    cfg.batch_size = 16;
    cfg.patience = 5;
    let (best, report) = train(net, &train_set, &val_set, &cfg).unwrap();
    let v = best.loss(val_set.inputs.view(), val_set.targets.view()).unwrap();
    assert_eq!(v, report.best_val_loss());
    assert!(report.val_loss.iter().all(|&l| l >= v));
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_matrix(300, 5, &mut rng);
        let y = x.mapv(f64::sin);
        let d = Dataset::new(x, y).unwrap();
        let mut cfg = TrainConfig::new(1e-3, 77);
        cfg.max_epochs = 15;
        fit_model(&d, &d, &[12, 12], &cfg).unwrap()
    };
    let (m1, r1) = run();
    let (m2, r2) = run();
    assert_eq!(r1, r2);
    assert_eq!(m1, m2);
    assert!(r1.train_loss.iter().zip(&r2.train_loss).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn output_scales_with_final_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = MlpNetwork::he_uniform(&[6, 10, 10, 3], &mut rng).unwrap();
    let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let base = net.forward(&x).unwrap();
    let mut scaled = net.clone();
    let last = scaled.layers().len() - 1;
    scaled.layers_mut()[last].weights *= -2.5;
    for (a, b) in scaled.forward(&x).unwrap().iter().zip(&base) {
        assert!((a + 2.5 * b).abs() < 1e-12);
    }
}

#[test]
fn checkpoint_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = Dataset::new(random_matrix(20, 3, &mut rng), random_matrix(20, 2, &mut rng)).unwrap();
    let mut cfg = TrainConfig::new(1e-3, 5);
    cfg.max_epochs = 3;
    let (model, _) = fit_model(&d, &d, &[8], &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bin");
    save_model(&path, &model).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, model);
    let x = [0.3, -0.2, 0.9];
    let (a, b) = (model.predict(&x).unwrap(), back.predict(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    assert!(load_model(&dir.path().join("missing.bin")).is_err());
}
