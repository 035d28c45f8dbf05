use ontoembed_core::autoencoder::{self, encode, gradient, init_params, train};
use ontoembed_core::{AeParams, SparseBinaryMatrix, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss_at(params: &AeParams, x: &[f64]) -> f64 {
    let a = autoencoder::forward(params, x).unwrap();
    autoencoder::loss(x, &a.output)
}

fn field(p: &mut AeParams, k: usize) -> &mut Vec<f64> {
    match k {
        0 => &mut p.w_in,
        1 => &mut p.b_in,
        2 => &mut p.w_out,
        _ => &mut p.b_out,
    }
}

/// Largest relative error between the analytic gradient and central finite
/// differences over every parameter.
fn max_relative_error(seed: u64) -> f64 {
    let (n, d) = (6, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init_params(n, d, seed);
    for k in [1, 3] {
        for b in field(&mut params, k).iter_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
    let (_, analytic) = gradient(&params, &x).unwrap();
    let mut analytic = analytic;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        for i in 0..field(&mut params, k).len() {
            let orig = field(&mut params, k)[i];
            field(&mut params, k)[i] = orig + h;
            let up = loss_at(&params, &x);
            field(&mut params, k)[i] = orig - h;
            let down = loss_at(&params, &x);
            field(&mut params, k)[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = field(&mut analytic, k)[i];
            let scale = a.abs().max(numeric.abs());
            if scale > 1e-9 {
                worst = worst.max((a - numeric).abs() / scale);
            }
        }
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..10 {
        let err = max_relative_error(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> SparseBinaryMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows)
        .map(|_| (0..cols as u32).filter(|_| rng.random_bool(0.3)).collect())
        .collect();
    SparseBinaryMatrix::new(
        data,
        (0..rows).map(|i| format!("r{i}")).collect(),
        (0..cols).map(|i| format!("c{i}")).collect(),
    )
    .unwrap()
}

#[test]
fn training_reduces_loss() {
    let m = random_matrix(20, 10, 4);
    let cfg = TrainConfig {
        dim: 4,
        batch_size: 8,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let (_, history) = train(&m, &cfg).unwrap();
    assert_eq!(history.len(), cfg.epochs + 1);
    assert!(history.last().unwrap() < &history[0]);
    let rises = history.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(rises <= 1, "loss rose {rises} times");
}

#[test]
fn overcomplete_code_memorizes_identity() {
    let m = SparseBinaryMatrix::new(
        (0..8u32).map(|i| vec![i]).collect(),
        (0..8).map(|i| format!("r{i}")).collect(),
        (0..8).map(|i| format!("c{i}")).collect(),
    )
    .unwrap();
    let cfg = TrainConfig {
        dim: 8,
        learning_rate: 1e-2,
        epochs: 300,
        ..TrainConfig::default()
    };
    let (_, history) = train(&m, &cfg).unwrap();
    assert!(
        history.last().unwrap() < &(0.05 * history[0]),
        "initial {} final {}",
        history[0],
        history.last().unwrap()
    );
}

#[test]
fn duplicate_rows_get_identical_embeddings() {
    let m = SparseBinaryMatrix::new(
        vec![vec![0, 2], vec![1], vec![0, 2]],
        vec!["a".into(), "b".into(), "c".into()],
        vec!["x".into(), "y".into(), "z".into()],
    )
    .unwrap();
    let cfg = TrainConfig {
        dim: 2,
        epochs: 5,
        ..TrainConfig::default()
    };
    let (params, _) = train(&m, &cfg).unwrap();
    let emb = encode(&params, &m).unwrap();
    assert_eq!(emb.row(0), emb.row(2));
}

#[test]
fn training_is_deterministic() {
    let m = random_matrix(30, 12, 8);
    let cfg = TrainConfig {
        dim: 5,
        epochs: 10,
        batch_size: 7,
        ..TrainConfig::default()
    };
    let (a, ha) = train(&m, &cfg).unwrap();
    let (b, hb) = train(&m, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
}
