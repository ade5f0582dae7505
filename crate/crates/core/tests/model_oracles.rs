mod common;

use common::{gradient_check, random_sample, tiny_config};
use parkcast::eval::{count_macs, count_params};
use parkcast::model::{
    attention_weights, calendar_encoding, feed_forward, layer_norm, multi_head_attention,
    scaled_dot_attention, AttentionParams, CalendarFeature, ModelConfig, Tensor, TrainedModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn naive_matmul(a: &Tensor, b: &Tensor) -> Vec<Vec<f64>> {
    (0..a.rows())
        .map(|i| (0..b.cols()).map(|j| (0..a.cols()).map(|p| a.get(i, p) * b.get(p, j)).sum()).collect())
        .collect()
}

/// Textbook attention with an explicit exp/sum softmax.
fn naive_attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Vec<Vec<f64>> {
    let dk = q.cols() as f64;
    (0..q.rows())
        .map(|i| {
            let s: Vec<f64> = (0..k.rows())
                .map(|j| (0..q.cols()).map(|p| q.get(i, p) * k.get(j, p)).sum::<f64>() / dk.sqrt())
                .collect();
            let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = e.iter().sum();
            (0..v.cols()).map(|c| (0..k.rows()).map(|j| e[j] / z * v.get(j, c)).sum()).collect()
        })
        .collect()
}

#[test]
fn every_parameter_gradient_matches_central_differences() {
    let model = TrainedModel::init(tiny_config()).unwrap();
    let sample = random_sample(&model.config, 5);
    let check = gradient_check(&model, &sample, 1e-4);
    assert_eq!(check.entries, model.param_count());
    assert!(check.worst_rel < 1e-4, "worst {} at {}", check.worst_rel, check.worst_param);
}

#[test]
fn gradient_check_with_patches_two_layers_and_two_calendar_features() {
    let cfg = ModelConfig {
        input_channels: 3,
        window: 12,
        horizon: 3,
        d_model: 8,
        n_heads: 4,
        n_layers: 2,
        d_ff: 12,
        calendar: vec![CalendarFeature::Hour, CalendarFeature::DayOfWeek],
        patch_len: 3,
        ..tiny_config()
    };
    let model = TrainedModel::init(cfg).unwrap();
    for seed in 0..3 {
        let check = gradient_check(&model, &random_sample(&model.config, seed), 1e-4);
        assert!(check.worst_rel < 1e-4, "worst {} at {}", check.worst_rel, check.worst_param);
    }
}

#[test]
fn attention_rows_are_distributions_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let n = rng.random_range(1..10);
        let m = rng.random_range(1..10);
        let d = rng.random_range(1..6);
        let q = rand_tensor(&mut rng, n, d, 5.0);
        let k = rand_tensor(&mut rng, m, d, 5.0);
        let w = attention_weights(&q, &k).unwrap();
        for i in 0..n {
            let row = w.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}

#[test]
fn attention_matches_textbook_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let (n, m, d, dv) = (4, 6, 3, 2);
        let q = rand_tensor(&mut rng, n, d, 2.0);
        let k = rand_tensor(&mut rng, m, d, 2.0);
        let v = rand_tensor(&mut rng, m, dv, 2.0);
        let got = scaled_dot_attention(&q, &k, &v).unwrap();
        for (i, row) in naive_attention(&q, &k, &v).iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                assert!((got.get(i, c) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn identical_keys_give_uniform_rows_and_the_mean_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = rand_tensor(&mut rng, 5, 3, 4.0);
    let key: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
    let k = Tensor::from_rows(&vec![key; 7]).unwrap();
    let v = rand_tensor(&mut rng, 7, 2, 1.0);
    let w = attention_weights(&q, &k).unwrap();
    assert!(w.data.iter().all(|x| (x - 1.0 / 7.0).abs() < 1e-9));
    let out = scaled_dot_attention(&q, &k, &v).unwrap();
    for c in 0..2 {
        let mean = (0..7).map(|j| v.get(j, c)).sum::<f64>() / 7.0;
        for i in 0..5 {
            assert!((out.get(i, c) - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn two_key_example_weights_the_first_value_by_a_logistic() {
    let q = Tensor::matrix(1, 1, vec![1.0]).unwrap();
    let k = Tensor::matrix(2, 1, vec![10.0, -10.0]).unwrap();
    let v = Tensor::matrix(2, 1, vec![1.0, 0.0]).unwrap();
    let out = scaled_dot_attention(&q, &k, &v).unwrap();
    let want = 1.0 / (1.0 + (-20.0f64).exp());
    assert!((out.data[0] - want).abs() < 1e-15);
}

fn attention_params(rng: &mut ChaCha8Rng, d: usize) -> AttentionParams {
    AttentionParams {
        wq: rand_tensor(rng, d, d, 0.5),
        bq: rand_tensor(rng, 1, d, 0.1),
        wk: rand_tensor(rng, d, d, 0.5),
        bk: rand_tensor(rng, 1, d, 0.1),
        wv: rand_tensor(rng, d, d, 0.5),
        bv: rand_tensor(rng, 1, d, 0.1),
        wo: rand_tensor(rng, d, d, 0.5),
        bo: rand_tensor(rng, 1, d, 0.1),
    }
}

fn affine(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let rows: Vec<Vec<f64>> = naive_matmul(x, w)
        .into_iter()
        .map(|r| r.iter().zip(&b.data).map(|(a, c)| a + c).collect())
        .collect();
    Tensor::from_rows(&rows).unwrap()
}

#[test]
fn one_head_is_single_attention_with_projections() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = rand_tensor(&mut rng, 5, 4, 1.0);
    let p = attention_params(&mut rng, 4);
    let got = multi_head_attention(&x, &p, 1).unwrap();
    let q = affine(&x, &p.wq, &p.bq);
    let k = affine(&x, &p.wk, &p.bk);
    let v = affine(&x, &p.wv, &p.bv);
    let att = Tensor::from_rows(&naive_attention(&q, &k, &v)).unwrap();
    let want = affine(&att, &p.wo, &p.bo);
    assert_eq!(got.shape, vec![5, 4]);
    for (a, b) in got.data.iter().zip(&want.data) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn heads_must_divide_the_width() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x = rand_tensor(&mut rng, 3, 6, 1.0);
    let p = attention_params(&mut rng, 6);
    assert!(matches!(multi_head_attention(&x, &p, 4), Err(parkcast::Error::Config(_))));
    assert_eq!(multi_head_attention(&x, &p, 3).unwrap().shape, vec![3, 6]);
}

#[test]
fn swapping_two_steps_swaps_the_attention_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let p = attention_params(&mut rng, 4);
    let x = rand_tensor(&mut rng, 2, 4, 1.0);
    let swapped = Tensor::from_rows(&[x.row(1).to_vec(), x.row(0).to_vec()]).unwrap();
    let a = multi_head_attention(&x, &p, 2).unwrap();
    let b = multi_head_attention(&swapped, &p, 2).unwrap();
    for c in 0..4 {
        assert!((a.get(0, c) - b.get(1, c)).abs() < 1e-9);
        assert!((a.get(1, c) - b.get(0, c)).abs() < 1e-9);
    }
}

#[test]
fn without_calendar_the_pooled_forecast_ignores_step_order() {
    let cfg = ModelConfig { calendar: vec![], window: 2, ..tiny_config() };
    let model = TrainedModel::init(cfg).unwrap();
    let s = random_sample(&model.config, 3);
    let mut swapped = s.clone();
    swapped.input = [&s.input[2..4], &s.input[0..2]].concat();
    let a = model.forward(&s).unwrap();
    let b = model.forward(&swapped).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn feed_forward_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let h = rand_tensor(&mut rng, 4, 3, 1.0);
    let w2 = rand_tensor(&mut rng, 5, 3, 1.0);
    let zero_out = feed_forward(
        &h,
        &Tensor::zeros(&[3, 5]),
        &Tensor::zeros(&[1, 5]),
        &w2,
        &Tensor::zeros(&[1, 3]),
    )
    .unwrap();
    assert!(zero_out.data.iter().all(|v| *v == 0.0));

    // non-negative inputs, non-positive weights and a negative bias: every unit is off
    let hp = Tensor::matrix(4, 3, h.data.iter().map(|v| v.abs()).collect()).unwrap();
    let w1 = Tensor::matrix(3, 5, (0..15).map(|_| -rng.random_range(0.0..1.0)).collect()).unwrap();
    let b1 = Tensor::filled(&[1, 5], -0.1);
    let b2 = Tensor::matrix(1, 3, vec![0.3, -0.2, 0.7]).unwrap();
    let out = feed_forward(&hp, &w1, &b1, &w2, &b2).unwrap();
    for i in 0..4 {
        assert_eq!(out.row(i), b2.row(0));
    }

    let w1 = rand_tensor(&mut rng, 3, 5, 1.0);
    let b1 = rand_tensor(&mut rng, 1, 5, 0.5);
    let a = feed_forward(&h, &w1, &b1, &w2, &b2).unwrap();
    let order = [2, 0, 3, 1];
    let shuffled = Tensor::from_rows(&order.iter().map(|&i| h.row(i).to_vec()).collect::<Vec<_>>()).unwrap();
    let b = feed_forward(&shuffled, &w1, &b1, &w2, &b2).unwrap();
    for (r, &i) in order.iter().enumerate() {
        assert_eq!(b.row(r), a.row(i));
    }
}

#[test]
fn layer_norm_fixtures() {
    let ones = Tensor::filled(&[1, 4], 1.0);
    let zeros = Tensor::zeros(&[1, 4]);
    let constant = Tensor::filled(&[3, 4], 2.5);
    let out = layer_norm(&constant, &ones, &zeros, 1e-5).unwrap();
    assert!(out.data.iter().all(|v| *v == 0.0));
    assert!(layer_norm(&constant, &ones, &zeros, 0.0).is_err());
}

fn unit_affine(d: usize) -> (Tensor, Tensor) {
    (Tensor::filled(&[1, d], 1.0), Tensor::zeros(&[1, d]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn layer_norm_rows_have_zero_mean(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 6), 1..5)) {
        let x = Tensor::from_rows(&rows).unwrap();
        let (s, b) = unit_affine(6);
        let y = layer_norm(&x, &s, &b, 1e-5).unwrap();
        for i in 0..y.rows() {
            prop_assert!((y.row(i).iter().sum::<f64>() / 6.0).abs() < 1e-7);
        }
    }

    // a*x + b with eps equals x with eps / a^2, exactly in real arithmetic
    #[test]
    fn layer_norm_affine_identity(
        row in prop::collection::vec(-5.0f64..5.0, 8),
        a in 0.1f64..10.0,
        b in -20.0f64..20.0,
    ) {
        let (s, sh) = unit_affine(8);
        let x = Tensor::matrix(1, 8, row.clone()).unwrap();
        let moved = Tensor::matrix(1, 8, row.iter().map(|v| a * v + b).collect()).unwrap();
        let eps = 1e-5;
        let lhs = layer_norm(&moved, &s, &sh, eps).unwrap();
        let rhs = layer_norm(&x, &s, &sh, eps / (a * a)).unwrap();
        for (p, q) in lhs.data.iter().zip(&rhs.data) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    // With the default eps the invariance is approximate: the outputs differ by
    // about |x_hat| * eps / (2 var) <= sqrt(7) * 1e-5 / 200 for the rows kept here.
    #[test]
    fn layer_norm_is_scale_and_shift_invariant(
        row in prop::collection::vec(-50.0f64..50.0, 8),
        a in 1.0f64..8.0,
        b in -20.0f64..20.0,
    ) {
        let mean = row.iter().sum::<f64>() / 8.0;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
        prop_assume!(var > 100.0);
        let (s, sh) = unit_affine(8);
        let x = Tensor::matrix(1, 8, row.clone()).unwrap();
        let moved = Tensor::matrix(1, 8, row.iter().map(|v| a * v + b).collect()).unwrap();
        let p = layer_norm(&x, &s, &sh, 1e-5).unwrap();
        let q = layer_norm(&moved, &s, &sh, 1e-5).unwrap();
        for (u, v) in p.data.iter().zip(&q.data) {
            prop_assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn calendar_pairs_lie_on_the_unit_circle_and_repeat(secs in 0i64..400_000_000) {
        let t = parkcast::Timestamp(secs);
        let all = [CalendarFeature::Hour, CalendarFeature::DayOfWeek, CalendarFeature::DayOfMonth, CalendarFeature::Month];
        let enc = calendar_encoding(t, &all);
        for pair in enc.chunks(2) {
            prop_assert!((pair[0] * pair[0] + pair[1] * pair[1] - 1.0).abs() < 1e-12);
        }
        let day = calendar_encoding(t.plus(86_400), &[CalendarFeature::Hour]);
        let week = calendar_encoding(t.plus(7 * 86_400), &[CalendarFeature::DayOfWeek]);
        for (a, b) in enc[0..2].iter().zip(&day) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in enc[2..4].iter().zip(&week) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

fn cost_configs() -> Vec<ModelConfig> {
    vec![
        tiny_config(),
        ModelConfig { n_layers: 3, calendar: vec![], ..tiny_config() },
        ModelConfig {
            input_channels: 5,
            window: 24,
            horizon: 6,
            d_model: 16,
            n_heads: 4,
            n_layers: 2,
            d_ff: 32,
            calendar: vec![CalendarFeature::Hour, CalendarFeature::DayOfWeek],
            patch_len: 3,
            ..tiny_config()
        },
        ModelConfig { window: 36, horizon: 12, patch_len: 12, input_channels: 9, d_model: 12, n_heads: 3, ..tiny_config() },
    ]
}

#[test]
fn parameter_count_equals_enumerated_tensors() {
    for cfg in cost_configs() {
        let model = TrainedModel::init(cfg.clone()).unwrap();
        let enumerated: usize = model.parameters.values().map(|t| t.data.len()).sum();
        assert_eq!(count_params(&cfg), enumerated as u64, "{cfg:?}");
        let by_shapes: usize = cfg.param_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        assert_eq!(by_shapes, enumerated);
    }
}

#[test]
fn parameter_count_of_the_tiny_config_by_hand() {
    // embed 2*8+8, calendar 2*1*8+8, layer: 4*64+4*8 + 2*8*16+16+8 + 4*8, head 8*2+2
    let want = (16 + 8) + (16 + 8) + (256 + 32 + 256 + 16 + 8 + 32) + (16 + 2);
    assert_eq!(count_params(&tiny_config()), want);
}

#[test]
fn mac_count_equals_instrumented_forward_pass() {
    for cfg in cost_configs() {
        let model = TrainedModel::init(cfg.clone()).unwrap();
        let s = random_sample(&cfg, 1);
        let pass = model.forward_graph(&s.input, &s.input_timestamps(), None).unwrap();
        assert_eq!(count_macs(&cfg), pass.graph.macs(), "{cfg:?}");
    }
}
