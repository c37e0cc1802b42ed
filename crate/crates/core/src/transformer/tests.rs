use super::*;
use crate::complexity::lz78_phrases;
use crate::net::ActivationKind;
use proptest::prelude::*;

fn small() -> TransformerConfig {
    TransformerConfig { n_layers: 2, d_model: 32, n_heads: 4, vocab_size: 50, context: 24, ..Default::default() }
}

#[test]
fn closed_form_parameter_count() {
    let cfg = TransformerConfig::default();
    let d = 256;
    let expected = 5000 * d + 128 * d + 6 * (12 * d * d + 13 * d) + 2 * d;
    assert_eq!(cfg.param_count(), expected);
    assert_eq!(expected, 6_051_840);
    assert_eq!(Transformer::init(&cfg).unwrap().param_count(), expected);
    assert_eq!(TransformerConfig::gpt2_small().param_count(), 124_439_808);
}

#[test]
fn init_statistics_and_determinism() {
    let cfg = TransformerConfig { seed: 3, ..small() };
    let a = Transformer::init(&cfg).unwrap();
    assert_eq!(a, Transformer::init(&cfg).unwrap());
    assert_ne!(a.wte, Transformer::init(&TransformerConfig { seed: 4, ..cfg }).unwrap().wte);
    for b in &a.blocks {
        assert!(b.ln1.gain.iter().chain(&b.ln2.gain).all(|&g| g == 1.0));
        assert!(b.qkv.bias.iter().chain(&b.fc.bias).all(|&v| v == 0.0));
    }
    let w = &a.blocks[0].fc.weight;
    let var = w.iter().map(|v| (v * v) as f64).sum::<f64>() / w.len() as f64;
    assert!((var.sqrt() - 0.02).abs() < 0.001, "{}", var.sqrt());
    let g = Transformer::init(&TransformerConfig { ln_scaling: 2.5, ..cfg }).unwrap();
    assert!(g.blocks.iter().all(|b| b.ln2.gain.iter().all(|&x| x == 2.5)));
    assert!(Transformer::init(&TransformerConfig { n_heads: 5, ..cfg }).is_err());
}

#[test]
fn attention_rows_are_distributions() {
    let m = Transformer::init(&TransformerConfig { init_std: 0.3, ..small() }).unwrap();
    let out = m.forward(&[3, 9, 9, 41, 0, 17, 8]).unwrap();
    for layer in &out.attention {
        for head in layer {
            for (i, row) in head.rows().into_iter().enumerate() {
                assert!(row.iter().all(|&p| p >= 0.0));
                assert!((row.sum() - 1.0).abs() < 1e-6);
                assert!(row.iter().skip(i + 1).all(|&p| p == 0.0));
            }
        }
    }
}

#[test]
fn cached_steps_match_full_forward() {
    let m = Transformer::init(&TransformerConfig { init_std: 0.2, ..small() }).unwrap();
    let toks = [5, 1, 44, 44, 2, 30];
    let full = m.forward(&toks).unwrap();
    let mut cache = m.new_cache();
    for (p, &t) in toks.iter().enumerate() {
        let l = m.step(&mut cache, t).unwrap();
        for (a, b) in l.iter().zip(full.logits.row(p)) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
    assert_eq!(cache.len(), toks.len());
}

#[test]
fn argmax_prefers_lowest_index_on_ties() {
    assert_eq!(argmax(&[0.0, 2.0, 2.0, 1.0]), 1);
    assert_eq!(argmax(&[0.0; 5]), 0);
}

#[test]
fn generation_is_deterministic_with_exact_length() {
    let m = Transformer::init(&small()).unwrap();
    let a = greedy_generate(&m, 7, 20).unwrap();
    assert_eq!(a, greedy_generate(&m, 7, 20).unwrap());
    assert_eq!(a.tokens.len(), 20);
    assert!(greedy_generate(&m, 7, 24).is_err());
    assert!(greedy_generate(&m, 50, 3).is_err());
    let seq = greedy_generate(&Transformer::init(&TransformerConfig::default()).unwrap(), 11, GENERATED_TOKENS).unwrap();
    assert_eq!(seq.tokens.len(), 100);
}

#[test]
fn zero_gain_collapses_the_decode() {
    for seed in 0..5 {
        let cfg = TransformerConfig { ln_scaling: 0.0, seed, ..TransformerConfig::default() };
        let (_, toks) = sample_sequence(&cfg, 0).unwrap();
        assert!(lz78_phrases(&toks) <= 16, "seed {seed}: {:?}", &toks[..10]);
    }
}

#[test]
fn embedding_only_model_is_below_uniform_control() {
    let cfg = TransformerConfig { n_layers: 0, ..TransformerConfig::default() };
    let model: Vec<f64> = sequence_complexities(&cfg, 60).unwrap().into_iter().map(|v| v as f64).collect();
    let ctrl: Vec<f64> = uniform_control(5000, 100, 60, 0).into_iter().map(|v| v as f64).collect();
    assert!(crate::stats::mean(&model) < crate::stats::mean(&ctrl));
}

#[test]
fn sweep_rows_follow_cell_then_sequence_order() {
    let axis = SweepAxis::Activation(vec![ActivationKind::Relu, ActivationKind::Gelu]);
    let cfg = TransformerConfig { context: 101, ..small() };
    let s = sequence_complexity_sweep(&cfg, &axis, 3).unwrap();
    assert_eq!(s.cells.len(), 2);
    let rows = crate::csv::parse(s.rows_csv().as_str());
    assert_eq!(rows.len(), 1 + 6);
    assert_eq!(rows[1][1], "relu");
    assert_eq!(rows[4][1], "gelu");
    assert_eq!(rows[5][2], "1");
    let again = sequence_complexity_sweep(&cfg, &axis, 3).unwrap();
    assert_eq!(s.rows_csv().as_str(), again.rows_csv().as_str());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn future_tokens_do_not_change_past_logits(
        prefix in proptest::collection::vec(0usize..50, 1..8),
        a in proptest::collection::vec(0usize..50, 1..6),
        b in proptest::collection::vec(0usize..50, 1..6),
        seed in 0u64..4,
    ) {
        let m = Transformer::init(&TransformerConfig { init_std: 0.2, seed, ..small() }).unwrap();
        let x: Vec<usize> = prefix.iter().chain(&a).cloned().collect();
        let y: Vec<usize> = prefix.iter().chain(&b).cloned().collect();
        let (fx, fy) = (m.forward(&x).unwrap(), m.forward(&y).unwrap());
        for p in 0..prefix.len() {
            for (u, v) in fx.logits.row(p).iter().zip(fy.logits.row(p)) {
                prop_assert!((u - v).abs() <= 1e-6);
            }
        }
    }
}
