mod common;

use common::*;
use mcmult::arch::unit::{ct_forward, mact_forward, multiscale_aggregate, positionwise_ff, Dropout, UnitParams};
use mcmult::arch::{
    build_connectivity, count_parameters, crossmodal_attention, embed_low_level, AttentionParams, Branch,
    BranchSet, Context, EmbedParams, ModalityInput, ModalityKind, Model, ModelConfig, SampleInputs, Task,
    Variant,
};
use mcmult::tensor::{ParameterStore, Tape, Tensor};
use mcmult::Error;
use proptest::prelude::*;
use rand::Rng;

const NO_DROPOUT: Dropout = Dropout { attn: 0.0, fc: 0.0 };

fn attention_params(seed: u64, width: usize, heads: usize) -> (ParameterStore, AttentionParams) {
    let mut store = ParameterStore::new(seed);
    let p = AttentionParams::register(&mut store, "attn", width, heads, 1);
    let b_o = p.b_o;
    *store.get_mut(b_o) = random_tensor(&mut rng(seed + 100), 1, width, 0.5);
    (store, p)
}

fn run_attention(
    store: &ParameterStore,
    p: &AttentionParams,
    target: &Tensor,
    source: &Tensor,
    mask: Option<&[bool]>,
) -> mcmult::Result<(Tensor, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let t = tape.leaf(target.clone());
    let s = tape.leaf(source.clone());
    let (out, w) = crossmodal_attention(&mut tape, store, p, t, s, mask, 0.0, &mut Context::eval_traced())?;
    Ok((tape.value(out).clone(), w))
}

fn oracle_attention(
    store: &ParameterStore,
    p: &AttentionParams,
    target: &Tensor,
    source: &Tensor,
    mask: Option<&[bool]>,
) -> (Tensor, Vec<Tensor>) {
    attention(
        target,
        source,
        store.get(p.w_q),
        store.get(p.kv[0].w_k),
        store.get(p.kv[0].w_v),
        store.get(p.w_o),
        store.get(p.b_o),
        p.heads,
        mask,
    )
}

#[test]
fn single_source_step_forces_unit_weight() {
    let (store, p) = attention_params(1, 8, 2);
    let target = random_tensor(&mut rng(2), 5, 8, 1.0);
    let source = random_tensor(&mut rng(3), 1, 8, 1.0);
    let (out, weights) = run_attention(&store, &p, &target, &source, None).unwrap();
    let expected = add_row(&mm(&mm(&source, store.get(p.kv[0].w_v)), store.get(p.w_o)), store.get(p.b_o));
    for r in 0..5 {
        for c in 0..8 {
            assert!((out.get(r, c) - expected.get(0, c)).abs() < 1e-12);
        }
    }
    for w in weights {
        assert!(w.data().iter().all(|&v| v == 1.0));
    }
}

#[test]
fn zero_queries_attend_uniformly() {
    let (mut store, p) = attention_params(4, 8, 2);
    *store.get_mut(p.w_q) = Tensor::zeros(8, 8);
    let target = random_tensor(&mut rng(5), 3, 8, 1.0);
    let source = random_tensor(&mut rng(6), 6, 8, 1.0);
    let (out, _) = run_attention(&store, &p, &target, &source, None).unwrap();
    let v = mm(&source, store.get(p.kv[0].w_v));
    let mean = Tensor::from_fn(1, 8, |_, c| (0..6).map(|r| v.get(r, c)).sum::<f64>() / 6.0);
    let expected = add_row(&mm(&mean, store.get(p.w_o)), store.get(p.b_o));
    for r in 0..3 {
        for c in 0..8 {
            assert!((out.get(r, c) - expected.get(0, c)).abs() < 1e-12);
        }
    }
}

#[test]
fn two_by_two_matches_step_by_step_oracle() {
    for seed in 0..5 {
        let (store, p) = attention_params(10 + seed, 2, 1);
        let target = random_tensor(&mut rng(20 + seed), 2, 2, 1.5);
        let source = random_tensor(&mut rng(30 + seed), 2, 2, 1.5);
        let (out, w) = run_attention(&store, &p, &target, &source, None).unwrap();
        let (want, want_w) = oracle_attention(&store, &p, &target, &source, None);
        assert!(out.max_abs_diff(&want) < 1e-12);
        assert!(w[0].max_abs_diff(&want_w[0]) < 1e-12);
    }
}

#[test]
fn multi_head_matches_oracle_with_mask() {
    let (store, p) = attention_params(40, 8, 4);
    let target = random_tensor(&mut rng(41), 4, 8, 1.0);
    let source = random_tensor(&mut rng(42), 6, 8, 1.0);
    let mask = [true, true, true, true, false, false];
    let (out, w) = run_attention(&store, &p, &target, &source, Some(&mask)).unwrap();
    let (want, want_w) = oracle_attention(&store, &p, &target, &source, Some(&mask));
    assert!(out.max_abs_diff(&want) < 1e-12);
    for (a, b) in w.iter().zip(&want_w) {
        assert!(a.max_abs_diff(b) < 1e-12);
    }
}

#[test]
fn masked_positions_get_zero_weight_and_do_not_leak() {
    let (store, p) = attention_params(50, 8, 2);
    let target = random_tensor(&mut rng(51), 3, 8, 1.0);
    let mut source = random_tensor(&mut rng(52), 5, 8, 1.0);
    let mask = [true, true, true, false, false];
    let (a, w) = run_attention(&store, &p, &target, &source, Some(&mask)).unwrap();
    for head in &w {
        for r in 0..3 {
            assert_eq!(head.get(r, 3), 0.0);
            assert_eq!(head.get(r, 4), 0.0);
            let s: f64 = head.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
    for c in 0..8 {
        source.set(3, c, 1e3);
        source.set(4, c, -7.0);
    }
    let (b, _) = run_attention(&store, &p, &target, &source, Some(&mask)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fully_masked_source_is_degenerate() {
    let (store, p) = attention_params(60, 4, 2);
    let target = random_tensor(&mut rng(61), 2, 4, 1.0);
    let source = random_tensor(&mut rng(62), 3, 4, 1.0);
    let err = run_attention(&store, &p, &target, &source, Some(&[false; 3])).unwrap_err();
    assert!(matches!(err, Error::DegenerateMask { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attention_ignores_source_order(seed in any::<u64>(), t_a in 1usize..6, t_b in 1usize..8) {
        let (store, p) = attention_params(seed, 8, 2);
        let mut r = rng(seed ^ 0x5555);
        let target = random_tensor(&mut r, t_a, 8, 1.0);
        let source = random_tensor(&mut r, t_b, 8, 1.0);
        let mut order: Vec<usize> = (0..t_b).collect();
        order.reverse();
        order.rotate_left(seed as usize % t_b);
        let permuted = Tensor::from_fn(t_b, 8, |i, j| source.get(order[i], j));
        let (a, _) = run_attention(&store, &p, &target, &source, None).unwrap();
        let (b, _) = run_attention(&store, &p, &target, &permuted, None).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }
}

fn unit(seed: u64, width: usize, sources: usize, mact: bool) -> (ParameterStore, UnitParams) {
    let mut store = ParameterStore::new(seed);
    let u = if mact {
        UnitParams::register_mact(&mut store, "u", width, 2, sources)
    } else {
        UnitParams::register_ct(&mut store, "u", width, 2)
    };
    // Non-trivial biases and norm parameters.
    let mut r = rng(seed + 7);
    for id in [u.ln_prev.gain, u.ln_ff.gain] {
        *store.get_mut(id) = random_tensor(&mut r, 1, width, 0.5).map(|v| v + 1.0);
    }
    for id in [u.ln_prev.bias, u.ln_ff.bias, u.ff.b2, u.attention.b_o] {
        *store.get_mut(id) = random_tensor(&mut r, 1, width, 0.3);
    }
    let b1 = u.ff.b1;
    *store.get_mut(b1) = random_tensor(&mut r, 1, 4 * width, 0.3);
    (store, u)
}

#[test]
fn aggregate_of_one_candidate_is_identity() {
    let (store, u) = unit(70, 8, 1, true);
    let mut tape = Tape::new();
    let prev = tape.leaf(random_tensor(&mut rng(71), 4, 8, 1.0));
    let c = tape.leaf(random_tensor(&mut rng(72), 4, 8, 1.0));
    let out = multiscale_aggregate(&mut tape, &store, u.aggregate.as_ref().unwrap(), prev, &[c]).unwrap();
    assert_eq!(tape.value(out), tape.value(c));
}

#[test]
fn aggregate_of_equal_candidates_is_that_candidate() {
    let (store, u) = unit(73, 8, 3, true);
    let mut tape = Tape::new();
    let prev = tape.leaf(random_tensor(&mut rng(74), 4, 8, 1.0));
    let value = random_tensor(&mut rng(75), 4, 8, 1.0);
    let cs: Vec<_> = (0..3).map(|_| tape.leaf(value.clone())).collect();
    let out = multiscale_aggregate(&mut tape, &store, u.aggregate.as_ref().unwrap(), prev, &cs).unwrap();
    assert!(tape.value(out).max_abs_diff(&value) < 1e-12);
}

#[test]
fn aggregate_stays_inside_candidate_envelope() {
    for seed in 0..10 {
        let (store, u) = unit(80 + seed, 8, 3, true);
        let mut tape = Tape::new();
        let mut r = rng(90 + seed);
        let prev = tape.leaf(random_tensor(&mut r, 5, 8, 2.0));
        let values: Vec<Tensor> = (0..3).map(|_| random_tensor(&mut r, 5, 8, 2.0)).collect();
        let cs: Vec<_> = values.iter().map(|v| tape.leaf(v.clone())).collect();
        let out = multiscale_aggregate(&mut tape, &store, u.aggregate.as_ref().unwrap(), prev, &cs).unwrap();
        let out = tape.value(out);
        for i in 0..5 {
            for j in 0..8 {
                let lo = values.iter().map(|v| v.get(i, j)).fold(f64::INFINITY, f64::min);
                let hi = values.iter().map(|v| v.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
                assert!(out.get(i, j) >= lo - 1e-12 && out.get(i, j) <= hi + 1e-12);
            }
        }
    }
}

#[test]
fn aggregate_rejects_empty_set() {
    let (store, u) = unit(99, 4, 1, true);
    let mut tape = Tape::new();
    let prev = tape.leaf(Tensor::zeros(2, 4));
    let err = multiscale_aggregate(&mut tape, &store, u.aggregate.as_ref().unwrap(), prev, &[]).unwrap_err();
    assert!(matches!(err, Error::Contract(_)));
}

fn run_ff(store: &ParameterStore, u: &UnitParams, a: &Tensor, prev: &Tensor) -> Tensor {
    let mut tape = Tape::new();
    let av = tape.leaf(a.clone());
    let pv = tape.leaf(prev.clone());
    let (z, _) = positionwise_ff(&mut tape, store, u, av, pv, 0.0, &mut Context::eval()).unwrap();
    tape.value(z).clone()
}

#[test]
fn feed_forward_matches_formula_oracle() {
    let (store, u) = unit(100, 8, 1, false);
    let a = random_tensor(&mut rng(101), 5, 8, 1.0);
    let prev = random_tensor(&mut rng(102), 5, 8, 1.0);
    let want = feed_forward(&RefUnit::load(&store, "u"), &a, &prev).0;
    assert!(run_ff(&store, &u, &a, &prev).max_abs_diff(&want) < 1e-12);
}

#[test]
fn zero_feed_forward_leaves_residual() {
    let (mut store, u) = unit(103, 8, 1, false);
    *store.get_mut(u.ff.w2) = Tensor::zeros(32, 8);
    *store.get_mut(u.ff.b2) = Tensor::zeros(1, 8);
    let a = random_tensor(&mut rng(104), 3, 8, 1.0);
    let prev = random_tensor(&mut rng(105), 3, 8, 1.0);
    let r = RefUnit::load(&store, "u");
    let want = add(&a, &layer_norm(&prev, &r.ln_prev.0, &r.ln_prev.1));
    assert!(run_ff(&store, &u, &a, &prev).max_abs_diff(&want) < 1e-12);

    // A = 0, constant rows, identity norm: everything vanishes.
    let mut store = ParameterStore::new(0);
    let u = UnitParams::register_ct(&mut store, "u", 8, 2);
    *store.get_mut(u.ff.w2) = Tensor::zeros(32, 8);
    let prev = Tensor::from_fn(3, 8, |r, _| r as f64 + 0.5);
    let z = run_ff(&store, &u, &Tensor::zeros(3, 8), &prev);
    assert!(z.data().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn ct_equals_single_scale_mact_bitwise() {
    for seed in 0..5 {
        let (store, u) = unit(110 + seed, 8, 1, true);
        let mut r = rng(120 + seed);
        let prev = random_tensor(&mut r, 4, 8, 1.0);
        let src = random_tensor(&mut r, 7, 8, 1.0);
        let mut tape = Tape::new();
        let pv = tape.leaf(prev);
        let sv = tape.leaf(src);
        let mut ctx = Context::eval();
        let (a, _) = mact_forward(&mut tape, &store, &u, pv, &[sv], None, NO_DROPOUT, &mut ctx).unwrap();
        let (b, _) = ct_forward(&mut tape, &store, &u, pv, sv, None, NO_DROPOUT, &mut ctx).unwrap();
        assert_eq!(tape.value(a), tape.value(b));
    }
}

#[test]
fn ct_matches_composed_oracle() {
    for seed in 0..5 {
        let (store, u) = unit(130 + seed, 2, 1, false);
        let mut r = rng(140 + seed);
        let prev = random_tensor(&mut r, 2, 2, 1.0);
        let src = random_tensor(&mut r, 2, 2, 1.0);
        let mut tape = Tape::new();
        let pv = tape.leaf(prev.clone());
        let sv = tape.leaf(src.clone());
        let (z, _) = ct_forward(&mut tape, &store, &u, pv, sv, None, NO_DROPOUT, &mut Context::eval()).unwrap();
        let want = ct(&RefUnit::load(&store, "u"), &prev, &src, 2, None);
        assert!(tape.value(z).max_abs_diff(&want) < 1e-12);
    }
}

#[test]
fn mact_trace_rows_sum_to_one_and_output_keeps_target_extent() {
    let (store, u) = unit(150, 8, 3, true);
    let mut r = rng(151);
    let mut tape = Tape::new();
    let prev = tape.leaf(random_tensor(&mut r, 4, 8, 1.0));
    let srcs: Vec<_> = (0..3).map(|_| tape.leaf(random_tensor(&mut r, 9, 8, 1.0))).collect();
    let (z, trace) =
        mact_forward(&mut tape, &store, &u, prev, &srcs, None, NO_DROPOUT, &mut Context::eval_traced()).unwrap();
    assert_eq!(tape.shape(z), [4, 8]);
    let trace = trace.unwrap();
    assert_eq!(trace.interactions.len(), 3);
    for per_scale in &trace.attention {
        assert_eq!(per_scale.len(), 2);
        for w in per_scale {
            assert_eq!(w.shape(), [4, 9]);
            for row in 0..4 {
                assert!((w.row(row).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn identity_kernel_embedding_is_input_projection() {
    let cfg = ModelConfig {
        kernels: [1, 1, 1],
        input_dims: [8, 8, 8],
        positional_encoding: false,
        ..Default::default()
    };
    let mut store = ParameterStore::new(0);
    let p = EmbedParams::register(&mut store, &cfg, ModalityKind::Text);
    *store.get_mut(p.kernel) = Tensor::identity(8);
    let x = random_tensor(&mut rng(160), 6, 8, 1.0);
    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let a = embed_low_level(&mut tape, &store, &p, xv, &cfg).unwrap();
    let b = embed_low_level(&mut tape, &store, &p, xv, &cfg).unwrap();
    assert_eq!(tape.value(a), &x);
    assert_eq!(tape.value(a), tape.value(b));
}

#[test]
fn embedding_matches_convolution_oracle() {
    let cfg = ModelConfig::default();
    let mut store = ParameterStore::new(3);
    let p = EmbedParams::register(&mut store, &cfg, ModalityKind::Vision);
    let x = random_tensor(&mut rng(161), 7, 6, 1.0);
    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let z = embed_low_level(&mut tape, &store, &p, xv, &cfg).unwrap();
    let want = embed(&x, store.get(p.kernel), store.get(p.bias), 3, true);
    assert!(tape.value(z).max_abs_diff(&want) < 1e-12);
}

#[test]
fn embedding_rejects_wrong_feature_width() {
    let cfg = ModelConfig::default();
    let mut store = ParameterStore::new(3);
    let p = EmbedParams::register(&mut store, &cfg, ModalityKind::Audio);
    let mut tape = Tape::new();
    let xv = tape.leaf(Tensor::zeros(5, 7));
    assert!(matches!(embed_low_level(&mut tape, &store, &p, xv, &cfg), Err(Error::Config(_))));
}

fn small_cfg(variant: Variant, blocks: usize, layers: usize) -> ModelConfig {
    ModelConfig {
        dim: 8,
        heads: 2,
        blocks,
        layers_per_block: layers,
        variant,
        ..Default::default()
    }
}

fn random_inputs(seed: u64, cfg: &ModelConfig, lens: [usize; 3]) -> SampleInputs {
    let mut r = rng(seed);
    SampleInputs {
        modalities: [0, 1, 2].map(|i| ModalityInput::unpadded(random_tensor(&mut r, lens[i], cfg.input_dims[i], 1.0))),
    }
}

#[test]
fn interaction_set_sizes_follow_block_index() {
    let cfg = small_cfg(Variant::MCMulT, 3, 1);
    let model = Model::new(cfg.clone(), 5).unwrap();
    let inputs = random_inputs(6, &cfg, [4, 6, 5]);
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, &inputs, &mut Context::eval_traced()).unwrap();
    let graph = model.graph().unwrap();
    for b in Branch::ALL {
        let trace = out.trace(b).unwrap();
        for block in 1..=3 {
            let layer = graph.block_start(block).unwrap();
            assert_eq!(trace[layer].interactions.len(), block);
            assert_eq!(trace[layer + 1].interactions.len(), 1);
        }
    }

    let cfg = small_cfg(Variant::MulT, 3, 1);
    let model = Model::new(cfg.clone(), 5).unwrap();
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, &inputs, &mut Context::eval_traced()).unwrap();
    for b in Branch::ALL {
        assert!(out.trace(b).unwrap().iter().all(|t| t.interactions.len() == 1));
    }
}

#[test]
fn single_block_without_locals_is_one_layer_per_branch() {
    let cfg = small_cfg(Variant::MCMulT, 1, 0);
    let model = Model::new(cfg.clone(), 1).unwrap();
    assert_eq!(model.graph().unwrap().depth(), 1);
    let inputs = random_inputs(2, &cfg, [3, 5, 4]);
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, &inputs, &mut Context::eval()).unwrap();
    for s in &out.branches {
        assert_eq!(s.layer_outputs.len(), 1);
        assert_eq!(s.scales.len(), 2);
    }
}

#[test]
fn scales_keep_target_extent_for_every_variant() {
    for variant in Variant::ALL {
        let cfg = small_cfg(variant, 2, 2);
        let model = Model::new(cfg.clone(), 3).unwrap();
        for (k, lens) in [[3, 7, 5], [9, 2, 4], [1, 1, 6]].into_iter().enumerate() {
            let inputs = random_inputs(k as u64, &cfg, lens);
            let mut tape = Tape::new();
            let out = model.forward(&mut tape, &inputs, &mut Context::eval()).unwrap();
            assert_eq!(tape.shape(out.output), [1, 2]);
            for s in &out.branches {
                for &z in s.scales.iter().chain(&s.layer_outputs) {
                    assert_eq!(tape.shape(z), [lens[s.branch.target.index()], 8], "{variant} {}", s.branch);
                }
            }
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let cfg = small_cfg(Variant::MCMulT, 2, 1);
    let inputs = random_inputs(9, &cfg, [4, 6, 5]);
    let a = Model::new(cfg.clone(), 11).unwrap().infer(&inputs).unwrap();
    let b = Model::new(cfg, 11).unwrap().infer(&inputs).unwrap();
    assert_eq!(a, b);
}

#[test]
fn head_input_width_follows_enabled_targets() {
    let model = Model::new(small_cfg(Variant::MCMulT, 1, 1), 0).unwrap();
    assert_eq!(model.head().input_dim, 48);

    let cfg = ModelConfig {
        branches: BranchSet::targeting(ModalityKind::Text),
        ..small_cfg(Variant::MCMulT, 1, 1)
    };
    assert_eq!(Model::new(cfg, 0).unwrap().head().input_dim, 16);

    let cfg = ModelConfig {
        task: Task::Classification { classes: 7 },
        ..small_cfg(Variant::MCMulT, 1, 1)
    };
    let inputs = random_inputs(1, &cfg, [3, 4, 5]);
    assert_eq!(Model::new(cfg, 0).unwrap().infer(&inputs).unwrap().shape(), [1, 7]);
}

#[test]
fn disabled_pair_is_unreachable() {
    let mut branches = BranchSet::all();
    branches.remove(Branch::ALL[5]);
    branches.remove(Branch::ALL[3]);
    let cfg = ModelConfig {
        branches,
        ..small_cfg(Variant::MCMulT, 2, 1)
    };
    let model = Model::new(cfg.clone(), 4).unwrap();
    let active: Vec<String> = model.active_branches().iter().map(|b| b.to_string()).collect();
    assert!(!active.contains(&"V->A".to_string()) && !active.contains(&"A->V".to_string()));
    for id in model.params().ids() {
        let name = model.params().name(id);
        assert!(!name.starts_with("V->A") && !name.starts_with("A->V"), "{name}");
    }

    // The text prediction only sees text-target branches and their siblings.
    let inputs = random_inputs(3, &cfg, [4, 5, 6]);
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, &inputs, &mut Context::eval()).unwrap();
    let total = tape.sum(out.output);
    let grads = tape.backward(total).unwrap();
    let store = model.params();
    for id in store.ids() {
        let name = store.name(id);
        if name.starts_with("predict/L") {
            assert!(tape.param_var(id).is_some_and(|v| grads.get(v).is_some()), "{name}");
        }
    }
}

#[test]
fn branch_set_display_round_trips() {
    assert_eq!(Branch::ALL[0].to_string(), "V->L");
    assert_eq!("V->L".parse::<Branch>().unwrap(), Branch::ALL[0]);
}

#[test]
fn parameter_count_ordering_at_defaults() {
    let base = ModelConfig::default();
    let counts: Vec<usize> = Variant::ALL
        .iter()
        .map(|&v| count_parameters(&ModelConfig { variant: v, ..base.clone() }).unwrap())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] > w[1]), "{counts:?}");
}

#[test]
fn parameter_count_matches_closed_form() {
    let mut r = rng(170);
    for _ in 0..20 {
        let heads = [1, 2, 4][r.random_range(0..3)];
        let cfg = ModelConfig {
            dim: heads * 2 * r.random_range(1..4),
            heads,
            blocks: r.random_range(1..5),
            layers_per_block: r.random_range(0..4),
            variant: Variant::ALL[r.random_range(0..5)],
            branches: BranchSet::from_branches(Branch::ALL.into_iter().filter(|_| r.random_bool(0.6)))
                .union(BranchSet::from_branches([Branch::ALL[r.random_range(0..6)]])),
            task: if r.random_bool(0.5) {
                Task::Regression
            } else {
                Task::Classification { classes: 7 }
            },
            prediction_layers: r.random_range(1..3),
            ..Default::default()
        };
        assert_eq!(count_parameters(&cfg).unwrap(), closed_form_count(&cfg), "{cfg:?}");
    }
}

#[test]
fn doubling_width_roughly_quadruples_count() {
    let a = count_parameters(&ModelConfig::default()).unwrap() as f64;
    let b = count_parameters(&ModelConfig {
        dim: 16,
        ..Default::default()
    })
    .unwrap() as f64;
    let ratio = b / a;
    assert!((3.5..4.2).contains(&ratio), "{ratio}");
}

#[test]
fn connectivity_matches_variant_definitions() {
    let g = build_connectivity(&small_cfg(Variant::Global, 4, 3)).unwrap();
    assert_eq!(g.local_edge_count(), 0);
    assert_eq!(g.depth(), 4);
    let g = build_connectivity(&small_cfg(Variant::MCMulT, 4, 3)).unwrap();
    assert_eq!(g.global_sources(4), vec![0, 1, 2, 3]);
    let g = build_connectivity(&small_cfg(Variant::MulT, 4, 3)).unwrap();
    assert!(g.layers.iter().all(|l| l.sources == [mcmult::arch::ScaleRef::LowLevel]));
}
