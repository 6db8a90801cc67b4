//! Compares backpropagated gradients with central differences, first for
//! one tensor expression, then for every parameter of a small model.
//!
//! `cargo run --release --example gradient_check -- [step]`

use mcmult::arch::{Model, ModelConfig};
use mcmult::data::{generate_synthetic, SyntheticSpec};
use mcmult::tensor::{finite_diff_check, Tensor};
use mcmult::train::{check_model_gradients, LossKind};

fn main() -> mcmult::Result<()> {
    let step: f64 = std::env::args().nth(1).map_or(1e-4, |s| s.parse().expect("step"));

    let x = Tensor::from_fn(3, 4, |r, c| (r as f64 - 1.0) * 0.6 + c as f64 * 0.25);
    let r = finite_diff_check(
        |t, x| {
            let s = t.softmax_rows(x, None)?;
            let sq = t.mul(s, x)?;
            Ok(t.sum(sq))
        },
        &x,
        step,
    )?;
    println!("softmax expression: {} coordinates, max relative error {:.2e}", r.coordinates, r.max_rel_error);

    let cfg = ModelConfig {
        dim: 4,
        heads: 2,
        blocks: 2,
        layers_per_block: 1,
        ..Default::default()
    };
    let mut model = Model::new(cfg, 0)?;
    let sample = generate_synthetic(&SyntheticSpec {
        samples: 1,
        ..Default::default()
    })?
    .remove(0);
    let r = check_model_gradients(&mut model, &sample.inputs(), sample.label, LossKind::CrossEntropy, step)?;
    println!("model: {} coordinates at step {step:e}", r.coordinates());
    println!(
        "  smooth   {:>5} coordinates, worst {:.2e} at {}[{}] (analytic {:.6e}, numeric {:.6e})",
        r.smooth.coordinates,
        r.smooth.max_rel_error,
        r.smooth_worst,
        r.smooth.worst_index,
        r.smooth.analytic,
        r.smooth.numeric
    );
    println!(
        "  kinked   {:>5} coordinates, worst {:.2e}, unresolved {}",
        r.kinked.coordinates, r.kinked.max_rel_error, r.unresolved
    );
    Ok(())
}
