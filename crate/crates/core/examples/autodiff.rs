//! Fits a linear map with the gradient tape and Adam.
//!
//! `cargo run --example autodiff`

use mcmult::tensor::{clip_global_norm, AdamState, Init, ParameterStore, Tape, Tensor};

fn main() -> mcmult::Result<()> {
    let x = Tensor::from_fn(16, 3, |r, c| ((r * 3 + c) as f64 * 0.37).sin());
    let truth = Tensor::from_rows(&[[0.5], [-1.0], [2.0]])?;
    let y = x.matmul(&truth)?;

    let mut store = ParameterStore::new(1);
    let w = store.register("w", 3, 1, Init::Glorot { fan_in: 3, fan_out: 1 });
    let mut adam = AdamState::new(&store);

    for step in 0..=300 {
        let mut tape = Tape::new();
        let wv = tape.param(w, store.get(w));
        let xv = tape.leaf(x.clone());
        let yv = tape.leaf(y.clone());
        let pred = tape.matmul(xv, wv)?;
        let err = tape.sub(pred, yv)?;
        let sq = tape.mul(err, err)?;
        let total = tape.sum(sq);
        let loss = tape.scale(total, 1.0 / 16.0);
        if step % 50 == 0 {
            println!("step {step:>3}  loss {:.3e}", tape.value(loss).item());
        }
        let grads = tape.backward(loss)?;
        let mut grads = store.collect_grads(&tape, &grads);
        clip_global_norm(&mut grads, 0.8);
        adam.step(&mut store, &grads, 0.05)?;
    }
    println!("fitted w = {:?}", store.get(w).data());
    Ok(())
}
