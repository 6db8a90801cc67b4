//! Trains the full model on the planted-signal task and reports test metrics.
//!
//! `cargo run --release --example train_synthetic -- [epochs] [samples]`

use mcmult::arch::{Model, ModelConfig};
use mcmult::data::{generate_synthetic, split, SyntheticSpec};
use mcmult::train::{class_accuracy, evaluate, train, TrainConfig};

fn main() -> mcmult::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(20, |s| s.parse().expect("epochs"));
    let samples = args.next().map_or(2000, |s| s.parse().expect("samples"));

    let data = generate_synthetic(&SyntheticSpec {
        samples,
        ..Default::default()
    })?;
    let parts = split(&data, [0.6, 0.2, 0.2], 1)?;
    let cfg = ModelConfig {
        blocks: 2,
        layers_per_block: 2,
        ..Default::default()
    };
    let mut model = Model::new(cfg, 1)?;
    println!("parameters: {}", model.parameter_count());
    let history = train(
        &mut model,
        &parts.train,
        &parts.valid,
        &TrainConfig {
            epochs,
            seed: 1,
            ..Default::default()
        },
    )?;
    for e in &history.epochs {
        let v = e.valid.expect("validation split is non-empty");
        println!(
            "epoch {:>3}  loss {:.4}  valid acc2 {:.3}  ({:.1}s)",
            e.epoch, e.train_loss, v.acc2, e.wall_seconds
        );
    }
    println!("train accuracy: {:.3}", class_accuracy(&model, &parts.train)?);
    println!("test: {:?}", evaluate(&model, &parts.test)?);
    Ok(())
}
