//! Runs one ablation axis on a small planted-signal task.
//!
//! `cargo run --release --example ablation -- [variants|depth|branches|hyperparams] [epochs]`

use mcmult::arch::ModelConfig;
use mcmult::data::{generate_synthetic, split, SyntheticSpec};
use mcmult::train::{ablation_run, arms, AblationAxis, TrainConfig};

fn main() -> mcmult::Result<()> {
    let mut args = std::env::args().skip(1);
    let axis: AblationAxis = args.next().unwrap_or_else(|| "variants".into()).parse()?;
    let epochs = args.next().map_or(3, |s| s.parse().expect("epochs"));

    let data = generate_synthetic(&SyntheticSpec {
        samples: 200,
        ..Default::default()
    })?;
    let parts = split(&data, [0.6, 0.2, 0.2], 1)?;
    let base = ModelConfig {
        dim: 4,
        blocks: 2,
        layers_per_block: 1,
        ..Default::default()
    };
    let names: Vec<String> = arms(&base, axis).into_iter().map(|a| a.name).collect();
    println!("{axis}: {}", names.join(", "));
    let cfg = TrainConfig {
        epochs,
        batch_size: 16,
        ..Default::default()
    };
    let table = ablation_run(&base, &cfg, axis, &[0], &parts, |row| eprintln!("{}", row.csv_row()))?;
    print!("{}", table.to_csv());
    Ok(())
}
