//! Trains briefly, then exports the vision-to-text attention of the first
//! block for one test sample and draws it as a character map.
//!
//! `cargo run --release --example export_attention -- [epochs] [dir]`

use mcmult::arch::{Branch, Model, ModalityKind, ModelConfig};
use mcmult::data::{generate_with_truth, split, SyntheticSpec};
use mcmult::train::{export_attention, train, AttentionQuery, TrainConfig};

fn main() -> mcmult::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(5, |s| s.parse().expect("epochs"));
    let dir = args.next().unwrap_or_else(|| "attention-maps".into());

    let spec = SyntheticSpec {
        samples: 600,
        ..Default::default()
    };
    let data = generate_with_truth(&spec)?;
    let indexed: Vec<usize> = (0..data.samples.len()).collect();
    let parts = split(&indexed, [0.6, 0.2, 0.2], 1)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| data.samples[i].clone()).collect::<Vec<_>>();

    let cfg = ModelConfig {
        blocks: 2,
        layers_per_block: 2,
        ..Default::default()
    };
    let mut model = Model::new(cfg, 0)?;
    train(
        &mut model,
        &pick(&parts.train),
        &pick(&parts.valid),
        &TrainConfig {
            epochs,
            ..Default::default()
        },
    )?;

    let i = parts.test[0];
    let window = data.truth[i].window(ModalityKind::Vision, spec.motif_len);
    let q = AttentionQuery {
        branch: Branch::new(ModalityKind::Vision, ModalityKind::Text),
        block: 1,
        head: 0,
        scale: 0,
    };
    let e = export_attention(&model, &data.samples[i].inputs(), q, &dir)?;
    println!("wrote {} and {}", e.csv.display(), e.sidecar.display());
    println!("vision motif at steps {window:?}; rows are text steps");
    let shades = [' ', '.', ':', '+', '#'];
    for r in 0..e.map.weights.rows() {
        let row = e.map.weights.row(r);
        let line: String = row
            .iter()
            .map(|w| shades[((w * shades.len() as f64) as usize).min(shades.len() - 1)])
            .collect();
        println!("|{line}|");
    }
    Ok(())
}
