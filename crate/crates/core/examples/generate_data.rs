//! Generates a planted-signal dataset, writes it as CSV files and reads it
//! back.
//!
//! `cargo run --example generate_data -- [dir] [samples]`

use mcmult::arch::ModalityKind;
use mcmult::data::{generate_with_truth, load_dataset, save_dataset, SyntheticSpec};

fn main() -> mcmult::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "synthetic-data".into());
    let samples = args.next().map_or(20, |s| s.parse().expect("samples"));
    let spec = SyntheticSpec {
        samples,
        ..Default::default()
    };
    let data = generate_with_truth(&spec)?;
    for (s, t) in data.samples.iter().zip(&data.truth).take(5) {
        let windows: Vec<String> = ModalityKind::ALL
            .iter()
            .map(|m| {
                let w = t.window(*m, spec.motif_len);
                format!("{}: len {:>2} motif {} at {:?}", m, s.sequence(*m).len(), t.symbols[m.index()], w)
            })
            .collect();
        println!("class {}  {}", t.class, windows.join("  "));
    }
    save_dataset(&dir, &data.samples, spec.classes)?;
    let (manifest, loaded) = load_dataset(&dir)?;
    assert_eq!(loaded, data.samples);
    println!("wrote and reloaded {} samples in {dir} ({:?})", manifest.samples, manifest.dims);
    Ok(())
}
