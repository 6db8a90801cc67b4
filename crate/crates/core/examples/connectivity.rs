//! Prints which sibling representations every layer reads, per variant.
//!
//! `cargo run --example connectivity -- [blocks] [layers]`

use mcmult::arch::{build_connectivity, LayerRole, ModelConfig, ScaleRef, Variant};

fn main() -> mcmult::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("integer")).collect();
    let base = ModelConfig {
        blocks: args.first().copied().unwrap_or(2),
        layers_per_block: args.get(1).copied().unwrap_or(2),
        ..Default::default()
    };
    for v in Variant::ALL {
        let g = build_connectivity(&ModelConfig { variant: v, ..base.clone() })?;
        println!("{v} ({} layers, sibling needed: {})", g.depth(), g.needs_sibling());
        for (i, layer) in g.layers.iter().enumerate() {
            let sources: Vec<String> = layer
                .sources
                .iter()
                .map(|s| match s {
                    ScaleRef::LowLevel => "X".to_string(),
                    ScaleRef::Layer(j) => format!("s{j}"),
                })
                .collect();
            let role = match layer.role {
                LayerRole::Global => "global",
                LayerRole::Local => "local",
            };
            let kind = if layer.multiscale { "MACT" } else { "CT" };
            println!("  layer {i:>2}  block {}  {role:<6} {kind:<4} <- {}", layer.block, sources.join(" "));
        }
    }
    Ok(())
}
