//! Parameter counts of the five connectivity variants.
//!
//! `cargo run --example count_params -- [blocks] [layers] [dim] [heads]`

use mcmult::arch::{build_connectivity, count_parameters, ModelConfig, Variant};

fn main() -> mcmult::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("integer")).collect();
    let get = |i: usize, default: usize| args.get(i).copied().unwrap_or(default);
    let base = ModelConfig {
        blocks: get(0, 4),
        layers_per_block: get(1, 3),
        dim: get(2, 8),
        heads: get(3, 2),
        ..Default::default()
    };
    println!(
        "B={} L={} d={} h={}",
        base.blocks, base.layers_per_block, base.dim, base.heads
    );
    println!("{:<11} {:>6} {:>11} {:>10}", "variant", "depth", "local edges", "params");
    for v in Variant::ALL {
        let cfg = ModelConfig { variant: v, ..base.clone() };
        let g = build_connectivity(&cfg)?;
        println!(
            "{:<11} {:>6} {:>11} {:>10}",
            v.name(),
            g.depth(),
            g.local_edge_count(),
            count_parameters(&cfg)?
        );
    }
    Ok(())
}
