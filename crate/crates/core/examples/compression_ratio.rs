// Encoded size of every sparse layout against the `.dcoo` file, on a
// desk-scale ride-count tensor at 0.0385% density.
//
// `cargo run --release --example compression_ratio`

use dtstore::bench::{run_bench, BenchConfig, GenSpec};
use dtstore::layout::{EncodeOptions, Layout};
use dtstore::Shape;

fn main() -> dtstore::Result<()> {
    let g = GenSpec::new(Shape::new(vec![183, 24, 114, 171])?, 0.000385, 7);
    let cfg = BenchConfig {
        layouts: Layout::ALL.into_iter().filter(|l| l.is_sparse()).collect(),
        trials: 1,
        // uniform random nonzeros have no block structure to exploit
        options: EncodeOptions {
            block_shape: Some(vec![1, 1]),
            ..EncodeOptions::default()
        },
        ..BenchConfig::default()
    };
    let report = run_bench(&g, &cfg)?;
    println!("nnz = {}", report.spec.nnz);
    println!("{:<6} {:>12} {:>12} {:>8}", "layout", "encoded", "baseline", "c_r");
    for r in &report.results {
        println!(
            "{:<6} {:>12} {:>12} {:>8.4}",
            r.layout, r.s_encode_bytes, r.s_baseline_bytes, r.c_r
        );
    }
    Ok(())
}
