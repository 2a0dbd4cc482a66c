// Time every layout on a small generated tensor and print the CSV report.
//
// cargo run --release --example bench_report

use dtstore::bench::{emit_report, run_bench, BenchConfig, GenSpec, ReportFormat};
use dtstore::Shape;

fn main() -> dtstore::Result<()> {
    let g = GenSpec::new(Shape::new(vec![30, 24, 16, 16])?, 0.01, 1);
    let cfg = BenchConfig {
        trials: 3,
        ..BenchConfig::default()
    };
    let report = run_bench(&g, &cfg)?;
    for r in &report.results {
        assert!(r.is_consistent());
    }
    print!("{}", String::from_utf8_lossy(&emit_report(&report, ReportFormat::Csv)));
    Ok(())
}
