//! Criterion benchmarks for vesselkit; run with `cargo bench -p vesselkit-bench`.
