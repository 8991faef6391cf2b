//! Criterion benchmarks for the qrewind simulation core; see `benches/`.
