//! Criterion benchmarks for the crowd simulator live under `benches/`.
