//! Criterion benchmarks for the sampler live in `benches/`.
