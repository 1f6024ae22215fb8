//! Criterion benchmarks for the samplers and the text pipeline; see `benches/`.
