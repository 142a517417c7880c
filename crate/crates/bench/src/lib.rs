//! Criterion benchmarks for sampling and exact decoding; see `benches/`.
