//! Criterion benchmarks for the hot paths of `rankbid-core`; see `benches/`.
