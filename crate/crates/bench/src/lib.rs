//! Criterion benchmarks for camfuse live under `benches/`.
