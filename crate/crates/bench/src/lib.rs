//! Criterion benchmarks for the comparison pipeline; see `benches/`.
