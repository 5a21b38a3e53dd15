//! Criterion benchmarks for minkcap-core; see `benches/`.
