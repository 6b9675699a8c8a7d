//! Benchmarks for the aggregation solvers live in `benches/`.
