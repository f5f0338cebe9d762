//! Criterion benchmarks for `qcs-core`; see `benches/`.
