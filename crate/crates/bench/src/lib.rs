//! Criterion benchmarks for the workbench core live under `benches/`.
