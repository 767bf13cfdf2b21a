//! Benchmarks for the ring walk live under `benches/`.
