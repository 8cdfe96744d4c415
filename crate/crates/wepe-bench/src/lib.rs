//! Benchmark-only crate; see `benches/direct_vs_lut.rs`.
