//! Benchmark-only crate; see benches/core.rs. Nothing is exported.
