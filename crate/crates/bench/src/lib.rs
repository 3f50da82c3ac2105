//! Benchmark-only crate; see `benches/pipeline.rs`.
//!
//! Run with `cargo bench -p panocanon-bench`. Under `cargo test` the
//! criterion harness executes every benchmark body once as a smoke test
//! without collecting measurements.
