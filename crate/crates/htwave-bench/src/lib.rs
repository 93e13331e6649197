//! Benchmarks of the htwave hot paths live in `benches/`; run them with
//! `cargo bench -p htwave-bench`. This library target is intentionally empty.
