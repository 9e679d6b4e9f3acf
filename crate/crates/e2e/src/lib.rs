//! End-to-end checks live in `tests/acceptance.rs`; run them with
//! `cargo test -p ftg-e2e --test acceptance`.
