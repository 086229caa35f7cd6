//! Holds the `acceptance` test target (`tests/acceptance.rs`), which runs
//! the suite in every supported dimension and grades each acceptance
//! criterion at its stated tolerance.
//!
//! It lives in its own package so that `cargo test --workspace` runs it
//! after the unit and integration tests of the other crates: a failing
//! criterion then does not stop those from running.
