//! Holder for the `acceptance` test target. The criteria live in
//! `crates/core/tests/acceptance/criteria.rs`; a separate package makes cargo run
//! them after every other test target in the workspace.
