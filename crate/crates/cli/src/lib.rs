//! Scenario files, trace emission, and the benchmark harness behind the
//! `gtplan` binary. Everything the binary does goes through this library
//! so integration tests can drive the same code paths directly.

pub mod bench;
pub mod overrides;
pub mod schema;
pub mod trace;
