//! Command-line front end: policy transforms, the verification suites,
//! and training sweeps, all as thin shells over the library crate.

pub mod cmd;
pub mod config;
pub mod spec;
