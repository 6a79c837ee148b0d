//! File formats, verification suites and counterexample search around
//! `bagcq-core`.

pub mod artifacts;
pub mod formats;
pub mod gen;
pub mod search;
pub mod suites;
