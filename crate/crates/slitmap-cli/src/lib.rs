//! Support library for the `slitmap` binary: domain file schema, built-in
//! demo domains, and report serialization. The binary itself is a thin
//! argument-parsing layer over these modules, which keeps everything here
//! reachable from integration tests.

pub mod demos;
pub mod domain;
pub mod report;
