//! Library side of the `coagscale` command line tool: configuration,
//! parallel scans, and the cross-validation report suite. The binary in
//! `main.rs` is a thin dispatcher over these.

pub mod config;
pub mod parallel;
pub mod report;

/// Full round-trip float formatting for CSV output (17 significant digits).
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
