//! One module per subcommand; each exposes an `Args` struct and `run`.

pub mod anomaly;
pub mod fit;
pub mod ingest;
pub mod observables;
pub mod predict;
pub mod report;
pub mod sample;
pub mod selftest;
pub mod similarity;
