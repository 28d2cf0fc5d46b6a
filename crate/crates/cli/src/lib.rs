//! Configuration, orchestration and artifact writing for the `dnls` binary.

// `!(x > 0.0)` is the NaN-rejecting form throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod simulate;
pub mod sweep;
pub mod verify;

pub use config::{RunConfig, SweepConfig};
pub use error::CliError;
