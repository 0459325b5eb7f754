//! Experiment harness for the energy-constrained walker: regime campaigns,
//! exact validation batteries, renewal-level sampling, and bit-stable
//! CSV/JSON reporting.
//!
//! The library side of the `ewalk` binary. [`config`] declares experiment
//! plans, [`campaign`] runs the regime drivers, [`battery`] holds the exact
//! cross-check suites and single-cell summaries, [`sampler`] implements the
//! renewal-level lifetime sampler, and [`report`] renders results.

pub mod battery;
pub mod campaign;
pub mod config;
pub mod report;
pub mod sampler;
pub mod stats;
