//! Exact and asymptotic tools for an energy-constrained random walk.
//!
//! The chain lives on {0, .., N} (or the half line) with an energy budget of
//! M interior steps; endpoint visits reset the budget. The crate provides the
//! simulator, exact exit-time and lifetime laws, and the three limit families
//! the lifetime converges to across parameter regimes, each with independent
//! numeric routes for cross checking.

pub mod error;
pub mod excursion;
pub mod lifetime;
pub mod limits;
pub mod model;
pub mod numeric;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
