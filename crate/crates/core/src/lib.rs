//! Outage statistics of RAKE finger replacement in the soft-handover region.
//!
//! A mobile combines the `N_c` strongest paths of its serving base station.
//! When that output falls below the target `γ_T`, the weakest block of `N_s`
//! fingers is replaced by the strongest `N_s`-path block found across all
//! base stations. The crate evaluates the outage CDF of the final combined
//! SNR in closed form (plus 2-D quadrature) and checks it against a direct
//! Monte-Carlo simulation of the same scheme.

// NaN inputs must fail the range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod closed_form_stats;
pub mod combinatorics;
pub mod config;
pub mod error;
pub mod kernel;
pub mod monte_carlo;
pub mod outage;
pub mod pdp;
pub mod quadrature;
pub mod table;

pub use error::{Error, Result};
