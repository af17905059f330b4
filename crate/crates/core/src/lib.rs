//! Fixed-point quantum search with independent selective phase shifts.
//!
//! One step applies `U Rs U† Rt U` to the start state, where `Rt` rotates the
//! target by `e^{iθ}` and `Rs` rotates the start state by `e^{iφ}`. The crate
//! provides
//!
//! - [`deviation`]: closed forms for the single-step deviation and the
//!   comparison between unequal and equal shifts,
//! - [`average`]: the deviation averaged over an epsilon range, its
//!   derivatives, and the optimal shifts,
//! - [`simulator`]: a dense statevector oracle for all of the above,
//! - [`sweep`]: grid sweeps with CSV / JSON output,
//! - [`check`] and [`cli`]: the property battery and command-line driver.

pub mod average;
pub mod check;
pub mod cli;
pub mod deviation;
pub mod domain;
pub mod error;
pub mod simulator;
pub mod sweep;

pub use domain::{validate_epsilon_range, validate_phase_shifts, Epsilon, EpsilonRange, PhaseShifts};
pub use error::{Error, Result};
