//! Mean-field equilibria for agent flows on a directed acyclic transportation
//! network.
//!
//! The pipeline maps a candidate mass field `ρ` (mass per edge/path pair over
//! a uniform time grid) to a new one:
//!
//! 1. [`value`]: backward value functions and constant-speed arrival policy,
//! 2. [`preference`]: path costs, logit response and preference dynamics,
//! 3. [`flow`]: delayed outgoing flows and mass-conservation integration.
//!
//! [`equilibrium::solve`] searches for a fixed point of that map with damped
//! iteration. [`constrained`] adds mass-dependent speed limits, and
//! [`oracle`] holds brute-force cross-checks used by the CLI and the tests.

pub mod constrained;
pub mod equilibrium;
mod error;
pub mod exec;
pub mod field;
pub mod flow;
pub mod network;
pub mod oracle;
pub mod preference;
pub mod scenario;
pub mod value;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::{PairField, PairIndex};
pub use network::{Network, PathSet};
pub use scenario::{Problem, Scenario, TimeGrid};
