//! Simulation of Bell-measurement teleportation of `n`-level states over
//! arbitrary mixed resources.
//!
//! The crate computes the teleportation channel in closed form, checks it
//! against a step-by-step protocol simulator, evaluates exact and Monte Carlo
//! transmission fidelities, and builds the correction protocol that maximizes
//! fidelity via the fully entangled fraction of the resource.
//!
//! Module map:
//!
//! * [`linalg`]: dense complex matrices, validated states, seeded sampling.
//! * [`weyl`]: shift/clock operator basis and generalized Bell states.
//! * [`channel`]: protocols, the closed-form channel, the protocol simulator.
//! * [`fidelity`]: flip operator, Schur twirl, exact and sampled fidelity.
//! * [`fef`]: singlet fraction and fully entangled fraction.
//! * [`optimal`]: optimal protocol and standard-vs-optimal comparison.
//! * [`cli`]: command implementations and JSON file formats.

pub mod channel;
pub mod cli;
pub mod error;
pub mod fef;
pub mod fidelity;
pub mod linalg;
pub mod optimal;
pub mod tolerance;
pub mod weyl;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
