//! Finite-key secure-key capacities for decoy-state high-dimensional QKD
//! based on time-energy entangled photon pairs.
//!
//! The crate is organised bottom-up:
//!
//! * [`phys`]: channel transmittance, Poisson pair statistics and the
//!   postselection probability of a measurement frame.
//! * [`finite`]: the ε budget and Hoeffding / multiplicative-Chernoff
//!   fluctuation intervals.
//! * [`decoy`]: decoy-state bounds on γ₀, γ₁, the single-pair fraction K_μ
//!   and the excess-noise factors.
//! * [`keyrate`] and [`security`]: the finite-size key capacity and the
//!   pluggable models that supply I(A;B) and Eve's Holevo bound.
//! * [`sim`]: a frame-level Monte Carlo of a protocol session.
//! * [`scenario`], [`config`], [`presets`], [`sweep`], [`output`]: scenario
//!   handling, distance sweeps and CSV emission used by the CLI.

pub mod config;
pub mod decoy;
pub mod error;
pub mod finite;
pub mod keyrate;
pub mod output;
pub mod phys;
pub mod presets;
pub mod scenario;
pub mod security;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
