//! Difference-of-convex (DC) programming for batch control with expert data.
//!
//! The crate provides:
//!
//! * [`mdp`]: finite deterministic MDPs, Bellman operators, exact policy
//!   evaluation and policy iteration.
//! * [`garnet`]: random Garnet MDPs and seeded sampling of expert
//!   demonstrations and random-policy transitions.
//! * [`criteria`]: the large-margin expert loss, the empirical optimal Bellman
//!   residual (with and without rewards), and the RCAL / RLED criteria, each
//!   exposed as an explicit difference `f - g` of convex functions.
//! * [`optim`]: normalised subgradient descent and DCA over the same
//!   decomposition.
//! * [`baselines`]: pure classification and LSPI.
//! * [`experiment`]: the Garnet comparison studies and their CSV reports.
//!
//! With the default `parallel` feature, experiment runs are fanned out over a
//! rayon worker pool; without it every run executes sequentially. Results
//! are identical either way.

pub mod baselines;
pub mod criteria;
pub mod error;
pub mod experiment;
pub mod features;
pub mod garnet;
pub mod mdp;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
