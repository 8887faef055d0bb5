//! Desk-scale vision-and-language navigation on synthetic navigation graphs.
//!
//! The crate provides a seeded world generator and simulator ([`navgraph`]),
//! a multi-level synthetic instruction speaker ([`instructions`]), a small
//! cross-modal transformer agent with addressable sub-networks ([`agent`]),
//! uncertainty-gated lookahead exploration ([`e2e`]), and the standard
//! navigation metrics ([`metrics`]).
//!
//! With the default `parallel` feature, episode-level work (evaluation,
//! label generation, dataset synthesis) fans out across a rayon pool; the
//! sequential fallback produces bit-identical results.

pub mod agent;
pub mod checkpoint;
pub mod e2e;
pub mod error;
pub mod exec;
pub mod instructions;
pub mod metrics;
pub mod navgraph;
pub mod nn;
pub mod rng;
pub mod rollout;

pub use error::{Error, Result};
