//! Measuring how well a discovered Petri-net process model generalizes to
//! the unobserved behavior of its system.
//!
//! A generative sequence model is fitted on the observed variants, sampled
//! (naively or through Metropolis-Hastings with a discriminator) to estimate
//! the system's variant set, and the net is scored by the harmonic mean of
//! its log fitness and log precision on a log synthesized from that
//! estimate.

pub mod conformance;
pub mod error;
pub mod eval;
pub mod genmodel;
pub mod log;
pub mod losses;
pub mod petri;
pub mod rng;
pub mod sampling;
pub mod systems;

pub use error::{Error, Result};
