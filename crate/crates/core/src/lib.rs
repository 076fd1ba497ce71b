//! Coincidence detection toolkit for ring-detector photon event streams.
//!
//! The crate covers the full pipeline: Monte Carlo generation of labeled
//! spike-train datasets ([`simulator`]), the classical single-coincidence-
//! window sorting baseline ([`scw`]), a leaky integrate-and-fire network
//! trained with surrogate-gradient backpropagation through time ([`snn`],
//! [`loss`], [`trainer`]), detector-geometry input features ([`geometry`]),
//! and tolerance-aware spike matching metrics ([`metrics`]). Datasets and
//! model checkpoints use bit-exact binary formats ([`io`], [`snn`]).
//!
//! All domain types are immutable after construction and safe to share
//! read-only across threads.

pub mod error;
pub mod geometry;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod scw;
pub mod simulator;
pub mod snn;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
pub use types::{CoincidencePair, DetectorConfig, Sample, SpikeEvent, SpikeTrain};
