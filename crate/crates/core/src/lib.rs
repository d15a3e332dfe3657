//! Simulation core for an integrated photonic Galton board.
//!
//! The pipeline mirrors the physical device: a single-photon quantum walk
//! through a directional-coupler mesh ([`walk`]), a weak coherent source
//! ([`source`]), a 16-pixel SNSPD array with dead time ([`detector`]), a
//! delay-line multiplexed readout bus ([`readout`]) and the statistical
//! fits used to analyse recorded data ([`stats`]).

pub mod error;
pub mod detector;
pub mod readout;
pub mod rng;
pub mod source;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
