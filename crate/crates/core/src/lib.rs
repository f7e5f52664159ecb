//! Klein-Gordon fields with the positive-definite inner products `(.,.)_a`, their
//! conserved currents, probability densities, localized states and gauge symmetry.

pub mod currents;
pub mod em_background;
pub mod error;
pub mod gauge_symmetry;
pub mod hilbert_space;
pub mod localization;
pub mod mode_engine;
pub mod params;
pub mod random;
pub mod report;
pub mod spectral_grid;

pub use error::{KgError, Result};
pub use params::InnerParams;
