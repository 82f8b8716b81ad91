//! Chart autoencoders for denoising data sampled near low-dimensional manifolds.
//!
//! The crate is organised around registries of interchangeable strategies:
//! manifolds ([`geometry::ManifoldRegistry`]), cover builders
//! ([`atlas::CoverStrategy`]), optimizers ([`nn::OptimizerRegistry`]) and
//! experiment sweeps ([`harness::SweepRegistry`]). Each is selected by name at
//! runtime so the CLI and the experiment harness can be driven from config.

pub mod atlas;
pub mod cae;
pub mod checks;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hexfloat;
pub mod matrix;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};

/// Version string embedded in every file the tool writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
