//! Oracle atlas: a δ-separated cover of the surface, a partition of unity on
//! the tube around it, and tangent-plane charts that the bumps are grouped into.
//!
//! Cover selection is pluggable through [`CoverStrategy`] and [`CoverRegistry`].

mod bounds;
pub(crate) mod charts;
mod cover;
mod io;
mod oracle;
mod spatial;

pub use bounds::{covering_bound, packing_bound, principal_angle};
pub use charts::{build_atlas, Atlas, AtlasConfig, Charts};
pub use cover::{build_cover, Cover, CoverConfig, CoverRegistry, CoverStrategy, FarthestPoint, Sequential};
pub use oracle::{Decoded, OracleCode};
pub use spatial::SpatialHash;
