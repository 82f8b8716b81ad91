//! Analytic manifolds with exact projection, frames and reach, their
//! isometric embeddings into higher ambient dimension, the noise models and
//! paired dataset generation.

mod dataset;
mod embedding;
mod noise;
mod reach;
mod sphere;
mod torus;

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

pub use dataset::{make_dataset, read_caeds, write_caeds, write_csv, PairedDataset};
pub use embedding::Embedding;
pub use noise::{apply_noise, NoiseKind, NoiseSpec};
pub use reach::reach_bruteforce;
pub use sphere::Sphere;
pub use torus::Torus;

pub type Point3 = Vector3<f64>;
pub type Frame = Matrix3x2<f64>;

/// Distance from the medial axis below which projection is refused.
pub const MEDIAL_GUARD: f64 = 1e-9;
/// Surface-equation residual above which a point is rejected as off-surface.
pub const SURFACE_TOL: f64 = 1e-6;

/// A closed two-dimensional surface in R³ with closed-form geometry.
pub trait Manifold: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn params(&self) -> ManifoldParams;

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn reach(&self) -> f64;

    /// Surface area.
    fn volume(&self) -> f64;

    /// `sup ‖v‖₂` over the surface.
    fn max_norm(&self) -> f64;

    /// Absolute residual of the implicit surface equation.
    fn residual(&self, v: &Point3) -> f64;

    /// Signed Euclidean distance to the surface (positive outside).
    fn signed_distance(&self, x: &Point3) -> f64;

    /// Nearest surface point.
    fn project(&self, x: &Point3) -> Result<Point3>;

    /// Outward unit normal at a surface point (unchecked).
    fn unit_normal(&self, v: &Point3) -> Point3;

    /// Orthonormal tangent basis at a surface point (unchecked).
    fn raw_tangent_frame(&self, v: &Point3) -> Frame;

    fn sample(&self, rng: &mut Rng) -> Point3;

    /// Parameter `t` of the surface crossing of `base + t·dir` nearest to `t = 0`.
    fn lift(&self, base: &Point3, dir: &Point3) -> Option<f64>;

    fn check_on_surface(&self, v: &Point3) -> Result<()> {
        let residual = self.residual(v);
        if residual > SURFACE_TOL || !residual.is_finite() {
            return Err(Error::PointOffSurface { residual });
        }
        Ok(())
    }

    fn tangent_frame(&self, v: &Point3) -> Result<Frame> {
        self.check_on_surface(v)?;
        Ok(self.raw_tangent_frame(v))
    }

    fn normal_frame(&self, v: &Point3) -> Result<Point3> {
        self.check_on_surface(v)?;
        Ok(self.unit_normal(v))
    }

    /// `sup ‖x‖₂` over the tube M(q); bounds `‖x‖_∞` in any rotated embedding.
    fn bound(&self, q: f64) -> f64 {
        self.max_norm() + q
    }
}

/// Orthonormal pair spanning the plane orthogonal to unit vector `n`.
pub(crate) fn plane_basis(n: &Point3) -> Frame {
    // pick the axis least aligned with n
    let a = n.iter().map(|c| c.abs()).enumerate().fold((0, f64::INFINITY), |best, (i, c)| {
        if c < best.1 {
            (i, c)
        } else {
            best
        }
    });
    let mut axis = Point3::zeros();
    axis[a.0] = 1.0;
    let t1 = (axis - n * n.dot(&axis)).normalize();
    let t2 = n.cross(&t1);
    Frame::from_columns(&[t1, t2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldParams {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
}

impl ManifoldParams {
    pub fn kind(&self) -> &'static str {
        match self {
            ManifoldParams::Sphere { .. } => "sphere",
            ManifoldParams::Torus { .. } => "torus",
        }
    }
}

type Constructor = fn(&ManifoldParams) -> Result<Arc<dyn Manifold>>;

/// Name → constructor table for the available manifolds.
pub struct ManifoldRegistry {
    entries: BTreeMap<&'static str, Constructor>,
}

impl ManifoldRegistry {
    pub fn new() -> Self {
        ManifoldRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register("sphere", |p| match p {
            ManifoldParams::Sphere { radius } => Ok(Arc::new(Sphere::new(*radius)?)),
            other => Err(Error::InvalidParameter(format!("sphere cannot take {other:?}"))),
        });
        reg.register("torus", |p| match p {
            ManifoldParams::Torus { major, minor } => Ok(Arc::new(Torus::new(*major, *minor)?)),
            other => Err(Error::InvalidParameter(format!("torus cannot take {other:?}"))),
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, ctor: Constructor) {
        self.entries.insert(name, ctor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, params: &ManifoldParams) -> Result<Arc<dyn Manifold>> {
        let name = params.kind();
        let ctor = self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: "manifold",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        ctor(params)
    }
}

impl Default for ManifoldRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// Build a manifold from its parameters using the builtin registry.
pub fn build_manifold(params: &ManifoldParams) -> Result<Arc<dyn Manifold>> {
    ManifoldRegistry::with_builtins().build(params)
}

/// A manifold placed in ambient R^D by an isometric embedding.
#[derive(Debug, Clone)]
pub struct EmbeddedManifold {
    pub manifold: Arc<dyn Manifold>,
    pub embedding: Embedding,
}

impl EmbeddedManifold {
    pub fn new(manifold: Arc<dyn Manifold>, embedding: Embedding) -> Self {
        EmbeddedManifold {
            manifold,
            embedding,
        }
    }

    /// Identity embedding in R³.
    pub fn base(manifold: Arc<dyn Manifold>) -> Self {
        Self::new(manifold, Embedding::identity(3))
    }

    pub fn ambient_dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn reach(&self) -> f64 {
        self.manifold.reach()
    }

    /// Ambient point → (base point in R³, squared norm of the off-subspace part).
    pub fn split(&self, x: &[f64]) -> (Point3, f64) {
        self.embedding.unembed_split(x)
    }

    /// Nearest point on the embedded surface, in ambient coordinates.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (base, _) = self.split(x);
        Ok(self.embedding.embed_point(&self.manifold.project(&base)?))
    }

    /// Distance from an ambient point to the embedded surface.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let (base, orth2) = self.split(x);
        (self.manifold.signed_distance(&base).powi(2) + orth2).sqrt()
    }

    /// Ambient tangent frame (`D × 2`, column-major pair of vectors).
    pub fn tangent_frame(&self, v: &[f64]) -> Result<[Vec<f64>; 2]> {
        let (base, orth2) = self.split(v);
        if orth2.sqrt() > SURFACE_TOL {
            return Err(Error::PointOffSurface {
                residual: orth2.sqrt(),
            });
        }
        let f = self.manifold.tangent_frame(&base)?;
        Ok([
            self.embedding.embed_vector(&f.column(0).into_owned()),
            self.embedding.embed_vector(&f.column(1).into_owned()),
        ])
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.embedding.embed_point(&self.manifold.sample(rng))
    }
}
