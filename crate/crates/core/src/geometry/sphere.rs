use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use super::{plane_basis, Frame, Manifold, ManifoldParams, Point3, MEDIAL_GUARD};
use crate::rng::Rng;
use crate::{Error, Result};

/// Round sphere of radius `r` centred at the origin. Its reach is `r`.
#[derive(Debug, Clone)]
pub struct Sphere {
    radius: f64,
}

impl Sphere {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Sphere { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Scale a direction to the surface. Exposed so a fixed direction draw can be tested.
    pub fn from_direction(&self, dir: &Point3) -> Point3 {
        dir * (self.radius / dir.norm())
    }
}

impl Manifold for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn params(&self) -> ManifoldParams {
        ManifoldParams::Sphere { radius: self.radius }
    }

    fn reach(&self) -> f64 {
        self.radius
    }

    fn volume(&self) -> f64 {
        4.0 * PI * self.radius * self.radius
    }

    fn max_norm(&self) -> f64 {
        self.radius
    }

    fn residual(&self, v: &Point3) -> f64 {
        (v.norm() - self.radius).abs()
    }

    fn signed_distance(&self, x: &Point3) -> f64 {
        x.norm() - self.radius
    }

    fn project(&self, x: &Point3) -> Result<Point3> {
        let n = x.norm();
        if n < MEDIAL_GUARD {
            return Err(Error::AmbiguousProjection { guard: MEDIAL_GUARD });
        }
        Ok(x * (self.radius / n))
    }

    fn unit_normal(&self, v: &Point3) -> Point3 {
        v.normalize()
    }

    fn raw_tangent_frame(&self, v: &Point3) -> Frame {
        plane_basis(&v.normalize())
    }

    fn sample(&self, rng: &mut Rng) -> Point3 {
        loop {
            let g = Point3::new(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            );
            if g.norm() > 1e-12 {
                return self.from_direction(&g);
            }
        }
    }

    fn lift(&self, base: &Point3, dir: &Point3) -> Option<f64> {
        // |base + t dir|² = r², dir unit: t² + 2bt + c = 0
        let b = base.dot(dir);
        let c = base.norm_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // root of smallest magnitude, written without cancellation
        Some(if b >= 0.0 { -c / (b + s) } else { -c / (b - s) })
    }
}
