use std::f64::consts::PI;

use rand::Rng as _;

use super::{Frame, Manifold, ManifoldParams, Point3, MEDIAL_GUARD};
use crate::rng::Rng;
use crate::{Error, Result};

/// Torus of revolution about the z axis with core radius `major` and tube
/// radius `minor`.
#[derive(Debug, Clone)]
pub struct Torus {
    major: f64,
    minor: f64,
}

impl Torus {
    pub fn new(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && major > minor && major.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "torus needs major > minor > 0, got major={major}, minor={minor}"
            )));
        }
        Ok(Torus { major, minor })
    }

    pub fn major(&self) -> f64 {
        self.major
    }

    pub fn minor(&self) -> f64 {
        self.minor
    }

    /// Surface point at meridian angle `u` and longitude `w`.
    pub fn point(&self, u: f64, w: f64) -> Point3 {
        let rho = self.major + self.minor * u.cos();
        Point3::new(rho * w.cos(), rho * w.sin(), self.minor * u.sin())
    }

    /// Nearest point on the core circle, and the offset from it.
    fn core(&self, x: &Point3) -> Result<(Point3, Point3)> {
        let rho = x.x.hypot(x.y);
        if rho < MEDIAL_GUARD {
            return Err(Error::AmbiguousProjection { guard: MEDIAL_GUARD });
        }
        let c = Point3::new(self.major * x.x / rho, self.major * x.y / rho, 0.0);
        let d = x - c;
        if d.norm() < MEDIAL_GUARD {
            return Err(Error::AmbiguousProjection { guard: MEDIAL_GUARD });
        }
        Ok((c, d))
    }
}

impl Manifold for Torus {
    fn name(&self) -> &'static str {
        "torus"
    }

    fn params(&self) -> ManifoldParams {
        ManifoldParams::Torus {
            major: self.major,
            minor: self.minor,
        }
    }

    fn reach(&self) -> f64 {
        // medial axis = core circle ∪ z axis
        self.minor.min(self.major - self.minor)
    }

    fn volume(&self) -> f64 {
        4.0 * PI * PI * self.major * self.minor
    }

    fn max_norm(&self) -> f64 {
        self.major + self.minor
    }

    fn residual(&self, v: &Point3) -> f64 {
        let rho = v.x.hypot(v.y);
        ((rho - self.major).powi(2) + v.z * v.z - self.minor * self.minor).abs()
    }

    fn signed_distance(&self, x: &Point3) -> f64 {
        let rho = x.x.hypot(x.y);
        (rho - self.major).hypot(x.z) - self.minor
    }

    fn project(&self, x: &Point3) -> Result<Point3> {
        let (c, d) = self.core(x)?;
        Ok(c + d * (self.minor / d.norm()))
    }

    fn unit_normal(&self, v: &Point3) -> Point3 {
        let rho = v.x.hypot(v.y);
        let c = Point3::new(self.major * v.x / rho, self.major * v.y / rho, 0.0);
        (v - c).normalize()
    }

    fn raw_tangent_frame(&self, v: &Point3) -> Frame {
        let rho = v.x.hypot(v.y);
        let (cw, sw) = (v.x / rho, v.y / rho);
        let n = self.unit_normal(v);
        // meridian direction first, then the longitude direction
        let along_w = Point3::new(-sw, cw, 0.0);
        let along_u = along_w.cross(&n);
        Frame::from_columns(&[along_u, along_w])
    }

    fn sample(&self, rng: &mut Rng) -> Point3 {
        // rejection on the area element (R + r cos u) / (R + r)
        let u = loop {
            let u = rng.gen::<f64>() * 2.0 * PI;
            let accept = (self.major + self.minor * u.cos()) / (self.major + self.minor);
            if rng.gen::<f64>() < accept {
                break u;
            }
        };
        let w = rng.gen::<f64>() * 2.0 * PI;
        self.point(u, w)
    }

    fn lift(&self, base: &Point3, dir: &Point3) -> Option<f64> {
        // Newton on the signed distance, which has unit gradient
        let mut t = 0.0;
        for _ in 0..25 {
            let p = base + dir * t;
            let f = self.signed_distance(&p);
            if f.abs() < 1e-13 {
                return Some(t);
            }
            let rho = p.x.hypot(p.y);
            if rho < MEDIAL_GUARD {
                return None;
            }
            let grad = Point3::new((rho - self.major) * p.x / rho, (rho - self.major) * p.y / rho, p.z);
            let gn = grad.norm();
            if gn < MEDIAL_GUARD {
                return None;
            }
            let slope = grad.dot(dir) / gn;
            if slope.abs() < 1e-3 {
                return None;
            }
            t -= f / slope;
        }
        let f = self.signed_distance(&(base + dir * t));
        (f.abs() < 1e-10).then_some(t)
    }
}
