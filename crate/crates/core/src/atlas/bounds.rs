use nalgebra::{Matrix2, Matrix3};

use crate::geometry::{Frame, Manifold};
use crate::{Error, Result};

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => {
            // V_d = V_{d-2} · 2π / d
            unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64
        }
    }
}

fn check_radius(r: f64, tau: f64) -> Result<()> {
    if !(r > 0.0 && r < tau / 2.0) {
        return Err(Error::RadiusTooLarge { radius: r, limit: tau / 2.0 });
    }
    Ok(())
}

/// Upper bound on the size of a greedy `r`-cover stated as
/// `|M| / (cos^d(arcsin(r/2τ)) · |B_r^d|)`.
pub fn covering_bound(m: &dyn Manifold, r: f64) -> Result<f64> {
    let tau = m.reach();
    check_radius(r, tau)?;
    let d = m.intrinsic_dim();
    let theta = (r / (2.0 * tau)).asin();
    Ok(m.volume() / (theta.cos().powi(d as i32) * unit_ball_volume(d) * r.powi(d as i32)))
}

/// Packing bound for a greedy `r`-cover: centers are `r`-separated, so the
/// balls of radius `r/2` around them are disjoint.
pub fn packing_bound(m: &dyn Manifold, r: f64) -> Result<f64> {
    let tau = m.reach();
    check_radius(r, tau)?;
    let d = m.intrinsic_dim();
    let half = r / 2.0;
    let theta = (half / (2.0 * tau)).asin();
    Ok(m.volume() / (theta.cos().powi(d as i32) * unit_ball_volume(d) * half.powi(d as i32)))
}

/// Largest principal angle between two tangent planes.
pub fn principal_angle(a: &Frame, b: &Frame) -> f64 {
    let cosines = Matrix2::from(a.transpose() * b).singular_values();
    let residual = (Matrix3::identity() - a * a.transpose()) * b;
    let sines = residual.singular_values();
    sines.max().atan2(cosines.min())
}
