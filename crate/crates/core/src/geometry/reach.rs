use super::Manifold;
use crate::rng::{self, purpose};

/// Pairwise estimate of the reach from `grid_density` surface samples.
///
/// For every ordered pair `(a, b)` the radius of the ball tangent at `a` that
/// passes through `b` is `‖b − a‖² / (2·|⟨n_a, b − a⟩|)`; the medial axis is
/// where such balls first meet a second surface point, so the infimum over
/// pairs approximates the reach. Only used as a test oracle.
pub fn reach_bruteforce(manifold: &dyn Manifold, grid_density: usize, seed: u64) -> f64 {
    let n = grid_density.max(1000);
    let mut r = rng::stream(seed, purpose::CHECK, &[n as u64]);
    let pts: Vec<_> = (0..n).map(|_| manifold.sample(&mut r)).collect();
    let normals: Vec<_> = pts.iter().map(|p| manifold.unit_normal(p)).collect();
    let mut best = f64::INFINITY;
    for (a, na) in pts.iter().zip(&normals) {
        for b in &pts {
            let d = b - a;
            let along = na.dot(&d).abs();
            if along > 1e-12 {
                best = best.min(d.norm_squared() / (2.0 * along));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Sphere, Torus};

    #[test]
    fn sphere_reach_is_radius() {
        for r in [1.0, 2.0] {
            let est = reach_bruteforce(&Sphere::new(r).unwrap(), 1000, 1);
            assert!(est >= 0.95 * r && est <= 1.05 * r, "r={r}: {est}");
        }
    }

    #[test]
    fn torus_reach_is_tube_radius() {
        let est = reach_bruteforce(&Torus::new(2.0, 0.5).unwrap(), 2000, 1);
        assert!((0.475..=0.525).contains(&est), "{est}");
    }
}
