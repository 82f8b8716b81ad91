//! Numerical invariant checks for the geometric oracles. Each check samples
//! the quantity, compares it with its bound and reports both.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::atlas::{covering_bound, packing_bound, principal_angle, Atlas, CoverStrategy, FarthestPoint};
use crate::geometry::{EmbeddedManifold, Point3};
use crate::rng::{self, purpose, Rng};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub samples: usize,
    pub pass: bool,
    pub note: String,
}

impl InvariantCheck {
    fn at_most(name: &str, measured: f64, bound: f64, samples: usize, note: String) -> Self {
        InvariantCheck {
            name: name.into(),
            measured,
            bound,
            samples,
            pass: measured <= bound,
            note,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.6e} bound {:.6e} ({} samples{}{})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound,
            self.samples,
            if self.note.is_empty() { "" } else { "; " },
            self.note
        )
    }
}

/// A point of the tube M(q): a uniform surface point moved by `q·u` along a
/// uniformly random unit normal, `u` uniform in `[0, 1]`.
pub fn sample_tube(surface: &EmbeddedManifold, q: f64, rng: &mut Rng) -> Vec<f64> {
    let v = surface.sample(rng);
    let tangent = surface.tangent_frame(&v).expect("sampled point lies on the surface");
    let dim = v.len();
    loop {
        let mut g: Vec<f64> = (0..dim).map(|_| gauss(rng)).collect();
        for t in &tangent {
            let c: f64 = t.iter().zip(&g).map(|(a, b)| a * b).sum();
            for (gi, ti) in g.iter_mut().zip(t) {
                *gi -= c * ti;
            }
        }
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let s = q * rng.gen::<f64>() / norm;
            return v.iter().zip(&g).map(|(a, b)| a + s * b).collect();
        }
    }
}

fn gauss(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub const IDENTITY_TOL: f64 = 1e-8;
pub const UNITY_TOL: f64 = 1e-12;
pub const LIPSCHITZ_SLACK: f64 = 1e-6;
pub const ANGLE_SLACK: f64 = 1e-9;

/// `sup ‖decode(encode(x)) − π(x)‖_∞` over random points of M(q).
pub fn oracle_identity(atlas: &Atlas, q: f64, samples: usize, seed: u64) -> Result<InvariantCheck> {
    let mut r = rng::stream(seed, purpose::CHECK, &[1]);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = sample_tube(&atlas.surface, q, &mut r);
        let err = match atlas.denoise(&x) {
            Ok(y) => sup_dist(&y, &atlas.surface.project(&x)?),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    Ok(InvariantCheck::at_most(
        "oracle identity",
        worst,
        IDENTITY_TOL,
        samples,
        format!("q = {q}"),
    ))
}

/// Largest `|Σ_j ρ_j(x) − 1|`, failing outright on a negative weight.
pub fn partition_of_unity(atlas: &Atlas, q: f64, samples: usize, seed: u64) -> Result<InvariantCheck> {
    let mut r = rng::stream(seed, purpose::CHECK, &[2]);
    let mut worst: f64 = 0.0;
    let mut min_weight = f64::INFINITY;
    for _ in 0..samples {
        let x = sample_tube(&atlas.surface, q, &mut r);
        match atlas.encode(&x) {
            Ok(code) => {
                worst = worst.max((code.weights.iter().sum::<f64>() - 1.0).abs());
                min_weight = code.weights.iter().copied().fold(min_weight, f64::min);
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    let mut check = InvariantCheck::at_most(
        "partition of unity",
        worst,
        UNITY_TOL,
        samples,
        format!("min weight {min_weight:e}"),
    );
    check.pass &= min_weight >= 0.0;
    Ok(check)
}

/// Largest `‖π(x₁) − π(x₂)‖ / ‖x₁ − x₂‖` over pairs in M(q), against
/// `1/(1 − q/τ)`. Half the pairs are close together, where the ratio peaks.
pub fn projection_lipschitz(surface: &EmbeddedManifold, q: f64, pairs: usize, seed: u64) -> Result<InvariantCheck> {
    let tau = surface.reach();
    let mut r = rng::stream(seed, purpose::CHECK, &[3, q.to_bits()]);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let x1 = sample_tube(surface, q, &mut r);
        let x2 = if done % 2 == 0 {
            let step = 1e-3 * tau;
            let y: Vec<f64> = x1
                .iter()
                .map(|&a| a + step * gauss(&mut r))
                .collect();
            if surface.distance(&y) > q {
                continue;
            }
            y
        } else {
            sample_tube(surface, q, &mut r)
        };
        let d = dist(&x1, &x2);
        if d == 0.0 {
            continue;
        }
        worst = worst.max(dist(&surface.project(&x1)?, &surface.project(&x2)?) / d);
        done += 1;
    }
    let factor = 1.0 / (1.0 - q / tau);
    Ok(InvariantCheck::at_most(
        "projection lipschitz",
        worst,
        factor * (1.0 + LIPSCHITZ_SLACK),
        pairs,
        format!("q/tau = {}, factor 1/(1-q/tau) = {factor:.6}", q / tau),
    ))
}

/// Largest `sin(∠/2) − ‖v₁ − v₂‖/(2τ)` over surface pairs, where `∠` is the
/// largest principal angle between the tangent planes.
pub fn tangent_angle(surface: &EmbeddedManifold, pairs: usize, seed: u64) -> Result<InvariantCheck> {
    let tau = surface.reach();
    let m = &surface.manifold;
    let mut r = rng::stream(seed, purpose::CHECK, &[4]);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        let a: Point3 = m.sample(&mut r);
        let b: Point3 = if i % 2 == 0 {
            // a nearby partner
            let step = 0.2 * tau * r.gen::<f64>();
            let dir = Point3::new(
                gauss(&mut r),
                gauss(&mut r),
                gauss(&mut r),
            );
            match m.project(&(a + step * dir.normalize())) {
                Ok(p) => p,
                Err(_) => m.sample(&mut r),
            }
        } else {
            m.sample(&mut r)
        };
        let angle = principal_angle(&m.tangent_frame(&a)?, &m.tangent_frame(&b)?);
        worst = worst.max((angle / 2.0).sin() - (a - b).norm() / (2.0 * tau));
    }
    Ok(InvariantCheck::at_most(
        "tangent angle",
        worst,
        ANGLE_SLACK,
        pairs,
        "measured is sin(angle/2) - |v1-v2|/(2 tau)".into(),
    ))
}

fn greedy_cover_size(surface: &EmbeddedManifold, r: f64, samples: usize, seed: u64) -> usize {
    let mut g = rng::stream(seed, purpose::CHECK, &[5]);
    let points: Vec<Point3> = (0..samples).map(|_| surface.manifold.sample(&mut g)).collect();
    FarthestPoint.select(&points, r).len()
}

/// Size of a greedy farthest-point `r`-cover of dense surface samples
/// against the volume formula [`covering_bound`].
pub fn covering_count(surface: &EmbeddedManifold, r: f64, samples: usize, seed: u64) -> Result<InvariantCheck> {
    let bound = covering_bound(surface.manifold.as_ref(), r)?;
    let count = greedy_cover_size(surface, r, samples, seed);
    Ok(InvariantCheck::at_most(
        "covering bound",
        count as f64,
        bound,
        samples,
        format!("greedy farthest-point cover at r = {r}"),
    ))
}

/// The same greedy cover against [`packing_bound`], which holds for any
/// `r`-separated set. The volume formula is reported alongside.
pub fn packing_count(surface: &EmbeddedManifold, r: f64, samples: usize, seed: u64) -> Result<InvariantCheck> {
    let m = surface.manifold.as_ref();
    let (bound, formula) = (packing_bound(m, r)?, covering_bound(m, r)?);
    let count = greedy_cover_size(surface, r, samples, seed);
    Ok(InvariantCheck::at_most(
        "cover packing bound",
        count as f64,
        bound,
        samples,
        format!("greedy farthest-point cover at r = {r}; volume formula gives {formula:.4}"),
    ))
}
