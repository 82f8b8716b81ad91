use serde::{Deserialize, Serialize};

use super::cover::{Cover, CoverRegistry};
use super::spatial::SpatialHash;
use crate::geometry::{EmbeddedManifold, Frame, Point3};
use crate::rng::{self, purpose};
use crate::{Error, Result};
use rand::Rng as _;

/// Residual accepted for a lifted chart inverse.
const LIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasConfig {
    /// Surface samples used to detect chart/bump intersections.
    pub group_samples: usize,
    /// Tube samples used to measure how far grouped supports extend.
    pub support_samples: usize,
    /// Sample pairs used for the Lipschitz and coordinate-range measurements.
    pub lipschitz_pairs: usize,
    /// Radius of the chart balls that must cover the surface; `τ/8` by default.
    /// Chart maps are measured on balls of twice this radius.
    pub chart_radius: Option<f64>,
    /// Strategy selecting chart centers; see [`CoverRegistry::resolve`].
    pub strategy: String,
    pub seed: u64,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        AtlasConfig {
            group_samples: 30_000,
            support_samples: 30_000,
            lipschitz_pairs: 10_000,
            chart_radius: None,
            strategy: "auto".into(),
            seed: 0,
        }
    }
}

/// Tangent-plane charts over a fixed ball cover, together with the grouping
/// of partition-of-unity bumps into charts.
#[derive(Debug, Clone)]
pub struct Charts {
    pub centers: Vec<Point3>,
    pub frames: Vec<Frame>,
    pub normals: Vec<Point3>,
    /// Bump indices assigned to each chart.
    pub groups: Vec<Vec<usize>>,
    /// Chart of each bump.
    pub chart_of: Vec<usize>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Radius around a chart center on which the chart maps are accepted.
    pub domain_radius: f64,
    /// Largest measured distance from a chart center to the projection of a
    /// point of M(q) with positive weight for that chart.
    pub support_extent: f64,
    /// Supports stay inside the outer ball.
    pub strict: bool,
    /// Measured `max ‖φ_j(v)‖∞` over outer balls.
    pub coordinate_range: f64,
    pub lipschitz_forward: f64,
    pub lipschitz_inverse: f64,
}

/// A surface, a δ-cover with its partition of unity, and charts.
#[derive(Debug, Clone)]
pub struct Atlas {
    pub surface: EmbeddedManifold,
    pub cover: Cover,
    pub charts: Charts,
}

impl Atlas {
    pub fn chart_count(&self) -> usize {
        self.charts.centers.len()
    }

    pub fn intrinsic_dim(&self) -> usize {
        2
    }

    pub fn ambient_dim(&self) -> usize {
        self.surface.ambient_dim()
    }

    /// Local coordinates of a surface point (base coordinates) in chart `j`.
    pub fn chart_forward_base(&self, j: usize, v: &Point3) -> Result<[f64; 2]> {
        let c = self.charts.centers[j];
        let dist = (v - c).norm();
        if dist > self.charts.domain_radius {
            return Err(Error::OutOfChart {
                chart: j,
                distance: dist,
                radius: self.charts.domain_radius,
            });
        }
        let z = self.charts.frames[j].transpose() * (v - c);
        Ok([z[0], z[1]])
    }

    /// Local coordinates of an ambient surface point in chart `j`.
    pub fn chart_forward(&self, j: usize, v: &[f64]) -> Result<[f64; 2]> {
        let (base, orth2) = self.surface.split(v);
        let off = self.surface.manifold.residual(&base).abs() + orth2.sqrt();
        if off > 1e-6 {
            return Err(Error::PointOffSurface { residual: off });
        }
        self.chart_forward_base(j, &base)
    }

    /// Inverse chart in base coordinates.
    pub fn chart_inverse_base(&self, j: usize, z: [f64; 2]) -> Result<Point3> {
        let c = self.charts.centers[j];
        let f = &self.charts.frames[j];
        let n = self.charts.normals[j];
        let foot = c + f.column(0) * z[0] + f.column(1) * z[1];
        let t = self
            .surface
            .manifold
            .lift(&foot, &n)
            .ok_or(Error::OutOfImage { chart: j })?;
        let v = foot + n * t;
        let residual = self.surface.manifold.residual(&v).abs();
        if !(residual <= LIFT_TOL) {
            return Err(Error::NoConvergence { chart: j, residual });
        }
        if (v - c).norm() > self.charts.domain_radius {
            return Err(Error::OutOfImage { chart: j });
        }
        Ok(v)
    }

    pub fn chart_inverse(&self, j: usize, z: [f64; 2]) -> Result<Vec<f64>> {
        Ok(self.surface.embedding.embed_point(&self.chart_inverse_base(j, z)?))
    }
}

fn sample_tube(surface: &EmbeddedManifold, q: f64, r: &mut rng::Rng) -> (Point3, Point3) {
    let v = surface.manifold.sample(r);
    let s = q * (2.0 * r.gen::<f64>() - 1.0);
    (v, v + surface.manifold.unit_normal(&v) * s)
}

/// Build charts on top of a cover.
pub fn build_atlas(surface: EmbeddedManifold, cover: Cover, cfg: &AtlasConfig) -> Result<Atlas> {
    let tau = surface.reach();
    let m = &surface.manifold;
    let inner = cfg.chart_radius.unwrap_or(tau / 8.0);
    if !(inner > 0.0 && inner < tau) {
        return Err(Error::InvalidParameter(format!("chart radius {inner} must lie in (0, tau)")));
    }
    let outer = 2.0 * inner;

    // chart centers: farthest-point selection at the inner radius over
    // a dense sample plus every cover center
    let mut r = rng::stream(cfg.seed, purpose::COVER, &[2]);
    let extra = (40.0 * m.volume() / (inner * inner)).ceil() as usize;
    let mut pool: Vec<Point3> = cover.centers.clone();
    pool.extend((0..extra.max(1000)).map(|_| m.sample(&mut r)));
    let chosen = CoverRegistry::with_builtins()
        .resolve(&cfg.strategy, m.volume(), inner)?
        .select(&pool, inner);
    let centers: Vec<Point3> = chosen.iter().map(|&i| pool[i]).collect();
    let frames: Vec<Frame> = centers.iter().map(|c| m.raw_tangent_frame(c)).collect();
    let normals: Vec<Point3> = centers.iter().map(|c| m.unit_normal(c)).collect();
    let chart_grid = SpatialHash::from_points(&centers, inner);

    // first chart index whose inner ball meets each bump support; cover
    // centers are in the pool, so every bump has at least one witness
    let big = usize::MAX;
    let mut first = vec![big; cover.len()];
    let inner_chart = |p: &Point3| -> Option<usize> {
        let mut best = None;
        chart_grid.for_each_candidate(p, inner, |j| {
            if (centers[j] - p).norm() <= inner && best.map_or(true, |b| j < b) {
                best = Some(j);
            }
        });
        best
    };
    for (k, c) in cover.centers.iter().enumerate() {
        let j = inner_chart(c).ok_or(Error::GroupingFailure(format!("cover center {k} outside every inner ball")))?;
        first[k] = first[k].min(j);
    }
    let mut r = rng::stream(cfg.seed, purpose::COVER, &[3]);
    for _ in 0..cfg.group_samples {
        let p = m.sample(&mut r);
        let Some(j) = inner_chart(&p) else { continue };
        for (k, _) in cover.bumps_near(&p, 0.0, &p) {
            if j < first[k] {
                first[k] = j;
            }
        }
    }
    let mut groups = vec![Vec::new(); centers.len()];
    for (k, &j) in first.iter().enumerate() {
        if j == big {
            return Err(Error::GroupingFailure(format!("bump {k} meets no chart")));
        }
        groups[j].push(k);
    }
    let chart_of = first;

    // how far do grouped supports reach, measured through projections of M(q)
    let mut extent: f64 = 0.0;
    let mut r = rng::stream(cfg.seed, purpose::COVER, &[4]);
    for _ in 0..cfg.support_samples {
        let (v, x) = sample_tube(&surface, cover.q, &mut r);
        for (k, _) in cover.bumps_near(&x, 0.0, &v) {
            extent = extent.max((v - centers[chart_of[k]]).norm());
        }
    }
    for (k, c) in cover.centers.iter().enumerate() {
        extent = extent.max((c - centers[chart_of[k]]).norm());
    }
    let strict = extent <= outer;
    let limit = 0.75f64.sqrt() * tau;
    let domain_radius = if strict { outer.min(limit) } else { limit };
    if extent > domain_radius {
        return Err(Error::GroupingFailure(format!(
            "supports reach {extent:.4} from their chart center, beyond the chart domain {domain_radius:.4}; \
             decrease delta"
        )));
    }

    let mut atlas = Atlas {
        surface,
        cover,
        charts: Charts {
            centers,
            frames,
            normals,
            groups,
            chart_of,
            inner_radius: inner,
            outer_radius: outer,
            domain_radius,
            support_extent: extent,
            strict,
            coordinate_range: 0.0,
            lipschitz_forward: 0.0,
            lipschitz_inverse: 0.0,
        },
    };
    measure_chart_constants(&mut atlas, cfg.lipschitz_pairs, cfg.seed)?;
    Ok(atlas)
}

/// Empirical coordinate range and Lipschitz constants of the chart maps on
/// the outer balls.
fn measure_chart_constants(atlas: &mut Atlas, pairs: usize, seed: u64) -> Result<()> {
    let outer = atlas.charts.outer_radius;
    let c = atlas.chart_count();
    let mut r = rng::stream(seed, purpose::CHECK, &[0]);
    let (mut range, mut fwd, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    let disk = |r: &mut rng::Rng| loop {
        let z = [outer * (2.0 * r.gen::<f64>() - 1.0), outer * (2.0 * r.gen::<f64>() - 1.0)];
        if z[0].hypot(z[1]) <= outer {
            return z;
        }
    };
    let mut done = 0;
    let mut attempts = 0;
    while done < pairs && attempts < 20 * pairs.max(1) {
        attempts += 1;
        let j = r.gen_range(0..c);
        let (z1, z2) = (disk(&mut r), disk(&mut r));
        let (Ok(v1), Ok(v2)) = (atlas.chart_inverse_base(j, z1), atlas.chart_inverse_base(j, z2)) else {
            continue;
        };
        let cj = atlas.charts.centers[j];
        if (v1 - cj).norm() > outer || (v2 - cj).norm() > outer {
            continue;
        }
        let w1 = atlas.chart_forward_base(j, &v1)?;
        let w2 = atlas.chart_forward_base(j, &v2)?;
        range = range.max(w1[0].abs().max(w1[1].abs()));
        let dv = v1 - v2;
        let dz = (w1[0] - w2[0]).hypot(w1[1] - w2[1]);
        if dv.norm() > 1e-12 {
            fwd = fwd.max((w1[0] - w2[0]).abs().max((w1[1] - w2[1]).abs()) / dv.norm());
        }
        if dz > 1e-12 {
            inv = inv.max(dv.amax() / dz);
        }
        done += 1;
    }
    atlas.charts.coordinate_range = range;
    atlas.charts.lipschitz_forward = fwd;
    atlas.charts.lipschitz_inverse = inv;
    Ok(())
}
