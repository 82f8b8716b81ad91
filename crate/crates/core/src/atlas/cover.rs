use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spatial::SpatialHash;
use crate::geometry::{EmbeddedManifold, Frame, Point3};
use crate::rng::{self, purpose};
use crate::{Error, Result};

/// Selects a subset of sample points that is `radius`-separated and leaves
/// every sample within `radius` of a selected point.
pub trait CoverStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, points: &[Point3], radius: f64) -> Vec<usize>;
}

/// Greedy farthest-point selection. `O(N·C)`; used for small covers.
#[derive(Debug, Default, Clone, Copy)]
pub struct FarthestPoint;

impl CoverStrategy for FarthestPoint {
    fn name(&self) -> &'static str {
        "farthest"
    }

    fn select(&self, points: &[Point3], radius: f64) -> Vec<usize> {
        if points.is_empty() {
            return Vec::new();
        }
        let mut chosen = vec![0];
        let mut dist: Vec<f64> = points.iter().map(|p| (p - points[0]).norm()).collect();
        loop {
            let (far, &d) = dist
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            if d <= radius {
                return chosen;
            }
            chosen.push(far);
            let c = points[far];
            for (di, p) in dist.iter_mut().zip(points) {
                let nd = (p - c).norm();
                if nd < *di {
                    *di = nd;
                }
            }
        }
    }
}

/// Single greedy pass: keep a sample if nothing kept so far is within
/// `radius`. Linear time with a hash grid; used for large covers.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sequential;

impl CoverStrategy for Sequential {
    fn name(&self) -> &'static str {
        "sequential"
    }

    fn select(&self, points: &[Point3], radius: f64) -> Vec<usize> {
        let mut grid = SpatialHash::new(radius);
        let mut kept_pts = Vec::new();
        let mut chosen = Vec::new();
        for (i, p) in points.iter().enumerate() {
            if !grid.any_within(&kept_pts, p, radius) {
                grid.insert(kept_pts.len(), p);
                kept_pts.push(*p);
                chosen.push(i);
            }
        }
        chosen
    }
}

/// Name → strategy table.
pub struct CoverRegistry {
    entries: BTreeMap<&'static str, Arc<dyn CoverStrategy>>,
}

impl CoverRegistry {
    pub fn with_builtins() -> Self {
        let mut entries: BTreeMap<&'static str, Arc<dyn CoverStrategy>> = BTreeMap::new();
        entries.insert("farthest", Arc::new(FarthestPoint));
        entries.insert("sequential", Arc::new(Sequential));
        CoverRegistry { entries }
    }

    pub fn register(&mut self, strategy: Arc<dyn CoverStrategy>) {
        self.entries.insert(strategy.name(), strategy);
    }

    /// Strategy for `name`; `auto` picks by the expected number of centers
    /// for separation `radius` on a surface of the given area.
    pub fn resolve(&self, name: &str, area: f64, radius: f64) -> Result<Arc<dyn CoverStrategy>> {
        if name != "auto" {
            return self.get(name);
        }
        let expected = area / (0.8 * radius * radius);
        self.get(if expected <= FARTHEST_LIMIT { "farthest" } else { "sequential" })
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CoverStrategy>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "cover strategy",
            name: name.to_string(),
            known: self.entries.keys().copied().collect::<Vec<_>>().join(", "),
        })
    }
}

/// Largest expected center count for which `auto` uses farthest-point selection.
const FARTHEST_LIMIT: f64 = 4000.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverConfig {
    /// Normal-noise cap of the tube M(q) the partition of unity must cover.
    pub q: f64,
    /// Separation; defaults to tau/40.
    pub delta: Option<f64>,
    /// Constant in the admissibility bound `delta < C (1 - q/tau)^2 tau`.
    pub c_const: f64,
    /// `auto`, or a registered strategy name.
    pub strategy: String,
    /// Samples drawn per `delta²` of surface area.
    pub oversample: f64,
    pub max_centers: usize,
    pub seed: u64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            q: 0.0,
            delta: None,
            c_const: 0.1,
            strategy: "auto".into(),
            oversample: 8.0,
            max_centers: 2_000_000,
            seed: 0,
        }
    }
}

/// A δ-separated set of surface points with the bump parameters of the
/// partition of unity built on it.
#[derive(Debug, Clone)]
pub struct Cover {
    pub centers: Vec<Point3>,
    pub frames: Vec<Frame>,
    pub local_reach: Vec<f64>,
    pub delta: f64,
    pub q: f64,
    pub tau: f64,
    /// `½(1 + q/τ)`
    pub p_param: f64,
    /// `6 / (1 − q/(pτ))`
    pub h_param: f64,
    grid: SpatialHash,
    max_local_reach: f64,
}

impl Cover {
    /// Assemble a cover from explicit centers; recomputes frames if `frames` is `None`.
    pub fn from_centers(
        surface: &EmbeddedManifold,
        centers: Vec<Point3>,
        frames: Option<Vec<Frame>>,
        local_reach: Option<Vec<f64>>,
        delta: f64,
        q: f64,
    ) -> Result<Self> {
        let tau = surface.reach();
        if centers.is_empty() {
            return Err(Error::InvalidParameter("cover has no centers".into()));
        }
        if !(q >= 0.0 && q < tau) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in [0, tau = {tau})")));
        }
        let frames = match frames {
            Some(f) if f.len() == centers.len() => f,
            Some(f) => {
                return Err(Error::DimensionMismatch {
                    expected: centers.len(),
                    got: f.len(),
                })
            }
            None => centers.iter().map(|c| surface.manifold.raw_tangent_frame(c)).collect(),
        };
        let local_reach = local_reach.unwrap_or_else(|| vec![tau; centers.len()]);
        if local_reach.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: local_reach.len(),
            });
        }
        let p_param = 0.5 * (1.0 + q / tau);
        let h_param = 6.0 / (1.0 - q / (p_param * tau));
        let max_local_reach = local_reach.iter().copied().fold(0.0, f64::max);
        // half the support radius at the tube boundary, capped by the radial cutoff
        let r = q / tau;
        let denom = (1.0 - (0.5 * (p_param + r)).powi(2)).sqrt() - r;
        let cell = if denom > 0.0 {
            (0.5 * h_param * delta / denom).min(p_param * max_local_reach)
        } else {
            p_param * max_local_reach
        };
        let grid = SpatialHash::from_points(&centers, cell);
        Ok(Cover {
            centers,
            frames,
            local_reach,
            delta,
            q,
            tau,
            p_param,
            h_param,
            grid,
            max_local_reach,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Unnormalised bump `η̄_k` at a point given as base coordinates plus the
    /// squared off-subspace norm.
    pub fn bump(&self, k: usize, base: &Point3, orth2: f64) -> f64 {
        let diff = base - self.centers[k];
        let radial = (diff.norm_squared() + orth2) / (self.p_param * self.local_reach[k]).powi(2);
        let tangential = (self.frames[k].transpose() * diff).norm_squared() / (self.h_param * self.delta).powi(2);
        (1.0 - radial - tangential).max(0.0)
    }

    /// Bound on `‖π(x) − v'_k‖` over bumps positive at a point `x` whose base
    /// part lies at distance `t` from the surface.
    ///
    /// With `s = ‖π(x) − v'‖` and `r = t/τ`, the reach gives a tangential
    /// component of `π(x) − v'` of at least `s·√(1 − ((p+r)/2)²)`, and tilting
    /// the normal at `π(x)` moves at most `t·s/τ` of it, so a positive bump
    /// needs `s·(√(1 − ((p+r)/2)²) − r) < hδ`.
    pub fn support_radius(&self, t: f64) -> Option<f64> {
        let r = t / self.tau;
        let denom = (1.0 - (0.5 * (self.p_param + r)).powi(2)).max(0.0).sqrt() - r;
        let bound = self.h_param * self.delta / denom;
        (denom > 0.0 && bound < self.p_param * self.max_local_reach + t).then_some(bound)
    }

    fn collect(&self, around: &Point3, radius: f64, base: &Point3, orth2: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.grid.for_each_candidate(around, radius, |k| {
            if (self.centers[k] - around).norm_squared() <= radius * radius {
                let b = self.bump(k, base, orth2);
                if b > 0.0 {
                    out.push((k, b));
                }
            }
        });
        out.sort_unstable_by_key(|&(k, _)| k);
        out
    }

    /// All `(k, η̄_k)` with `η̄_k > 0`, ordered by `k`.
    pub fn bumps(&self, base: &Point3, orth2: f64) -> Vec<(usize, f64)> {
        let radius = self.p_param * self.max_local_reach;
        if orth2 >= radius * radius {
            return Vec::new();
        }
        self.collect(base, radius, base, orth2)
    }

    /// As [`Cover::bumps`], using the known nearest surface point `foot` of
    /// `base` to narrow the search.
    pub fn bumps_near(&self, base: &Point3, orth2: f64, foot: &Point3) -> Vec<(usize, f64)> {
        match self.support_radius((base - foot).norm()) {
            Some(radius) => self.collect(foot, radius, base, orth2),
            None => self.bumps(base, orth2),
        }
    }

    /// Normalised partition of unity `η(x)` as sparse `(k, η_k)` pairs.
    /// `foot` is the nearest surface point of `base`, when known.
    pub fn eta_sparse(&self, base: &Point3, orth2: f64, foot: Option<&Point3>) -> Result<Vec<(usize, f64)>> {
        let mut b = match foot {
            Some(f) => self.bumps_near(base, orth2, f),
            None => self.bumps(base, orth2),
        };
        let total: f64 = b.iter().map(|&(_, v)| v).sum();
        if b.is_empty() || total <= 0.0 {
            return Err(Error::UncoveredPoint);
        }
        for (_, v) in &mut b {
            *v /= total;
        }
        Ok(b)
    }

    /// Dense `η(x)` for an ambient point.
    pub fn eta(&self, surface: &EmbeddedManifold, x: &[f64]) -> Result<Vec<f64>> {
        let (base, orth2) = surface.split(x);
        let mut out = vec![0.0; self.len()];
        let foot = surface.manifold.project(&base).ok();
        for (k, v) in self.eta_sparse(&base, orth2, foot.as_ref())? {
            out[k] = v;
        }
        Ok(out)
    }

    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            self.grid.for_each_candidate(c, self.delta, |j| {
                if j != i {
                    best = best.min((self.centers[j] - c).norm());
                }
            });
        }
        best
    }

    /// Distance from `p` to the nearest center, searching within `radius`.
    pub fn nearest_center(&self, p: &Point3, radius: f64) -> Option<(usize, f64)> {
        self.grid.nearest_within(&self.centers, p, radius)
    }
}

fn sample_surface(surface: &EmbeddedManifold, count: usize, seed: u64, tag: u64) -> Vec<Point3> {
    let mut r = rng::stream(seed, purpose::COVER, &[tag]);
    (0..count).map(|_| surface.manifold.sample(&mut r)).collect()
}

/// Build a δ-separated cover of the surface and the bump parameters for M(q).
pub fn build_cover(surface: &EmbeddedManifold, cfg: &CoverConfig) -> Result<Cover> {
    let tau = surface.reach();
    let q = cfg.q;
    if !(q >= 0.0 && q < tau) {
        return Err(Error::InvalidParameter(format!("q = {q} must lie in [0, tau = {tau})")));
    }
    let delta = cfg.delta.unwrap_or(tau / 40.0);
    let admissible = cfg.c_const * (1.0 - q / tau).powi(2) * tau;
    if !(delta > 0.0 && delta < admissible) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must lie in (0, {admissible}) = (0, C (1 - q/tau)^2 tau)"
        )));
    }
    let area = surface.manifold.volume();
    let strategy = CoverRegistry::with_builtins().resolve(&cfg.strategy, area, delta)?;
    let count = ((cfg.oversample * area / (delta * delta)).ceil() as usize).max(2000);
    let points = sample_surface(surface, count, cfg.seed, 0);
    let chosen = strategy.select(&points, delta);
    if chosen.len() > cfg.max_centers {
        return Err(Error::BudgetExceeded(format!(
            "{} centers exceed the cap of {}",
            chosen.len(),
            cfg.max_centers
        )));
    }
    let centers: Vec<Point3> = chosen.iter().map(|&i| points[i]).collect();
    let cover = Cover::from_centers(surface, centers, None, None, delta, q)?;

    // coverage check on fresh samples
    for p in sample_surface(surface, 10_000, cfg.seed, 1) {
        if cover.nearest_center(&p, 2.0 * delta).is_none() {
            return Err(Error::BudgetExceeded(format!(
                "coverage within 2·delta not reached with {} centers; raise the oversampling",
                cover.len()
            )));
        }
    }
    Ok(cover)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, ManifoldParams};

    fn sphere() -> EmbeddedManifold {
        EmbeddedManifold::base(build_manifold(&ManifoldParams::Sphere { radius: 1.0 }).unwrap())
    }

    #[test]
    fn sphere_half_delta_cover() {
        let cfg = CoverConfig {
            delta: Some(0.5),
            c_const: 1.0,
            ..Default::default()
        };
        let cover = build_cover(&sphere(), &cfg).unwrap();
        assert!((8..=60).contains(&cover.len()), "{}", cover.len());
        for i in 0..cover.len() {
            for j in 0..i {
                assert!((cover.centers[i] - cover.centers[j]).norm() >= 0.5);
            }
        }
        assert!(cover.min_separation() >= 0.5);
    }

    #[test]
    fn tiny_cap_needs_one_center() {
        let s = sphere();
        let mut r = rng::stream(0, purpose::CHECK, &[]);
        let cap: Vec<Point3> = (0..500)
            .map(|_| s.manifold.sample(&mut r))
            .filter(|p| p.z > 0.9999)
            .chain(std::iter::once(Point3::new(0.0, 0.0, 1.0)))
            .collect();
        for strategy in [&FarthestPoint as &dyn CoverStrategy, &Sequential] {
            assert_eq!(strategy.select(&cap, 0.1).len(), 1);
        }
    }

    #[test]
    fn strategies_agree_on_guarantees() {
        let s = sphere();
        let pts = sample_surface(&s, 5000, 3, 0);
        for strategy in [&FarthestPoint as &dyn CoverStrategy, &Sequential] {
            let chosen = strategy.select(&pts, 0.2);
            let centers: Vec<Point3> = chosen.iter().map(|&i| pts[i]).collect();
            for p in &pts {
                assert!(centers.iter().any(|c| (c - p).norm() <= 0.2));
            }
            for i in 0..centers.len() {
                for j in 0..i {
                    assert!((centers[i] - centers[j]).norm() >= 0.2);
                }
            }
        }
    }

    #[test]
    fn default_cover_covers_within_two_delta() {
        let s = sphere();
        let cover = build_cover(&s, &CoverConfig { q: 0.3, ..Default::default() }).unwrap();
        assert!(cover.p_param > 0.5 && cover.p_param < 1.0);
        assert!(cover.h_param >= 6.0);
        assert!(cover.min_separation() >= cover.delta);
        for p in sample_surface(&s, 2000, 99, 7) {
            assert!(cover.nearest_center(&p, 2.0 * cover.delta).is_some());
        }
    }

    #[test]
    fn rejects_inadmissible_delta() {
        let cfg = CoverConfig {
            q: 0.3,
            delta: Some(0.2),
            ..Default::default()
        };
        assert!(build_cover(&sphere(), &cfg).is_err());
        assert!(CoverRegistry::with_builtins().get("nope").is_err());
    }

    #[test]
    fn bump_values() {
        let s = sphere();
        let cover = build_cover(&s, &CoverConfig { q: 0.3, ..Default::default() }).unwrap();
        let c = cover.centers[3];
        assert_eq!(cover.bump(3, &c, 0.0), 1.0);
        // far beyond p·tau in the radial term alone
        let far = c * (1.0 + cover.p_param * 1.01);
        assert_eq!(cover.bump(3, &far, 0.0), 0.0);
        // normalised weights sum to one
        let mut r = rng::stream(5, purpose::CHECK, &[]);
        for _ in 0..1000 {
            let v = s.manifold.sample(&mut r);
            let x = v * (1.0 + 0.3 * (2.0 * rand::Rng::gen::<f64>(&mut r) - 1.0));
            let eta = cover.eta_sparse(&x, 0.0, None).unwrap();
            let near: Vec<(usize, f64)> = cover.bumps_near(&x, 0.0, &v);
            assert_eq!(cover.bumps(&x, 0.0), near);
            let total: f64 = eta.iter().map(|e| e.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(eta.iter().all(|e| e.1 >= 0.0));
        }
    }
}
