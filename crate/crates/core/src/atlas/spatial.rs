use rustc_hash::FxHashMap;

use crate::geometry::Point3;

type Key = [i64; 3];

/// Uniform hash grid over points in R³ for fixed-radius neighbour queries.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    cell: f64,
    cells: FxHashMap<Key, Vec<u32>>,
}

impl SpatialHash {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        SpatialHash {
            cell,
            cells: FxHashMap::default(),
        }
    }

    pub fn from_points(points: &[Point3], cell: f64) -> Self {
        let mut grid = Self::new(cell);
        for (i, p) in points.iter().enumerate() {
            grid.insert(i, p);
        }
        grid
    }

    fn key(&self, p: &Point3) -> Key {
        [
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        ]
    }

    pub fn insert(&mut self, index: usize, p: &Point3) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(index as u32);
    }

    /// Call `f` with every stored index in cells that may hold points within
    /// `radius` of `p`. Candidates are not distance-filtered.
    pub fn for_each_candidate(&self, p: &Point3, radius: f64, mut f: impl FnMut(usize)) {
        let reach = (radius / self.cell).ceil() as i64;
        let [cx, cy, cz] = self.key(p);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(bucket) = self.cells.get(&[cx + dx, cy + dy, cz + dz]) {
                        for &i in bucket {
                            f(i as usize);
                        }
                    }
                }
            }
        }
    }

    /// True if any of `points` indexed here lies strictly within `radius` of `p`.
    pub fn any_within(&self, points: &[Point3], p: &Point3, radius: f64) -> bool {
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        let [cx, cy, cz] = self.key(p);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(bucket) = self.cells.get(&[cx + dx, cy + dy, cz + dz]) {
                        if bucket.iter().any(|&i| (points[i as usize] - p).norm_squared() < r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Index and distance of the nearest point within `radius`, if any.
    pub fn nearest_within(&self, points: &[Point3], p: &Point3, radius: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.for_each_candidate(p, radius, |i| {
            let d = (points[i] - p).norm();
            if d <= radius && best.map_or(true, |(bi, bd)| d < bd || (d == bd && i < bi)) {
                best = Some((i, d));
            }
        });
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_neighbours_across_cells() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.95, 0.0, 0.0), Point3::new(3.0, 0.0, 0.0)];
        let grid = SpatialHash::from_points(&pts, 0.5);
        assert!(grid.any_within(&pts, &Point3::new(0.5, 0.0, 0.0), 0.46));
        assert!(!grid.any_within(&pts, &Point3::new(2.0, 0.0, 0.0), 0.9));
        assert_eq!(grid.nearest_within(&pts, &Point3::new(0.6, 0.0, 0.0), 1.0).unwrap().0, 1);
        assert!(grid.nearest_within(&pts, &Point3::new(2.0, 0.0, 0.0), 0.5).is_none());
    }
}
