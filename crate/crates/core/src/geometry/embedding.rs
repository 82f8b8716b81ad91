use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Point3;
use crate::matrix::Mat;
use crate::rng::{self, purpose};
use crate::{hexfloat, Error, Result};

/// Isometric placement of R³ into R^D: `x = Q·[p; 0] + offset` with `Q` orthogonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    dim: usize,
    /// `D × D`, row-major.
    #[serde(with = "hexfloat::vec")]
    q: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    offset: Vec<f64>,
}

impl Embedding {
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 3, "ambient dimension must be at least 3");
        let mut q = vec![0.0; dim * dim];
        for i in 0..dim {
            q[i * dim + i] = 1.0;
        }
        Embedding {
            dim,
            q,
            offset: vec![0.0; dim],
        }
    }

    /// Random orthogonal embedding, a deterministic function of `(dim, seed)`.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidParameter(format!("ambient dimension {dim} < 3")));
        }
        let mut r = rng::stream(seed, purpose::EMBED, &[dim as u64]);
        let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut r));
        let qr = g.qr();
        let (mut q, rmat) = (qr.q(), qr.r());
        for j in 0..dim {
            if rmat[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let mut rows = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rows[i * dim + j] = q[(i, j)];
            }
        }
        Ok(Embedding {
            dim,
            q: rows,
            offset: vec![0.0; dim],
        })
    }

    pub fn with_offset(mut self, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: offset.len(),
            });
        }
        self.offset = offset;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_identity(&self) -> bool {
        *self == Embedding::identity(self.dim)
    }

    pub fn embed_vector(&self, v: &Point3) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let row = &self.q[i * self.dim..i * self.dim + 3];
                row[0] * v.x + row[1] * v.y + row[2] * v.z
            })
            .collect()
    }

    pub fn embed_point(&self, p: &Point3) -> Vec<f64> {
        let mut x = self.embed_vector(p);
        for (xi, o) in x.iter_mut().zip(&self.offset) {
            *xi += o;
        }
        x
    }

    /// `Qᵀ(x − offset)` split into its first three coordinates and the squared
    /// norm of the rest.
    pub fn unembed_split(&self, x: &[f64]) -> (Point3, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let mut p = Point3::zeros();
        let mut orth2 = 0.0;
        for j in 0..self.dim {
            let yj: f64 = (0..self.dim).map(|i| self.q[i * self.dim + j] * (x[i] - self.offset[i])).sum();
            if j < 3 {
                p[j] = yj;
            } else {
                orth2 += yj * yj;
            }
        }
        (p, orth2)
    }

    pub fn unembed(&self, x: &[f64]) -> Point3 {
        self.unembed_split(x).0
    }

    /// Embed each row of an `n × 3` matrix.
    pub fn embed(&self, points: &Mat) -> Result<Mat> {
        if points.cols != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: points.cols,
            });
        }
        let mut out = Mat::zeros(points.rows, self.dim);
        for i in 0..points.rows {
            let r = points.row(i);
            out.row_mut(i)
                .copy_from_slice(&self.embed_point(&Point3::new(r[0], r[1], r[2])));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_in_three_dims() {
        let e = Embedding::identity(3);
        let p = Point3::new(0.1, -2.0, 3.5);
        assert_eq!(e.embed_point(&p), vec![0.1, -2.0, 3.5]);
        assert!(e.is_identity());
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(Embedding::random(5, 9).unwrap(), Embedding::random(5, 9).unwrap());
        assert_ne!(Embedding::random(5, 9).unwrap(), Embedding::random(5, 10).unwrap());
        assert!(Embedding::random(2, 0).is_err());
    }

    proptest! {
        #[test]
        fn isometry_and_inverse(
            a in prop::array::uniform3(-5.0f64..5.0),
            b in prop::array::uniform3(-5.0f64..5.0),
            dim in 3usize..11,
            seed in 0u64..1000,
        ) {
            let e = Embedding::random(dim, seed).unwrap()
                .with_offset((0..dim).map(|i| i as f64 * 0.5).collect()).unwrap();
            let (pa, pb) = (Point3::from(a), Point3::from(b));
            let (ea, eb) = (e.embed_point(&pa), e.embed_point(&pb));
            prop_assert!((dist(&ea, &eb) - (pa - pb).norm()).abs() < 1e-10);
            let (back, orth2) = e.unembed_split(&ea);
            prop_assert!((back - pa).norm() < 1e-10);
            prop_assert!(orth2 < 1e-20);
        }
    }
}
