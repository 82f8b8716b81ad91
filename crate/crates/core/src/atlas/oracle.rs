use super::charts::Atlas;
use crate::{Error, Result};

/// Chart coordinates and chart weights of a point: the latent code the
/// autoencoder is meant to imitate.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCode {
    pub coords: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl OracleCode {
    pub fn chart_count(&self) -> usize {
        self.weights.len()
    }

    /// Flat latent vector laid out as `[z_j0, z_j1, ρ_j]` per chart.
    pub fn to_latent(&self) -> Vec<f64> {
        self.coords
            .iter()
            .zip(&self.weights)
            .flat_map(|(z, &w)| [z[0], z[1], w])
            .collect()
    }

    pub fn from_latent(latent: &[f64]) -> Result<Self> {
        if latent.len() % 3 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 3 * (latent.len() / 3 + 1),
                got: latent.len(),
            });
        }
        let coords = latent.chunks(3).map(|c| [c[0], c[1]]).collect();
        let weights = latent.chunks(3).map(|c| c[2]).collect();
        Ok(OracleCode { coords, weights })
    }

    /// Chart carrying the largest weight.
    pub fn dominant_chart(&self) -> usize {
        let mut best = 0;
        for (j, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = j;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub point: Vec<f64>,
    /// All weights were zero; `point` is the zero vector.
    pub degenerate: bool,
}

impl Atlas {
    /// Encode an ambient point of the tube around the surface.
    pub fn encode(&self, x: &[f64]) -> Result<OracleCode> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        let (base, orth2) = self.surface.split(x);
        let foot = self.surface.manifold.project(&base)?;
        let eta = self.cover.eta_sparse(&base, orth2, Some(&foot))?;
        let c = self.chart_count();
        let mut weights = vec![0.0; c];
        for (k, e) in eta {
            weights[self.charts.chart_of[k]] += e;
        }
        let mut coords = vec![[0.0; 2]; c];
        for j in 0..c {
            if weights[j] > 0.0 {
                coords[j] = self.chart_forward_base(j, &foot)?;
            }
        }
        Ok(OracleCode { coords, weights })
    }

    /// Weighted blend of chart inverses.
    pub fn decode(&self, code: &OracleCode) -> Result<Decoded> {
        if code.chart_count() != self.chart_count() {
            return Err(Error::DimensionMismatch {
                expected: self.chart_count(),
                got: code.chart_count(),
            });
        }
        let dim = self.ambient_dim();
        let mut point = vec![0.0; dim];
        let mut any = false;
        for j in 0..code.chart_count() {
            let w = code.weights[j];
            if w == 0.0 {
                continue;
            }
            any = true;
            let v = self.chart_inverse(j, code.coords[j])?;
            for (p, vi) in point.iter_mut().zip(v) {
                *p += w * vi;
            }
        }
        if !any {
            log::warn!("decode called with all-zero chart weights");
        }
        Ok(Decoded { point, degenerate: !any })
    }

    /// `decode(encode(x))`.
    pub fn denoise(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decode(&self.encode(x)?)?.point)
    }
}
