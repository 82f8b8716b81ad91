use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Normal-space noise with norm at most `q`.
    NormalBounded,
    /// Bounded normal part plus a tangential part of second moment `sigma2`.
    General,
    /// Isotropic Gaussian in the ambient space.
    IsotropicGaussian,
}

impl NoiseKind {
    pub fn code(self) -> u8 {
        match self {
            NoiseKind::NormalBounded => 0,
            NoiseKind::General => 1,
            NoiseKind::IsotropicGaussian => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(NoiseKind::NormalBounded),
            1 => Ok(NoiseKind::General),
            2 => Ok(NoiseKind::IsotropicGaussian),
            c => Err(Error::Format(format!("unknown noise kind code {c}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::NormalBounded => "normal",
            NoiseKind::General => "general",
            NoiseKind::IsotropicGaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" | "normal_bounded" => Ok(NoiseKind::NormalBounded),
            "general" => Ok(NoiseKind::General),
            "gaussian" | "isotropic" | "isotropic_gaussian" => Ok(NoiseKind::IsotropicGaussian),
            other => Err(Error::UnknownName {
                kind: "noise kind",
                name: other.to_string(),
                known: "normal, general, gaussian".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Cap on the normal component.
    pub q: f64,
    /// Target `E‖noise‖²` (normal part only for `General`).
    pub level: f64,
    /// Tangential second moment, `General` only.
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        NoiseSpec {
            kind: NoiseKind::NormalBounded,
            q: 0.0,
            level: 0.0,
            sigma2: 0.0,
        }
    }

    pub fn normal(q: f64, level: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::NormalBounded,
            q,
            level,
            sigma2: 0.0,
        }
    }

    pub fn general(q: f64, level: f64, sigma2: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::General,
            q,
            level,
            sigma2,
        }
    }

    pub fn gaussian(level: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::IsotropicGaussian,
            q: 0.0,
            level,
            sigma2: 0.0,
        }
    }

    /// Check the noise parameters against a manifold of reach `tau`.
    pub fn validate(&self, tau: f64) -> Result<()> {
        if !(self.level >= 0.0 && self.level.is_finite()) || !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise level and sigma2 must be finite and non-negative ({self:?})"
            )));
        }
        if self.kind != NoiseKind::IsotropicGaussian {
            if !(self.q >= 0.0 && self.q < tau) {
                return Err(Error::InvalidParameter(format!("q = {} must lie in [0, tau = {tau})", self.q)));
            }
            let magnitude = self.level.sqrt();
            if magnitude > self.q {
                return Err(Error::LevelExceedsCap { magnitude, cap: self.q });
            }
        }
        Ok(())
    }
}

fn gaussian_vec(dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Split `g` into its component in span(tangent) and the orthogonal rest.
fn split_tangent(g: &[f64], tangent: &[Vec<f64>; 2]) -> (Vec<f64>, Vec<f64>) {
    let mut tan = vec![0.0; g.len()];
    for t in tangent {
        let c: f64 = t.iter().zip(g).map(|(a, b)| a * b).sum();
        for (o, ti) in tan.iter_mut().zip(t) {
            *o += c * ti;
        }
    }
    let mut normal: Vec<f64> = g.iter().zip(&tan).map(|(a, b)| a - b).collect();
    // second pass removes rounding leakage into the tangent space
    for t in tangent {
        let c: f64 = t.iter().zip(&normal).map(|(a, b)| a * b).sum();
        for (o, ti) in normal.iter_mut().zip(t) {
            *o -= c * ti;
        }
    }
    (tan, normal)
}

fn unit_direction(
    tangent: &[Vec<f64>; 2],
    rng: &mut Rng,
    pick: impl Fn((Vec<f64>, Vec<f64>)) -> Vec<f64>,
) -> Vec<f64> {
    let dim = tangent[0].len();
    loop {
        let v = pick(split_tangent(&gaussian_vec(dim, rng), tangent));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Perturb clean ambient point `v` whose ambient tangent frame is `tangent`.
pub fn apply_noise(v: &[f64], tangent: &[Vec<f64>; 2], spec: &NoiseSpec, rng: &mut Rng) -> Result<Vec<f64>> {
    let dim = v.len();
    let mut x = v.to_vec();
    if spec.level == 0.0 && spec.sigma2 == 0.0 {
        return Ok(x);
    }
    match spec.kind {
        NoiseKind::NormalBounded | NoiseKind::General => {
            let magnitude = spec.level.sqrt();
            if magnitude > spec.q {
                return Err(Error::LevelExceedsCap { magnitude, cap: spec.q });
            }
            if magnitude > 0.0 {
                let dir = unit_direction(tangent, rng, |(_, n)| n);
                for (xi, d) in x.iter_mut().zip(dir) {
                    *xi += magnitude * d;
                }
            }
            if spec.kind == NoiseKind::General && spec.sigma2 > 0.0 {
                let dir = unit_direction(tangent, rng, |(t, _)| t);
                let m = spec.sigma2.sqrt();
                for (xi, d) in x.iter_mut().zip(dir) {
                    *xi += m * d;
                }
            }
        }
        NoiseKind::IsotropicGaussian => {
            let sd = (spec.level / dim as f64).sqrt();
            for (xi, g) in x.iter_mut().zip(gaussian_vec(dim, rng)) {
                *xi += sd * g;
            }
        }
    }
    Ok(x)
}
