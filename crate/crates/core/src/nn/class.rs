use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::matrix::Mat;
use crate::{Error, Result};

/// Bounds describing a class of ReLU networks `R^in → R^out`: depth `L`,
/// width `p`, nonzero budget `K`, parameter magnitude `κ` and output bound `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkClassParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub nonzeros: usize,
    pub kappa: f64,
    pub range: f64,
}

/// Measured counterparts of [`NetworkClassParams`] for a concrete network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub depth: usize,
    pub width: usize,
    pub nonzeros: usize,
    pub kappa: f64,
    /// `max ‖f(x)‖∞` over the probe set; `None` without a probe.
    pub range: Option<f64>,
}

impl ClassStats {
    /// Whether the measured values fit inside `class`.
    pub fn fits(&self, class: &NetworkClassParams) -> bool {
        self.depth <= class.depth
            && self.width <= class.width
            && self.nonzeros <= class.nonzeros
            && self.kappa <= class.kappa
            && self.range.map_or(true, |r| r <= class.range)
    }
}

pub fn class_stats(mlp: &Mlp, probe: Option<&Mat>) -> Result<ClassStats> {
    let mut nonzeros = 0;
    let mut kappa: f64 = 0.0;
    for l in &mlp.layers {
        for &v in l.wt.iter().chain(&l.bias) {
            if v != 0.0 {
                nonzeros += 1;
                kappa = kappa.max(v.abs());
            }
        }
    }
    let range = match probe {
        Some(p) if p.rows == 0 => return Err(Error::Degenerate("empty probe set".into())),
        Some(p) => Some(mlp.forward(p)?.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        None => None,
    };
    Ok(ClassStats {
        depth: mlp.depth(),
        width: mlp.dims().into_iter().max().unwrap_or(0),
        nonzeros,
        kappa,
        range,
    })
}

/// Multipliers for the hidden constants in the architecture scalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub depth: f64,
    pub width: f64,
    pub nonzeros: f64,
    pub kappa: f64,
}

impl Default for ScalingConstants {
    fn default() -> Self {
        ScalingConstants {
            depth: 1.0,
            width: 1.0,
            nonzeros: 1.0,
            kappa: 1.0,
        }
    }
}

impl ScalingConstants {
    pub fn uniform(c: f64) -> Self {
        ScalingConstants {
            depth: c,
            width: c,
            nonzeros: c,
            kappa: c,
        }
    }
}

/// Geometric inputs of the prescription.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrescriptionInputs {
    pub n: usize,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub chart_count: usize,
    pub reach: f64,
    /// Bound on ‖v‖∞ over the surface.
    pub bound: f64,
}

/// Worst-case chart count `(d ln d)(4/τ)^d`, rounded up (at least 1).
pub fn worst_case_chart_count(d: usize, tau: f64) -> usize {
    let d_f = d as f64;
    ((d_f * d_f.ln()) * (4.0 / tau).powi(d as i32)).ceil().max(1.0) as usize
}

fn up(x: f64) -> usize {
    x.ceil().max(1.0) as usize
}

/// Encoder and decoder classes from the sample-size scalings
/// `L = ln²n + ln D`, `p = D n^{d/(d+2)}`, `K_E = D ln D · n^{d/(d+2)} ln²n`,
/// `K_D = D n^{d/(d+2)} ln²n + D ln D`, `κ_E = n^{2/(d+2)}`, `κ_D = n^{1/(d+2)}`,
/// each times its constant and rounded up; `R_E = τ/4`, `R_D = B`.
pub fn prescribe_architecture(
    inp: &PrescriptionInputs,
    c: &ScalingConstants,
) -> Result<(NetworkClassParams, NetworkClassParams)> {
    if inp.n < 2 {
        return Err(Error::InvalidParameter(format!("n = {} must be at least 2", inp.n)));
    }
    let n = inp.n as f64;
    let d = inp.intrinsic_dim as f64;
    let big_d = inp.ambient_dim as f64;
    let ln_n = n.ln();
    let ln_d = big_d.ln();
    let rate = n.powf(d / (d + 2.0));
    let depth = up(c.depth * (ln_n * ln_n + ln_d));
    let width = up(c.width * big_d * rate);
    let latent = inp.chart_count * (inp.intrinsic_dim + 1);
    let encoder = NetworkClassParams {
        in_dim: inp.ambient_dim,
        out_dim: latent,
        depth,
        width,
        nonzeros: up(c.nonzeros * big_d * ln_d * rate * ln_n * ln_n),
        kappa: up(c.kappa * n.powf(2.0 / (d + 2.0))) as f64,
        range: inp.reach / 4.0,
    };
    let decoder = NetworkClassParams {
        in_dim: latent,
        out_dim: inp.ambient_dim,
        depth,
        width,
        nonzeros: up(c.nonzeros * (big_d * rate * ln_n * ln_n + big_d * ln_d)),
        kappa: up(c.kappa * n.powf(1.0 / (d + 2.0))) as f64,
        range: inp.bound,
    };
    Ok((encoder, decoder))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, purpose};

    fn inputs(n: usize) -> PrescriptionInputs {
        PrescriptionInputs {
            n,
            intrinsic_dim: 2,
            ambient_dim: 3,
            chart_count: 4,
            reach: 1.0,
            bound: 1.0,
        }
    }

    #[test]
    fn dense_count_and_zero_net() {
        let z = Mlp::zeros(&[3, 5, 2]).unwrap();
        let s = class_stats(&z, None).unwrap();
        assert_eq!((s.nonzeros, s.kappa, s.depth, s.width), (0, 0.0, 2, 5));
        let mut m = Mlp::new(&[3, 5, 2], &mut rng::stream(0, purpose::INIT, &[])).unwrap();
        for l in &mut m.layers {
            l.bias.iter_mut().for_each(|b| *b = 0.1);
        }
        assert_eq!(class_stats(&m, None).unwrap().nonzeros, 32);
        m.layers[1].wt[3] = -7.25;
        assert_eq!(class_stats(&m, None).unwrap().kappa, 7.25);
    }

    #[test]
    fn permuting_hidden_units_keeps_counts() {
        let mut m = Mlp::new(&[3, 4, 2], &mut rng::stream(1, purpose::INIT, &[])).unwrap();
        m.layers[0].wt[2] = 0.0;
        let before = class_stats(&m, None).unwrap();
        // swap hidden units 0 and 3
        let mut p = m.clone();
        for i in 0..3 {
            let (a, b) = (m.layers[0].weight(0, i), m.layers[0].weight(3, i));
            p.layers[0].set_weight(0, i, b);
            p.layers[0].set_weight(3, i, a);
        }
        p.layers[0].bias.swap(0, 3);
        for o in 0..2 {
            let (a, b) = (m.layers[1].weight(o, 0), m.layers[1].weight(o, 3));
            p.layers[1].set_weight(o, 0, b);
            p.layers[1].set_weight(o, 3, a);
        }
        assert_eq!(class_stats(&p, None).unwrap(), before);
        let probe = Mat::from_rows(&[vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 0.0]]).unwrap();
        assert_eq!(m.forward(&probe).unwrap(), p.forward(&probe).unwrap());
        assert!(class_stats(&m, Some(&probe)).unwrap().range.unwrap() > 0.0);
        assert!(class_stats(&m, Some(&Mat::zeros(0, 3))).is_err());
    }

    #[test]
    fn prescription_values() {
        let (e, d) = prescribe_architecture(&inputs(1024), &ScalingConstants::default()).unwrap();
        assert_eq!(e.width, 96);
        assert_eq!(e.kappa, 32.0);
        assert_eq!(d.kappa, 6.0); // ⌈1024^{1/4}⌉ = ⌈5.66⌉
        assert_eq!(e.out_dim, 12);
        assert_eq!(e.range, 0.25);
        assert_eq!(d.range, 1.0);
        let (e2, _) = prescribe_architecture(&inputs(1024), &ScalingConstants::uniform(2.0)).unwrap();
        assert_eq!(e2.width, 2 * e.width);
        assert!(prescribe_architecture(&inputs(1), &ScalingConstants::default()).is_err());
        assert_eq!(worst_case_chart_count(2, 1.0), 23);
    }
}
