use super::mlp::{Layer, Mlp};
use crate::{Error, Result};

/// Number of sawtooth compositions used for accuracy `epsilon` on `[-bound, bound]²`.
pub fn mult_compositions(bound: f64, epsilon: f64) -> usize {
    (3.0 * bound * bound / epsilon).log2().ceil().max(1.0) as usize
}

/// ReLU network approximating `(x, y) ↦ xy` on `[-B, B]²`.
///
/// Uses `xy = ((x+y)² − x² − y²)/2`. Each square is `M²·f_m(|u|/M)` with
/// `M = 2B` and `f_m(s) = s − Σ_{i≤m} g_i(s)/4^i` built from `m` compositions of the
/// hat function `g`. The three squaring branches are wired identically and
/// summed last, so a zero input makes two branches bit-equal and cancels
/// exactly.
pub fn build_mult_network(bound: f64, epsilon: f64) -> Result<Mlp> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("bound {bound} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let m = mult_compositions(bound, epsilon);
    let scale = 2.0 * bound;
    // branch inputs: x + y, x, y
    let mix = [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut layers = Vec::with_capacity(m + 3);

    let mut abs = Layer::zeros(2, 6);
    for (b, w) in mix.iter().enumerate() {
        for (i, &wi) in w.iter().enumerate() {
            abs.set_weight(2 * b, i, wi);
            abs.set_weight(2 * b + 1, i, -wi);
        }
    }
    layers.push(abs);

    // per branch state: [relu(s), relu(s − ½), relu(s − 1), acc]
    let mut init = Layer::zeros(6, 12);
    for b in 0..3 {
        for unit in 0..4 {
            init.set_weight(4 * b + unit, 2 * b, 1.0 / scale);
            init.set_weight(4 * b + unit, 2 * b + 1, 1.0 / scale);
        }
        init.bias[4 * b + 1] = -0.5;
        init.bias[4 * b + 2] = -1.0;
    }
    layers.push(init);

    for i in 1..=m {
        let mut step = Layer::zeros(12, 12);
        let damp = 0.25f64.powi(i as i32);
        for b in 0..3 {
            let hat = [2.0, -4.0, 2.0];
            for unit in 0..3 {
                for (k, &h) in hat.iter().enumerate() {
                    step.set_weight(4 * b + unit, 4 * b + k, h);
                }
            }
            step.bias[4 * b + 1] = -0.5;
            step.bias[4 * b + 2] = -1.0;
            for (k, &h) in hat.iter().enumerate() {
                step.set_weight(4 * b + 3, 4 * b + k, -h * damp);
            }
            step.set_weight(4 * b + 3, 4 * b + 3, 1.0);
        }
        layers.push(step);
    }

    let mut out = Layer::zeros(12, 1);
    let half_sq = 0.5 * scale * scale;
    out.set_weight(0, 3, half_sq);
    out.set_weight(0, 7, -half_sq);
    out.set_weight(0, 11, -half_sq);
    layers.push(out);
    Ok(Mlp { layers })
}
