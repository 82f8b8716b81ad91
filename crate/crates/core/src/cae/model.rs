use crate::matrix::Mat;
use crate::nn::{Cache, Grads, Mlp};
use crate::rng::{self, purpose};
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 50;

/// Chart autoencoder. The encoder maps `R^D` to `C` chart coordinates in
/// `R^d` plus `C` logits turned into chart weights by a softmax; decoder `j`
/// maps chart coordinates back to `R^D`, and the reconstruction is the
/// weight-blended sum of decoder outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartAutoencoder {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub chart_count: usize,
    pub hidden: usize,
    /// `D → H → H → C·d + C`; the first `C·d` outputs are coordinates.
    pub encoder: Mlp,
    /// `d → H → H → D`, one per chart.
    pub decoders: Vec<Mlp>,
}

/// Latent code: per-chart coordinates and chart weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    /// `m × C·d`
    pub coords: Mat,
    /// `m × C`, rows on the simplex.
    pub weights: Mat,
}

impl Latent {
    /// Row `i` in the `[z_j, w_j]` per-chart layout.
    pub fn flat_row(&self, i: usize, d: usize) -> Vec<f64> {
        let c = self.weights.cols;
        (0..c)
            .flat_map(|j| {
                let mut v = self.coords.row(i)[j * d..(j + 1) * d].to_vec();
                v.push(self.weights.get(i, j));
                v
            })
            .collect()
    }

    pub fn from_flat(rows: &Mat, d: usize) -> Result<Self> {
        if rows.cols % (d + 1) != 0 {
            return Err(Error::DimensionMismatch {
                expected: (rows.cols / (d + 1) + 1) * (d + 1),
                got: rows.cols,
            });
        }
        let c = rows.cols / (d + 1);
        let mut coords = Mat::zeros(rows.rows, c * d);
        let mut weights = Mat::zeros(rows.rows, c);
        for i in 0..rows.rows {
            for j in 0..c {
                let chunk = &rows.row(i)[j * (d + 1)..(j + 1) * (d + 1)];
                coords.row_mut(i)[j * d..(j + 1) * d].copy_from_slice(&chunk[..d]);
                weights.row_mut(i)[j] = chunk[d];
            }
        }
        Ok(Latent { coords, weights })
    }
}

/// Intermediate values kept for backpropagation.
pub struct ForwardCache {
    pub encoder: Cache,
    pub latent: Latent,
    pub decoders: Vec<Cache>,
    pub output: Mat,
}

/// Gradients for every network of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct CaeGrads {
    pub encoder: Grads,
    pub decoders: Vec<Grads>,
}

impl CaeGrads {
    pub fn zeros_like(model: &ChartAutoencoder) -> Self {
        CaeGrads {
            encoder: Grads::zeros_like(&model.encoder),
            decoders: model.decoders.iter().map(Grads::zeros_like).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.encoder.clear();
        self.decoders.iter_mut().for_each(Grads::clear);
    }

    pub fn groups(&self) -> Vec<&[f64]> {
        let mut g = self.encoder.groups();
        for d in &self.decoders {
            g.extend(d.groups());
        }
        g
    }
}

fn softmax_rows(logits: &Mat) -> Mat {
    let mut out = logits.clone();
    for i in 0..out.rows {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

impl ChartAutoencoder {
    pub fn new(ambient_dim: usize, intrinsic_dim: usize, chart_count: usize, hidden: usize, seed: u64) -> Result<Self> {
        if chart_count == 0 || intrinsic_dim == 0 || hidden == 0 || ambient_dim < intrinsic_dim {
            return Err(Error::InvalidParameter(format!(
                "need C ≥ 1, d ≥ 1, D ≥ d, hidden ≥ 1 (got C = {chart_count}, d = {intrinsic_dim}, D = {ambient_dim}, hidden = {hidden})"
            )));
        }
        let enc_out = chart_count * (intrinsic_dim + 1);
        let encoder = Mlp::new(
            &[ambient_dim, hidden, hidden, enc_out],
            &mut rng::stream(seed, purpose::INIT, &[0]),
        )?;
        let decoders = (0..chart_count)
            .map(|j| {
                Mlp::new(
                    &[intrinsic_dim, hidden, hidden, ambient_dim],
                    &mut rng::stream(seed, purpose::INIT, &[1, j as u64]),
                )
            })
            .collect::<Result<_>>()?;
        Ok(ChartAutoencoder {
            ambient_dim,
            intrinsic_dim,
            chart_count,
            hidden,
            encoder,
            decoders,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.chart_count * (self.intrinsic_dim + 1)
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoders.iter().map(Mlp::param_count).sum::<usize>()
    }

    pub fn param_groups(&mut self) -> Vec<&mut [f64]> {
        let mut g = self.encoder.param_groups();
        for d in &mut self.decoders {
            g.extend(d.param_groups());
        }
        g
    }

    fn split_encoder_output(&self, out: &Mat) -> Latent {
        let cd = self.chart_count * self.intrinsic_dim;
        Latent {
            coords: out.columns(0, cd),
            weights: softmax_rows(&out.columns(cd, self.chart_count)),
        }
    }

    pub fn encode(&self, x: &Mat) -> Result<Latent> {
        Ok(self.split_encoder_output(&self.encoder.forward(x)?))
    }

    pub fn decode(&self, latent: &Latent) -> Result<Mat> {
        let (c, d) = (self.chart_count, self.intrinsic_dim);
        if latent.coords.cols != c * d || latent.weights.cols != c {
            return Err(Error::DimensionMismatch {
                expected: self.latent_dim(),
                got: latent.coords.cols + latent.weights.cols,
            });
        }
        let m = latent.weights.rows;
        let mut out = Mat::zeros(m, self.ambient_dim);
        for j in 0..c {
            let y = self.decoders[j].forward(&latent.coords.columns(j * d, d))?;
            blend(&mut out, &y, &latent.weights, j);
        }
        Ok(out)
    }

    pub fn reconstruct(&self, x: &Mat) -> Result<Mat> {
        self.decode(&self.encode(x)?)
    }

    /// Reconstruction from the single highest-weight chart of each point.
    pub fn reconstruct_hard(&self, x: &Mat) -> Result<Mat> {
        let mut latent = self.encode(x)?;
        for i in 0..latent.weights.rows {
            let row = latent.weights.row_mut(i);
            let best = argmax(row);
            row.fill(0.0);
            row[best] = 1.0;
        }
        self.decode(&latent)
    }

    pub fn forward_cached(&self, x: &Mat) -> Result<ForwardCache> {
        let encoder = self.encoder.forward_cached(x)?;
        let latent = self.split_encoder_output(encoder.output());
        let d = self.intrinsic_dim;
        let mut output = Mat::zeros(x.rows, self.ambient_dim);
        let mut decoders = Vec::with_capacity(self.chart_count);
        for j in 0..self.chart_count {
            let cache = self.decoders[j].forward_cached(&latent.coords.columns(j * d, d))?;
            blend(&mut output, cache.output(), &latent.weights, j);
            decoders.push(cache);
        }
        Ok(ForwardCache {
            encoder,
            latent,
            decoders,
            output,
        })
    }

    /// Accumulate gradients for upstream gradient `g_out` (w.r.t. the output).
    pub fn backward(&self, cache: &ForwardCache, g_out: &Mat, grads: &mut CaeGrads) {
        let (c, d) = (self.chart_count, self.intrinsic_dim);
        let m = g_out.rows;
        let mut g_enc = Mat::zeros(m, c * d + c);
        // ∂L/∂w_j per row, then through the softmax
        let mut g_w = Mat::zeros(m, c);
        for j in 0..c {
            let y = cache.decoders[j].output();
            let mut g_y = Mat::zeros(m, self.ambient_dim);
            for i in 0..m {
                let w = cache.latent.weights.get(i, j);
                let gi = g_out.row(i);
                let mut dot = 0.0;
                for (k, (gy, &go)) in g_y.row_mut(i).iter_mut().zip(gi).enumerate() {
                    *gy = w * go;
                    dot += go * y.get(i, k);
                }
                g_w.row_mut(i)[j] = dot;
            }
            let g_z = self.decoders[j].backward(&cache.decoders[j], &g_y, &mut grads.decoders[j]);
            for i in 0..m {
                g_enc.row_mut(i)[j * d..(j + 1) * d].copy_from_slice(g_z.row(i));
            }
        }
        for i in 0..m {
            let w = cache.latent.weights.row(i);
            let gw = g_w.row(i);
            let mean: f64 = w.iter().zip(gw).map(|(a, b)| a * b).sum();
            let row = g_enc.row_mut(i);
            for j in 0..c {
                row[c * d + j] = w[j] * (gw[j] - mean);
            }
        }
        self.encoder.backward(&cache.encoder, &g_enc, &mut grads.encoder);
    }
}

fn blend(out: &mut Mat, y: &Mat, weights: &Mat, j: usize) {
    for i in 0..out.rows {
        let w = weights.get(i, j);
        for (o, &v) in out.row_mut(i).iter_mut().zip(y.row(i)) {
            *o += w * v;
        }
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Mean over rows of the squared Euclidean distance between `a` and `b`.
pub fn mean_squared_distance(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    let total: f64 = (0..a.rows)
        .map(|i| a.row(i).iter().zip(b.row(i)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        .sum();
    total / a.rows as f64
}

/// Empirical loss `(1/m) Σ ‖v_i − D(E(x_i))‖²` against clean targets.
pub fn loss_mse(model: &ChartAutoencoder, noisy: &Mat, clean: &Mat) -> Result<f64> {
    if noisy.rows == 0 {
        return Err(Error::Degenerate("empty batch".into()));
    }
    if clean.rows != noisy.rows || clean.cols != model.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: noisy.rows * model.ambient_dim,
            got: clean.rows * clean.cols,
        });
    }
    Ok(mean_squared_distance(&model.reconstruct(noisy)?, clean))
}

/// Loss and gradient on one batch; gradients are accumulated into `grads`.
pub fn loss_and_grad(model: &ChartAutoencoder, noisy: &Mat, clean: &Mat, grads: &mut CaeGrads) -> Result<f64> {
    let cache = model.forward_cached(noisy)?;
    let m = noisy.rows as f64;
    let mut g = cache.output.clone();
    let mut total = 0.0;
    for (gv, &t) in g.data.iter_mut().zip(&clean.data) {
        let diff = *gv - t;
        total += diff * diff;
        *gv = 2.0 * diff / m;
    }
    model.backward(&cache, &g, grads);
    Ok(total / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn batch(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut r = rng::stream(seed, purpose::CHECK, &[]);
        Mat::from_vec(rows, cols, (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn weights_on_simplex() {
        let m = ChartAutoencoder::new(5, 2, 4, 16, 1).unwrap();
        let lat = m.encode(&batch(50, 5, 2)).unwrap();
        for i in 0..50 {
            let row = lat.weights.row(i);
            assert!(row.iter().all(|&w| w >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(lat.flat_row(0, 2).len(), m.latent_dim());
        let one = ChartAutoencoder::new(3, 2, 1, 8, 1).unwrap();
        assert!(one.encode(&batch(10, 3, 3)).unwrap().weights.data.iter().all(|&w| w == 1.0));
        assert!(ChartAutoencoder::new(1, 2, 4, 8, 0).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let a = ChartAutoencoder::new(3, 2, 4, 10, 9).unwrap();
        let b = ChartAutoencoder::new(3, 2, 4, 10, 9).unwrap();
        let x = batch(7, 3, 1);
        assert_eq!(a.reconstruct(&x).unwrap(), b.reconstruct(&x).unwrap());
        assert_ne!(a, ChartAutoencoder::new(3, 2, 4, 10, 10).unwrap());
    }

    #[test]
    fn decode_is_weighted_sum() {
        let m = ChartAutoencoder::new(3, 2, 3, 8, 4).unwrap();
        let coords = batch(2, 6, 5);
        let one_hot = Latent {
            coords: coords.clone(),
            weights: Mat::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
        };
        let out = m.decode(&one_hot).unwrap();
        let d1 = m.decoders[1].forward(&coords.columns(2, 2)).unwrap();
        let d2 = m.decoders[2].forward(&coords.columns(4, 2)).unwrap();
        assert_eq!(out.row(0), d1.row(0));
        assert_eq!(out.row(1), d2.row(1));
        let flat = Mat::from_vec(1, 9, one_hot.flat_row(0, 2)).unwrap();
        assert_eq!(Latent::from_flat(&flat, 2).unwrap().coords.row(0), coords.row(0));
    }

    #[test]
    fn loss_matches_direct_sum() {
        let m = ChartAutoencoder::new(3, 2, 2, 8, 6).unwrap();
        let x = batch(9, 3, 7);
        let v = batch(9, 3, 8);
        let rec = m.reconstruct(&x).unwrap();
        let mut direct = 0.0;
        for i in 0..9 {
            for k in 0..3 {
                direct += (rec.get(i, k) - v.get(i, k)).powi(2);
            }
        }
        assert!((loss_mse(&m, &x, &v).unwrap() - direct / 9.0).abs() < 1e-12);
        assert_eq!(loss_mse(&m, &x, &rec).unwrap(), 0.0);
        let shifted = Mat::from_rows(&[vec![rec.get(0, 0) + 2.0, rec.get(0, 1), rec.get(0, 2)]]).unwrap();
        assert!((loss_mse(&m, &x.gather_rows(&[0]), &shifted).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_probe() {
        let mut m = ChartAutoencoder::new(4, 2, 3, 7, 11).unwrap();
        let x = batch(6, 4, 12);
        let v = batch(6, 4, 13);
        let mut grads = CaeGrads::zeros_like(&m);
        loss_and_grad(&m, &x, &v, &mut grads).unwrap();
        let flat: Vec<f64> = grads.groups().concat();
        let sizes: Vec<usize> = grads.groups().iter().map(|g| g.len()).collect();
        let mut r = rng::stream(14, purpose::CHECK, &[]);
        let mut checked = 0;
        while checked < 6 {
            let idx = r.gen_range(0..flat.len());
            let (mut g, mut off) = (0, idx);
            while off >= sizes[g] {
                off -= sizes[g];
                g += 1;
            }
            let theta = m.param_groups()[g][off];
            let h = 1e-6 * theta.abs().max(1.0);
            m.param_groups()[g][off] = theta + h;
            let up = loss_mse(&m, &x, &v).unwrap();
            m.param_groups()[g][off] = theta - h;
            let down = loss_mse(&m, &x, &v).unwrap();
            m.param_groups()[g][off] = theta;
            let fd = (up - down) / (2.0 * h);
            if flat[idx] == 0.0 && fd.abs() < 1e-10 {
                continue;
            }
            let rel = (fd - flat[idx]).abs() / fd.abs().max(flat[idx].abs());
            assert!(rel < 1e-4, "param {idx}: fd {fd} analytic {}", flat[idx]);
            checked += 1;
        }
    }
}
