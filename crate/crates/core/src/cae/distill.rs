use rand::seq::SliceRandom;

use super::model::ChartAutoencoder;
use super::train::{TrainConfig, TrainReport};
use crate::atlas::Atlas;
use crate::matrix::Mat;
use crate::nn::{Grads, OptimizerConfig, OptimizerRegistry};
use crate::rng::{self, purpose};
use crate::{Error, Result};

/// Oracle latent codes and projections for a batch of points.
pub struct OracleTargets {
    /// `m × C·d` chart coordinates, zero where the weight is zero.
    pub coords: Mat,
    /// `m × C` chart weights.
    pub weights: Mat,
    /// `m × D` projections onto the surface.
    pub projections: Mat,
}

pub fn oracle_targets(atlas: &Atlas, x: &Mat) -> Result<OracleTargets> {
    let c = atlas.chart_count();
    let mut coords = Mat::zeros(x.rows, 2 * c);
    let mut weights = Mat::zeros(x.rows, c);
    let mut projections = Mat::zeros(x.rows, x.cols);
    for i in 0..x.rows {
        let code = atlas.encode(x.row(i))?;
        for j in 0..c {
            coords.row_mut(i)[2 * j..2 * j + 2].copy_from_slice(&code.coords[j]);
        }
        weights.row_mut(i).copy_from_slice(&code.weights);
        projections.row_mut(i).copy_from_slice(&atlas.surface.project(x.row(i))?);
    }
    Ok(OracleTargets {
        coords,
        weights,
        projections,
    })
}

fn optimizer(cfg: &TrainConfig) -> Result<Box<dyn crate::nn::Optimizer>> {
    OptimizerRegistry::with_builtins().build(&OptimizerConfig {
        name: cfg.optimizer.clone(),
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        momentum: 0.0,
    })
}

/// Train the model to imitate the atlas oracle with the oracle latent as
/// teacher: each decoder regresses the chart inverse on points its chart
/// covers (weighted by the chart weight), and the encoder regresses the chart
/// coordinates and matches the chart weights by cross-entropy.
///
/// Returns the per-epoch mean of the decoder loss followed by the encoder loss.
pub fn distill(model: &mut ChartAutoencoder, atlas: &Atlas, x: &Mat, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let c = atlas.chart_count();
    if model.chart_count != c || model.intrinsic_dim != 2 || model.ambient_dim != atlas.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: model.chart_count,
        });
    }
    let t = oracle_targets(atlas, x)?;
    let mut history = Vec::new();

    // decoders, one chart at a time
    let mut dec_hist = vec![0.0; cfg.epochs];
    for j in 0..c {
        let members: Vec<usize> = (0..x.rows).filter(|&i| t.weights.get(i, j) > 0.0).collect();
        if members.is_empty() {
            continue;
        }
        let mut opt = optimizer(cfg)?;
        let dec = &mut model.decoders[j];
        let mut grads = Grads::zeros_like(dec);
        let mut order = members.clone();
        for (epoch, slot) in dec_hist.iter_mut().enumerate() {
            let mut r = rng::stream(cfg.seed, purpose::SHUFFLE, &[1, j as u64, epoch as u64]);
            order.sort_unstable();
            order.shuffle(&mut r);
            for chunk in order.chunks(cfg.batch_size) {
                let z = t.coords.gather_rows(chunk).columns(2 * j, 2);
                let v = t.projections.gather_rows(chunk);
                let cache = dec.forward_cached(&z)?;
                let mut g = cache.output().clone();
                let mut loss = 0.0;
                for (row, &i) in chunk.iter().enumerate() {
                    let w = t.weights.get(i, j);
                    for (gv, &tv) in g.row_mut(row).iter_mut().zip(v.row(row)) {
                        let diff = *gv - tv;
                        loss += w * diff * diff;
                        *gv = 2.0 * w * diff / x.rows as f64;
                    }
                }
                *slot += loss / x.rows as f64;
                grads.clear();
                dec.backward(&cache, &g, &mut grads);
                opt.step(&mut dec.param_groups(), &grads.groups())?;
            }
        }
    }

    // encoder
    let mut opt = optimizer(cfg)?;
    let mut grads = Grads::zeros_like(&model.encoder);
    let mut order: Vec<usize> = (0..x.rows).collect();
    let cd = 2 * c;
    let mut enc_hist = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut r = rng::stream(cfg.seed, purpose::SHUFFLE, &[2, epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut r);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = x.gather_rows(chunk);
            let cache = model.encoder.forward_cached(&xb)?;
            let out = cache.output();
            let m = chunk.len() as f64;
            let mut g = Mat::zeros(out.rows, out.cols);
            for (row, &i) in chunk.iter().enumerate() {
                let o = out.row(row);
                let gr = g.row_mut(row);
                let rho = t.weights.row(i);
                for j in 0..c {
                    for k in 0..2 {
                        let diff = o[2 * j + k] - t.coords.get(i, 2 * j + k);
                        total += rho[j] * diff * diff;
                        gr[2 * j + k] = 2.0 * rho[j] * diff / m;
                    }
                }
                let logits = &o[cd..];
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
                for j in 0..c {
                    let p = (logits[j] - max).exp() / z;
                    if rho[j] > 0.0 {
                        total -= rho[j] * p.max(1e-300).ln();
                    }
                    gr[cd + j] = (p - rho[j]) / m;
                }
            }
            grads.clear();
            model.encoder.backward(&cache, &g, &mut grads);
            opt.step(&mut model.encoder.param_groups(), &grads.groups())?;
        }
        enc_hist.push(total / x.rows as f64);
    }
    history.extend(dec_hist);
    history.extend(enc_hist);
    if history.iter().any(|h| !h.is_finite()) {
        return Err(Error::NonFiniteLoss {
            epoch: 0,
            learning_rate: cfg.learning_rate,
        });
    }
    Ok(TrainReport { history })
}

/// Reconstruction error of the model's decoders fed the exact oracle latent.
pub fn teacher_forced_error(model: &ChartAutoencoder, targets: &OracleTargets) -> Result<f64> {
    let latent = super::model::Latent {
        coords: targets.coords.clone(),
        weights: targets.weights.clone(),
    };
    let out = model.decode(&latent)?;
    Ok(super::model::mean_squared_distance(&out, &targets.projections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{build_atlas, build_cover, AtlasConfig, CoverConfig};
    use crate::cae::model::mean_squared_distance;
    use crate::geometry::{build_manifold, make_dataset, EmbeddedManifold, ManifoldParams, NoiseSpec};

    #[test]
    fn distilled_model_tracks_the_oracle() {
        let s = EmbeddedManifold::base(build_manifold(&ManifoldParams::Sphere { radius: 1.0 }).unwrap());
        let cover = build_cover(&s, &CoverConfig { q: 0.1, ..Default::default() }).unwrap();
        let acfg = AtlasConfig {
            chart_radius: Some(0.45),
            group_samples: 10_000,
            support_samples: 10_000,
            lipschitz_pairs: 500,
            ..Default::default()
        };
        let atlas = build_atlas(s.clone(), cover, &acfg).unwrap();
        let train_set = make_dataset(&s, 2000, &NoiseSpec::normal(0.1, 0.005), 1).unwrap();
        let test_set = make_dataset(&s, 1000, &NoiseSpec::normal(0.1, 0.005), 2).unwrap();
        let mut model = ChartAutoencoder::new(3, 2, atlas.chart_count(), 32, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 32,
            ..TrainConfig::desk()
        };
        distill(&mut model, &atlas, &train_set.noisy, &cfg).unwrap();
        let targets = oracle_targets(&atlas, &test_set.noisy).unwrap();
        let forced = teacher_forced_error(&model, &targets).unwrap();
        let end_to_end = mean_squared_distance(&model.reconstruct(&test_set.noisy).unwrap(), &test_set.clean);
        eprintln!("charts {} forced {forced:e} end-to-end {end_to_end:e}", atlas.chart_count());
        assert!(end_to_end <= 5.0 * forced, "{end_to_end} vs {forced}");
    }
}
