use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{loss_and_grad, CaeGrads, ChartAutoencoder};
use crate::geometry::PairedDataset;
use crate::nn::{OptimizerConfig, OptimizerRegistry, ScheduleRegistry};
use crate::rng::{self, purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Minimum number of optimizer steps. Small training sets then run more
    /// than `epochs` epochs, so no size is starved of updates.
    #[serde(default)]
    pub steps: Option<usize>,
    pub seed: u64,
    /// Registered optimizer name.
    pub optimizer: String,
    /// Registered learning-rate schedule name.
    #[serde(default = "default_schedule")]
    pub schedule: String,
    /// Log the epoch loss every this many epochs; 0 disables.
    pub log_every: usize,
}

fn default_schedule() -> String {
    "constant".into()
}

impl TrainConfig {
    /// Batch 512, learning rate 3e-6, weight decay 0.3.
    pub fn paper() -> Self {
        TrainConfig {
            batch_size: 512,
            learning_rate: 3e-6,
            weight_decay: 3e-1,
            epochs: 300,
            steps: None,
            seed: 0,
            optimizer: "adam".into(),
            schedule: default_schedule(),
            log_every: 0,
        }
    }

    /// Settings that train in about a minute per model on one core: batch
    /// 128, learning rate 1e-3 on a cosine schedule, no weight decay, 200
    /// epochs and at least 6000 steps.
    pub fn desk() -> Self {
        TrainConfig {
            batch_size: 128,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            epochs: 200,
            steps: Some(6000),
            schedule: "cosine".into(),
            ..Self::paper()
        }
    }

    /// Number of epochs used for a training set of `n` points.
    pub fn epochs_for(&self, n: usize) -> usize {
        match self.steps {
            Some(steps) => self.epochs.max((steps * self.batch_size).div_ceil(n.max(1))),
            None => self.epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidParameter(format!("weight decay {} must be nonnegative", self.weight_decay)));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss of each epoch.
    pub history: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.history.last().copied()
    }
}

/// Minimise the squared reconstruction error against the clean targets.
pub fn train(model: &mut ChartAutoencoder, data: &PairedDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.ambient_dim != model.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: model.ambient_dim,
            got: data.ambient_dim,
        });
    }
    if data.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let mut opt = OptimizerRegistry::with_builtins().build(&OptimizerConfig {
        name: cfg.optimizer.clone(),
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        momentum: 0.0,
    })?;
    let schedule = ScheduleRegistry::with_builtins().get(&cfg.schedule)?;
    let n = data.len();
    let mut grads = CaeGrads::zeros_like(model);
    let mut order: Vec<usize> = (0..n).collect();
    let epochs = cfg.epochs_for(n);
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        opt.set_learning_rate(schedule.rate(cfg.learning_rate, epoch, epochs));
        let mut r = rng::stream(cfg.seed, purpose::SHUFFLE, &[epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut r);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = data.noisy.gather_rows(chunk);
            let v = data.clean.gather_rows(chunk);
            grads.clear();
            let loss = loss_and_grad(model, &x, &v, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    learning_rate: cfg.learning_rate,
                });
            }
            total += loss * chunk.len() as f64;
            let g = grads.groups();
            opt.step(&mut model.param_groups(), &g)?;
        }
        let mean = total / n as f64;
        if cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0 {
            log::info!("epoch {:>5}  loss {:.6e}", epoch + 1, mean);
        }
        history.push(mean);
    }
    Ok(TrainReport { history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, make_dataset, EmbeddedManifold, ManifoldParams, NoiseSpec};

    fn sphere_data(n: usize, seed: u64) -> PairedDataset {
        let s = EmbeddedManifold::base(build_manifold(&ManifoldParams::Sphere { radius: 1.0 }).unwrap());
        make_dataset(&s, n, &NoiseSpec::clean(), seed).unwrap()
    }

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let mut m = ChartAutoencoder::new(3, 2, 2, 8, 0).unwrap();
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 0,
            steps: None,
            ..TrainConfig::desk()
        };
        let rep = train(&mut m, &sphere_data(32, 0), &cfg).unwrap();
        assert!(rep.history.is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn deterministic_and_decreasing() {
        let data = sphere_data(256, 1);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 32,
            steps: None,
            seed: 5,
            ..TrainConfig::desk()
        };
        let mut a = ChartAutoencoder::new(3, 2, 4, 16, 2).unwrap();
        let mut b = a.clone();
        let ra = train(&mut a, &data, &cfg).unwrap();
        let rb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a, b);
        assert!(ra.final_loss().unwrap() < ra.history[0]);
    }

    #[test]
    fn step_budget_sets_epochs() {
        let cfg = TrainConfig {
            steps: Some(100),
            batch_size: 64,
            epochs: 5,
            ..TrainConfig::desk()
        };
        assert_eq!(cfg.epochs_for(640), 10);
        assert_eq!(cfg.epochs_for(1000), 7);
        assert_eq!(cfg.epochs_for(6400), 5);
        assert_eq!(TrainConfig::desk().epochs_for(10), 76_800);
        assert_eq!(TrainConfig::desk().epochs_for(8192), 200);
    }

    #[test]
    fn divergence_is_reported() {
        let data = sphere_data(64, 2);
        let mut m = ChartAutoencoder::new(3, 2, 2, 8, 0).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            epochs: 5,
            batch_size: 16,
            steps: None,
            ..TrainConfig::desk()
        };
        let err = train(&mut m, &data, &cfg).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }
}
