use serde::{Deserialize, Serialize};

use super::model::{argmax, mean_squared_distance, ChartAutoencoder};
use crate::geometry::PairedDataset;
use crate::{Error, Result};

/// Charts used by fewer than this fraction of test points count as pruned.
pub const PRUNE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean over the test set of ‖D̂(Ê(x)) − v‖².
    pub squared_test_error: f64,
    /// Points whose highest chart weight falls on each chart.
    pub usage: Vec<usize>,
    pub pruned: usize,
    pub hard: bool,
}

/// Squared test error against clean targets, plus chart usage. With `hard`,
/// each point is decoded by its highest-weight chart alone.
pub fn evaluate(model: &ChartAutoencoder, test: &PairedDataset, hard: bool) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Degenerate("empty test set".into()));
    }
    if test.ambient_dim != model.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: model.ambient_dim,
            got: test.ambient_dim,
        });
    }
    let latent = model.encode(&test.noisy)?;
    let out = if hard {
        model.reconstruct_hard(&test.noisy)?
    } else {
        model.decode(&latent)?
    };
    let mut usage = vec![0; model.chart_count];
    for i in 0..latent.weights.rows {
        usage[argmax(latent.weights.row(i))] += 1;
    }
    let cutoff = PRUNE_FRACTION * test.len() as f64;
    let pruned = usage.iter().filter(|&&u| (u as f64) < cutoff).count();
    Ok(EvalReport {
        squared_test_error: mean_squared_distance(&out, &test.clean),
        usage,
        pruned,
        hard,
    })
}
