//! Resolved run configuration: defaults, then an optional TOML file, then
//! command-line flags.

use std::path::Path;

use chartae::cae::{TrainConfig, DEFAULT_HIDDEN};
use chartae::geometry::{ManifoldParams, NoiseKind, NoiseSpec};
use chartae::harness::SweepConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub grid: Vec<usize>,
    pub n: usize,
    pub levels: Vec<f64>,
    pub kinds: Vec<NoiseKind>,
    pub dims: Vec<usize>,
    pub chart_counts: Vec<usize>,
    pub runs: usize,
    pub test_n: usize,
    pub reference: bool,
    pub hard: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = SweepConfig::default();
        SweepSection {
            grid: s.grid,
            n: s.n,
            levels: s.levels,
            kinds: s.kinds,
            dims: s.dims,
            chart_counts: s.charts,
            runs: s.runs,
            test_n: s.test_n,
            reference: s.reference,
            hard: s.hard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSection {
    /// Tube half-width for the projection and atlas checks.
    pub q: f64,
    /// Tube half-width for the atlas checks; `min(q, 0.3·τ)` when unset.
    pub atlas_q: Option<f64>,
    pub samples: usize,
    pub pairs: usize,
    /// Covering radius as a fraction of the reach.
    pub cover_radius: f64,
    pub cover_samples: usize,
    /// Chart radius of the atlas used by `train --distill`, as a fraction
    /// of the reach. Larger charts mean fewer decoders to fit.
    pub distill_chart_radius: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            q: 0.3,
            atlas_q: None,
            samples: 1000,
            pairs: 10_000,
            cover_radius: 0.25,
            cover_samples: 200_000,
            distill_chart_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub manifold: ManifoldParams,
    /// Ambient dimension D.
    pub dim: usize,
    pub noise: NoiseSpec,
    pub n: usize,
    pub seed: u64,
    pub charts: usize,
    pub hidden: usize,
    pub paper_config: bool,
    pub train: TrainConfig,
    pub sweep: SweepSection,
    pub oracle: OracleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifold: ManifoldParams::Sphere { radius: 1.0 },
            dim: 3,
            noise: NoiseSpec::clean(),
            n: 1000,
            seed: 0,
            charts: 4,
            hidden: DEFAULT_HIDDEN,
            paper_config: false,
            train: TrainConfig::desk(),
            sweep: SweepSection::default(),
            oracle: OracleSection::default(),
        }
    }
}

/// Overlay `top` onto `base`, table by table.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    /// Defaults (the `--paper-config` preset when requested), overlaid with `file`.
    pub fn load(file: Option<&Path>, paper_flag: bool) -> Result<Self, CliError> {
        let overlay = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Some(
                    text.parse::<toml::Value>()
                        .map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?,
                )
            }
            None => None,
        };
        let paper_in_file = overlay
            .as_ref()
            .and_then(|v| v.get("paper_config"))
            .and_then(toml::Value::as_bool)
            .unwrap_or(false);
        let mut defaults = RunConfig::default();
        if paper_flag || paper_in_file {
            defaults.paper_config = true;
            defaults.train = TrainConfig::paper();
        }
        let mut value = toml::Value::try_from(&defaults).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(o) = overlay {
            merge(&mut value, o);
        }
        value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {e}")))
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let s = &self.sweep;
        SweepConfig {
            manifold: self.manifold.clone(),
            ambient_dim: self.dim,
            noise: self.noise,
            grid: s.grid.clone(),
            n: s.n,
            levels: s.levels.clone(),
            kinds: s.kinds.clone(),
            dims: s.dims.clone(),
            charts: s.chart_counts.clone(),
            chart_count: self.charts,
            hidden: self.hidden,
            runs: s.runs,
            test_n: s.test_n,
            train: self.train.clone(),
            master_seed: self.seed,
            reference: s.reference,
            hard: s.hard,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_overrides_defaults_and_keeps_the_rest() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "n = 77\n[train]\nbatch_size = 9\n[noise]\nkind = \"normal_bounded\"\nq = 0.3").unwrap();
        let cfg = RunConfig::load(Some(f.path()), false).unwrap();
        assert_eq!(cfg.n, 77);
        assert_eq!(cfg.train.batch_size, 9);
        assert_eq!(cfg.train.learning_rate, TrainConfig::desk().learning_rate);
        assert_eq!(cfg.noise.q, 0.3);
        assert_eq!(cfg.noise.level, 0.0);
    }

    #[test]
    fn paper_preset_then_file() {
        let cfg = RunConfig::load(None, true).unwrap();
        assert_eq!(cfg.train, TrainConfig::paper());
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "paper_config = true\n[train]\nepochs = 5").unwrap();
        let cfg = RunConfig::load(Some(f.path()), false).unwrap();
        assert_eq!(cfg.train.learning_rate, 3e-6);
        assert_eq!(cfg.train.epochs, 5);
    }

    #[test]
    fn bad_toml_is_a_usage_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "n = [").unwrap();
        assert!(matches!(RunConfig::load(Some(f.path()), false), Err(CliError::Usage(_))));
    }
}
