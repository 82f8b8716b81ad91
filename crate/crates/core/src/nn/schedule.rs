use std::collections::BTreeMap;
use std::sync::Arc;

use crate::{Error, Result};

/// Learning rate as a function of training progress.
pub trait LrSchedule: Send + Sync {
    fn name(&self) -> &'static str;
    /// Rate for `epoch` (0-based) out of `epochs`, given the base rate.
    fn rate(&self, base: f64, epoch: usize, epochs: usize) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Constant;

impl LrSchedule for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn rate(&self, base: f64, _epoch: usize, _epochs: usize) -> f64 {
        base
    }
}

/// Half-cosine decay from the base rate to `base / 100`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Cosine;

impl LrSchedule for Cosine {
    fn name(&self) -> &'static str {
        "cosine"
    }

    fn rate(&self, base: f64, epoch: usize, epochs: usize) -> f64 {
        let floor = base / 100.0;
        let t = epoch as f64 / epochs.max(1) as f64;
        floor + 0.5 * (base - floor) * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

pub struct ScheduleRegistry {
    entries: BTreeMap<&'static str, Arc<dyn LrSchedule>>,
}

impl ScheduleRegistry {
    pub fn with_builtins() -> Self {
        let mut entries: BTreeMap<&'static str, Arc<dyn LrSchedule>> = BTreeMap::new();
        entries.insert("constant", Arc::new(Constant));
        entries.insert("cosine", Arc::new(Cosine));
        ScheduleRegistry { entries }
    }

    pub fn register(&mut self, schedule: Arc<dyn LrSchedule>) {
        self.entries.insert(schedule.name(), schedule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn LrSchedule>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "learning-rate schedule",
            name: name.to_string(),
            known: self.entries.keys().copied().collect::<Vec<_>>().join(", "),
        })
    }
}
