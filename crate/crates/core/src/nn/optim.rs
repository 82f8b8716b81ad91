use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// First-order update rule over a list of parameter groups.
pub trait Optimizer: Send {
    fn name(&self) -> &'static str;
    fn learning_rate(&self) -> f64;
    fn set_learning_rate(&mut self, lr: f64);
    /// Apply one update. Fails without touching anything if a gradient is
    /// not finite.
    fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()>;
}

fn check_grads(params: &[&mut [f64]], grads: &[&[f64]]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { group: i });
        }
    }
    Ok(())
}

fn ensure_state(state: &mut Vec<Vec<f64>>, grads: &[&[f64]]) {
    if state.len() != grads.len() || state.iter().zip(grads).any(|(s, g)| s.len() != g.len()) {
        *state = grads.iter().map(|g| vec![0.0; g.len()]).collect();
    }
}

/// Adam with decoupled weight decay: `θ ← θ − lr·wd·θ`, then the Adam update.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn learning_rate(&self) -> f64 {
        self.lr
    }

    fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        check_grads(params, grads)?;
        ensure_state(&mut self.m, grads);
        ensure_state(&mut self.v, grads);
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let decay = 1.0 - self.lr * self.weight_decay;
        for (gi, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[gi], &mut self.v[gi]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                if self.weight_decay != 0.0 {
                    p[j] *= decay;
                }
                p[j] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Plain or momentum SGD with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64) -> Self {
        Sgd {
            lr,
            momentum,
            weight_decay,
            velocity: Vec::new(),
        }
    }
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn learning_rate(&self) -> f64 {
        self.lr
    }

    fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        check_grads(params, grads)?;
        ensure_state(&mut self.velocity, grads);
        let decay = 1.0 - self.lr * self.weight_decay;
        for (gi, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let vel = &mut self.velocity[gi];
            for j in 0..p.len() {
                vel[j] = self.momentum * vel[j] + g[j];
                if self.weight_decay != 0.0 {
                    p[j] *= decay;
                }
                p[j] -= self.lr * vel[j];
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub name: String,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Used by `sgd` only.
    pub momentum: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            name: "adam".into(),
            learning_rate: 3e-6,
            weight_decay: 3e-1,
            momentum: 0.0,
        }
    }
}

type Constructor = fn(&OptimizerConfig) -> Box<dyn Optimizer>;

/// Name → optimizer constructor table.
pub struct OptimizerRegistry {
    entries: BTreeMap<&'static str, Constructor>,
}

impl OptimizerRegistry {
    pub fn with_builtins() -> Self {
        let mut entries: BTreeMap<&'static str, Constructor> = BTreeMap::new();
        entries.insert("adam", |c| Box::new(Adam::new(c.learning_rate, c.weight_decay)));
        entries.insert("sgd", |c| Box::new(Sgd::new(c.learning_rate, c.momentum, c.weight_decay)));
        OptimizerRegistry { entries }
    }

    pub fn register(&mut self, name: &'static str, ctor: Constructor) {
        self.entries.insert(name, ctor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, cfg: &OptimizerConfig) -> Result<Box<dyn Optimizer>> {
        let ctor = self.entries.get(cfg.name.as_str()).ok_or_else(|| Error::UnknownName {
            kind: "optimizer",
            name: cfg.name.clone(),
            known: self.names().join(", "),
        })?;
        Ok(ctor(cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(opt: &mut dyn Optimizer, p: &mut Vec<f64>, g: &[f64]) -> Result<()> {
        opt.step(&mut [p.as_mut_slice()], &[g])
    }

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut adam = Adam::new(0.1, 0.0);
        run(&mut adam, &mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_adam_step_is_sign_like() {
        let mut p = vec![0.5, 0.5, 0.5];
        let g = [2.0, -0.01, 1e-3];
        let mut adam = Adam::new(1e-2, 0.0);
        run(&mut adam, &mut p, &g).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            let expected = 0.5 - 1e-2 * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_decay_scales() {
        let mut p = vec![1.0, -4.0];
        let mut adam = Adam::new(0.1, 0.3);
        run(&mut adam, &mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0 * (1.0 - 0.03), -4.0 * (1.0 - 0.03)]);
        let mut sgd = Sgd::new(0.1, 0.0, 0.3);
        let mut q = vec![2.0];
        run(&mut sgd, &mut q, &[0.0]).unwrap();
        assert_eq!(q, vec![2.0 * (1.0 - 0.03)]);
    }

    #[test]
    fn nonfinite_gradient_rejected_untouched() {
        let mut a = vec![1.0];
        let mut b = vec![1.0];
        let mut adam = Adam::new(0.1, 0.0);
        let err = adam.step(&mut [a.as_mut_slice(), b.as_mut_slice()], &[&[0.5], &[f64::NAN]]);
        assert!(matches!(err, Err(Error::NonFiniteGradient { group: 1 })));
        assert_eq!((a[0], b[0]), (1.0, 1.0));
    }

    #[test]
    fn registry_builds_by_name() {
        let reg = OptimizerRegistry::with_builtins();
        let cfg = OptimizerConfig {
            name: "sgd".into(),
            ..Default::default()
        };
        assert_eq!(reg.build(&cfg).unwrap().name(), "sgd");
        assert_eq!(reg.build(&OptimizerConfig::default()).unwrap().name(), "adam");
        assert!(reg
            .build(&OptimizerConfig {
                name: "lbfgs".into(),
                ..Default::default()
            })
            .is_err());
    }
}
