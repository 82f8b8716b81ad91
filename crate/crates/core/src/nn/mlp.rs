use rand::Rng as _;

use crate::matrix::{accumulate_grad, affine, times, Mat};
use crate::rng::Rng;
use crate::{Error, Result};

/// Dense affine layer; weights are stored transposed (`inputs × outputs`,
/// row-major) so the forward kernel streams contiguous rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub wt: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            wt: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Entry `W[o][i]` of the usual `outputs × inputs` weight matrix.
    pub fn weight(&self, o: usize, i: usize) -> f64 {
        self.wt[i * self.outputs + o]
    }

    pub fn set_weight(&mut self, o: usize, i: usize, value: f64) {
        self.wt[i * self.outputs + o] = value;
    }
}

/// ReLU network: ReLU after every hidden layer, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Layer outputs of a forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct Cache {
    pub acts: Vec<Mat>,
}

impl Cache {
    pub fn output(&self) -> &Mat {
        self.acts.last().expect("cache holds the input")
    }
}

/// Gradients laid out like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub wt: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Grads {
            wt: mlp.layers.iter().map(|l| vec![0.0; l.wt.len()]).collect(),
            bias: mlp.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.wt.iter_mut().chain(self.bias.iter_mut()).for_each(|g| g.fill(0.0));
    }

    /// Parameter groups in the order of [`Mlp::param_groups`].
    pub fn groups(&self) -> Vec<&[f64]> {
        self.wt
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dims: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        for l in &mut mlp.layers {
            let a = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            for w in &mut l.wt {
                *w = rng.gen_range(-a..a);
            }
        }
        Ok(mlp)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("layer dims {dims:?} need ≥ 2 positive entries")));
        }
        Ok(Mlp {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.in_dim()];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.wt.len() + l.bias.len()).sum()
    }

    pub fn param_groups(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.wt.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.cols != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: x.cols,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Mat) -> Result<Mat> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let mut next = Mat::zeros(cur.rows, l.outputs);
            affine(&cur, &l.wt, &l.bias, &mut next);
            if i + 1 < self.layers.len() {
                relu(&mut next);
            }
            cur = next;
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: &Mat) -> Result<Cache> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (i, l) in self.layers.iter().enumerate() {
            let prev = acts.last().unwrap();
            let mut next = Mat::zeros(prev.rows, l.outputs);
            affine(prev, &l.wt, &l.bias, &mut next);
            if i + 1 < self.layers.len() {
                relu(&mut next);
            }
            acts.push(next);
        }
        Ok(Cache { acts })
    }

    /// Accumulate parameter gradients for upstream gradient `grad_out` into
    /// `grads`; returns the gradient with respect to the input.
    pub fn backward(&self, cache: &Cache, grad_out: &Mat, grads: &mut Grads) -> Mat {
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            if i + 1 < self.layers.len() {
                // ReLU derivative from the stored post-activation
                for (gv, &a) in g.data.iter_mut().zip(&cache.acts[i + 1].data) {
                    if a <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            accumulate_grad(&cache.acts[i], &g, &mut grads.wt[i], &mut grads.bias[i]);
            let w = transpose(&l.wt, l.inputs, l.outputs);
            let mut prev = Mat::zeros(g.rows, l.inputs);
            times(&g, &w, l.inputs, &mut prev);
            g = prev;
        }
        g
    }
}

fn relu(m: &mut Mat) {
    for v in &mut m.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn transpose(wt: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; wt.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = wt[r * cols + c];
        }
    }
    out
}
