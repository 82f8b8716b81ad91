use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::mlp::{Layer, Mlp};
use crate::{hexfloat, Error, Result};

const FORMAT: &str = "chartae-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized layer: `weights` is the `outputs × inputs` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    #[serde(with = "hexfloat::vec")]
    pub weights: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpRecord {
    pub format: String,
    pub version: u32,
    pub dims: Vec<usize>,
    pub layers: Vec<LayerRecord>,
}

impl From<&Mlp> for MlpRecord {
    fn from(m: &Mlp) -> Self {
        MlpRecord {
            format: FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dims: m.dims(),
            layers: m
                .layers
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: (0..l.outputs)
                        .flat_map(|o| (0..l.inputs).map(move |i| (o, i)))
                        .map(|(o, i)| l.weight(o, i))
                        .collect(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MlpRecord> for Mlp {
    type Error = Error;

    fn try_from(r: MlpRecord) -> Result<Mlp> {
        if r.format != FORMAT || r.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported network format {} v{}", r.format, r.version)));
        }
        let mut m = Mlp::zeros(&r.dims)?;
        if r.layers.len() != m.layers.len() {
            return Err(Error::Format("layer count disagrees with dims".into()));
        }
        for (l, rec) in m.layers.iter_mut().zip(r.layers) {
            if rec.inputs != l.inputs
                || rec.outputs != l.outputs
                || rec.weights.len() != l.wt.len()
                || rec.bias.len() != l.bias.len()
            {
                return Err(Error::Format("layer shape disagrees with dims".into()));
            }
            let mut fresh = Layer::zeros(rec.inputs, rec.outputs);
            for o in 0..rec.outputs {
                for i in 0..rec.inputs {
                    fresh.set_weight(o, i, rec.weights[o * rec.inputs + i]);
                }
            }
            fresh.bias = rec.bias;
            *l = fresh;
        }
        Ok(m)
    }
}

pub fn save_mlp<W: Write>(m: &Mlp, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &MlpRecord::from(m))?;
    Ok(())
}

pub fn load_mlp<R: Read>(r: R) -> Result<Mlp> {
    let rec: MlpRecord = serde_json::from_reader(r)?;
    Mlp::try_from(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, purpose};

    #[test]
    fn round_trip_bit_exact() {
        let m = Mlp::new(&[3, 7, 2], &mut rng::stream(3, purpose::INIT, &[])).unwrap();
        let mut buf = Vec::new();
        save_mlp(&m, &mut buf).unwrap();
        assert_eq!(load_mlp(&buf[..]).unwrap(), m);
        let mut rec = MlpRecord::from(&m);
        rec.layers[0].bias.pop();
        assert!(Mlp::try_from(rec).is_err());
    }
}
