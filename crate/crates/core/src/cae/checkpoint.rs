use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::model::ChartAutoencoder;
use crate::nn::{Mlp, MlpRecord};
use crate::{Error, Result};

const FORMAT: &str = "chartae-cae";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaeHeader {
    pub format: String,
    pub version: u32,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub chart_count: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaeCheckpoint {
    pub header: CaeHeader,
    /// Free-form provenance (resolved config, tool version).
    #[serde(default)]
    pub meta: serde_json::Value,
    pub encoder: MlpRecord,
    pub decoders: Vec<MlpRecord>,
}

impl CaeCheckpoint {
    pub fn new(model: &ChartAutoencoder, meta: serde_json::Value) -> Self {
        CaeCheckpoint {
            header: CaeHeader {
                format: FORMAT.into(),
                version: VERSION,
                ambient_dim: model.ambient_dim,
                intrinsic_dim: model.intrinsic_dim,
                chart_count: model.chart_count,
                hidden: model.hidden,
            },
            meta,
            encoder: MlpRecord::from(&model.encoder),
            decoders: model.decoders.iter().map(MlpRecord::from).collect(),
        }
    }

    pub fn into_model(self) -> Result<ChartAutoencoder> {
        let h = self.header;
        if h.format != FORMAT || h.version != VERSION {
            return Err(Error::Format(format!("unsupported model format {} v{}", h.format, h.version)));
        }
        let encoder = Mlp::try_from(self.encoder)?;
        let decoders = self.decoders.into_iter().map(Mlp::try_from).collect::<Result<Vec<_>>>()?;
        let enc_ok = encoder.dims() == [h.ambient_dim, h.hidden, h.hidden, h.chart_count * (h.intrinsic_dim + 1)];
        let dec_ok = decoders.len() == h.chart_count
            && decoders.iter().all(|d| d.dims() == [h.intrinsic_dim, h.hidden, h.hidden, h.ambient_dim]);
        if !enc_ok || !dec_ok {
            return Err(Error::Format("network shapes disagree with the header".into()));
        }
        Ok(ChartAutoencoder {
            ambient_dim: h.ambient_dim,
            intrinsic_dim: h.intrinsic_dim,
            chart_count: h.chart_count,
            hidden: h.hidden,
            encoder,
            decoders,
        })
    }
}

pub fn save_model<W: Write>(model: &ChartAutoencoder, meta: serde_json::Value, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &CaeCheckpoint::new(model, meta))?;
    Ok(())
}

pub fn load_model<R: Read>(r: R) -> Result<(ChartAutoencoder, serde_json::Value)> {
    let ck: CaeCheckpoint = serde_json::from_reader(r)?;
    let meta = ck.meta.clone();
    Ok((ck.into_model()?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = ChartAutoencoder::new(5, 2, 3, 6, 2).unwrap();
        let mut buf = Vec::new();
        save_model(&m, serde_json::json!({"seed": 2}), &mut buf).unwrap();
        let (back, meta) = load_model(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta["seed"], 2);
        let mut ck = CaeCheckpoint::new(&m, serde_json::Value::Null);
        ck.header.chart_count = 4;
        assert!(ck.into_model().is_err());
    }
}
