//! Bit-exact text encoding of `f64` values as hexadecimal bit patterns.

use serde::{Deserialize, Deserializer, Serializer};

pub fn encode(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

pub fn decode(s: &str) -> Option<f64> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    if s.len() != 16 {
        return None;
    }
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

/// `#[serde(with = "hexfloat::vec")]` for `Vec<f64>`.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| encode(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| decode(s).ok_or_else(|| serde::de::Error::custom(format!("bad hex float `{s}`"))))
            .collect()
    }
}

/// `#[serde(with = "hexfloat::scalar")]` for a single `f64`.
pub mod scalar {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let raw = String::deserialize(d)?;
        decode(&raw).ok_or_else(|| serde::de::Error::custom(format!("bad hex float `{raw}`")))
    }
}
