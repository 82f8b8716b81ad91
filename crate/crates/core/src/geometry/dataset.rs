use std::io::{Read, Write};

use super::{apply_noise, EmbeddedManifold, NoiseKind, NoiseSpec};
use crate::matrix::Mat;
use crate::rng::{self, purpose};
use crate::{Error, Result};

const MAGIC: &[u8; 5] = b"CAEDS";
const FORMAT_VERSION: u16 = 1;

/// Index-aligned pairs `(x_i, v_i)` of noisy and clean ambient points.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub clean: Mat,
    pub noisy: Mat,
    pub seed: u64,
    pub noise: NoiseSpec,
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.clean.rows
    }

    pub fn is_empty(&self) -> bool {
        self.clean.rows == 0
    }

    /// Copy with the noisy inputs replaced by the clean points.
    pub fn denoised(&self) -> PairedDataset {
        PairedDataset {
            noisy: self.clean.clone(),
            noise: NoiseSpec::clean(),
            ..self.clone()
        }
    }

    /// First `n` pairs.
    pub fn truncated(&self, n: usize) -> PairedDataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        PairedDataset {
            clean: self.clean.gather_rows(&idx),
            noisy: self.noisy.gather_rows(&idx),
            ..self.clone()
        }
    }

    pub fn max_noise_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                self.clean
                    .row(i)
                    .iter()
                    .zip(self.noisy.row(i))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn mean_noise_energy(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .clean
            .data
            .iter()
            .zip(&self.noisy.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        total / self.len() as f64
    }
}

/// Sample `n` clean points uniformly and perturb each with `spec`.
pub fn make_dataset(surface: &EmbeddedManifold, n: usize, spec: &NoiseSpec, seed: u64) -> Result<PairedDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("dataset needs n >= 1".into()));
    }
    spec.validate(surface.reach())?;
    let dim = surface.ambient_dim();
    let mut sample_rng = rng::stream(seed, purpose::SAMPLE, &[]);
    let mut noise_rng = rng::stream(seed, purpose::NOISE, &[]);
    let mut clean = Mat::zeros(n, dim);
    let mut noisy = Mat::zeros(n, dim);
    for i in 0..n {
        let base = surface.manifold.sample(&mut sample_rng);
        let v = surface.embedding.embed_point(&base);
        let f = surface.manifold.raw_tangent_frame(&base);
        let tangent = [
            surface.embedding.embed_vector(&f.column(0).into_owned()),
            surface.embedding.embed_vector(&f.column(1).into_owned()),
        ];
        let x = apply_noise(&v, &tangent, spec, &mut noise_rng)?;
        clean.row_mut(i).copy_from_slice(&v);
        noisy.row_mut(i).copy_from_slice(&x);
    }
    Ok(PairedDataset {
        ambient_dim: dim,
        intrinsic_dim: surface.manifold.intrinsic_dim(),
        clean,
        noisy,
        seed,
        noise: *spec,
    })
}

/// Binary little-endian layout: magic, version, header, clean rows, noisy rows.
pub fn write_caeds<W: Write>(ds: &PairedDataset, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ds.ambient_dim as u32).to_le_bytes())?;
    w.write_all(&(ds.intrinsic_dim as u32).to_le_bytes())?;
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&[ds.noise.kind.code()])?;
    for x in [ds.noise.q, ds.noise.level, ds.noise.sigma2] {
        w.write_all(&x.to_le_bytes())?;
    }
    w.write_all(&ds.seed.to_le_bytes())?;
    for x in ds.clean.data.iter().chain(&ds.noisy.data) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated dataset: {e}")))?;
    Ok(buf)
}

pub fn read_caeds<R: Read>(mut r: R) -> Result<PairedDataset> {
    if &take::<5, _>(&mut r)? != MAGIC {
        return Err(Error::Format("not a CAEDS file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported CAEDS version {version}")));
    }
    let dim = u32::from_le_bytes(take(&mut r)?) as usize;
    let intrinsic = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let kind = NoiseKind::from_code(take::<1, _>(&mut r)?[0])?;
    let q = f64::from_le_bytes(take(&mut r)?);
    let level = f64::from_le_bytes(take(&mut r)?);
    let sigma2 = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let count = n
        .checked_mul(dim)
        .ok_or_else(|| Error::Format("dataset header overflows".into()))?;
    let mut read_block = || -> Result<Vec<f64>> {
        (0..count)
            .map(|_| Ok(f64::from_le_bytes(take(&mut r)?)))
            .collect()
    };
    let clean = Mat::from_vec(n, dim, read_block()?)?;
    let noisy = Mat::from_vec(n, dim, read_block()?)?;
    Ok(PairedDataset {
        ambient_dim: dim,
        intrinsic_dim: intrinsic,
        clean,
        noisy,
        seed,
        noise: NoiseSpec { kind, q, level, sigma2 },
    })
}

/// CSV with header `v_0..v_{D-1},x_0..x_{D-1}`.
pub fn write_csv<W: Write>(ds: &PairedDataset, mut w: W) -> Result<()> {
    let header: Vec<String> = (0..ds.ambient_dim)
        .map(|i| format!("v_{i}"))
        .chain((0..ds.ambient_dim).map(|i| format!("x_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let row: Vec<String> = ds
            .clean
            .row(i)
            .iter()
            .chain(ds.noisy.row(i))
            .map(|x| format!("{x:?}"))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Embedding, Sphere};
    use std::sync::Arc;

    fn sphere_surface(dim: usize) -> EmbeddedManifold {
        let emb = if dim == 3 {
            Embedding::identity(3)
        } else {
            Embedding::random(dim, 11).unwrap()
        };
        EmbeddedManifold::new(Arc::new(Sphere::new(1.0).unwrap()), emb)
    }

    #[test]
    fn zero_level_means_noisy_equals_clean() {
        let ds = make_dataset(&sphere_surface(3), 4, &NoiseSpec::normal(0.3, 0.0), 1).unwrap();
        assert_eq!(ds.clean, ds.noisy);
    }

    #[test]
    fn same_seed_same_bits() {
        let s = sphere_surface(5);
        let a = make_dataset(&s, 64, &NoiseSpec::gaussian(0.5), 42).unwrap();
        let b = make_dataset(&s, 64, &NoiseSpec::gaussian(0.5), 42).unwrap();
        assert_eq!(a, b);
        let c = make_dataset(&s, 64, &NoiseSpec::gaussian(0.5), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn normal_noise_respects_cap_and_surface() {
        let s = sphere_surface(5);
        let ds = make_dataset(&s, 10_000, &NoiseSpec::normal(0.3, 0.09), 5).unwrap();
        assert!(ds.max_noise_norm() <= 0.3 + 1e-12);
        for i in 0..ds.len() {
            let (base, orth2) = s.split(ds.clean.row(i));
            assert!(s.manifold.residual(&base) < 1e-8 && orth2 < 1e-16);
            // noise is normal: no tangential component
            let t = s.tangent_frame(ds.clean.row(i)).unwrap();
            for tk in &t {
                let c: f64 = tk.iter().zip(ds.clean.row(i).iter().zip(ds.noisy.row(i))).map(|(a, (v, x))| a * (x - v)).sum();
                assert!(c.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let ds = make_dataset(&sphere_surface(5), 17, &NoiseSpec::general(0.3, 0.04, 0.01), 3).unwrap();
        let mut buf = Vec::new();
        write_caeds(&ds, &mut buf).unwrap();
        assert_eq!(buf.len(), 5 + 2 + 4 + 4 + 8 + 1 + 24 + 8 + 2 * 17 * 5 * 8);
        assert_eq!(read_caeds(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let ds = make_dataset(&sphere_surface(3), 2, &NoiseSpec::clean(), 3).unwrap();
        let mut buf = Vec::new();
        write_caeds(&ds, &mut buf).unwrap();
        assert!(read_caeds(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_caeds(&bad[..]).is_err());
    }

    #[test]
    fn csv_header() {
        let ds = make_dataset(&sphere_surface(3), 2, &NoiseSpec::clean(), 3).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("v_0,v_1,v_2,x_0,x_1,x_2\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
