use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::charts::{Atlas, Charts};
use super::cover::Cover;
use crate::geometry::{build_manifold, EmbeddedManifold, Embedding, Frame, ManifoldParams, Point3};
use crate::{hexfloat, Error, Result};

const FORMAT: &str = "chartae-atlas";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AtlasFile {
    format: String,
    version: u32,
    manifold: ManifoldParams,
    embedding: Embedding,
    #[serde(with = "hexfloat::scalar")]
    delta: f64,
    #[serde(with = "hexfloat::scalar")]
    q: f64,
    #[serde(with = "hexfloat::vec")]
    cover_centers: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    cover_frames: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    local_reach: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    chart_centers: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    chart_frames: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    chart_normals: Vec<f64>,
    groups: Vec<Vec<usize>>,
    #[serde(with = "hexfloat::vec")]
    radii: Vec<f64>,
    strict: bool,
}

fn flat_points(p: &[Point3]) -> Vec<f64> {
    p.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

fn flat_frames(f: &[Frame]) -> Vec<f64> {
    f.iter().flat_map(|m| m.as_slice().to_vec()).collect()
}

fn points(v: &[f64]) -> Result<Vec<Point3>> {
    if v.len() % 3 != 0 {
        return Err(Error::Format("point array length is not a multiple of 3".into()));
    }
    Ok(v.chunks(3).map(|c| Point3::new(c[0], c[1], c[2])).collect())
}

fn frames(v: &[f64]) -> Result<Vec<Frame>> {
    if v.len() % 6 != 0 {
        return Err(Error::Format("frame array length is not a multiple of 6".into()));
    }
    Ok(v.chunks(6).map(Frame::from_column_slice).collect())
}

impl Atlas {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let ch = &self.charts;
        let file = AtlasFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            manifold: self.surface.manifold.params(),
            embedding: self.surface.embedding.clone(),
            delta: self.cover.delta,
            q: self.cover.q,
            cover_centers: flat_points(&self.cover.centers),
            cover_frames: flat_frames(&self.cover.frames),
            local_reach: self.cover.local_reach.clone(),
            chart_centers: flat_points(&ch.centers),
            chart_frames: flat_frames(&ch.frames),
            chart_normals: flat_points(&ch.normals),
            groups: ch.groups.clone(),
            radii: vec![
                ch.inner_radius,
                ch.outer_radius,
                ch.domain_radius,
                ch.support_extent,
                ch.coordinate_range,
                ch.lipschitz_forward,
                ch.lipschitz_inverse,
            ],
            strict: ch.strict,
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Atlas> {
        let f: AtlasFile = serde_json::from_reader(r)?;
        if f.format != FORMAT || f.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported atlas format {} v{}", f.format, f.version)));
        }
        let surface = EmbeddedManifold::new(build_manifold(&f.manifold)?, f.embedding);
        let cover = Cover::from_centers(
            &surface,
            points(&f.cover_centers)?,
            Some(frames(&f.cover_frames)?),
            Some(f.local_reach),
            f.delta,
            f.q,
        )?;
        let centers = points(&f.chart_centers)?;
        let chart_frames = frames(&f.chart_frames)?;
        let normals = points(&f.chart_normals)?;
        if chart_frames.len() != centers.len() || normals.len() != centers.len() || f.groups.len() != centers.len() {
            return Err(Error::Format("chart arrays disagree in length".into()));
        }
        let mut chart_of = vec![usize::MAX; cover.len()];
        for (j, g) in f.groups.iter().enumerate() {
            for &k in g {
                if k >= cover.len() || chart_of[k] != usize::MAX {
                    return Err(Error::Format(format!("bump {k} is misassigned")));
                }
                chart_of[k] = j;
            }
        }
        if chart_of.contains(&usize::MAX) {
            return Err(Error::Format("some bump belongs to no chart".into()));
        }
        let [inner, outer, domain, extent, range, fwd, inv] = f.radii[..] else {
            return Err(Error::Format("expected 7 chart constants".into()));
        };
        Ok(Atlas {
            surface,
            cover,
            charts: Charts {
                centers,
                frames: chart_frames,
                normals,
                groups: f.groups,
                chart_of,
                inner_radius: inner,
                outer_radius: outer,
                domain_radius: domain,
                support_extent: extent,
                strict: f.strict,
                coordinate_range: range,
                lipschitz_forward: fwd,
                lipschitz_inverse: inv,
            },
        })
    }
}
