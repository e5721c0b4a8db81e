//! Dense correspondences and the per-vertex similarity field.
//!
//! Inside each dominant region, every mesh vertex in the overlap gets a
//! matched position from a locally weighted homography (moving DLT). The
//! similarity field assigns each vertex the (c, s) of the region it sits
//! in, and an inverse-distance blend of region parameters elsewhere.

use image::{Rgb, RgbImage};

use crate::consensus::RegionCorrespondence;
use crate::error::{Error, Result};
use crate::geometry::{Homography, MatchSet, SimilarityParams, WeightedDlt};
use crate::mesh::WarpMesh;
use crate::raster::{chamfer_distance, draw_dot, draw_line, hsv};
use crate::segmetrics::LabelMask;

/// Locally weighted DLT: pair `k` gets weight `max(exp(-d²/σ²), γ)`, `d`
/// being the distance from the query point to the pair's source point.
pub struct MovingDlt {
    dlt: WeightedDlt,
    sources: Vec<(f64, f64)>,
    sigma: f64,
    gamma: f64,
}

impl MovingDlt {
    pub fn new(inliers: &MatchSet, sigma: f64, gamma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::input(format!(
                "moving DLT needs sigma > 0 and 0 < gamma <= 1 (got {sigma}, {gamma})"
            )));
        }
        Ok(MovingDlt {
            dlt: WeightedDlt::new(inliers)?,
            sources: inliers.pairs.iter().map(|p| p.src()).collect(),
            sigma,
            gamma,
        })
    }

    pub fn weights(&self, x: f64, y: f64) -> Vec<f64> {
        let s2 = self.sigma * self.sigma;
        self.sources
            .iter()
            .map(|&(px, py)| {
                let d2 = (x - px).powi(2) + (y - py).powi(2);
                (-d2 / s2).exp().max(self.gamma)
            })
            .collect()
    }

    pub fn at(&self, x: f64, y: f64) -> Result<Homography> {
        self.dlt.solve(&self.weights(x, y))
    }
}

pub fn moving_dlt(vertex: (f64, f64), inliers: &MatchSet, sigma: f64, gamma: f64) -> Result<Homography> {
    MovingDlt::new(inliers, sigma, gamma)?.at(vertex.0, vertex.1)
}

/// Which image of a [`RegionCorrespondence`] a mesh belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// The set M_ij for one region pair: mesh vertex of this image and its
/// matched position in the other image.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCorrespondence {
    pub region_a: u8,
    pub region_b: u8,
    pub side: Side,
    pub pairs: Vec<(usize, (f64, f64))>,
}

impl DenseCorrespondence {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensifyParams {
    pub sigma: f64,
    pub gamma: f64,
}

/// Matched positions for mesh vertices whose surrounding cells contain at
/// least one pixel that is both in the correspondence's region and in
/// `overlap` (row-major, same size as `mask`).
pub fn densify(
    mesh: &WarpMesh,
    corr: &RegionCorrespondence,
    side: Side,
    mask: &LabelMask,
    overlap: &[bool],
    params: &DensifyParams,
) -> Result<DenseCorrespondence> {
    if mask.width() != mesh.width || mask.height() != mesh.height || overlap.len() != mask.labels().len() {
        return Err(Error::input("densify: mesh, mask and overlap sizes differ"));
    }
    let (region, inliers) = match side {
        Side::A => (corr.region_a, corr.inliers.clone()),
        Side::B => (corr.region_b, corr.inliers.reversed()),
    };
    let mut out = DenseCorrespondence {
        region_a: corr.region_a,
        region_b: corr.region_b,
        side,
        pairs: Vec::new(),
    };

    let w = mask.width();
    let (sx, sy) = mesh.cell_step();
    let mut cell_hit = vec![false; mesh.cols * mesh.rows];
    for (ci, cj) in mesh.cells() {
        let x0 = (ci as f64 * sx).floor() as usize;
        let x1 = (((ci + 1) as f64 * sx).ceil() as usize).min(w - 1);
        let y0 = (cj as f64 * sy).floor() as usize;
        let y1 = (((cj + 1) as f64 * sy).ceil() as usize).min(mask.height() - 1);
        'scan: for y in y0..=y1 {
            for x in x0..=x1 {
                let i = y * w + x;
                if overlap[i] && mask.labels()[i] == region {
                    cell_hit[cj * mesh.cols + ci] = true;
                    break 'scan;
                }
            }
        }
    }
    if !cell_hit.iter().any(|&h| h) {
        return Ok(out);
    }

    let mdlt = MovingDlt::new(&inliers, params.sigma, params.gamma)?;
    for v in 0..mesh.vertex_count() {
        if !mesh.cells_around(v).any(|(ci, cj)| cell_hit[cj * mesh.cols + ci]) {
            continue;
        }
        let (x, y) = mesh.rest[v];
        let h = mdlt.at(x, y)?;
        let t = h.apply(x, y);
        if t.0.is_finite() && t.1.is_finite() {
            out.pairs.push((v, t));
        }
    }
    Ok(out)
}

/// Per-vertex `(c, s)` of the similarity each vertex should undergo.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityField {
    pub params: Vec<(f64, f64)>,
}

impl SimilarityField {
    pub fn identity(mesh: &WarpMesh) -> Self {
        SimilarityField {
            params: vec![(1.0, 0.0); mesh.vertex_count()],
        }
    }

    pub fn constant(mesh: &WarpMesh, c: f64, s: f64) -> Self {
        SimilarityField {
            params: vec![(c, s); mesh.vertex_count()],
        }
    }
}

/// Region label with the similarity its pixels undergo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionAnchor {
    pub label: u8,
    pub params: SimilarityParams,
}

/// Anchors for the mesh of one side: side A uses each pair's a → b
/// similarity, side B its inverse.
pub fn anchors_for(corrs: &[RegionCorrespondence], side: Side) -> Vec<RegionAnchor> {
    corrs
        .iter()
        .map(|c| match side {
            Side::A => RegionAnchor {
                label: c.region_a,
                params: c.similarity,
            },
            Side::B => RegionAnchor {
                label: c.region_b,
                params: c.similarity.inverse(),
            },
        })
        .collect()
}

const IDW_EPS: f64 = 1.0;

/// Region parameters inside anchor regions, inverse-square-distance
/// blend `1/(d + 1)²` of all anchors elsewhere. Distances are chamfer
/// distances on the label mask.
pub fn similarity_field(mesh: &WarpMesh, anchors: &[RegionAnchor], mask: &LabelMask) -> Result<SimilarityField> {
    if anchors.is_empty() {
        return Err(Error::Field("no region correspondences to build a field from".into()));
    }
    let (w, h) = (mask.width(), mask.height());
    let labels = mask.labels();
    let dists: Vec<Vec<f64>> = anchors
        .iter()
        .map(|a| chamfer_distance(w, h, |i| labels[i] == a.label))
        .collect();

    let params = mesh
        .rest
        .iter()
        .map(|&(x, y)| {
            let px = (x.round().max(0.0) as usize).min(w - 1);
            let py = (y.round().max(0.0) as usize).min(h - 1);
            let i = py * w + px;
            if let Some(a) = anchors.iter().find(|a| a.label == labels[i]) {
                return (a.params.c, a.params.s);
            }
            let (mut wsum, mut c, mut s) = (0.0, 0.0, 0.0);
            for (a, d) in anchors.iter().zip(&dists) {
                if !d[i].is_finite() {
                    continue;
                }
                let wt = 1.0 / (d[i] + IDW_EPS).powi(2);
                wsum += wt;
                c += wt * a.params.c;
                s += wt * a.params.s;
            }
            if wsum > 0.0 {
                (c / wsum, s / wsum)
            } else {
                // anchor regions absent from this mask: plain average
                let n = anchors.len() as f64;
                (
                    anchors.iter().map(|a| a.params.c).sum::<f64>() / n,
                    anchors.iter().map(|a| a.params.s).sum::<f64>() / n,
                )
            }
        })
        .collect();
    Ok(SimilarityField { params })
}

/// Field display: one tick per vertex (every `stride`-th), hue from the
/// rotation angle, length from the scale.
pub fn render_field(mesh: &WarpMesh, field: &SimilarityField, stride: usize) -> RgbImage {
    let mut img = RgbImage::from_pixel(mesh.width as u32, mesh.height as u32, Rgb([24, 24, 24]));
    let (sx, sy) = mesh.cell_step();
    let len = 0.45 * (sx.min(sy) * stride.max(1) as f64);
    let stride = stride.max(1);
    for j in (0..=mesh.rows).step_by(stride) {
        for i in (0..=mesh.cols).step_by(stride) {
            let v = mesh.vertex(i, j);
            let (c, s) = field.params[v];
            let (x, y) = mesh.rest[v];
            let scale = c.hypot(s);
            let angle = s.atan2(c);
            let color = hsv(180.0 + angle.to_degrees() * 4.0, 0.8, 0.95);
            // the tick shows where the unit x-axis is carried by S
            let tip = (x + len * scale * angle.cos(), y - len * scale * angle.sin());
            draw_line(&mut img, (x, y), tip, color);
            draw_dot(&mut img, (x, y), 1, Rgb([200, 200, 200]));
        }
    }
    img
}
