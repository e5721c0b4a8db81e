//! Mosaic synthesis: canvas placement, per-triangle texture mapping of each
//! image under its deformed mesh, and blending of the warped layers.

use std::str::FromStr;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::mesh::WarpMesh;
use crate::raster::{chamfer_distance, draw_line};

/// Output raster placement. A deformed point `p` lands at `p + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub offset: (f64, f64),
}

/// Bounding box of every deformed vertex, padded by one pixel.
pub fn compute_canvas(meshes: &[&WarpMesh]) -> Result<Canvas> {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for m in meshes {
        for &(x, y) in &m.deformed {
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::input("deformed mesh has a non-finite vertex"));
            }
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
    }
    if !lo.0.is_finite() {
        return Err(Error::input("no mesh vertices to place"));
    }
    let x0 = lo.0.floor() - 1.0;
    let y0 = lo.1.floor() - 1.0;
    let x1 = hi.0.ceil() + 1.0;
    let y1 = hi.1.ceil() + 1.0;
    Ok(Canvas {
        width: (x1 - x0) as usize + 1,
        height: (y1 - y0) as usize + 1,
        offset: (-x0, -y0),
    })
}

#[derive(Debug, Clone)]
pub struct WarpedLayer {
    pub image: RgbImage,
    pub coverage: Vec<bool>,
    /// Triangles whose deformed orientation flipped or collapsed.
    pub skipped_triangles: usize,
}

fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = (x.floor() as i64).min(w - 1);
    let y0 = (y.floor() as i64).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let px = |xx: i64, yy: i64| img.get_pixel(xx as u32, yy as u32);
    let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    let mut out = [0.0; 3];
    for ch in 0..3 {
        let top = a[ch] as f64 * (1.0 - fx) + b[ch] as f64 * fx;
        let bot = c[ch] as f64 * (1.0 - fx) + d[ch] as f64 * fx;
        out[ch] = top * (1.0 - fy) + bot * fy;
    }
    out
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn signed_area(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0))
}

/// Backward-maps `image` onto the canvas through its deformed mesh. Each
/// cell is split along its top-left → bottom-right diagonal; every canvas
/// pixel inside a deformed triangle samples the source bilinearly at the
/// affinely corresponding rest position (clamped to the image).
pub fn warp_image(image: &RgbImage, mesh: &WarpMesh, canvas: &Canvas) -> Result<WarpedLayer> {
    if image.width() as usize != mesh.width || image.height() as usize != mesh.height {
        return Err(Error::input(format!(
            "image is {}x{} but the mesh spans {}x{}",
            image.width(),
            image.height(),
            mesh.width,
            mesh.height
        )));
    }
    let (cw, ch) = (canvas.width, canvas.height);
    let mut out = RgbImage::new(cw as u32, ch as u32);
    let mut coverage = vec![false; cw * ch];
    let mut skipped = 0;
    let (ox, oy) = canvas.offset;

    for (ci, cj) in mesh.cells() {
        let [tl, tr, bl, br] = mesh.cell(ci, cj);
        for tri in [[tl, tr, br], [tl, br, bl]] {
            let src = tri.map(|v| mesh.rest[v]);
            let dst = tri.map(|v| (mesh.deformed[v].0 + ox, mesh.deformed[v].1 + oy));
            let rest_area = signed_area(src[0], src[1], src[2]);
            let area = signed_area(dst[0], dst[1], dst[2]);
            if area.abs() < 1e-12 || area.signum() != rest_area.signum() {
                skipped += 1;
                continue;
            }
            let min_x = dst.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
            let max_x = (dst.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(cw - 1);
            let min_y = dst.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
            let max_y = (dst.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(ch - 1);
            let inv2a = 1.0 / (2.0 * area);
            let tol = -1e-9;
            for py in min_y..=max_y {
                for px in min_x..=max_x {
                    let p = (px as f64, py as f64);
                    let l0 = 2.0 * signed_area(p, dst[1], dst[2]) * inv2a;
                    let l1 = 2.0 * signed_area(dst[0], p, dst[2]) * inv2a;
                    let l2 = 1.0 - l0 - l1;
                    if l0 < tol || l1 < tol || l2 < tol {
                        continue;
                    }
                    let sx = l0 * src[0].0 + l1 * src[1].0 + l2 * src[2].0;
                    let sy = l0 * src[0].1 + l1 * src[1].1 + l2 * src[2].1;
                    let v = sample_bilinear(image, sx, sy);
                    out.put_pixel(px as u32, py as u32, Rgb(v.map(to_u8)));
                    coverage[py * cw + px] = true;
                }
            }
        }
    }
    Ok(WarpedLayer {
        image: out,
        coverage,
        skipped_triangles: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlendMode {
    /// Weights proportional to each layer's distance to its coverage edge.
    #[default]
    Feather,
    Average,
}

impl FromStr for BlendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feather" => Ok(BlendMode::Feather),
            "average" => Ok(BlendMode::Average),
            other => Err(Error::input(format!("unknown blend mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for BlendMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BlendMode::Feather => "feather",
            BlendMode::Average => "average",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Mosaic {
    pub image: RgbImage,
    pub overlap: Vec<bool>,
}

pub fn blend(a: &WarpedLayer, b: &WarpedLayer, mode: BlendMode) -> Result<Mosaic> {
    let (w, h) = (a.image.width(), a.image.height());
    if b.image.dimensions() != (w, h) {
        return Err(Error::input("layers do not share a canvas"));
    }
    let (wu, hu) = (w as usize, h as usize);
    let (da, db) = match mode {
        BlendMode::Feather => (
            chamfer_distance(wu, hu, |i| !a.coverage[i]),
            chamfer_distance(wu, hu, |i| !b.coverage[i]),
        ),
        BlendMode::Average => (vec![1.0; wu * hu], vec![1.0; wu * hu]),
    };
    let mut image = RgbImage::new(w, h);
    let mut overlap = vec![false; wu * hu];
    for i in 0..wu * hu {
        let (x, y) = ((i % wu) as u32, (i / wu) as u32);
        let px = match (a.coverage[i], b.coverage[i]) {
            (true, true) => {
                overlap[i] = true;
                // an all-covered canvas has no edge to measure from
                let (wa, wb) = match (da[i].is_finite(), db[i].is_finite()) {
                    (true, true) => (da[i], db[i]),
                    _ => (1.0, 1.0),
                };
                let (pa, pb) = (a.image.get_pixel(x, y), b.image.get_pixel(x, y));
                let mut v = [0u8; 3];
                for c in 0..3 {
                    v[c] = to_u8((wa * pa[c] as f64 + wb * pb[c] as f64) / (wa + wb));
                }
                Rgb(v)
            }
            (true, false) => *a.image.get_pixel(x, y),
            (false, true) => *b.image.get_pixel(x, y),
            (false, false) => Rgb([0, 0, 0]),
        };
        image.put_pixel(x, y, px);
    }
    Ok(Mosaic { image, overlap })
}

/// Draws the deformed mesh edges over `img` (canvas coordinates).
pub fn draw_mesh(img: &mut RgbImage, mesh: &WarpMesh, canvas: &Canvas, color: Rgb<u8>) {
    let (ox, oy) = canvas.offset;
    for (j, k) in mesh.edges() {
        let a = mesh.deformed[j];
        let b = mesh.deformed[k];
        draw_line(img, (a.0 + ox, a.1 + oy), (b.0 + ox, b.1 + oy), color);
    }
}

pub fn mask_image(width: usize, height: usize, mask: &[bool]) -> image::GrayImage {
    image::GrayImage::from_fn(width as u32, height as u32, |x, y| {
        image::Luma([if mask[y as usize * width + x as usize] { 255 } else { 0 }])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            Rgb([
                ((x * 37 + y * 11) % 256) as u8,
                ((x * 5 + y * 71) % 256) as u8,
                ((x * x + 3 * y) % 256) as u8,
            ])
        })
    }

    #[test]
    fn canvas_for_identity_and_shift() {
        let a = WarpMesh::new(40, 30, 4, 3).unwrap();
        let c = compute_canvas(&[&a, &a]).unwrap();
        assert_eq!((c.width, c.height), (42, 32));
        let mut b = a.clone();
        b.deform_with(|x, y| (x + 100.0, y));
        let c = compute_canvas(&[&a, &b]).unwrap();
        assert_eq!((c.width, c.height), (142, 32));
        let c = compute_canvas(&[&b]).unwrap();
        assert_eq!((c.width, c.height), (42, 32));
        assert_eq!(c.offset, (-99.0, 1.0));
    }

    #[test]
    fn canvas_rejects_nan() {
        let mut a = WarpMesh::new(10, 10, 1, 1).unwrap();
        a.deformed[0].0 = f64::NAN;
        assert!(compute_canvas(&[&a]).is_err());
    }

    #[test]
    fn identity_warp_is_exact() {
        let img = textured(37, 23);
        let mesh = WarpMesh::new(37, 23, 5, 4).unwrap();
        let canvas = compute_canvas(&[&mesh]).unwrap();
        let layer = warp_image(&img, &mesh, &canvas).unwrap();
        assert_eq!(layer.skipped_triangles, 0);
        for y in 0..23 {
            for x in 0..37 {
                assert_eq!(layer.image.get_pixel(x + 1, y + 1), img.get_pixel(x, y));
                assert!(layer.coverage[(y as usize + 1) * canvas.width + x as usize + 1]);
            }
        }
        assert_eq!(layer.coverage.iter().filter(|&&c| c).count(), 37 * 23);
    }

    #[test]
    fn integer_shift_is_exact() {
        let img = textured(40, 30);
        let rest = WarpMesh::new(40, 30, 4, 3).unwrap();
        let mut moved = rest.clone();
        moved.deform_with(|x, y| (x + 7.0, y + 3.0));
        let canvas = compute_canvas(&[&rest, &moved]).unwrap();
        let layer = warp_image(&img, &moved, &canvas).unwrap();
        let (ox, oy) = (canvas.offset.0 as u32 + 7, canvas.offset.1 as u32 + 3);
        for y in 0..30 {
            for x in 0..40 {
                assert_eq!(layer.image.get_pixel(x + ox, y + oy), img.get_pixel(x, y));
            }
        }
    }

    #[test]
    fn folded_triangles_are_skipped() {
        let img = textured(20, 20);
        let mut mesh = WarpMesh::new(20, 20, 1, 1).unwrap();
        // mirror horizontally: both triangles flip orientation
        mesh.deform_with(|x, y| (19.0 - x, y));
        let canvas = compute_canvas(&[&mesh]).unwrap();
        let layer = warp_image(&img, &mesh, &canvas).unwrap();
        assert_eq!(layer.skipped_triangles, 2);
        assert!(layer.coverage.iter().all(|&c| !c));
    }

    #[test]
    fn wrong_image_size_rejected() {
        let mesh = WarpMesh::new(20, 20, 1, 1).unwrap();
        let canvas = compute_canvas(&[&mesh]).unwrap();
        assert!(warp_image(&textured(21, 20), &mesh, &canvas).is_err());
    }

    fn layer(w: u32, h: u32, value: u8, cover: impl Fn(u32, u32) -> bool) -> WarpedLayer {
        WarpedLayer {
            image: RgbImage::from_pixel(w, h, Rgb([value; 3])),
            coverage: (0..w * h).map(|i| cover(i % w, i / w)).collect(),
            skipped_triangles: 0,
        }
    }

    #[test]
    fn disjoint_layers_union() {
        let a = layer(10, 4, 100, |x, y| x < 4 && y > 0 && y < 3);
        let b = layer(10, 4, 200, |x, y| x > 5 && y > 0 && y < 3);
        let m = blend(&a, &b, BlendMode::Feather).unwrap();
        assert!(m.overlap.iter().all(|&o| !o));
        assert_eq!(m.image.get_pixel(1, 1)[0], 100);
        assert_eq!(m.image.get_pixel(7, 1)[0], 200);
        assert_eq!(m.image.get_pixel(5, 1)[0], 0);
        assert_eq!(m.image.get_pixel(1, 0)[0], 0);
    }

    #[test]
    fn constant_overlap_stays_constant() {
        let a = layer(12, 6, 77, |x, y| (1..9).contains(&x) && (1..5).contains(&y));
        let b = layer(12, 6, 77, |x, y| (4..11).contains(&x) && (1..5).contains(&y));
        for mode in [BlendMode::Feather, BlendMode::Average] {
            let m = blend(&a, &b, mode).unwrap();
            for i in 0..72 {
                if m.overlap[i] {
                    assert_eq!(m.image.get_pixel((i % 12) as u32, (i / 12) as u32)[0], 77);
                }
            }
        }
    }

    #[test]
    fn equidistant_overlap_pixel_is_midpoint() {
        // a covers x in 1..=7, b covers x in 5..=11 (rows 1..=9)
        let a = layer(13, 11, 100, |x, y| (1..=7).contains(&x) && (1..=9).contains(&y));
        let b = layer(13, 11, 200, |x, y| (5..=11).contains(&x) && (1..=9).contains(&y));
        let m = blend(&a, &b, BlendMode::Feather).unwrap();
        // x = 6, y = 5: 2 px from a's right edge gap, 2 px from b's left gap
        assert!(m.overlap[5 * 13 + 6]);
        assert_eq!(m.image.get_pixel(6, 5)[0], 150);
    }

    #[test]
    fn blend_mode_parse() {
        assert_eq!("feather".parse::<BlendMode>().unwrap(), BlendMode::Feather);
        assert_eq!("average".parse::<BlendMode>().unwrap(), BlendMode::Average);
        assert!("multiband".parse::<BlendMode>().is_err());
    }
}
