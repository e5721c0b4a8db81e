//! Overlap alignment score: RMSE of `1 − NCC` over 5×5 gray windows.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::raster::to_gray;

const HALF_WINDOW: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapScore {
    pub rmse: f64,
    /// Pixels that contributed a window.
    pub evaluated: usize,
    /// Overlap pixels whose window had zero variance in either image.
    pub skipped: usize,
}

impl OverlapScore {
    /// The score ×100.
    pub fn scaled(&self) -> f64 {
        self.rmse * 100.0
    }
}

pub fn rmse_ncc(a: &RgbImage, b: &RgbImage, overlap: &[bool]) -> Result<OverlapScore> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::Metric(format!(
            "images differ in size: {:?} vs {:?}",
            a.dimensions(),
            b.dimensions()
        )));
    }
    let (w, h) = (a.width() as usize, a.height() as usize);
    rmse_ncc_gray(&to_gray(a), &to_gray(b), w, h, overlap)
}

/// Gray-level variant. Windows are clipped to the overlap so pixels from
/// outside either image's coverage never enter the correlation.
pub fn rmse_ncc_gray(a: &[f64], b: &[f64], width: usize, height: usize, overlap: &[bool]) -> Result<OverlapScore> {
    let n = width * height;
    if a.len() != n || b.len() != n || overlap.len() != n {
        return Err(Error::Metric("buffer sizes do not match the canvas".into()));
    }
    if !overlap.iter().any(|&o| o) {
        return Err(Error::Metric("overlap is empty".into()));
    }
    let (w, h) = (width as i64, height as i64);
    let mut sum_sq = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    let mut wa = Vec::with_capacity(25);
    let mut wb = Vec::with_capacity(25);
    for y in 0..h {
        for x in 0..w {
            if !overlap[(y * w + x) as usize] {
                continue;
            }
            wa.clear();
            wb.clear();
            for yy in (y - HALF_WINDOW).max(0)..=(y + HALF_WINDOW).min(h - 1) {
                for xx in (x - HALF_WINDOW).max(0)..=(x + HALF_WINDOW).min(w - 1) {
                    let i = (yy * w + xx) as usize;
                    if overlap[i] {
                        wa.push(a[i]);
                        wb.push(b[i]);
                    }
                }
            }
            match ncc(&wa, &wb) {
                Some(v) => {
                    sum_sq += (1.0 - v) * (1.0 - v);
                    evaluated += 1;
                }
                None => skipped += 1,
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::Metric(format!(
            "all {skipped} overlap windows have zero variance"
        )));
    }
    Ok(OverlapScore {
        rmse: (sum_sq / evaluated as f64).sqrt(),
        evaluated,
        skipped,
    })
}

fn ncc(a: &[f64], b: &[f64]) -> Option<f64> {
    let k = a.len() as f64;
    let ma = a.iter().sum::<f64>() / k;
    let mb = b.iter().sum::<f64>() / k;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 1e-12 || sbb <= 1e-12 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn textured(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = ((x * 37 + y * 101) ^ (x * y)) % 256;
            Rgb([v as u8, (255 - v) as u8 / 2, (v * 3 % 256) as u8])
        })
    }

    #[test]
    fn identical_is_zero() {
        let a = textured(30, 20);
        let s = rmse_ncc(&a, &a, &vec![true; 600]).unwrap();
        assert_eq!(s.rmse, 0.0);
        assert_eq!(s.evaluated + s.skipped, 600);
    }

    #[test]
    fn inverted_is_two() {
        let a = textured(30, 20);
        let mut b = a.clone();
        b.pixels_mut().for_each(|p| p.0 = p.0.map(|c| 255 - c));
        let s = rmse_ncc(&a, &b, &vec![true; 600]).unwrap();
        assert!((s.rmse - 2.0).abs() < 1e-9, "{}", s.rmse);
        assert!((s.scaled() - 200.0).abs() < 1e-6);
    }

    #[test]
    fn flat_windows_are_skipped() {
        let a = RgbImage::from_pixel(10, 10, Rgb([9, 9, 9]));
        assert!(matches!(rmse_ncc(&a, &a, &[true; 100]), Err(Error::Metric(_))));
        let b = textured(10, 10);
        let mut mixed = b.clone();
        for y in 0..10 {
            for x in 0..3 {
                mixed.put_pixel(x, y, Rgb([50, 50, 50]));
            }
        }
        let s = rmse_ncc(&mixed, &mixed, &[true; 100]).unwrap();
        // windows centred on column 0 see only flat pixels
        assert!(s.skipped >= 10);
    }

    #[test]
    fn empty_overlap_errors() {
        let a = textured(5, 5);
        assert!(rmse_ncc(&a, &a, &[false; 25]).is_err());
    }

    #[test]
    fn windows_ignore_pixels_outside_overlap() {
        let a = textured(20, 10);
        let mut b = a.clone();
        for y in 0..10 {
            for x in 10..20 {
                b.put_pixel(x, y, Rgb([0, 0, 0]));
            }
        }
        let overlap: Vec<bool> = (0..200).map(|i| i % 20 < 10).collect();
        assert_eq!(rmse_ncc(&a, &b, &overlap).unwrap().rmse, 0.0);
    }
}
