//! Small raster helpers shared by several stages: chamfer distance
//! transforms, gray conversion and the primitive drawing used by the
//! diagnostic dumps.

use image::{Rgb, RgbImage};

const DIAG: f64 = std::f64::consts::SQRT_2;

/// Two-pass (1, √2) chamfer distance to the nearest pixel for which
/// `is_seed` holds. Pixels with no seed anywhere stay at `f64::INFINITY`.
pub fn chamfer_distance(width: usize, height: usize, is_seed: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut d: Vec<f64> = (0..width * height)
        .map(|i| if is_seed(i) { 0.0 } else { f64::INFINITY })
        .collect();
    if width == 0 || height == 0 {
        return d;
    }
    let w = width;
    for y in 0..height {
        for x in 0..width {
            let i = y * w + x;
            let mut best = d[i];
            if x > 0 {
                best = best.min(d[i - 1] + 1.0);
            }
            if y > 0 {
                best = best.min(d[i - w] + 1.0);
                if x > 0 {
                    best = best.min(d[i - w - 1] + DIAG);
                }
                if x + 1 < width {
                    best = best.min(d[i - w + 1] + DIAG);
                }
            }
            d[i] = best;
        }
    }
    for y in (0..height).rev() {
        for x in (0..width).rev() {
            let i = y * w + x;
            let mut best = d[i];
            if x + 1 < width {
                best = best.min(d[i + 1] + 1.0);
            }
            if y + 1 < height {
                best = best.min(d[i + w] + 1.0);
                if x + 1 < width {
                    best = best.min(d[i + w + 1] + DIAG);
                }
                if x > 0 {
                    best = best.min(d[i + w - 1] + DIAG);
                }
            }
            d[i] = best;
        }
    }
    d
}

pub fn luma(p: &Rgb<u8>) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

pub fn to_gray(img: &RgbImage) -> Vec<f64> {
    img.pixels().map(luma).collect()
}

/// Distinct, stable color for a small integer label.
pub fn label_color(label: u8) -> Rgb<u8> {
    // golden-angle hue walk
    let h = (label as f64 * 137.507_764) % 360.0;
    hsv(h, 0.65, 0.95)
}

pub fn hsv(h: f64, s: f64, v: f64) -> Rgb<u8> {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |t: f64| ((t + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb([q(r), q(g), q(b)])
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Bresenham segment, clipped to the image.
pub fn draw_line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: Rgb<u8>) {
    if !(a.0.is_finite() && a.1.is_finite() && b.0.is_finite() && b.1.is_finite()) {
        return;
    }
    let (mut x0, mut y0) = (a.0.round() as i64, a.1.round() as i64);
    let (x1, y1) = (b.0.round() as i64, b.1.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let limit = 4 * (img.width() as i64 + img.height() as i64);
    for _ in 0..=(dx.max(-dy)).min(limit) {
        put(img, x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

pub fn draw_dot(img: &mut RgbImage, p: (f64, f64), radius: i64, c: Rgb<u8>) {
    let (cx, cy) = (p.0.round() as i64, p.1.round() as i64);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if dx * dx + dy * dy <= radius * radius {
                put(img, cx + dx, cy + dy, c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chamfer_single_seed() {
        let d = chamfer_distance(5, 5, |i| i == 12);
        assert_eq!(d[12], 0.0);
        assert_eq!(d[13], 1.0);
        assert!((d[18] - DIAG).abs() < 1e-12);
        assert_eq!(d[14], 2.0);
    }

    #[test]
    fn chamfer_without_seed_is_infinite() {
        let d = chamfer_distance(3, 2, |_| false);
        assert!(d.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn gray_weights() {
        assert!((luma(&Rgb([255, 255, 255])) - 255.0).abs() < 1e-9);
        assert_eq!(luma(&Rgb([0, 0, 0])), 0.0);
    }
}
