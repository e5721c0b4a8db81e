use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Homography, MatchSet, PointPair};
use crate::meshopt::LineSegment;
use crate::segmetrics::LabelMask;

use super::config::{format_config, ConfigFile, InputPaths, StitchConfig};
use super::io;
use super::InputBundle;

/// One planar region: a vertical strip `x_min ≤ x < x_max` in reference
/// coordinates (it may extend past the image) and the homography taking
/// its reference points to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub homography: Homography,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// In occlusion order: where several planes reach the same target
    /// pixel, the first one is visible.
    pub planes: Vec<PlaneSpec>,
    pub matches_per_plane: usize,
    /// Gaussian noise on target match coordinates, in pixels.
    pub noise_sigma: f64,
    /// Share of the final match set that is random pairs.
    pub outlier_fraction: f64,
}

const PRESET_OFFSETS: [(f64, f64); 4] = [(20.0, 0.0), (0.0, 15.0), (-12.0, 8.0), (10.0, -10.0)];

impl SceneSpec {
    /// A camera panning right by a quarter of the width over `planes`
    /// side-by-side strips, each nudged by its own small translation.
    pub fn preset(planes: usize, width: usize, height: usize) -> Self {
        let n = planes.max(1);
        let w = width as f64;
        let mut bounds = vec![-w];
        bounds.extend((1..n).map(|i| (i as f64 * w / n as f64).round()));
        bounds.push(2.0 * w);
        let planes = (0..planes)
            .map(|k| {
                let (dx, dy) = PRESET_OFFSETS[k % PRESET_OFFSETS.len()];
                PlaneSpec {
                    x_min: bounds[k],
                    x_max: bounds[k + 1],
                    homography: Homography::translation(-(w / 4.0).round() + dx, dy),
                }
            })
            .collect();
        SceneSpec {
            width,
            height,
            planes,
            matches_per_plane: 300,
            noise_sigma: 0.5,
            outlier_fraction: 0.3,
        }
    }

    fn check(&self) -> Result<()> {
        if !(1..=4).contains(&self.planes.len()) {
            return Err(Error::Spec(format!("need 1 to 4 planes, got {}", self.planes.len())));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::Spec("images must be at least 2x2".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Spec("noise sigma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::Spec("outlier fraction must lie in [0, 1)".into()));
        }
        for (k, p) in self.planes.iter().enumerate() {
            if !(p.x_min < p.x_max) {
                return Err(Error::Spec(format!("plane {k} has an empty strip")));
            }
            for (j, q) in self.planes.iter().enumerate().skip(k + 1) {
                if p.x_min < q.x_max && q.x_min < p.x_max {
                    return Err(Error::Spec(format!("planes {k} and {j} overlap")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneTruth {
    pub ref_label: u8,
    pub tar_label: u8,
    pub homography: Homography,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub bundle: InputBundle,
    pub truth: Vec<PlaneTruth>,
}

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: [f64; 3],
}

/// Sum of randomly oriented sinusoids with wavelengths between 8 and 64 px.
struct Texture(Vec<Wave>);

impl Texture {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let waves = (0..12)
            .map(|_| {
                let wavelength = 8.0 * 8f64.powf(rng.random::<f64>());
                let dir = rng.random_range(0.0..std::f64::consts::TAU);
                let k = std::f64::consts::TAU / wavelength;
                Wave {
                    kx: k * dir.cos(),
                    ky: k * dir.sin(),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    amp: [0; 3].map(|_| rng.random_range(8.0..22.0)),
                }
            })
            .collect();
        Texture(waves)
    }

    fn color(&self, x: f64, y: f64, base: [f64; 3]) -> Rgb<u8> {
        let mut c = base;
        for w in &self.0 {
            let v = (w.kx * x + w.ky * y + w.phase).sin();
            for (ch, amp) in c.iter_mut().zip(w.amp) {
                *ch += amp * v;
            }
        }
        Rgb(c.map(|v| v.round().clamp(0.0, 255.0) as u8))
    }
}

fn plane_base(k: usize) -> [f64; 3] {
    let mut b = [118.0; 3];
    b[k % 3] += 24.0;
    b
}

const BACKGROUND_BASE: [f64; 3] = [60.0, 60.0, 60.0];
const BACKGROUND_SHIFT: f64 = 10_000.0;

/// Renders a planted scene: both images, exact label masks, noisy matches
/// with outliers, and a few straight segments per plane. Reference labels
/// are `1..=n` in plane order, target labels `n..=1`; 0 is background.
pub fn synth_scene(spec: &SceneSpec, seed: u64) -> Result<SynthScene> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texture = Texture::new(&mut rng);
    let (w, h) = (spec.width, spec.height);
    let n = spec.planes.len();
    let ref_label = |k: usize| (k + 1) as u8;
    let tar_label = |k: usize| (n - k) as u8;
    let inverses: Vec<Homography> = spec
        .planes
        .iter()
        .map(|p| p.homography.inverse())
        .collect::<Result<_>>()?;

    let mut reference = RgbImage::new(w as u32, h as u32);
    let mut ref_labels = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let hit = spec.planes.iter().position(|p| fx >= p.x_min && fx < p.x_max);
            let (label, px) = match hit {
                Some(k) => (ref_label(k), texture.color(fx, fy, plane_base(k))),
                None => (0, texture.color(fx + BACKGROUND_SHIFT, fy, BACKGROUND_BASE)),
            };
            ref_labels[y * w + x] = label;
            reference.put_pixel(x as u32, y as u32, px);
        }
    }

    // which plane is visible at a target point, and where it came from
    let visible = |x: f64, y: f64| -> Option<(usize, (f64, f64))> {
        spec.planes.iter().zip(&inverses).enumerate().find_map(|(k, (p, inv))| {
            let q = inv.apply(x, y);
            (q.0 >= p.x_min && q.0 < p.x_max).then_some((k, q))
        })
    };
    let mut target = RgbImage::new(w as u32, h as u32);
    let mut tar_labels = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let (label, px) = match visible(fx, fy) {
                Some((k, q)) => (tar_label(k), texture.color(q.0, q.1, plane_base(k))),
                None => (0, texture.color(fx + 2.0 * BACKGROUND_SHIFT, fy, BACKGROUND_BASE)),
            };
            tar_labels[y * w + x] = label;
            target.put_pixel(x as u32, y as u32, px);
        }
    }

    let (wf, hf) = ((w - 1) as f64, (h - 1) as f64);
    let in_image = |q: (f64, f64)| q.0 >= 0.0 && q.1 >= 0.0 && q.0 <= wf && q.1 <= hf;
    let shows = |q: (f64, f64), k: usize| {
        in_image(q) && tar_labels[q.1.round() as usize * w + q.0.round() as usize] == tar_label(k)
    };
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::Spec(e.to_string()))?;

    let mut pairs = Vec::new();
    let mut ref_lines = Vec::new();
    let mut tar_lines = Vec::new();
    for (k, plane) in spec.planes.iter().enumerate() {
        let x_lo = plane.x_min.max(0.0);
        let x_hi = plane.x_max.min(wf + 1.0);
        if x_lo >= x_hi {
            continue;
        }
        let mut found = 0;
        for _ in 0..50 * spec.matches_per_plane {
            if found == spec.matches_per_plane {
                break;
            }
            let p = (rng.random_range(x_lo..x_hi).min(wf), rng.random_range(0.0..=hf));
            let q = plane.homography.apply(p.0, p.1);
            if !shows(q, k) {
                continue;
            }
            let q = if spec.noise_sigma > 0.0 {
                (q.0 + noise.sample(&mut rng), q.1 + noise.sample(&mut rng))
            } else {
                q
            };
            if !in_image(q) {
                continue;
            }
            pairs.push(PointPair::new(p.0, p.1, q.0, q.1));
            found += 1;
        }

        // one horizontal segment per plane, and its visible image
        let y = (hf / 3.0 + 10.0 * k as f64).min(hf);
        let (a, b) = (x_lo + 8.0, x_hi.min(wf) - 8.0);
        if b - a >= 40.0 {
            ref_lines.push(LineSegment {
                x1: a,
                y1: y,
                x2: b,
                y2: y,
            });
            let steps = ((b - a) / 2.0).ceil() as usize;
            let seen: Vec<(f64, f64)> = (0..=steps)
                .map(|i| plane.homography.apply(a + (b - a) * i as f64 / steps as f64, y))
                .filter(|&q| shows(q, k))
                .collect();
            if let (Some(&s), Some(&e)) = (seen.first(), seen.last()) {
                if (e.0 - s.0).hypot(e.1 - s.1) >= 40.0 {
                    tar_lines.push(LineSegment {
                        x1: s.0,
                        y1: s.1,
                        x2: e.0,
                        y2: e.1,
                    });
                }
            }
        }
    }

    let f = spec.outlier_fraction;
    let outliers = (pairs.len() as f64 * f / (1.0 - f)).round() as usize;
    for _ in 0..outliers {
        pairs.push(PointPair::new(
            rng.random_range(0.0..=wf),
            rng.random_range(0.0..=hf),
            rng.random_range(0.0..=wf),
            rng.random_range(0.0..=hf),
        ));
    }
    pairs.shuffle(&mut rng);

    let truth = spec
        .planes
        .iter()
        .enumerate()
        .map(|(k, p)| PlaneTruth {
            ref_label: ref_label(k),
            tar_label: tar_label(k),
            homography: p.homography,
        })
        .collect();
    let bundle = InputBundle {
        reference,
        target,
        ref_mask: LabelMask::new(w, h, ref_labels)?,
        tar_mask: LabelMask::new(w, h, tar_labels)?,
        matches: MatchSet::new(pairs),
        ref_lines,
        tar_lines,
        config: StitchConfig {
            seed,
            ..Default::default()
        },
    };
    bundle.validate()?;
    Ok(SynthScene { bundle, truth })
}

/// Writes a fixture directory: images, masks, matches, lines, a config
/// naming them (relative paths) and `truth.txt` with the planted
/// homographies. Returns the config path.
pub fn write_scene(scene: &SynthScene, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let b = &scene.bundle;
    io::write_rgb(&dir.join("ref.png"), &b.reference)?;
    io::write_rgb(&dir.join("tar.png"), &b.target)?;
    io::write_mask(&dir.join("ref_mask.png"), &b.ref_mask)?;
    io::write_mask(&dir.join("tar_mask.png"), &b.tar_mask)?;
    io::write_matches(&dir.join("matches.txt"), &b.matches)?;
    io::write_lines(&dir.join("ref_lines.txt"), &b.ref_lines)?;
    io::write_lines(&dir.join("tar_lines.txt"), &b.tar_lines)?;

    let mut truth = String::from("# ref_label tar_label h11 h12 h13 h21 h22 h23 h31 h32 h33\n");
    for t in &scene.truth {
        let m = t.homography.matrix();
        let _ = write!(truth, "{} {}", t.ref_label, t.tar_label);
        for r in 0..3 {
            for c in 0..3 {
                let _ = write!(truth, " {}", m[(r, c)]);
            }
        }
        truth.push('\n');
    }
    io::write_text(&dir.join("truth.txt"), &truth)?;

    let cfg = ConfigFile {
        config: b.config.clone(),
        paths: InputPaths {
            reference: Some("ref.png".into()),
            target: Some("tar.png".into()),
            ref_mask: Some("ref_mask.png".into()),
            tar_mask: Some("tar_mask.png".into()),
            matches: Some("matches.txt".into()),
            ref_lines: Some("ref_lines.txt".into()),
            tar_lines: Some("tar_lines.txt".into()),
        },
    };
    let path = dir.join("config.txt");
    io::write_text(&path, &format_config(&cfg))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_plane(h: Homography) -> SceneSpec {
        SceneSpec {
            width: 64,
            height: 48,
            planes: vec![PlaneSpec {
                x_min: -100.0,
                x_max: 200.0,
                homography: h,
            }],
            matches_per_plane: 50,
            noise_sigma: 0.0,
            outlier_fraction: 0.0,
        }
    }

    #[test]
    fn identity_plane_gives_exact_matches() {
        let s = synth_scene(&one_plane(Homography::identity()), 3).unwrap();
        assert_eq!(s.bundle.matches.len(), 50);
        for m in &s.bundle.matches.pairs {
            assert_eq!((m.x1, m.y1), (m.x2, m.y2));
        }
        assert_eq!(s.bundle.reference, s.bundle.target);
        assert_eq!(s.bundle.ref_mask, s.bundle.tar_mask);
    }

    #[test]
    fn translated_plane_texture_is_consistent() {
        let s = synth_scene(&one_plane(Homography::translation(-5.0, -2.0)), 3).unwrap();
        let b = &s.bundle;
        for y in 0..40 {
            for x in 0..50 {
                assert_eq!(b.reference.get_pixel(x + 5, y + 2), b.target.get_pixel(x, y));
            }
        }
    }

    #[test]
    fn overlapping_strips_rejected() {
        let mut spec = SceneSpec::preset(2, 64, 48);
        spec.planes[1].x_min = spec.planes[0].x_max - 1.0;
        assert!(matches!(synth_scene(&spec, 0), Err(Error::Spec(_))));
        spec.planes.clear();
        assert!(matches!(synth_scene(&spec, 0), Err(Error::Spec(_))));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SceneSpec::preset(2, 96, 64);
        let a = synth_scene(&spec, 11).unwrap();
        assert_eq!(a, synth_scene(&spec, 11).unwrap());
        assert_ne!(a.bundle.matches, synth_scene(&spec, 12).unwrap().bundle.matches);
    }

    #[test]
    fn outlier_share_and_labels() {
        let spec = SceneSpec::preset(2, 160, 100);
        let s = synth_scene(&spec, 5).unwrap();
        let total = s.bundle.matches.len();
        let planted: usize = s
            .bundle
            .matches
            .pairs
            .iter()
            .filter(|m| {
                s.truth.iter().any(|t| {
                    let q = t.homography.apply(m.x1, m.y1);
                    (q.0 - m.x2).hypot(q.1 - m.y2) < 3.0
                })
            })
            .count();
        let share = 1.0 - planted as f64 / total as f64;
        assert!((share - 0.3).abs() < 0.05, "outlier share {share}");
        assert_eq!(s.truth[0].ref_label, 1);
        assert_eq!(s.truth[0].tar_label, 2);
        assert_eq!(
            s.bundle.ref_mask.present_labels().into_iter().collect::<Vec<_>>(),
            vec![1, 2]
        );
    }

    #[test]
    fn written_fixture_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let s = synth_scene(&SceneSpec::preset(2, 80, 60), 2).unwrap();
        let cfg = write_scene(&s, dir.path()).unwrap();
        let back = super::super::load_config_bundle(&cfg, InputPaths::default()).unwrap();
        assert_eq!(back, s.bundle);
    }
}
