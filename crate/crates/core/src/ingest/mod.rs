//! Loading and validating stitch inputs, plus the synthetic scene
//! generator used by the tests and the `synth` subcommand.

mod config;
pub mod io;
mod synth;

use std::path::Path;

use image::RgbImage;

pub use config::{format_config, parse_config, read_config, ConfigFile, InputPaths, StitchConfig};
pub use synth::{synth_scene, write_scene, PlaneSpec, PlaneTruth, SceneSpec, SynthScene};

use crate::error::{Error, Result};
use crate::geometry::MatchSet;
use crate::meshopt::LineSegment;
use crate::segmetrics::LabelMask;

/// Everything one stitch run consumes. The reference is image A, the target
/// image B; matches map reference points `(x1, y1)` to target `(x2, y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBundle {
    pub reference: RgbImage,
    pub target: RgbImage,
    pub ref_mask: LabelMask,
    pub tar_mask: LabelMask,
    pub matches: MatchSet,
    pub ref_lines: Vec<LineSegment>,
    pub tar_lines: Vec<LineSegment>,
    pub config: StitchConfig,
}

fn inside(x: f64, y: f64, w: u32, h: u32) -> bool {
    x >= -0.5 && y >= -0.5 && x <= w as f64 - 0.5 && y <= h as f64 - 0.5
}

fn check_mask(mask: &LabelMask, img: &RgbImage, what: &str) -> Result<()> {
    if (mask.width(), mask.height()) != (img.width() as usize, img.height() as usize) {
        return Err(Error::input(format!(
            "{what} mask is {}x{} but its image is {}x{}",
            mask.width(),
            mask.height(),
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

impl InputBundle {
    /// Cross-file checks; `sources` maps records back to file lines.
    fn validate_with(&self, sources: &Sources) -> Result<()> {
        self.config.check().map_err(Error::Input)?;
        let (rw, rh) = self.reference.dimensions();
        let (tw, th) = self.target.dimensions();
        if rw < 2 || rh < 2 || tw < 2 || th < 2 {
            return Err(Error::input("images must be at least 2x2"));
        }
        check_mask(&self.ref_mask, &self.reference, "reference")?;
        check_mask(&self.tar_mask, &self.target, "target")?;
        for (k, m) in self.matches.pairs.iter().enumerate() {
            let msg = if !inside(m.x1, m.y1, rw, rh) {
                Some(format!(
                    "point ({}, {}) lies outside the {rw}x{rh} reference",
                    m.x1, m.y1
                ))
            } else if !inside(m.x2, m.y2, tw, th) {
                Some(format!("point ({}, {}) lies outside the {tw}x{th} target", m.x2, m.y2))
            } else {
                None
            };
            if let Some(msg) = msg {
                return Err(sources.matches.locate(k, msg, "match"));
            }
        }
        for (segs, src, (w, h), name) in [
            (&self.ref_lines, &sources.ref_lines, (rw, rh), "reference"),
            (&self.tar_lines, &sources.tar_lines, (tw, th), "target"),
        ] {
            for (k, l) in segs.iter().enumerate() {
                if !inside(l.x1, l.y1, w, h) || !inside(l.x2, l.y2, w, h) {
                    return Err(src.locate(k, format!("segment leaves the {w}x{h} {name} image"), "line"));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Sources::default())
    }
}

#[derive(Default)]
struct Source {
    path: Option<std::path::PathBuf>,
    lines: Vec<usize>,
}

impl Source {
    fn locate(&self, k: usize, msg: String, what: &str) -> Error {
        match &self.path {
            Some(p) => io::file_error(p, self.lines.get(k).copied().unwrap_or(0), msg),
            None => Error::input(format!("{what} {k}: {msg}")),
        }
    }
}

#[derive(Default)]
struct Sources {
    matches: Source,
    ref_lines: Source,
    tar_lines: Source,
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::input(format!("no {what} given")))
}

/// Reads and cross-validates a bundle.
pub fn load_inputs(paths: &InputPaths, config: StitchConfig) -> Result<InputBundle> {
    let reference = io::read_rgb(required(&paths.reference, "reference image")?)?;
    let target = io::read_rgb(required(&paths.target, "target image")?)?;
    let mask_or_single = |p: &Option<std::path::PathBuf>, img: &RgbImage| -> Result<LabelMask> {
        match p {
            Some(p) => io::read_mask(p),
            None => Ok(LabelMask::filled(img.width() as usize, img.height() as usize, 0)),
        }
    };
    let ref_mask = mask_or_single(&paths.ref_mask, &reference)?;
    let tar_mask = mask_or_single(&paths.tar_mask, &target)?;
    let match_path = required(&paths.matches, "match file")?;
    let (matches, match_lines) = io::read_matches(match_path)?;
    let read_lines = |p: &Option<std::path::PathBuf>| -> Result<(Vec<LineSegment>, Source)> {
        match p {
            Some(p) => {
                let (segs, lines) = io::read_lines(p)?;
                Ok((
                    segs,
                    Source {
                        path: Some(p.clone()),
                        lines,
                    },
                ))
            }
            None => Ok((Vec::new(), Source::default())),
        }
    };
    let (ref_lines, ref_src) = read_lines(&paths.ref_lines)?;
    let (tar_lines, tar_src) = read_lines(&paths.tar_lines)?;
    let bundle = InputBundle {
        reference,
        target,
        ref_mask,
        tar_mask,
        matches,
        ref_lines,
        tar_lines,
        config,
    };
    bundle.validate_with(&Sources {
        matches: Source {
            path: Some(match_path.to_path_buf()),
            lines: match_lines,
        },
        ref_lines: ref_src,
        tar_lines: tar_src,
    })?;
    Ok(bundle)
}

/// Loads a config file and the inputs it names.
pub fn load_config_bundle(config_path: &Path, overrides: InputPaths) -> Result<InputBundle> {
    let cfg = read_config(config_path)?;
    load_inputs(&overrides.or(cfg.paths), cfg.config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointPair;
    use image::Rgb;

    fn fixture(dir: &Path, matches: &str) -> InputPaths {
        let img = RgbImage::from_pixel(40, 30, Rgb([10, 20, 30]));
        io::write_rgb(&dir.join("r.png"), &img).unwrap();
        io::write_rgb(&dir.join("t.png"), &img).unwrap();
        let mask = LabelMask::filled(40, 30, 1);
        io::write_mask(&dir.join("rm.png"), &mask).unwrap();
        io::write_mask(&dir.join("tm.png"), &mask).unwrap();
        io::write_text(&dir.join("m.txt"), matches).unwrap();
        InputPaths {
            reference: Some(dir.join("r.png")),
            target: Some(dir.join("t.png")),
            ref_mask: Some(dir.join("rm.png")),
            tar_mask: Some(dir.join("tm.png")),
            matches: Some(dir.join("m.txt")),
            ..Default::default()
        }
    }

    #[test]
    fn minimal_bundle_loads_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let paths = fixture(dir.path(), "1 2 3 4\n");
        let b = load_inputs(&paths, StitchConfig::default()).unwrap();
        assert_eq!(b.config, StitchConfig::default());
        assert_eq!(b.matches.pairs, vec![PointPair::new(1.0, 2.0, 3.0, 4.0)]);
        assert!(b.ref_lines.is_empty());
    }

    #[test]
    fn out_of_bounds_match_cites_line() {
        let dir = tempfile::tempdir().unwrap();
        let paths = fixture(dir.path(), "# c\n1 2 3 4\n45 2 3 4\n");
        let err = load_inputs(&paths, StitchConfig::default()).unwrap_err();
        match err {
            Error::File { line, path, .. } => {
                assert_eq!(line, 3);
                assert!(path.ends_with("m.txt"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn mask_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let paths = fixture(dir.path(), "");
        io::write_mask(&dir.path().join("tm.png"), &LabelMask::filled(41, 30, 1)).unwrap();
        assert!(matches!(
            load_inputs(&paths, StitchConfig::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn config_bundle_with_override() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), "1 1 1 1\n");
        let cfg = "lambda_a = 0.5\nref = r.png\ntar = t.png\nmatches = m.txt\n";
        io::write_text(&dir.path().join("c.txt"), cfg).unwrap();
        let b = load_config_bundle(&dir.path().join("c.txt"), InputPaths::default()).unwrap();
        assert_eq!(b.config.lambda_a, 0.5);
        assert_eq!(b.config.lambda_s, 0.08);
        assert_eq!(b.ref_mask, LabelMask::filled(40, 30, 0));
    }

    #[test]
    fn missing_file_is_io_error() {
        let paths = InputPaths {
            reference: Some("/nonexistent/r.png".into()),
            ..Default::default()
        };
        assert!(load_inputs(&paths, StitchConfig::default()).is_err());
    }
}
