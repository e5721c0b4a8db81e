use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::compositor::BlendMode;
use crate::consensus::ConsensusParams;
use crate::error::Result;
use crate::geometry::RansacParams;
use crate::meshopt::EnergyWeights;

use super::io::{file_error, read_text};

/// Every tunable of a stitch run.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchConfig {
    pub lambda_a: f64,
    pub lambda_s: f64,
    pub lambda_l: f64,
    pub mesh_cols: usize,
    pub mesh_rows: usize,
    pub ransac_threshold: f64,
    pub ransac_iterations: usize,
    pub seed: u64,
    /// Moving DLT bandwidth in pixels; `None` means a tenth of the larger
    /// image side.
    pub sigma: Option<f64>,
    pub gamma: f64,
    pub min_matches: usize,
    pub min_inliers: usize,
    pub min_region_fraction: f64,
    pub blend: BlendMode,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig {
            lambda_a: 0.12,
            lambda_s: 0.08,
            lambda_l: 0.3,
            mesh_cols: 100,
            mesh_rows: 100,
            ransac_threshold: 3.0,
            ransac_iterations: 2000,
            seed: 0,
            sigma: None,
            gamma: 0.01,
            min_matches: 8,
            min_inliers: 12,
            min_region_fraction: 0.005,
            blend: BlendMode::Feather,
        }
    }
}

impl StitchConfig {
    /// Checks the documented ranges, returning the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        for (k, v) in [
            ("lambda_a", self.lambda_a),
            ("lambda_s", self.lambda_s),
            ("lambda_l", self.lambda_l),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{k} must be a finite value >= 0"));
            }
        }
        if self.mesh_cols < 2 || self.mesh_rows < 2 {
            return Err("mesh_cols and mesh_rows must be at least 2".into());
        }
        if !(self.ransac_threshold > 0.0 && self.ransac_threshold.is_finite()) {
            return Err("ransac_threshold must be > 0".into());
        }
        if self.ransac_iterations == 0 {
            return Err("ransac_iterations must be at least 1".into());
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err("sigma must be > 0".into());
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err("gamma must lie in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.min_region_fraction) {
            return Err("min_region_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn sigma_for(&self, width: usize, height: usize) -> f64 {
        self.sigma.unwrap_or(0.1 * width.max(height) as f64)
    }

    pub fn consensus(&self) -> ConsensusParams {
        ConsensusParams {
            ransac: RansacParams {
                threshold: self.ransac_threshold,
                iterations: self.ransac_iterations,
                seed: self.seed,
            },
            min_matches: self.min_matches,
            min_inliers: self.min_inliers,
            min_region_fraction: self.min_region_fraction,
        }
    }

    pub fn energy_weights(&self) -> EnergyWeights {
        EnergyWeights {
            alignment: self.lambda_a,
            local: self.lambda_s,
            line: self.lambda_l,
        }
    }
}

/// Input locations. Masks and line files are optional: a missing mask
/// means the whole image is one region, missing lines mean no line term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputPaths {
    pub reference: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub ref_mask: Option<PathBuf>,
    pub tar_mask: Option<PathBuf>,
    pub matches: Option<PathBuf>,
    pub ref_lines: Option<PathBuf>,
    pub tar_lines: Option<PathBuf>,
}

impl InputPaths {
    /// Fills unset entries from `other`.
    pub fn or(self, other: InputPaths) -> InputPaths {
        InputPaths {
            reference: self.reference.or(other.reference),
            target: self.target.or(other.target),
            ref_mask: self.ref_mask.or(other.ref_mask),
            tar_mask: self.tar_mask.or(other.tar_mask),
            matches: self.matches.or(other.matches),
            ref_lines: self.ref_lines.or(other.ref_lines),
            tar_lines: self.tar_lines.or(other.tar_lines),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub config: StitchConfig,
    pub paths: InputPaths,
}

/// Parses a flat `key = value` file. Relative paths are resolved against
/// `base` (normally the file's directory). Unknown and repeated keys are
/// rejected; missing keys keep their defaults.
pub fn parse_config(text: &str, path: &Path, base: &Path) -> Result<ConfigFile> {
    let mut out = ConfigFile::default();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| file_error(path, line, "expected 'key = value'"))?;
        if value.is_empty() {
            return Err(file_error(path, line, format!("missing value for '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(file_error(path, line, format!("'{key}' given twice")));
        }
        let bad = |what: &str| file_error(path, line, format!("{key}: '{value}' is not {what}"));
        let real = || value.parse::<f64>().map_err(|_| bad("a number"));
        let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let file = || Some(base.join(value));
        let c = &mut out.config;
        match key {
            "lambda_a" => c.lambda_a = real()?,
            "lambda_s" => c.lambda_s = real()?,
            "lambda_l" => c.lambda_l = real()?,
            "mesh_cols" => c.mesh_cols = count()?,
            "mesh_rows" => c.mesh_rows = count()?,
            "ransac_threshold" => c.ransac_threshold = real()?,
            "ransac_iterations" => c.ransac_iterations = count()?,
            "seed" => c.seed = value.parse().map_err(|_| bad("a non-negative integer"))?,
            "sigma" => c.sigma = Some(real()?),
            "gamma" => c.gamma = real()?,
            "min_matches" => c.min_matches = count()?,
            "min_inliers" => c.min_inliers = count()?,
            "min_region_fraction" => c.min_region_fraction = real()?,
            "blend" => c.blend = value.parse().map_err(|_| bad("'feather' or 'average'"))?,
            "ref" => out.paths.reference = file(),
            "tar" => out.paths.target = file(),
            "ref_mask" => out.paths.ref_mask = file(),
            "tar_mask" => out.paths.tar_mask = file(),
            "matches" => out.paths.matches = file(),
            "ref_lines" => out.paths.ref_lines = file(),
            "tar_lines" => out.paths.tar_lines = file(),
            _ => return Err(file_error(path, line, format!("unknown key '{key}'"))),
        }
        out.config.check().map_err(|msg| file_error(path, line, msg))?;
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&read_text(path)?, path, base)
}

/// Inverse of [`parse_config`]; paths are written as given.
pub fn format_config(cfg: &ConfigFile) -> String {
    let c = &cfg.config;
    let mut s = String::new();
    let _ = writeln!(s, "lambda_a = {}", c.lambda_a);
    let _ = writeln!(s, "lambda_s = {}", c.lambda_s);
    let _ = writeln!(s, "lambda_l = {}", c.lambda_l);
    let _ = writeln!(s, "mesh_cols = {}", c.mesh_cols);
    let _ = writeln!(s, "mesh_rows = {}", c.mesh_rows);
    let _ = writeln!(s, "ransac_threshold = {}", c.ransac_threshold);
    let _ = writeln!(s, "ransac_iterations = {}", c.ransac_iterations);
    let _ = writeln!(s, "seed = {}", c.seed);
    if let Some(sigma) = c.sigma {
        let _ = writeln!(s, "sigma = {sigma}");
    }
    let _ = writeln!(s, "gamma = {}", c.gamma);
    let _ = writeln!(s, "min_matches = {}", c.min_matches);
    let _ = writeln!(s, "min_inliers = {}", c.min_inliers);
    let _ = writeln!(s, "min_region_fraction = {}", c.min_region_fraction);
    let _ = writeln!(s, "blend = {}", c.blend);
    let p = &cfg.paths;
    for (k, v) in [
        ("ref", &p.reference),
        ("tar", &p.target),
        ("ref_mask", &p.ref_mask),
        ("tar_mask", &p.tar_mask),
        ("matches", &p.matches),
        ("ref_lines", &p.ref_lines),
        ("tar_lines", &p.tar_lines),
    ] {
        if let Some(v) = v {
            let _ = writeln!(s, "{k} = {}", v.display());
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn parse(text: &str) -> Result<ConfigFile> {
        parse_config(text, Path::new("c.txt"), Path::new("/data"))
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(parse("").unwrap(), ConfigFile::default());
    }

    #[test]
    fn single_override() {
        let c = parse("# weights\nlambda_a = 0.5\n").unwrap().config;
        assert_eq!(c.lambda_a, 0.5);
        assert_eq!(StitchConfig { lambda_a: 0.12, ..c }, StitchConfig::default());
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let err = parse("seed = 1\nlamda_a = 2\n").unwrap_err();
        assert!(matches!(err, Error::File { line: 2, .. }), "{err}");
    }

    #[test]
    fn range_checks() {
        assert!(parse("gamma = 0").is_err());
        assert!(parse("gamma = 1.5").is_err());
        assert!(parse("mesh_cols = 1").is_err());
        assert!(parse("lambda_l = -1").is_err());
        assert!(parse("sigma = 0").is_err());
        assert!(parse("mesh_rows = ten").is_err());
        assert!(parse("seed = 1\nseed = 2").is_err());
        assert!(parse("blend").is_err());
    }

    #[test]
    fn paths_resolved_against_base() {
        let c = parse("ref = a.png\nmatches = sub/m.txt").unwrap();
        assert_eq!(c.paths.reference, Some(PathBuf::from("/data/a.png")));
        assert_eq!(c.paths.matches, Some(PathBuf::from("/data/sub/m.txt")));
    }

    #[test]
    fn format_round_trip() {
        let cfg = ConfigFile {
            config: StitchConfig {
                lambda_s: 0.25,
                sigma: Some(12.5),
                blend: BlendMode::Average,
                seed: 99,
                ..Default::default()
            },
            paths: InputPaths {
                reference: Some("/x/r.png".into()),
                tar_lines: Some("/x/tl.txt".into()),
                ..Default::default()
            },
        };
        assert_eq!(parse(&format_config(&cfg)).unwrap(), cfg);
    }
}
