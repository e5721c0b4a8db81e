//! End-to-end stitching: consensus, densification, fields, mesh solve,
//! compositing and scoring, with a plain-text report of every run.

use std::fmt::Write as _;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::compositor::{blend, compute_canvas, draw_mesh, mask_image, warp_image, Canvas, WarpedLayer};
use crate::consensus::{global_correspondence, group_matches_by_region, regional_ransac, RegionCorrespondence};
use crate::error::{Error, Result};
use crate::evalmetrics::{rmse_ncc, OverlapScore};
use crate::field::{anchors_for, densify, render_field, DenseCorrespondence, DensifyParams, Side, SimilarityField};
use crate::geometry::Homography;
use crate::ingest::{io, InputBundle};
use crate::mesh::WarpMesh;
use crate::meshopt::{assemble, pack, solve, unpack, EnergyInputs};
use crate::raster::{draw_dot, draw_line, label_color};
use crate::segmetrics::LabelMask;
use crate::sparse::CgParams;

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    fn lap(&mut self) -> f64 {
        let t = self.0.elapsed().as_secs_f64();
        self.0 = std::time::Instant::now();
        t
    }
}

// no monotonic clock in the browser sandbox without extra bindings
#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }

    fn lap(&mut self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StitchMode {
    /// Region consensus plus mesh optimization.
    #[default]
    Regional,
    /// One global homography applied to the target mesh, no optimization.
    GlobalBaseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSummary {
    pub region_a: u8,
    pub region_b: u8,
    pub inliers: usize,
    pub scale: f64,
    pub angle: f64,
    pub tx: f64,
    pub ty: f64,
}

/// Outcome of one run, filled in as far as the pipeline got.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineReport {
    pub mode: StitchMode,
    /// Stage name and wall time in seconds.
    pub timings: Vec<(&'static str, f64)>,
    pub fallback: bool,
    pub correspondences: Vec<CorrespondenceSummary>,
    pub dense_pairs: usize,
    pub dropped_matches: usize,
    pub energy_before: Option<f64>,
    pub energy_after: Option<f64>,
    pub solver_iterations: Option<usize>,
    pub canvas: Option<(usize, usize)>,
    pub skipped_triangles: [usize; 2],
    pub score: Option<OverlapScore>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl PipelineReport {
    /// Deterministic `key=value` lines. Timings are left to [`log`](Self::log)
    /// so that repeated runs give identical reports.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("status", if self.error.is_some() { "error" } else { "ok" }.into());
        kv(
            "mode",
            match self.mode {
                StitchMode::Regional => "regional",
                StitchMode::GlobalBaseline => "global_baseline",
            }
            .into(),
        );
        kv("fallback", self.fallback.to_string());
        kv("correspondences", self.correspondences.len().to_string());
        for (k, c) in self.correspondences.iter().enumerate() {
            kv(&format!("corr.{k}.region_a"), c.region_a.to_string());
            kv(&format!("corr.{k}.region_b"), c.region_b.to_string());
            kv(&format!("corr.{k}.inliers"), c.inliers.to_string());
            kv(&format!("corr.{k}.scale"), c.scale.to_string());
            kv(&format!("corr.{k}.angle"), c.angle.to_string());
            kv(&format!("corr.{k}.tx"), c.tx.to_string());
            kv(&format!("corr.{k}.ty"), c.ty.to_string());
        }
        kv("dense_pairs", self.dense_pairs.to_string());
        kv("dropped_matches", self.dropped_matches.to_string());
        kv("energy_before", opt(&self.energy_before));
        kv("energy_after", opt(&self.energy_after));
        kv("solver_iterations", opt(&self.solver_iterations));
        kv("canvas", opt(&self.canvas.map(|(w, h)| format!("{w}x{h}"))));
        kv("skipped_triangles_ref", self.skipped_triangles[0].to_string());
        kv("skipped_triangles_tar", self.skipped_triangles[1].to_string());
        kv("rmse_ncc", opt(&self.score.map(|s| s.rmse)));
        kv("rmse_ncc_x100", opt(&self.score.map(|s| s.scaled())));
        kv("evaluated", opt(&self.score.map(|s| s.evaluated)));
        kv("skipped", opt(&self.score.map(|s| s.skipped)));
        kv("warnings", self.warnings.len().to_string());
        for (k, w) in self.warnings.iter().enumerate() {
            kv(&format!("warning.{k}"), w.clone());
        }
        if let Some(e) = &self.error {
            kv("error", e.replace('\n', " "));
        }
        s
    }

    /// Human-readable summary including timings.
    pub fn log(&self) -> String {
        let mut s = String::new();
        for (stage, t) in &self.timings {
            let _ = writeln!(s, "[{stage:>10}] {:8.3} s", t);
        }
        if self.fallback {
            let _ = writeln!(s, "regional consensus failed; used one global homography");
        }
        for c in &self.correspondences {
            let _ = writeln!(
                s,
                "region {} <-> {}: {} inliers, scale {:.4}, angle {:.3} deg",
                c.region_a,
                c.region_b,
                c.inliers,
                c.scale,
                c.angle.to_degrees()
            );
        }
        if let (Some(b), Some(a)) = (self.energy_before, self.energy_after) {
            let _ = writeln!(
                s,
                "energy {b:.6e} -> {a:.6e} in {} iterations",
                opt(&self.solver_iterations)
            );
        }
        if let Some(sc) = self.score {
            let _ = writeln!(
                s,
                "rmse_ncc {:.6} (x100: {:.3}) over {} pixels, {} skipped",
                sc.rmse,
                sc.scaled(),
                sc.evaluated,
                sc.skipped
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        s
    }
}

/// Intermediate products kept for inspection and dumps.
#[derive(Debug, Clone)]
pub struct StitchArtifacts {
    pub correspondences: Vec<RegionCorrespondence>,
    pub dense: Vec<DenseCorrespondence>,
    pub fields: Option<[SimilarityField; 2]>,
    pub meshes: [WarpMesh; 2],
    pub canvas: Canvas,
    pub layers: [WarpedLayer; 2],
}

#[derive(Debug, Clone)]
pub struct StitchOutput {
    pub mosaic: RgbImage,
    pub overlap: Vec<bool>,
    pub artifacts: StitchArtifacts,
}

#[derive(Debug)]
pub struct StitchRun {
    pub report: PipelineReport,
    pub outcome: Result<StitchOutput>,
}

#[derive(Debug, Clone, Default)]
pub struct StitchOptions {
    pub mode: StitchMode,
    pub solver: CgParams,
}

/// Runs the whole pipeline. The report is filled in whether or not the
/// run succeeds.
pub fn run_stitch(bundle: &InputBundle, options: &StitchOptions) -> StitchRun {
    let mut report = PipelineReport {
        mode: options.mode,
        ..Default::default()
    };
    let outcome = match options.mode {
        StitchMode::Regional => regional(bundle, options, &mut report),
        StitchMode::GlobalBaseline => baseline(bundle, &mut report),
    };
    if let Err(e) = &outcome {
        report.error = Some(e.to_string());
    }
    StitchRun { report, outcome }
}

fn summarize(c: &RegionCorrespondence) -> CorrespondenceSummary {
    CorrespondenceSummary {
        region_a: c.region_a,
        region_b: c.region_b,
        inliers: c.inliers.len(),
        scale: c.similarity.scale(),
        angle: c.similarity.angle(),
        tx: c.similarity.tx,
        ty: c.similarity.ty,
    }
}

/// Pixels of one image whose image under `h` lands on `label` in the other
/// image's mask. Points that reach the other frame on a different region
/// are occluded there and give no usable correspondence.
fn overlap_under(h: &Homography, w: usize, ht: usize, other: &LabelMask, label: u8) -> Vec<bool> {
    (0..w * ht)
        .map(|i| {
            let (x, y) = h.apply((i % w) as f64, (i / w) as f64);
            other.at(x, y) == Some(label)
        })
        .collect()
}

fn consensus_stage(bundle: &InputBundle, report: &mut PipelineReport) -> Result<Vec<RegionCorrespondence>> {
    let params = bundle.config.consensus();
    let mut candidates = group_matches_by_region(&bundle.matches, &bundle.ref_mask, &bundle.tar_mask, &params);
    match regional_ransac(&mut candidates, &params) {
        Ok(c) => Ok(c),
        Err(e) => {
            report.fallback = true;
            report.warnings.push(format!("fallback to global homography: {e}"));
            global_correspondence(&bundle.matches, &params).map(|c| vec![c])
        }
    }
}

fn regional(bundle: &InputBundle, options: &StitchOptions, report: &mut PipelineReport) -> Result<StitchOutput> {
    let cfg = &bundle.config;
    let (rw, rh) = (bundle.reference.width() as usize, bundle.reference.height() as usize);
    let (tw, th) = (bundle.target.width() as usize, bundle.target.height() as usize);
    let mut clock = Stopwatch::start();

    let corrs = consensus_stage(bundle, report).map_err(|e| e.at_stage("consensus"))?;
    report.correspondences = corrs.iter().map(summarize).collect();
    report.timings.push(("consensus", clock.lap()));

    // the fallback correspondence spans whole images
    let (ref_mask, tar_mask) = if report.fallback {
        (LabelMask::filled(rw, rh, 0), LabelMask::filled(tw, th, 0))
    } else {
        (bundle.ref_mask.clone(), bundle.tar_mask.clone())
    };

    let mut mesh_ref = WarpMesh::new(rw, rh, cfg.mesh_cols, cfg.mesh_rows).map_err(|e| e.at_stage("mesh"))?;
    let mut mesh_tar = WarpMesh::new(tw, th, cfg.mesh_cols, cfg.mesh_rows).map_err(|e| e.at_stage("mesh"))?;

    let mut dense = Vec::new();
    let params_a = DensifyParams {
        sigma: cfg.sigma_for(rw, rh),
        gamma: cfg.gamma,
    };
    let params_b = DensifyParams {
        sigma: cfg.sigma_for(tw, th),
        gamma: cfg.gamma,
    };
    for c in &corrs {
        let inv = c.homography.inverse().map_err(|e| e.at_stage("densify"))?;
        let ov_a = overlap_under(&c.homography, rw, rh, &tar_mask, c.region_b);
        let ov_b = overlap_under(&inv, tw, th, &ref_mask, c.region_a);
        for (mesh, side, mask, ov, p) in [
            (&mesh_ref, Side::A, &ref_mask, &ov_a, &params_a),
            (&mesh_tar, Side::B, &tar_mask, &ov_b, &params_b),
        ] {
            match densify(mesh, c, side, mask, ov, p) {
                Ok(d) => dense.push(d),
                Err(e) => report.warnings.push(format!(
                    "densify {}<->{} side {:?} skipped: {e}",
                    c.region_a, c.region_b, side
                )),
            }
        }
    }
    report.dense_pairs = dense.iter().map(|d| d.len()).sum();
    report.timings.push(("densify", clock.lap()));

    let field_ref = SimilarityField::identity(&mesh_ref);
    let field_tar = crate::field::similarity_field(&mesh_tar, &anchors_for(&corrs, Side::B), &tar_mask)
        .map_err(|e| e.at_stage("field"))?;
    report.timings.push(("field", clock.lap()));

    let system = assemble(&EnergyInputs {
        meshes: [&mesh_ref, &mesh_tar],
        dense: &dense,
        fields: [&field_ref, &field_tar],
        lines: [&bundle.ref_lines, &bundle.tar_lines],
        weights: cfg.energy_weights(),
    })
    .map_err(|e| e.at_stage("assembly"))?;
    report.dropped_matches = system.dropped_matches;
    report.timings.push(("assembly", clock.lap()));

    // start the target from the strongest pair's homography
    let main = corrs
        .iter()
        .max_by_key(|c| c.inliers.len())
        .expect("consensus is non-empty");
    let inv = main.homography.inverse().map_err(|e| e.at_stage("solver"))?;
    mesh_tar.deform_with(|x, y| inv.apply(x, y));
    let x0 = pack(&[&mesh_ref, &mesh_tar]);
    let (x, solved) = solve(&system, &x0, &options.solver).map_err(|e| e.at_stage("solver"))?;
    unpack(&x, &mut [&mut mesh_ref, &mut mesh_tar]);
    report.energy_before = Some(solved.objective_before);
    report.energy_after = Some(solved.objective_after);
    report.solver_iterations = Some(solved.iterations);
    report.timings.push(("solver", clock.lap()));

    let mut out = composite(bundle, mesh_ref, mesh_tar, report, &mut clock)?;
    out.artifacts.correspondences = corrs;
    out.artifacts.dense = dense;
    out.artifacts.fields = Some([field_ref, field_tar]);
    Ok(out)
}

fn baseline(bundle: &InputBundle, report: &mut PipelineReport) -> Result<StitchOutput> {
    let cfg = &bundle.config;
    let mut clock = Stopwatch::start();
    let corr = global_correspondence(&bundle.matches, &cfg.consensus()).map_err(|e| e.at_stage("consensus"))?;
    report.correspondences = vec![summarize(&corr)];
    report.timings.push(("consensus", clock.lap()));

    let (rw, rh) = bundle.reference.dimensions();
    let (tw, th) = bundle.target.dimensions();
    let mesh_ref = WarpMesh::new(rw as usize, rh as usize, cfg.mesh_cols, cfg.mesh_rows)?;
    let mut mesh_tar = WarpMesh::new(tw as usize, th as usize, cfg.mesh_cols, cfg.mesh_rows)?;
    let inv = corr.homography.inverse().map_err(|e| e.at_stage("consensus"))?;
    mesh_tar.deform_with(|x, y| inv.apply(x, y));

    let mut out = composite(bundle, mesh_ref, mesh_tar, report, &mut clock)?;
    out.artifacts.correspondences = vec![corr];
    Ok(out)
}

fn composite(
    bundle: &InputBundle,
    mesh_ref: WarpMesh,
    mesh_tar: WarpMesh,
    report: &mut PipelineReport,
    clock: &mut Stopwatch,
) -> Result<StitchOutput> {
    let canvas = compute_canvas(&[&mesh_ref, &mesh_tar]).map_err(|e| e.at_stage("composite"))?;
    let layer_ref = warp_image(&bundle.reference, &mesh_ref, &canvas).map_err(|e| e.at_stage("composite"))?;
    let layer_tar = warp_image(&bundle.target, &mesh_tar, &canvas).map_err(|e| e.at_stage("composite"))?;
    report.canvas = Some((canvas.width, canvas.height));
    report.skipped_triangles = [layer_ref.skipped_triangles, layer_tar.skipped_triangles];
    for (name, n) in [
        ("reference", layer_ref.skipped_triangles),
        ("target", layer_tar.skipped_triangles),
    ] {
        if n > 0 {
            report
                .warnings
                .push(format!("{n} folded triangles skipped in the {name} mesh"));
        }
    }
    let mosaic = blend(&layer_ref, &layer_tar, bundle.config.blend).map_err(|e| e.at_stage("composite"))?;
    report.timings.push(("composite", clock.lap()));

    match rmse_ncc(&layer_ref.image, &layer_tar.image, &mosaic.overlap) {
        Ok(s) => report.score = Some(s),
        Err(e) => report.warnings.push(format!("no overlap score: {e}")),
    }
    report.timings.push(("score", clock.lap()));

    Ok(StitchOutput {
        mosaic: mosaic.image,
        overlap: mosaic.overlap,
        artifacts: StitchArtifacts {
            correspondences: Vec::new(),
            dense: Vec::new(),
            fields: None,
            meshes: [mesh_ref, mesh_tar],
            canvas,
            layers: [layer_ref, layer_tar],
        },
    })
}

fn tint(img: &RgbImage, mask: &LabelMask, highlight: u8) -> RgbImage {
    let mut out = img.clone();
    for (i, p) in out.pixels_mut().enumerate() {
        let l = mask.labels()[i];
        let (c, a) = if l == highlight {
            (label_color(l), 0.55)
        } else {
            (Rgb([0, 0, 0]), 0.5)
        };
        for ch in 0..3 {
            p[ch] = (p[ch] as f64 * (1.0 - a) + c[ch] as f64 * a).round() as u8;
        }
    }
    out
}

fn side_by_side(a: &RgbImage, b: &RgbImage) -> RgbImage {
    let mut out = RgbImage::new(a.width() + b.width(), a.height().max(b.height()));
    image::imageops::replace(&mut out, a, 0, 0);
    image::imageops::replace(&mut out, b, a.width() as i64, 0);
    out
}

/// Writes region overlays, field displays, dense-correspondence plots,
/// mesh dumps, warped layers and coverage masks into `dir`.
pub fn dump_intermediates(dir: &Path, bundle: &InputBundle, out: &StitchOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let art = &out.artifacts;
    let offset = bundle.reference.width() as f64;
    for (k, c) in art.correspondences.iter().enumerate() {
        let mut img = side_by_side(
            &tint(&bundle.reference, &bundle.ref_mask, c.region_a),
            &tint(&bundle.target, &bundle.tar_mask, c.region_b),
        );
        for p in c.inliers.pairs.iter().step_by(3) {
            draw_line(&mut img, (p.x1, p.y1), (p.x2 + offset, p.y2), Rgb([255, 255, 0]));
        }
        io::write_rgb(&dir.join(format!("regions_{k}.png")), &img)?;
    }
    if let Some([fr, ft]) = &art.fields {
        let stride = (art.meshes[0].cols / 25).max(1);
        io::write_rgb(&dir.join("field_ref.png"), &render_field(&art.meshes[0], fr, stride))?;
        io::write_rgb(&dir.join("field_tar.png"), &render_field(&art.meshes[1], ft, stride))?;
    }
    if !art.dense.is_empty() {
        let mut img = side_by_side(&bundle.reference, &bundle.target);
        for d in &art.dense {
            let (mesh, shift) = match d.side {
                Side::A => (&art.meshes[0], 0.0),
                Side::B => (&art.meshes[1], offset),
            };
            let color = label_color(d.region_a.wrapping_mul(7).wrapping_add(d.region_b));
            for &(v, _) in &d.pairs {
                let (x, y) = mesh.rest[v];
                draw_dot(&mut img, (x + shift, y), 1, color);
            }
        }
        io::write_rgb(&dir.join("dense.png"), &img)?;
    }
    io::write_mesh(&dir.join("mesh_ref.txt"), &art.meshes[0])?;
    io::write_mesh(&dir.join("mesh_tar.txt"), &art.meshes[1])?;
    let mut overlay = out.mosaic.clone();
    draw_mesh(&mut overlay, &art.meshes[0], &art.canvas, Rgb([0, 255, 128]));
    draw_mesh(&mut overlay, &art.meshes[1], &art.canvas, Rgb([255, 64, 64]));
    io::write_rgb(&dir.join("meshes.png"), &overlay)?;
    let (w, h) = (art.canvas.width, art.canvas.height);
    for (name, layer) in [("ref", &art.layers[0]), ("tar", &art.layers[1])] {
        io::write_rgb(&dir.join(format!("warped_{name}.png")), &layer.image)?;
        io::write_gray(
            &dir.join(format!("coverage_{name}.png")),
            &mask_image(w, h, &layer.coverage),
        )?;
    }
    io::write_gray(&dir.join("overlap.png"), &mask_image(w, h, &out.overlap))?;
    Ok(())
}
