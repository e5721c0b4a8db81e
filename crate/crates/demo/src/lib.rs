//! Browser bindings: build a synthetic multi-plane scene, stitch it with
//! region consensus or one global homography, and view the similarity
//! field or the solved meshes. Every view comes back as an RGBA buffer.

use image::{Rgb, RgbImage};
use wasm_bindgen::prelude::*;

use planestitch::compositor::draw_mesh;
use planestitch::field::render_field;
use planestitch::ingest::{synth_scene, InputBundle, SceneSpec};
use planestitch::pipeline::{run_stitch, StitchMode, StitchOptions, StitchOutput};

/// One rendered view.
#[wasm_bindgen]
pub struct Frame {
    width: u32,
    height: u32,
    rgba: Vec<u8>,
    summary: String,
}

#[wasm_bindgen]
impl Frame {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major RGBA, ready for `ImageData`.
    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

impl Frame {
    fn from_rgb(img: &RgbImage, summary: String) -> Frame {
        let rgba = img.pixels().flat_map(|p| [p[0], p[1], p[2], 255]).collect();
        Frame {
            width: img.width(),
            height: img.height(),
            rgba,
            summary,
        }
    }
}

/// A synthetic scene plus the last regional stitch of it.
#[wasm_bindgen]
pub struct Demo {
    bundle: InputBundle,
    regional: Option<StitchOutput>,
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    /// `planes` strips (1 to 4) over a `width`x`height` image, meshes of
    /// `mesh`x`mesh` cells.
    #[wasm_bindgen(constructor)]
    pub fn new(planes: usize, seed: u64, width: usize, height: usize, mesh: usize) -> Result<Demo, JsError> {
        let mut bundle = synth_scene(&SceneSpec::preset(planes, width, height), seed)
            .map_err(js_err)?
            .bundle;
        bundle.config.mesh_cols = mesh;
        bundle.config.mesh_rows = mesh;
        bundle.config.check().map_err(js_err)?;
        Ok(Demo { bundle, regional: None })
    }

    /// Side-by-side input pair.
    pub fn inputs(&self) -> Frame {
        let (a, b) = (&self.bundle.reference, &self.bundle.target);
        let gap = 8;
        let mut img = RgbImage::from_pixel(a.width() + gap + b.width(), a.height().max(b.height()), Rgb([0, 0, 0]));
        image::imageops::replace(&mut img, a, 0, 0);
        image::imageops::replace(&mut img, b, (a.width() + gap) as i64, 0);
        Frame::from_rgb(&img, format!("{} matches", self.bundle.matches.len()))
    }

    /// Mosaic from region consensus (`baseline = false`) or from a single
    /// global homography. The summary carries the overlap score.
    pub fn stitch(&mut self, baseline: bool) -> Result<Frame, JsError> {
        let options = StitchOptions {
            mode: if baseline {
                StitchMode::GlobalBaseline
            } else {
                StitchMode::Regional
            },
            ..Default::default()
        };
        let run = run_stitch(&self.bundle, &options);
        let out = run.outcome.map_err(js_err)?;
        let score = run.report.score.map_or("n/a".into(), |s| format!("{:.4}", s.rmse));
        let summary = format!(
            "{}: {} region pair(s){}, rmse_ncc {score}",
            if baseline {
                "global homography"
            } else {
                "region consensus"
            },
            run.report.correspondences.len(),
            if run.report.fallback { " (fallback)" } else { "" },
        );
        let frame = Frame::from_rgb(&out.mosaic, summary);
        if !baseline {
            self.regional = Some(out);
        }
        Ok(frame)
    }

    fn regional(&mut self) -> Result<&StitchOutput, JsError> {
        if self.regional.is_none() {
            self.stitch(false)?;
        }
        Ok(self.regional.as_ref().expect("set by stitch"))
    }

    /// Per-vertex similarity field of the target mesh: tick direction is
    /// the rotation, tick length the scale.
    pub fn field(&mut self) -> Result<Frame, JsError> {
        let out = self.regional()?;
        let art = &out.artifacts;
        let fields = art
            .fields
            .as_ref()
            .ok_or_else(|| JsError::new("no field in this run"))?;
        let stride = (art.meshes[1].cols / 25).max(1);
        let img = render_field(&art.meshes[1], &fields[1], stride);
        let which = if stride == 1 {
            "every vertex".to_string()
        } else {
            format!("every {stride}th vertex")
        };
        Ok(Frame::from_rgb(&img, format!("target field, {which}")))
    }

    /// The regional mosaic with both solved meshes drawn over it.
    pub fn mesh_overlay(&mut self) -> Result<Frame, JsError> {
        let out = self.regional()?;
        let art = &out.artifacts;
        let mut img = out.mosaic.clone();
        draw_mesh(&mut img, &art.meshes[0], &art.canvas, Rgb([0, 255, 128]));
        draw_mesh(&mut img, &art.meshes[1], &art.canvas, Rgb([255, 64, 64]));
        let folds = art.layers[0].skipped_triangles + art.layers[1].skipped_triangles;
        Ok(Frame::from_rgb(
            &img,
            format!("reference mesh green, target mesh red, {folds} folded triangle(s)"),
        ))
    }
}
