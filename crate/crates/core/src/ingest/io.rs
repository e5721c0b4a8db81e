//! Readers and writers for every on-disk format. Text formats are
//! whitespace-separated numbers, one record per line, `#` starts a comment.
//! Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::{MatchSet, PointPair};
use crate::mesh::WarpMesh;
use crate::meshopt::LineSegment;
use crate::segmetrics::LabelMask;

pub(crate) fn file_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::File {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Any 8-bit PNG, converted to RGB.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    Ok(open_image(path)?.to_rgb8())
}

pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// 8-bit single-channel PNG whose pixel values are region ids.
pub fn read_mask(path: &Path) -> Result<LabelMask> {
    match open_image(path)? {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            LabelMask::new(w, h, g.into_raw())
        }
        other => Err(file_error(
            path,
            0,
            format!("label mask must be 8-bit single-channel, found {:?}", other.color()),
        )),
    }
}

pub fn write_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, mask.labels().to_vec())
        .expect("mask buffer matches its size");
    write_gray(path, &img)
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn parse_numbers<const N: usize>(body: &str, path: &Path, line: usize) -> Result<[f64; N]> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.len() != N {
        return Err(file_error(
            path,
            line,
            format!("expected {N} numbers, found {}", toks.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(&toks) {
        *o = t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| file_error(path, line, format!("'{t}' is not a finite number")))?;
    }
    Ok(out)
}

/// `x1 y1 x2 y2` records. `path` is only used in diagnostics.
pub fn parse_quads(text: &str, path: &Path) -> Result<Vec<(usize, [f64; 4])>> {
    records(text)
        .map(|(line, body)| parse_numbers::<4>(body, path, line).map(|v| (line, v)))
        .collect()
}

pub fn parse_matches(text: &str, path: &Path) -> Result<(MatchSet, Vec<usize>)> {
    let quads = parse_quads(text, path)?;
    let lines = quads.iter().map(|q| q.0).collect();
    let set = quads
        .into_iter()
        .map(|(_, [a, b, c, d])| PointPair::new(a, b, c, d))
        .collect();
    Ok((set, lines))
}

pub fn format_matches(m: &MatchSet) -> String {
    let mut s = String::from("# x1 y1 x2 y2\n");
    for p in &m.pairs {
        let _ = writeln!(s, "{} {} {} {}", p.x1, p.y1, p.x2, p.y2);
    }
    s
}

pub fn read_matches(path: &Path) -> Result<(MatchSet, Vec<usize>)> {
    parse_matches(&read_text(path)?, path)
}

pub fn write_matches(path: &Path, m: &MatchSet) -> Result<()> {
    write_text(path, &format_matches(m))
}

pub fn parse_lines(text: &str, path: &Path) -> Result<(Vec<LineSegment>, Vec<usize>)> {
    let quads = parse_quads(text, path)?;
    let lines = quads.iter().map(|q| q.0).collect();
    let segs = quads
        .into_iter()
        .map(|(_, [x1, y1, x2, y2])| LineSegment { x1, y1, x2, y2 })
        .collect();
    Ok((segs, lines))
}

pub fn format_lines(segs: &[LineSegment]) -> String {
    let mut s = String::from("# x1 y1 x2 y2\n");
    for l in segs {
        let _ = writeln!(s, "{} {} {} {}", l.x1, l.y1, l.x2, l.y2);
    }
    s
}

pub fn read_lines(path: &Path) -> Result<(Vec<LineSegment>, Vec<usize>)> {
    parse_lines(&read_text(path)?, path)
}

pub fn write_lines(path: &Path, segs: &[LineSegment]) -> Result<()> {
    write_text(path, &format_lines(segs))
}

/// Mesh dump: a `mesh cols rows width height` header, then one line per
/// vertex row holding `x y` pairs of the deformed positions.
pub fn format_mesh(mesh: &WarpMesh) -> String {
    let mut s = format!("mesh {} {} {} {}\n", mesh.cols, mesh.rows, mesh.width, mesh.height);
    for j in 0..=mesh.rows {
        let row: Vec<String> = (0..=mesh.cols)
            .map(|i| {
                let (x, y) = mesh.deformed[mesh.vertex(i, j)];
                format!("{x} {y}")
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<WarpMesh> {
    let mut recs = records(text);
    let (hline, header) = recs.next().ok_or_else(|| file_error(path, 1, "empty mesh dump"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let dims: Vec<usize> = toks
        .get(1..)
        .unwrap_or(&[])
        .iter()
        .filter_map(|t| t.parse().ok())
        .collect();
    if toks.first() != Some(&"mesh") || toks.len() != 5 || dims.len() != 4 {
        return Err(file_error(
            path,
            hline,
            "expected 'mesh <cols> <rows> <width> <height>'",
        ));
    }
    let mut mesh =
        WarpMesh::new(dims[2], dims[3], dims[0], dims[1]).map_err(|e| file_error(path, hline, e.to_string()))?;
    let mut j = 0;
    for (line, body) in recs {
        if j > mesh.rows {
            return Err(file_error(path, line, "more vertex rows than the header declares"));
        }
        let vals: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| file_error(path, line, "non-numeric vertex coordinate"))?;
        if vals.len() != 2 * (mesh.cols + 1) {
            return Err(file_error(
                path,
                line,
                format!("expected {} numbers, found {}", 2 * (mesh.cols + 1), vals.len()),
            ));
        }
        for i in 0..=mesh.cols {
            let v = mesh.vertex(i, j);
            mesh.deformed[v] = (vals[2 * i], vals[2 * i + 1]);
        }
        j += 1;
    }
    if j != mesh.rows + 1 {
        return Err(file_error(
            path,
            hline,
            format!("expected {} vertex rows, found {j}", mesh.rows + 1),
        ));
    }
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> Result<WarpMesh> {
    parse_mesh(&read_text(path)?, path)
}

pub fn write_mesh(path: &Path, mesh: &WarpMesh) -> Result<()> {
    write_text(path, &format_mesh(mesh))
}
