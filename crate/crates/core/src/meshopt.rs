//! Quadratic mesh energy over the meshes of both images.
//!
//! The unknowns are the deformed `(x, y)` of every vertex of every mesh.
//! Each energy term contributes linear residual rows already scaled by the
//! square root of its weight, so the objective is a plain sum of squares:
//!
//! - alignment: `ṽ_m − φ(q)` for every dense correspondence, `φ(q)` being
//!   the bilinear combination of the other mesh's cell around `q`;
//! - regional similarity: `c(e) − c(v_j)` and `s(e) − s(v_j)` per grid
//!   edge, with `c(e)`, `s(e)` linear in the deformed edge vector;
//! - local similarity: `ẽ − S e` per edge, `S` the least-squares
//!   similarity of the cells adjacent to the edge;
//! - line preservation: `φ(l_k) − ((1 − a) φ(l_u) + a φ(l_v))` per sample;
//! - gauge: the reference mesh centroid held at its rest position.

use crate::error::{Error, Result};
use crate::field::{DenseCorrespondence, Side, SimilarityField};
use crate::mesh::WarpMesh;
use crate::sparse::{solve_least_squares, CgParams, SparseRows};

pub const GAUGE_WEIGHT: f64 = 1e3;
/// Spacing of line samples, in pixels.
pub const LINE_SAMPLE_SPACING: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWeights {
    pub alignment: f64,
    pub local: f64,
    pub line: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights {
            alignment: 0.12,
            local: 0.08,
            line: 0.3,
        }
    }
}

/// Bilinear weights of `p` in an axis-aligned rest cell with corners
/// top-left, top-right, bottom-left, bottom-right.
pub fn bilinear_coeffs(p: (f64, f64), corners: [(f64, f64); 4]) -> Result<[f64; 4]> {
    let (x0, y0) = corners[0];
    let (x1, y1) = corners[3];
    let (w, h) = (x1 - x0, y1 - y0);
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::input("degenerate cell"));
    }
    let u = (p.0 - x0) / w;
    let v = (p.1 - y0) / h;
    let tol = 1e-9;
    if !(u >= -tol && u <= 1.0 + tol && v >= -tol && v <= 1.0 + tol) {
        return Err(Error::input(format!("point ({}, {}) lies outside the cell", p.0, p.1)));
    }
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    Ok([(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v])
}

/// `c(e)` and `s(e)` as linear forms in the deformed edge vector `ẽ`:
/// `c = coeff_c · ẽ`, `s = coeff_s · ẽ`. With `S = [[c, s], [-s, c]]`,
/// `S e = ẽ` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSimilarity {
    pub coeff_c: [f64; 2],
    pub coeff_s: [f64; 2],
}

pub fn edge_similarity_rows(e: (f64, f64)) -> Result<EdgeSimilarity> {
    let n2 = e.0 * e.0 + e.1 * e.1;
    if !(n2 > 0.0) {
        return Err(Error::Assembly("zero-length edge".into()));
    }
    Ok(EdgeSimilarity {
        coeff_c: [e.0 / n2, e.1 / n2],
        coeff_s: [e.1 / n2, -e.0 / n2],
    })
}

impl EdgeSimilarity {
    pub fn eval(&self, et: (f64, f64)) -> (f64, f64) {
        (
            self.coeff_c[0] * et.0 + self.coeff_c[1] * et.1,
            self.coeff_s[0] * et.0 + self.coeff_s[1] * et.1,
        )
    }
}

/// A straight segment in rest coordinates of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl LineSegment {
    pub fn length(&self) -> f64 {
        (self.x2 - self.x1).hypot(self.y2 - self.y1)
    }

    pub fn point_at(&self, a: f64) -> (f64, f64) {
        (self.x1 + a * (self.x2 - self.x1), self.y1 + a * (self.y2 - self.y1))
    }

    /// Local coordinates of the samples: every `spacing` px, at least
    /// `min_samples`, endpoints included.
    pub fn sample_coords(&self, spacing: f64, min_samples: usize) -> Vec<f64> {
        let n = ((self.length() / spacing).floor() as usize + 1).max(min_samples).max(2);
        (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
    }
}

pub type LineSegmentSet = Vec<LineSegment>;

/// Which mesh is which in the unknown vector.
#[derive(Debug, Clone)]
pub struct MeshLayout {
    offsets: Vec<usize>,
    unknowns: usize,
}

impl MeshLayout {
    pub fn new(meshes: &[&WarpMesh]) -> Self {
        let mut offsets = Vec::with_capacity(meshes.len());
        let mut n = 0;
        for m in meshes {
            offsets.push(n);
            n += 2 * m.vertex_count();
        }
        MeshLayout { offsets, unknowns: n }
    }

    pub fn x(&self, mesh: usize, v: usize) -> usize {
        self.offsets[mesh] + 2 * v
    }

    pub fn y(&self, mesh: usize, v: usize) -> usize {
        self.offsets[mesh] + 2 * v + 1
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Alignment,
    Regional,
    Local,
    Line,
    Anchor,
}

/// Assembled least-squares system plus bookkeeping.
#[derive(Debug, Clone)]
pub struct EnergySystem {
    pub layout: MeshLayout,
    pub rows: SparseRows,
    /// Term of each row.
    pub terms: Vec<Term>,
    /// Dense correspondences dropped because their target fell outside the
    /// other mesh.
    pub dropped_matches: usize,
}

impl EnergySystem {
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.rows.objective(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.rows.gradient(x)
    }

    /// Objective split by term.
    pub fn breakdown(&self, x: &[f64]) -> Vec<(Term, f64)> {
        let mut acc: std::collections::BTreeMap<Term, f64> = Default::default();
        for (r, t) in self.rows.residuals(x).iter().zip(&self.terms) {
            *acc.entry(*t).or_default() += r * r;
        }
        acc.into_iter().collect()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}

/// Incremental builder; [`assemble`] composes the full energy.
pub struct EnergyBuilder<'a> {
    meshes: Vec<&'a WarpMesh>,
    layout: MeshLayout,
    rows: SparseRows,
    terms: Vec<Term>,
    dropped: usize,
}

impl<'a> EnergyBuilder<'a> {
    pub fn new(meshes: &[&'a WarpMesh]) -> Self {
        let layout = MeshLayout::new(meshes);
        EnergyBuilder {
            meshes: meshes.to_vec(),
            rows: SparseRows::new(layout.unknowns()),
            layout,
            terms: Vec::new(),
            dropped: 0,
        }
    }

    fn push(&mut self, term: Term, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(coeffs, rhs);
        self.terms.push(term);
    }

    /// Bilinear representation of a rest-pose point of `mesh`: vertex ids
    /// and weights. `None` outside the mesh.
    fn phi(&self, mesh: usize, p: (f64, f64)) -> Option<[(usize, f64); 4]> {
        let m = self.meshes[mesh];
        let (ci, cj) = m.locate(p.0, p.1)?;
        let cell = m.cell(ci, cj);
        let corners = cell.map(|v| m.rest[v]);
        let a = bilinear_coeffs(p, corners).ok()?;
        Some([(cell[0], a[0]), (cell[1], a[1]), (cell[2], a[2]), (cell[3], a[3])])
    }

    /// Alignment rows for a point `p_in` of mesh `a` (as a bilinear form)
    /// matched to point `q` of mesh `b`.
    fn alignment_rows(&mut self, a: usize, phi_a: &[(usize, f64)], b: usize, q: (f64, f64), w: f64) -> bool {
        let Some(phi_b) = self.phi(b, q) else {
            self.dropped += 1;
            return false;
        };
        for axis in 0..2 {
            let idx = |mesh: usize, v: usize| {
                if axis == 0 {
                    self.layout.x(mesh, v)
                } else {
                    self.layout.y(mesh, v)
                }
            };
            let mut row: Vec<(usize, f64)> = phi_a.iter().map(|&(v, al)| (idx(a, v), w * al)).collect();
            row.extend(phi_b.iter().map(|&(v, al)| (idx(b, v), -w * al)));
            self.push(Term::Alignment, row, 0.0);
        }
        true
    }

    /// Dense correspondences between mesh 0 (side A) and mesh 1 (side B).
    pub fn alignment(mut self, dense: &[DenseCorrespondence], lambda: f64) -> Self {
        let w = lambda.sqrt();
        for d in dense {
            let (own, other) = match d.side {
                Side::A => (0, 1),
                Side::B => (1, 0),
            };
            for &(v, q) in &d.pairs {
                self.alignment_rows(own, &[(v, 1.0)], other, q, w);
            }
        }
        self
    }

    /// Regional similarity rows for one mesh against its field.
    pub fn regional(mut self, mesh: usize, field: &SimilarityField) -> Result<Self> {
        let m = self.meshes[mesh];
        if field.params.len() != m.vertex_count() {
            return Err(Error::Assembly("field size does not match its mesh".into()));
        }
        for (j, k) in m.edges() {
            let e = (m.rest[k].0 - m.rest[j].0, m.rest[k].1 - m.rest[j].1);
            let es = edge_similarity_rows(e)?;
            let (cj, sj) = field.params[j];
            let (xj, yj, xk, yk) = (
                self.layout.x(mesh, j),
                self.layout.y(mesh, j),
                self.layout.x(mesh, k),
                self.layout.y(mesh, k),
            );
            for (coef, target) in [(es.coeff_c, cj), (es.coeff_s, sj)] {
                self.push(
                    Term::Regional,
                    vec![(xk, coef[0]), (yk, coef[1]), (xj, -coef[0]), (yj, -coef[1])],
                    target,
                );
            }
        }
        Ok(self)
    }

    /// Local similarity rows for one mesh.
    pub fn local(mut self, mesh: usize, lambda: f64) -> Result<Self> {
        let w = lambda.sqrt();
        let m = self.meshes[mesh];
        for (j, k) in m.edges() {
            let hood = edge_neighborhood(m, j, k);
            let n = hood.len() as f64;
            let (mx, my) = hood
                .iter()
                .fold((0.0, 0.0), |a, &v| (a.0 + m.rest[v].0 / n, a.1 + m.rest[v].1 / n));
            let d: Vec<(f64, f64)> = hood.iter().map(|&v| (m.rest[v].0 - mx, m.rest[v].1 - my)).collect();
            let z: f64 = d.iter().map(|p| p.0 * p.0 + p.1 * p.1).sum();
            if !(z > 0.0) {
                return Err(Error::Assembly("degenerate edge neighborhood".into()));
            }
            let e = (m.rest[k].0 - m.rest[j].0, m.rest[k].1 - m.rest[j].1);
            // c = Σ (dx X + dy Y)/z, s = Σ (dy X − dx Y)/z over the hood
            // S e = (c ex + s ey, −s ex + c ey)
            let mut rx = vec![(self.layout.x(mesh, k), w), (self.layout.x(mesh, j), -w)];
            let mut ry = vec![(self.layout.y(mesh, k), w), (self.layout.y(mesh, j), -w)];
            for (&v, &(dx, dy)) in hood.iter().zip(&d) {
                let (cx, cy) = (dx / z, dy / z); // c coefficients on X_v, Y_v
                let (sx, sy) = (dy / z, -dx / z); // s coefficients on X_v, Y_v
                let (xv, yv) = (self.layout.x(mesh, v), self.layout.y(mesh, v));
                rx.push((xv, -w * (cx * e.0 + sx * e.1)));
                rx.push((yv, -w * (cy * e.0 + sy * e.1)));
                ry.push((xv, -w * (-sx * e.0 + cx * e.1)));
                ry.push((yv, -w * (-sy * e.0 + cy * e.1)));
            }
            self.push(Term::Local, rx, 0.0);
            self.push(Term::Local, ry, 0.0);
        }
        Ok(self)
    }

    /// Line preservation rows for one mesh.
    pub fn lines(mut self, mesh: usize, lines: &[LineSegment], lambda: f64) -> Self {
        if lambda == 0.0 {
            return self;
        }
        let w = lambda.sqrt();
        for seg in lines {
            if seg.length() <= 0.0 {
                continue;
            }
            let (Some(pu), Some(pv)) = (self.phi(mesh, (seg.x1, seg.y1)), self.phi(mesh, (seg.x2, seg.y2))) else {
                self.dropped += 1;
                continue;
            };
            for a in seg.sample_coords(LINE_SAMPLE_SPACING, 3) {
                if a <= 0.0 || a >= 1.0 {
                    continue;
                }
                let Some(pk) = self.phi(mesh, seg.point_at(a)) else {
                    continue;
                };
                for axis in 0..2 {
                    let idx = |v: usize| {
                        if axis == 0 {
                            self.layout.x(mesh, v)
                        } else {
                            self.layout.y(mesh, v)
                        }
                    };
                    let mut row: Vec<(usize, f64)> = pk.iter().map(|&(v, al)| (idx(v), w * al)).collect();
                    row.extend(pu.iter().map(|&(v, al)| (idx(v), -w * (1.0 - a) * al)));
                    row.extend(pv.iter().map(|&(v, al)| (idx(v), -w * a * al)));
                    self.push(Term::Line, row, 0.0);
                }
            }
        }
        self
    }

    /// Soft constraint holding the centroid of `mesh` at its rest centroid.
    pub fn centroid_anchor(mut self, mesh: usize, weight: f64) -> Self {
        let m = self.meshes[mesh];
        let n = m.vertex_count() as f64;
        let w = weight.sqrt();
        let (cx, cy) = m.rest.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let rx = (0..m.vertex_count()).map(|v| (self.layout.x(mesh, v), w / n)).collect();
        let ry = (0..m.vertex_count()).map(|v| (self.layout.y(mesh, v), w / n)).collect();
        self.push(Term::Anchor, rx, w * cx);
        self.push(Term::Anchor, ry, w * cy);
        self
    }

    /// Soft constraint pinning one vertex.
    pub fn vertex_anchor(mut self, mesh: usize, v: usize, at: (f64, f64), weight: f64) -> Self {
        let w = weight.sqrt();
        let (xi, yi) = (self.layout.x(mesh, v), self.layout.y(mesh, v));
        self.push(Term::Anchor, vec![(xi, w)], w * at.0);
        self.push(Term::Anchor, vec![(yi, w)], w * at.1);
        self
    }

    pub fn build(self) -> EnergySystem {
        EnergySystem {
            layout: self.layout,
            rows: self.rows,
            terms: self.terms,
            dropped_matches: self.dropped,
        }
    }
}

/// Vertices of the cells sharing edge `(j, k)`, in ascending id order.
fn edge_neighborhood(m: &WarpMesh, j: usize, k: usize) -> Vec<usize> {
    let stride = m.cols + 1;
    let (ij, jj) = (j % stride, j / stride);
    let horizontal = k == j + 1;
    let mut cells = Vec::with_capacity(2);
    if horizontal {
        if jj > 0 {
            cells.push((ij, jj - 1));
        }
        if jj < m.rows {
            cells.push((ij, jj));
        }
    } else {
        if ij > 0 {
            cells.push((ij - 1, jj));
        }
        if ij < m.cols {
            cells.push((ij, jj));
        }
    }
    let mut out: Vec<usize> = cells.into_iter().flat_map(|(a, b)| m.cell(a, b)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Everything the full energy needs for a two-image problem. Mesh 0 is the
/// reference (its centroid is anchored); mesh 1 is the target.
pub struct EnergyInputs<'a> {
    pub meshes: [&'a WarpMesh; 2],
    pub dense: &'a [DenseCorrespondence],
    pub fields: [&'a SimilarityField; 2],
    pub lines: [&'a [LineSegment]; 2],
    pub weights: EnergyWeights,
}

pub fn assemble(inputs: &EnergyInputs) -> Result<EnergySystem> {
    if inputs.dense.iter().all(|d| d.is_empty()) {
        return Err(Error::Assembly("no dense correspondences".into()));
    }
    let w = inputs.weights;
    let mut b = EnergyBuilder::new(&inputs.meshes).alignment(inputs.dense, w.alignment);
    for mesh in 0..2 {
        b = b
            .regional(mesh, inputs.fields[mesh])?
            .local(mesh, w.local)?
            .lines(mesh, inputs.lines[mesh], w.line);
    }
    let sys = b.centroid_anchor(0, GAUGE_WEIGHT).build();
    if !sys.terms.contains(&Term::Alignment) {
        return Err(Error::Assembly(
            "every dense correspondence fell outside the other mesh".into(),
        ));
    }
    Ok(sys)
}

/// Packs the deformed vertices of the meshes into an unknown vector.
pub fn pack(meshes: &[&WarpMesh]) -> Vec<f64> {
    meshes
        .iter()
        .flat_map(|m| m.deformed.iter().flat_map(|&(x, y)| [x, y]))
        .collect()
}

/// Writes an unknown vector back into the meshes' deformed grids.
pub fn unpack(x: &[f64], meshes: &mut [&mut WarpMesh]) {
    let mut o = 0;
    for m in meshes.iter_mut() {
        for v in m.deformed.iter_mut() {
            *v = (x[o], x[o + 1]);
            o += 2;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub objective_before: f64,
    pub objective_after: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Minimizes the energy starting from `x0` and returns the solution.
pub fn solve(system: &EnergySystem, x0: &[f64], params: &CgParams) -> Result<(Vec<f64>, SolveReport)> {
    let before = system.objective(x0);
    let out = solve_least_squares(&system.rows, x0, params)?;
    let after = system.objective(&out.x);
    Ok((
        out.x,
        SolveReport {
            objective_before: before,
            objective_after: after,
            iterations: out.iterations,
            relative_residual: out.relative_residual,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_center_and_corner() {
        let q = [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0), (2.0, 2.0)];
        assert_eq!(bilinear_coeffs((1.0, 1.0), q).unwrap(), [0.25; 4]);
        assert_eq!(bilinear_coeffs((2.0, 0.0), q).unwrap(), [0.0, 1.0, 0.0, 0.0]);
        assert!(bilinear_coeffs((2.5, 0.0), q).is_err());
    }

    #[test]
    fn bilinear_reconstructs_point() {
        let q = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let a = bilinear_coeffs((0.3, 0.7), q).unwrap();
        let expect = [0.7 * 0.3, 0.3 * 0.3, 0.7 * 0.7, 0.3 * 0.7];
        for i in 0..4 {
            assert!((a[i] - expect[i]).abs() < 1e-15);
        }
        let x: f64 = (0..4).map(|i| a[i] * q[i].0).sum();
        let y: f64 = (0..4).map(|i| a[i] * q[i].1).sum();
        assert!((x - 0.3).abs() < 1e-15 && (y - 0.7).abs() < 1e-15);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_similarity_identity_scale_rotation() {
        let e = (3.0, 1.0);
        let es = edge_similarity_rows(e).unwrap();
        let (c, s) = es.eval(e);
        assert!((c - 1.0).abs() < 1e-15 && s.abs() < 1e-15);
        let (c, s) = es.eval((6.0, 2.0));
        assert!((c - 2.0).abs() < 1e-15 && s.abs() < 1e-15);
        // θ = 90°: S = [[0, 1], [-1, 0]]
        let rot = crate::geometry::SimilarityParams::from_scale_angle(1.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let (c, s) = es.eval(rot.apply_linear(e.0, e.1));
        assert!(c.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        assert!(edge_similarity_rows((0.0, 0.0)).is_err());
    }

    #[test]
    fn single_edge_regional_term() {
        // one-cell mesh; constrain only via a regional field of (2, 0)
        let mesh = WarpMesh::new(2, 2, 1, 1).unwrap();
        let field = SimilarityField::constant(&mesh, 2.0, 0.0);
        let sys = EnergyBuilder::new(&[&mesh]).regional(0, &field).unwrap().build();
        let mut x = pack(&[&mesh]);
        // edges are unit length; doubling every edge zeroes the term
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!(sys.objective(&doubled) < 1e-24);
        assert!(sys.objective(&x) > 0.5);
        x[2] += 0.5; // stretch the top edge only
        assert!(sys.objective(&x) > 0.0);
    }

    #[test]
    fn collinear_samples_have_zero_line_residual() {
        let mesh = WarpMesh::new(101, 101, 4, 4).unwrap();
        let line = LineSegment {
            x1: 5.0,
            y1: 10.0,
            x2: 95.0,
            y2: 80.0,
        };
        let sys = EnergyBuilder::new(&[&mesh]).lines(0, &[line], 0.3).build();
        assert!(sys.row_count() >= 2);
        let mut m = mesh.clone();
        // an affine deformation keeps sampled points collinear at the same a
        m.deform_with(|x, y| (1.2 * x + 0.3 * y + 4.0, -0.1 * x + 0.9 * y));
        assert!(sys.objective(&pack(&[&m])) < 1e-20);
        m.deform_with(|x, y| (x + 0.01 * y * y, y));
        assert!(sys.objective(&pack(&[&m])) > 1e-6);
    }

    #[test]
    fn local_term_zero_under_similarity_only() {
        let mesh = WarpMesh::new(41, 31, 4, 3).unwrap();
        let sys = EnergyBuilder::new(&[&mesh]).local(0, 1.0).unwrap().build();
        let mut m = mesh.clone();
        let s = crate::geometry::SimilarityParams::from_scale_angle(1.4, 0.3, 5.0, -2.0);
        m.deform_with(|x, y| s.apply(x, y));
        assert!(sys.objective(&pack(&[&m])) < 1e-18);
        m.deform_with(|x, y| (1.3 * x, y));
        assert!(sys.objective(&pack(&[&m])) > 1e-3);
    }

    #[test]
    fn identity_configuration_has_zero_energy() {
        let a = WarpMesh::new(51, 41, 5, 4).unwrap();
        let b = a.clone();
        let dense = vec![DenseCorrespondence {
            region_a: 0,
            region_b: 0,
            side: Side::A,
            pairs: (0..a.vertex_count()).map(|v| (v, a.rest[v])).collect(),
        }];
        let fa = SimilarityField::identity(&a);
        let fb = SimilarityField::identity(&b);
        let sys = assemble(&EnergyInputs {
            meshes: [&a, &b],
            dense: &dense,
            fields: [&fa, &fb],
            lines: [&[], &[]],
            weights: EnergyWeights::default(),
        })
        .unwrap();
        let x = pack(&[&a, &b]);
        assert!(sys.objective(&x) < 1e-20);
        let (sol, rep) = solve(&sys, &x, &CgParams::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(sol, x);
    }

    #[test]
    fn empty_dense_is_assembly_error() {
        let a = WarpMesh::new(11, 11, 2, 2).unwrap();
        let f = SimilarityField::identity(&a);
        let r = assemble(&EnergyInputs {
            meshes: [&a, &a],
            dense: &[],
            fields: [&f, &f],
            lines: [&[], &[]],
            weights: EnergyWeights::default(),
        });
        assert!(matches!(r, Err(Error::Assembly(_))));
    }

    #[test]
    fn alignment_pulls_matched_vertices_to_anchor() {
        let a = WarpMesh::new(11, 11, 1, 1).unwrap();
        let b = a.clone();
        let dense = vec![DenseCorrespondence {
            region_a: 0,
            region_b: 0,
            side: Side::A,
            pairs: vec![(0, (0.0, 0.0))],
        }];
        let sys = EnergyBuilder::new(&[&a, &b])
            .alignment(&dense, 1.0)
            .vertex_anchor(0, 0, (5.0, 5.0), 1e3)
            .build();
        let (x, _) = solve(&sys, &pack(&[&a, &b]), &CgParams::default()).unwrap();
        let l = &sys.layout;
        for (mesh, v) in [(0, 0), (1, 0)] {
            assert!((x[l.x(mesh, v)] - 5.0).abs() < 1e-8);
            assert!((x[l.y(mesh, v)] - 5.0).abs() < 1e-8);
        }
    }

    #[test]
    fn edge_neighborhoods() {
        let m = WarpMesh::new(31, 31, 3, 3).unwrap();
        // boundary horizontal edge: one cell
        assert_eq!(edge_neighborhood(&m, 0, 1), vec![0, 1, 4, 5]);
        // interior vertical edge: two cells
        let (j, k) = (m.vertex(1, 1), m.vertex(1, 2));
        assert_eq!(edge_neighborhood(&m, j, k).len(), 6);
    }
}
