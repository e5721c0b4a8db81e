//! Projective and similarity estimation: Hartley-normalized DLT, seeded
//! RANSAC and the closed-form least-squares similarity fit.

use nalgebra::{Matrix3, SMatrix, SymmetricEigen, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One correspondence: `(x1, y1)` in the first image, `(x2, y2)` in the
/// second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPair {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl PointPair {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        PointPair { x1, y1, x2, y2 }
    }

    pub fn src(&self) -> (f64, f64) {
        (self.x1, self.y1)
    }

    pub fn dst(&self) -> (f64, f64) {
        (self.x2, self.y2)
    }

    pub fn reversed(&self) -> Self {
        PointPair::new(self.x2, self.y2, self.x1, self.y1)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pub pairs: Vec<PointPair>,
}

impl MatchSet {
    pub fn new(pairs: Vec<PointPair>) -> Self {
        MatchSet { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Same correspondences with the image roles swapped.
    pub fn reversed(&self) -> Self {
        MatchSet::new(self.pairs.iter().map(PointPair::reversed).collect())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        MatchSet::new(indices.iter().map(|&i| self.pairs[i]).collect())
    }
}

impl FromIterator<PointPair> for MatchSet {
    fn from_iter<I: IntoIterator<Item = PointPair>>(iter: I) -> Self {
        MatchSet::new(iter.into_iter().collect())
    }
}

/// Planar projective map, stored with the bottom-right entry scaled to 1
/// whenever it is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn identity() -> Self {
        Homography(Matrix3::identity())
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography(Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0))
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let m = if m[(2, 2)].abs() > 1e-300 { m / m[(2, 2)] } else { m };
        if !m.iter().all(|v| v.is_finite()) || m.determinant().abs() <= 1e-12 {
            return Err(Error::Estimation("homography is singular".into()));
        }
        Ok(Homography(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let v = self.0 * Vector3::new(x, y, 1.0);
        (v.x / v.z, v.y / v.z)
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .0
            .try_inverse()
            .ok_or_else(|| Error::Estimation("homography is not invertible".into()))?;
        Homography::from_matrix(inv)
    }

    pub fn compose(&self, then: &Homography) -> Result<Self> {
        Homography::from_matrix(then.0 * self.0)
    }

    /// Forward residual `‖H p − q‖`.
    pub fn transfer_error(&self, pair: &PointPair) -> f64 {
        let (x, y) = self.apply(pair.x1, pair.y1);
        (x - pair.x2).hypot(y - pair.y2)
    }
}

/// Similarity `q = S p + t` with `S = [[c, s], [-s, c]]`, i.e. `c = k cos θ`
/// and `s = k sin θ` for scale `k` and angle `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParams {
    pub c: f64,
    pub s: f64,
    pub tx: f64,
    pub ty: f64,
}

impl SimilarityParams {
    pub const IDENTITY: SimilarityParams = SimilarityParams {
        c: 1.0,
        s: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn from_scale_angle(scale: f64, theta: f64, tx: f64, ty: f64) -> Self {
        SimilarityParams {
            c: scale * theta.cos(),
            s: scale * theta.sin(),
            tx,
            ty,
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.c * x + self.s * y + self.tx, -self.s * x + self.c * y + self.ty)
    }

    /// Linear part only.
    pub fn apply_linear(&self, x: f64, y: f64) -> (f64, f64) {
        (self.c * x + self.s * y, -self.s * x + self.c * y)
    }

    pub fn scale(&self) -> f64 {
        self.c.hypot(self.s)
    }

    pub fn angle(&self) -> f64 {
        self.s.atan2(self.c)
    }

    pub fn inverse(&self) -> Self {
        let k2 = self.c * self.c + self.s * self.s;
        let (c, s) = (self.c / k2, -self.s / k2);
        let tx = -(c * self.tx + s * self.ty);
        let ty = -(-s * self.tx + c * self.ty);
        SimilarityParams { c, s, tx, ty }
    }

    pub fn to_homography(&self) -> Homography {
        Homography(Matrix3::new(
            self.c, self.s, self.tx, -self.s, self.c, self.ty, 0.0, 0.0, 1.0,
        ))
    }
}

type Mat9 = SMatrix<f64, 9, 9>;

/// Translate to the centroid and scale to mean distance √2.
fn normalizing_transform(points: impl Iterator<Item = (f64, f64)> + Clone) -> Matrix3<f64> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points.map(|p| (p.0 - cx).hypot(p.1 - cy)).sum::<f64>() / n;
    let k = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(k, 0.0, -k * cx, 0.0, k, -k * cy, 0.0, 0.0, 1.0)
}

/// Normalized DLT system over a fixed match set, solvable for any set of
/// per-pair weights. The per-pair 9×9 blocks are precomputed so that
/// re-weighting (moving DLT) costs one weighted sum and a 9×9 eigensolve.
pub struct WeightedDlt {
    src_norm: Matrix3<f64>,
    dst_denorm: Matrix3<f64>,
    blocks: Vec<Mat9>,
}

impl WeightedDlt {
    pub fn new(matches: &MatchSet) -> Result<Self> {
        if matches.len() < 4 {
            return Err(Error::Estimation(format!(
                "homography needs at least 4 pairs, got {}",
                matches.len()
            )));
        }
        let src_norm = normalizing_transform(matches.pairs.iter().map(|p| p.src()));
        let dst_norm = normalizing_transform(matches.pairs.iter().map(|p| p.dst()));
        let dst_denorm = dst_norm
            .try_inverse()
            .ok_or_else(|| Error::Estimation("all target points coincide".into()))?;
        let blocks = matches
            .pairs
            .iter()
            .map(|pair| {
                let p = src_norm * Vector3::new(pair.x1, pair.y1, 1.0);
                let q = dst_norm * Vector3::new(pair.x2, pair.y2, 1.0);
                let r1 =
                    SMatrix::<f64, 1, 9>::from_row_slice(&[0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y]);
                let r2 =
                    SMatrix::<f64, 1, 9>::from_row_slice(&[p.x, p.y, 1.0, 0.0, 0.0, 0.0, -q.x * p.x, -q.x * p.y, -q.x]);
                r1.transpose() * r1 + r2.transpose() * r2
            })
            .collect();
        Ok(WeightedDlt {
            src_norm,
            dst_denorm,
            blocks,
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Solves with row weights `weights[k]` (the normal matrix uses their
    /// squares).
    pub fn solve(&self, weights: &[f64]) -> Result<Homography> {
        debug_assert_eq!(weights.len(), self.blocks.len());
        let mut m = Mat9::zeros();
        for (b, &w) in self.blocks.iter().zip(weights) {
            if w != 0.0 {
                m += b * (w * w);
            }
        }
        self.solve_normal(m)
    }

    pub fn solve_uniform(&self) -> Result<Homography> {
        let m = self.blocks.iter().fold(Mat9::zeros(), |acc, b| acc + b);
        self.solve_normal(m)
    }

    fn solve_normal(&self, m: Mat9) -> Result<Homography> {
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let largest = eig.eigenvalues[order[8]];
        if !(largest > 0.0) || eig.eigenvalues[order[1]] <= 1e-12 * largest {
            return Err(Error::Estimation("degenerate point configuration".into()));
        }
        let h = eig.eigenvectors.column(order[0]);
        let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
        Homography::from_matrix(self.dst_denorm * hn * self.src_norm)
    }
}

fn collinear(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let (vx, vy) = (c.0 - a.0, c.1 - a.1);
    let cross = (ux * vy - uy * vx).abs();
    cross <= 1e-6 * ux.hypot(uy) * vx.hypot(vy)
}

fn has_collinear_triple(points: &[(f64, f64)]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if collinear(points[i], points[j], points[k]) {
                    return true;
                }
            }
        }
    }
    false
}

/// Least-squares homography from at least four pairs.
pub fn estimate_homography_dlt(matches: &MatchSet) -> Result<Homography> {
    if matches.len() == 4 {
        let src: Vec<_> = matches.pairs.iter().map(|p| p.src()).collect();
        if has_collinear_triple(&src) {
            return Err(Error::Estimation("three source points are collinear".into()));
        }
    }
    WeightedDlt::new(matches)?.solve_uniform()
}

/// `‖H p − q‖² + ‖H⁻¹ q − p‖²`, square-rooted.
pub fn symmetric_transfer_error(h: &Homography, h_inv: &Homography, pair: &PointPair) -> f64 {
    let (fx, fy) = h.apply(pair.x1, pair.y1);
    let (bx, by) = h_inv.apply(pair.x2, pair.y2);
    let e = (fx - pair.x2).powi(2) + (fy - pair.y2).powi(2) + (bx - pair.x1).powi(2) + (by - pair.y1).powi(2);
    if e.is_finite() {
        e.sqrt()
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub threshold: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            threshold: 3.0,
            iterations: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RansacFit {
    pub homography: Homography,
    /// Indices into the input match set, ascending.
    pub inliers: Vec<usize>,
}

fn inliers_of(h: &Homography, matches: &MatchSet, threshold: f64) -> Option<(Vec<usize>, f64)> {
    let h_inv = h.inverse().ok()?;
    let mut idx = Vec::new();
    let mut err = 0.0;
    for (i, p) in matches.pairs.iter().enumerate() {
        let e = symmetric_transfer_error(h, &h_inv, p);
        if e < threshold {
            idx.push(i);
            err += e;
        }
    }
    Some((idx, err))
}

/// Consensus homography: minimal 4-point samples scored by symmetric
/// transfer error, then refit on the consensus set. Identical seeds give
/// identical results.
pub fn ransac_homography(matches: &MatchSet, params: &RansacParams) -> Result<RansacFit> {
    let n = matches.len();
    if n < 4 {
        return Err(Error::Estimation(format!("RANSAC needs at least 4 pairs, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Homography, Vec<usize>, f64)> = None;
    let mut budget = params.iterations;
    let mut iter = 0;
    while iter < budget {
        iter += 1;
        let idx = sample(&mut rng, n, 4).into_vec();
        let sub = matches.subset(&idx);
        let src: Vec<_> = sub.pairs.iter().map(|p| p.src()).collect();
        let dst: Vec<_> = sub.pairs.iter().map(|p| p.dst()).collect();
        if has_collinear_triple(&src) || has_collinear_triple(&dst) {
            continue;
        }
        let Ok(h) = WeightedDlt::new(&sub).and_then(|d| d.solve_uniform()) else {
            continue;
        };
        let Some((inl, err)) = inliers_of(&h, matches, params.threshold) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((_, b, e)) => inl.len() > b.len() || (inl.len() == b.len() && err < *e),
        };
        if better {
            let ratio = inl.len() as f64 / n as f64;
            best = Some((h, inl, err));
            budget = budget.min(adaptive_budget(ratio, iter));
        }
    }

    let (mut h, mut inl, _) = best.ok_or_else(|| Error::Estimation("no valid minimal sample".into()))?;
    if inl.len() < 4 {
        return Err(Error::Estimation(format!("best model has only {} inliers", inl.len())));
    }
    // Refit on the consensus set until it stops growing.
    for _ in 0..3 {
        let Ok(refit) = estimate_homography_dlt(&matches.subset(&inl)) else {
            break;
        };
        match inliers_of(&refit, matches, params.threshold) {
            Some((next, _)) if next.len() >= inl.len() => {
                let grew = next.len() > inl.len();
                h = refit;
                inl = next;
                if !grew {
                    break;
                }
            }
            _ => break,
        }
    }
    if let Ok(refit) = estimate_homography_dlt(&matches.subset(&inl)) {
        h = refit;
    }
    Ok(RansacFit {
        homography: h,
        inliers: inl,
    })
}

/// Iterations needed for 99.9% confidence at the given inlier ratio.
fn adaptive_budget(ratio: f64, done: usize) -> usize {
    if ratio >= 1.0 {
        return done;
    }
    let p_good = ratio.powi(4);
    if p_good <= 1e-12 {
        return usize::MAX;
    }
    let needed = (1e-3f64).ln() / (1.0 - p_good).ln();
    (needed.ceil() as usize).max(done)
}

/// Least-squares `(c, s, tx, ty)` minimizing `Σ‖S p + t − q‖²`.
pub fn estimate_similarity(matches: &MatchSet) -> Result<SimilarityParams> {
    if matches.len() < 2 {
        return Err(Error::Estimation("similarity needs at least 2 pairs".into()));
    }
    let n = matches.len() as f64;
    let (mut px, mut py, mut qx, mut qy) = (0.0, 0.0, 0.0, 0.0);
    for m in &matches.pairs {
        px += m.x1;
        py += m.y1;
        qx += m.x2;
        qy += m.y2;
    }
    let (px, py, qx, qy) = (px / n, py / n, qx / n, qy / n);
    let (mut norm, mut dot, mut cross) = (0.0, 0.0, 0.0);
    for m in &matches.pairs {
        let (ax, ay) = (m.x1 - px, m.y1 - py);
        let (bx, by) = (m.x2 - qx, m.y2 - qy);
        norm += ax * ax + ay * ay;
        dot += ax * bx + ay * by;
        cross += ay * bx - ax * by;
    }
    if norm <= 1e-12 {
        return Err(Error::Estimation("source points coincide".into()));
    }
    let c = dot / norm;
    let s = cross / norm;
    Ok(SimilarityParams {
        c,
        s,
        tx: qx - (c * px + s * py),
        ty: qy - (-s * px + c * py),
    })
}
