use crate::error::{Error, Result};

/// Regular quad mesh over one image. `rest` spans pixel centers
/// `[0, width-1] × [0, height-1]`; `deformed` holds the solved positions.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpMesh {
    pub cols: usize,
    pub rows: usize,
    pub width: usize,
    pub height: usize,
    pub rest: Vec<(f64, f64)>,
    pub deformed: Vec<(f64, f64)>,
}

/// Corner vertex ids of one cell: top-left, top-right, bottom-left,
/// bottom-right.
pub type Cell = [usize; 4];

impl WarpMesh {
    pub fn new(width: usize, height: usize, cols: usize, rows: usize) -> Result<Self> {
        if cols < 1 || rows < 1 || width < 2 || height < 2 {
            return Err(Error::input(format!(
                "cannot build a {cols}x{rows} mesh over a {width}x{height} image"
            )));
        }
        let sx = (width - 1) as f64 / cols as f64;
        let sy = (height - 1) as f64 / rows as f64;
        let rest: Vec<_> = (0..=rows)
            .flat_map(|j| (0..=cols).map(move |i| (i as f64 * sx, j as f64 * sy)))
            .collect();
        Ok(WarpMesh {
            cols,
            rows,
            width,
            height,
            deformed: rest.clone(),
            rest,
        })
    }

    pub fn vertex_count(&self) -> usize {
        (self.cols + 1) * (self.rows + 1)
    }

    pub fn vertex(&self, i: usize, j: usize) -> usize {
        j * (self.cols + 1) + i
    }

    pub fn cell_step(&self) -> (f64, f64) {
        (
            (self.width - 1) as f64 / self.cols as f64,
            (self.height - 1) as f64 / self.rows as f64,
        )
    }

    pub fn cell(&self, ci: usize, cj: usize) -> Cell {
        [
            self.vertex(ci, cj),
            self.vertex(ci + 1, cj),
            self.vertex(ci, cj + 1),
            self.vertex(ci + 1, cj + 1),
        ]
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |cj| (0..self.cols).map(move |ci| (ci, cj)))
    }

    /// Cell containing a rest-pose point, `None` outside the mesh.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (sx, sy) = self.cell_step();
        let (fx, fy) = (x / sx, y / sy);
        let tol = 1e-9;
        if !(fx >= -tol && fy >= -tol && fx <= self.cols as f64 + tol && fy <= self.rows as f64 + tol) {
            return None;
        }
        let ci = (fx.floor().max(0.0) as usize).min(self.cols - 1);
        let cj = (fy.floor().max(0.0) as usize).min(self.rows - 1);
        Some((ci, cj))
    }

    /// Undirected grid edges `(j, k)` with `j < k`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.vertex_count());
        for j in 0..=self.rows {
            for i in 0..=self.cols {
                let v = self.vertex(i, j);
                if i < self.cols {
                    out.push((v, self.vertex(i + 1, j)));
                }
                if j < self.rows {
                    out.push((v, self.vertex(i, j + 1)));
                }
            }
        }
        out
    }

    /// Cells touching vertex `v`.
    pub fn cells_around(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = (v % (self.cols + 1), v / (self.cols + 1));
        let ci = [i.checked_sub(1), (i < self.cols).then_some(i)];
        let cj = [j.checked_sub(1), (j < self.rows).then_some(j)];
        cj.into_iter()
            .flatten()
            .flat_map(move |b| ci.into_iter().flatten().map(move |a| (a, b)))
    }

    /// Sets the deformed grid to `f(rest)`.
    pub fn deform_with(&mut self, f: impl Fn(f64, f64) -> (f64, f64)) {
        self.deformed = self.rest.iter().map(|&(x, y)| f(x, y)).collect();
    }

    pub fn reset(&mut self) {
        self.deformed = self.rest.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_pixel_centers() {
        let m = WarpMesh::new(101, 51, 4, 2).unwrap();
        assert_eq!(m.vertex_count(), 15);
        assert_eq!(m.rest[0], (0.0, 0.0));
        assert_eq!(*m.rest.last().unwrap(), (100.0, 50.0));
        assert_eq!(m.edges().len(), 4 * 3 + 5 * 2);
    }

    #[test]
    fn locate_clamps_far_edges() {
        let m = WarpMesh::new(101, 51, 4, 2).unwrap();
        assert_eq!(m.locate(100.0, 50.0), Some((3, 1)));
        assert_eq!(m.locate(0.0, 0.0), Some((0, 0)));
        assert_eq!(m.locate(30.0, 10.0), Some((1, 0)));
        assert_eq!(m.locate(-1.0, 0.0), None);
    }

    #[test]
    fn cells_around_corner_and_interior() {
        let m = WarpMesh::new(101, 51, 4, 2).unwrap();
        assert_eq!(m.cells_around(0).count(), 1);
        assert_eq!(m.cells_around(m.vertex(2, 1)).count(), 4);
    }
}
