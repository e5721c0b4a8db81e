//! Maximum-weight bipartite assignment (Kuhn–Munkres) over integer weights.
//!
//! Rows and columns may differ in count; the shorter side is padded with
//! zero-weight dummy nodes. Among all optimal assignments the one returned
//! is lexicographically smallest: column 0 gets the lowest row it can have
//! without losing optimality, then column 1, and so on. Integer arithmetic
//! keeps the equality subgraph exact, so this tie-break is reliable.

/// Result of [`max_weight_assignment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// `row_of_col[j]` is the row assigned to column `j`, `None` when the
    /// column was matched to a padding row.
    pub row_of_col: Vec<Option<usize>>,
    pub total_weight: i64,
}

/// `weights[i][j]` is the gain of pairing row `i` with column `j`. All rows
/// must have the same length. Negative weights are allowed but the callers
/// in this crate only pass counts.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Assignment {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    debug_assert!(weights.iter().all(|r| r.len() == cols));
    let n = rows.max(cols);
    if n == 0 || cols == 0 {
        return Assignment {
            row_of_col: vec![None; cols],
            total_weight: 0,
        };
    }
    let w = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            weights[i][j]
        } else {
            0
        }
    };
    let max_w = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| w(i, j))
        .max()
        .unwrap_or(0);
    let cost: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| max_w - w(i, j)).collect()).collect();

    let (u, v, mut col_of_row) = hungarian_min(&cost);
    let mut row_of_col = vec![usize::MAX; n];
    for (i, &j) in col_of_row.iter().enumerate() {
        row_of_col[j] = i;
    }

    // Lexicographic refinement inside the equality subgraph.
    let tight = |i: usize, j: usize| u[i] + v[j] == cost[i][j];
    let mut row_fixed = vec![false; n];
    let mut col_fixed = vec![false; n];
    for j in 0..n {
        for i in 0..n {
            if row_fixed[i] || !tight(i, j) {
                continue;
            }
            if row_of_col[j] == i {
                row_fixed[i] = true;
                col_fixed[j] = true;
                break;
            }
            if let Some(path) = alternating_path(n, &tight, &row_fixed, &col_fixed, &col_of_row, i, row_of_col[j]) {
                for (r, c) in path {
                    col_of_row[r] = c;
                    row_of_col[c] = r;
                }
                col_of_row[i] = j;
                row_of_col[j] = i;
                row_fixed[i] = true;
                col_fixed[j] = true;
                break;
            }
        }
        debug_assert!(col_fixed[j]);
    }

    let total_weight = (0..n).map(|j| w(row_of_col[j], j)).sum();
    Assignment {
        row_of_col: row_of_col[..cols].iter().map(|&i| (i < rows).then_some(i)).collect(),
        total_weight,
    }
}

/// Searches for a re-matching that lets some column take row `i` away
/// from its current column. The displaced column must find another tight,
/// unfixed row; the chain ends at `target_row`, the row being released.
/// Returns the (row, col) pairs to assign.
fn alternating_path(
    n: usize,
    tight: &impl Fn(usize, usize) -> bool,
    row_fixed: &[bool],
    col_fixed: &[bool],
    col_of_row: &[usize],
    i: usize,
    target_row: usize,
) -> Option<Vec<(usize, usize)>> {
    let start_col = col_of_row[i];
    if col_fixed[start_col] {
        return None;
    }
    // came_from[c] = (row c gave up, column that took it)
    let mut came_from: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[start_col] = true;
    let mut queue = std::collections::VecDeque::from([start_col]);
    while let Some(c) = queue.pop_front() {
        for r in 0..n {
            if r == i || row_fixed[r] || !tight(r, c) {
                continue;
            }
            if r == target_row {
                let mut out = vec![(r, c)];
                let mut cur = c;
                while let Some((pr, pc)) = came_from[cur] {
                    out.push((pr, pc));
                    cur = pc;
                }
                return Some(out);
            }
            let next = col_of_row[r];
            if col_fixed[next] || seen[next] {
                continue;
            }
            seen[next] = true;
            came_from[next] = Some((r, c));
            queue.push_back(next);
        }
    }
    None
}

/// Dense O(n³) Hungarian method for square minimum-cost assignment.
/// Returns row potentials, column potentials and the column of each row.
fn hungarian_min(cost: &[Vec<i64>]) -> (Vec<i64>, Vec<i64>, Vec<usize>) {
    let n = cost.len();
    // 1-based arrays, slot 0 is the virtual root
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), col_of_row)
}
