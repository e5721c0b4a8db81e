//! Clustering-style scoring of planar-region masks.
//!
//! Region ids carry no meaning across images, so a prediction is compared to
//! ground truth only after relabeling the ground truth by the maximum-weight
//! matching of their confusion matrix.

use std::collections::BTreeSet;

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};

/// Per-pixel region ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::input(format!(
                "mask of {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(LabelMask { width, height, labels })
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Self {
        LabelMask {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// Label at a real-valued position (nearest pixel), `None` outside.
    pub fn at(&self, x: f64, y: f64) -> Option<u8> {
        let (xi, yi) = (x.round(), y.round());
        if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
            return None;
        }
        Some(self.get(xi as usize, yi as usize))
    }

    /// One past the largest id present (0 for an empty mask).
    pub fn label_count(&self) -> usize {
        self.labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.label_count()];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }

    pub fn present_labels(&self) -> BTreeSet<u8> {
        self.labels.iter().copied().collect()
    }

    pub fn map_labels(&self, f: impl Fn(u8) -> u8) -> Self {
        LabelMask {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|&l| f(l)).collect(),
        }
    }
}

/// `counts[i][j]` = pixels with prediction `i` and ground truth `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<Vec<u64>>,
}

impl CountMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Ground-truth label → prediction label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPermutation {
    map: Vec<u8>,
}

impl LabelPermutation {
    pub fn identity(n: usize) -> Self {
        LabelPermutation {
            map: (0..n).map(|l| l as u8).collect(),
        }
    }

    /// Fails unless `map` is injective.
    pub fn from_map(map: Vec<u8>) -> Result<Self> {
        let distinct: BTreeSet<u8> = map.iter().copied().collect();
        if distinct.len() != map.len() {
            return Err(Error::input("label permutation is not injective"));
        }
        Ok(LabelPermutation { map })
    }

    pub fn get(&self, label: u8) -> Option<u8> {
        self.map.get(label as usize).copied()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.map
    }

    /// Inverse over the image of the map; requires the map to be a
    /// permutation of `0..len`.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.map.len();
        let mut inv = vec![u8::MAX; n];
        for (from, &to) in self.map.iter().enumerate() {
            if to as usize >= n {
                return Err(Error::input("label map is not a permutation of its domain"));
            }
            inv[to as usize] = from as u8;
        }
        LabelPermutation::from_map(inv)
    }
}

pub fn confusion_matrix(pred: &LabelMask, gt: &LabelMask) -> Result<CountMatrix> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::input(format!(
            "mask dimensions differ: {}x{} vs {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let rows = pred.label_count();
    let cols = gt.label_count();
    let mut counts = vec![vec![0u64; cols]; rows];
    for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
        counts[p as usize][g as usize] += 1;
    }
    Ok(CountMatrix { rows, cols, counts })
}

/// Matches every ground-truth label to a prediction label maximizing the
/// total overlap. Ties resolve to the lowest prediction label for the
/// lowest ground-truth label first. Ground-truth labels left without a
/// prediction partner keep their own id when nothing else maps to it,
/// otherwise they take the lowest unused id.
pub fn max_weight_matching(weights: &CountMatrix) -> LabelPermutation {
    let w: Vec<Vec<i64>> = weights
        .counts
        .iter()
        .map(|r| r.iter().map(|&c| c as i64).collect())
        .collect();
    let assignment = if weights.rows == 0 {
        // no prediction labels: every column is unmatched
        crate::assignment::Assignment {
            row_of_col: vec![None; weights.cols],
            total_weight: 0,
        }
    } else {
        max_weight_assignment(&w)
    };

    let mut map: Vec<Option<u8>> = assignment.row_of_col.iter().map(|r| r.map(|i| i as u8)).collect();
    let mut used = [false; 256];
    for l in map.iter().flatten() {
        used[*l as usize] = true;
    }
    for (j, slot) in map.iter_mut().enumerate() {
        if slot.is_none() {
            let id = if !used[j] {
                j
            } else {
                used.iter().position(|u| !u).expect("at most 256 labels")
            };
            used[id] = true;
            *slot = Some(id as u8);
        }
    }
    LabelPermutation {
        map: map.into_iter().map(|l| l.unwrap()).collect(),
    }
}

/// Total matched weight of a permutation over a count matrix.
pub fn matched_weight(weights: &CountMatrix, perm: &LabelPermutation) -> u64 {
    (0..weights.cols)
        .filter_map(|j| {
            let i = perm.get(j as u8)? as usize;
            (i < weights.rows).then(|| weights.counts[i][j])
        })
        .sum()
}

pub fn permute_mask(gt: &LabelMask, perm: &LabelPermutation) -> Result<LabelMask> {
    let labels = gt
        .labels
        .iter()
        .map(|&l| {
            perm.get(l)
                .ok_or_else(|| Error::input(format!("label {l} outside the permutation domain")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelMask {
        width: gt.width,
        height: gt.height,
        labels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegScores {
    pub accuracy: f64,
    pub mean_iou: f64,
}

/// Pixel accuracy and mean IoU of `pred` against the permuted ground truth.
///
/// Prediction labels are first renumbered by order of first appearance so
/// that tie-breaking in the matching, and therefore both scores, does not
/// depend on which ids the prediction happened to use.
pub fn permuted_scores(pred: &LabelMask, gt: &LabelMask) -> Result<SegScores> {
    if pred.labels.is_empty() {
        return Err(Error::input("cannot score an empty mask"));
    }
    let (canonical, _) = canonical_relabel(pred);
    let cm = confusion_matrix(&canonical, gt)?;
    let perm = max_weight_matching(&cm);
    let permuted = permute_mask(gt, &perm)?;
    Ok(raw_scores(&canonical, &permuted))
}

/// Scores without any relabeling.
pub fn raw_scores(pred: &LabelMask, gt: &LabelMask) -> SegScores {
    let total = pred.labels.len();
    let mut inter = [0usize; 256];
    let mut pred_n = [0usize; 256];
    let mut gt_n = [0usize; 256];
    for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
        pred_n[p as usize] += 1;
        gt_n[g as usize] += 1;
        if p == g {
            inter[p as usize] += 1;
        }
    }
    let correct: usize = inter.iter().sum();
    let mut iou_sum = 0.0;
    let mut present = 0usize;
    for l in 0..256 {
        if gt_n[l] == 0 {
            continue;
        }
        present += 1;
        let union = pred_n[l] + gt_n[l] - inter[l];
        iou_sum += inter[l] as f64 / union as f64;
    }
    SegScores {
        accuracy: correct as f64 / total as f64,
        mean_iou: if present == 0 { 0.0 } else { iou_sum / present as f64 },
    }
}

/// Renumbers labels by first raster-order appearance.
fn canonical_relabel(mask: &LabelMask) -> (LabelMask, Vec<Option<u8>>) {
    let mut to_new: Vec<Option<u8>> = vec![None; 256];
    let mut next = 0u8;
    for &l in &mask.labels {
        if to_new[l as usize].is_none() {
            to_new[l as usize] = Some(next);
            next = next.wrapping_add(1);
        }
    }
    let relabeled = mask.map_labels(|l| to_new[l as usize].unwrap());
    (relabeled, to_new)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, l: &[u8]) -> LabelMask {
        LabelMask::new(w, h, l.to_vec()).unwrap()
    }

    #[test]
    fn confusion_identity_case() {
        let l: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let m = mask(20, 1, &l);
        let cm = confusion_matrix(&m, &m).unwrap();
        assert_eq!(cm.counts, vec![vec![10, 0], vec![0, 10]]);
    }

    #[test]
    fn confusion_two_by_two() {
        let pred = mask(2, 2, &[0, 0, 1, 1]);
        let gt = mask(2, 2, &[0, 1, 0, 1]);
        let cm = confusion_matrix(&pred, &gt).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(cm.total(), 4);
    }

    #[test]
    fn confusion_constant_masks() {
        let cm = confusion_matrix(&mask(5, 1, &[0; 5]), &mask(5, 1, &[1; 5])).unwrap();
        assert_eq!(cm.counts, vec![vec![0, 5]]);
    }

    #[test]
    fn confusion_dimension_mismatch() {
        let r = confusion_matrix(&mask(2, 1, &[0, 0]), &mask(1, 2, &[0, 0]));
        assert!(matches!(r, Err(Error::Input(_))));
    }

    fn cm(counts: Vec<Vec<u64>>) -> CountMatrix {
        CountMatrix {
            rows: counts.len(),
            cols: counts[0].len(),
            counts,
        }
    }

    #[test]
    fn matching_diagonal() {
        let w = cm(vec![vec![3, 0], vec![0, 7]]);
        let p = max_weight_matching(&w);
        assert_eq!(p.as_slice(), &[0, 1]);
        assert_eq!(matched_weight(&w, &p), 10);
    }

    #[test]
    fn matching_anti_diagonal() {
        let w = cm(vec![vec![0, 5], vec![7, 0]]);
        let p = max_weight_matching(&w);
        assert_eq!(p.as_slice(), &[1, 0]);
        assert_eq!(matched_weight(&w, &p), 12);
    }

    #[test]
    fn matching_empty() {
        let w = CountMatrix {
            rows: 0,
            cols: 0,
            counts: vec![],
        };
        assert!(max_weight_matching(&w).as_slice().is_empty());
    }

    #[test]
    fn matching_ties_pick_lowest_prediction() {
        let w = cm(vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(max_weight_matching(&w).as_slice(), &[0, 1]);
    }

    #[test]
    fn unmatched_ground_truth_labels_get_free_ids() {
        // one prediction label, three ground-truth labels; gt 2 wins label 0
        let w = cm(vec![vec![1, 2, 9]]);
        let p = max_weight_matching(&w);
        assert_eq!(p.as_slice(), &[1, 2, 0]);
    }

    #[test]
    fn unmatched_label_keeps_own_id_when_free() {
        let w = cm(vec![vec![4, 0, 0]]);
        let p = max_weight_matching(&w);
        assert_eq!(p.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn permute_swap_and_identity() {
        let gt = mask(2, 1, &[0, 1]);
        let swap = LabelPermutation::from_map(vec![1, 0]).unwrap();
        assert_eq!(permute_mask(&gt, &swap).unwrap().labels(), &[1, 0]);
        assert_eq!(permute_mask(&gt, &LabelPermutation::identity(2)).unwrap(), gt);
    }

    #[test]
    fn permute_round_trip() {
        let gt = mask(3, 2, &[0, 1, 2, 2, 1, 0]);
        let p = LabelPermutation::from_map(vec![2, 0, 1]).unwrap();
        let back = permute_mask(&permute_mask(&gt, &p).unwrap(), &p.inverse().unwrap()).unwrap();
        assert_eq!(back, gt);
    }

    #[test]
    fn permute_outside_domain() {
        let gt = mask(2, 1, &[0, 3]);
        let r = permute_mask(&gt, &LabelPermutation::identity(2));
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn non_injective_map_rejected() {
        assert!(LabelPermutation::from_map(vec![1, 1]).is_err());
    }

    #[test]
    fn relabeled_prediction_scores_perfectly() {
        let gt = mask(3, 2, &[0, 0, 1, 2, 2, 1]);
        let pred = gt.map_labels(|l| [7, 3, 5][l as usize]);
        let s = permuted_scores(&pred, &gt).unwrap();
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.mean_iou, 1.0);
    }

    #[test]
    fn two_by_two_accuracy_half() {
        let pred = mask(2, 2, &[0, 0, 1, 1]);
        let gt = mask(2, 2, &[0, 1, 0, 1]);
        let s = permuted_scores(&pred, &gt).unwrap();
        assert_eq!(s.accuracy, 0.5);
        // each label: intersection 1, union 3
        assert!((s.mean_iou - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_mask_rejected() {
        let m = mask(0, 0, &[]);
        assert!(permuted_scores(&m, &m).is_err());
    }
}
