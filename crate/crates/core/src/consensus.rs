//! Regional RANSAC.
//!
//! Matches are bucketed by the region pair their endpoints fall in, each
//! bucket gets its own RANSAC, and the inlier counts feed a maximum-weight
//! bipartite matching over region labels. Surviving pairs are the dominant
//! regions used by the rest of the pipeline.

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::geometry::{estimate_similarity, ransac_homography, Homography, MatchSet, RansacParams, SimilarityParams};
use crate::segmetrics::LabelMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams {
    pub ransac: RansacParams,
    /// Candidates with fewer matches are not tried.
    pub min_matches: usize,
    /// Pairs with fewer inliers are not accepted.
    pub min_inliers: usize,
    /// Regions covering less than this fraction of their image are ignored.
    pub min_region_fraction: f64,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        ConsensusParams {
            ransac: RansacParams::default(),
            min_matches: 8,
            min_inliers: 12,
            min_region_fraction: 0.005,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegionPairCandidate {
    pub region_a: u8,
    pub region_b: u8,
    pub matches: MatchSet,
    /// Positions of `matches` in the original match set.
    pub source_indices: Vec<usize>,
    /// Inlier count after RANSAC; zero until [`regional_ransac`] runs.
    pub weight: usize,
}

#[derive(Debug, Clone)]
pub struct RegionCorrespondence {
    pub region_a: u8,
    pub region_b: u8,
    /// Maps image-a coordinates to image-b coordinates.
    pub homography: Homography,
    pub inliers: MatchSet,
    /// Positions of `inliers` in the original match set.
    pub inlier_indices: Vec<usize>,
    /// Least-squares similarity a → b over `inliers`.
    pub similarity: SimilarityParams,
}

fn dominant_labels(mask: &LabelMask, min_fraction: f64) -> Vec<bool> {
    let total = (mask.width() * mask.height()) as f64;
    let mut keep = vec![false; 256];
    for (l, &n) in mask.histogram().iter().enumerate() {
        keep[l] = n > 0 && n as f64 >= min_fraction * total;
    }
    keep
}

/// Buckets matches by `(mask_a(p), mask_b(q))`. Endpoints outside a mask or
/// in a non-dominant region are dropped, as are buckets below
/// `min_matches`. Output is sorted by `(region_a, region_b)`.
pub fn group_matches_by_region(
    matches: &MatchSet,
    mask_a: &LabelMask,
    mask_b: &LabelMask,
    params: &ConsensusParams,
) -> Vec<RegionPairCandidate> {
    let keep_a = dominant_labels(mask_a, params.min_region_fraction);
    let keep_b = dominant_labels(mask_b, params.min_region_fraction);
    let mut buckets: std::collections::BTreeMap<(u8, u8), Vec<usize>> = Default::default();
    for (i, m) in matches.pairs.iter().enumerate() {
        let (Some(a), Some(b)) = (mask_a.at(m.x1, m.y1), mask_b.at(m.x2, m.y2)) else {
            continue;
        };
        if keep_a[a as usize] && keep_b[b as usize] {
            buckets.entry((a, b)).or_default().push(i);
        }
    }
    buckets
        .into_iter()
        .filter(|(_, idx)| idx.len() >= params.min_matches)
        .map(|((a, b), idx)| RegionPairCandidate {
            region_a: a,
            region_b: b,
            matches: matches.subset(&idx),
            source_indices: idx,
            weight: 0,
        })
        .collect()
}

/// Runs RANSAC on every candidate (seed = base seed + candidate index),
/// then keeps the one-to-one region pairing of maximum total inlier count.
/// Fails with a consensus error when nothing survives.
pub fn regional_ransac(
    candidates: &mut [RegionPairCandidate],
    params: &ConsensusParams,
) -> Result<Vec<RegionCorrespondence>> {
    let mut fits = Vec::with_capacity(candidates.len());
    for (k, cand) in candidates.iter_mut().enumerate() {
        let ransac = RansacParams {
            seed: params.ransac.seed.wrapping_add(k as u64),
            ..params.ransac
        };
        match ransac_homography(&cand.matches, &ransac) {
            Ok(fit) => {
                cand.weight = fit.inliers.len();
                fits.push(Some(fit));
            }
            Err(_) => {
                cand.weight = 0;
                fits.push(None);
            }
        }
    }

    let rows = candidates.iter().map(|c| c.region_a as usize + 1).max().unwrap_or(0);
    let cols = candidates.iter().map(|c| c.region_b as usize + 1).max().unwrap_or(0);
    let mut weights = vec![vec![0i64; cols]; rows];
    let mut which = vec![vec![None; cols]; rows];
    for (k, c) in candidates.iter().enumerate() {
        if c.weight >= params.min_inliers {
            weights[c.region_a as usize][c.region_b as usize] = c.weight as i64;
            which[c.region_a as usize][c.region_b as usize] = Some(k);
        }
    }
    let assignment = max_weight_assignment(&weights);

    let mut out = Vec::new();
    for (b, a) in assignment.row_of_col.iter().enumerate() {
        let Some(a) = *a else { continue };
        let Some(k) = which[a][b] else { continue };
        let fit = fits[k].as_ref().expect("weighted candidates have a fit");
        let cand = &candidates[k];
        let inliers = cand.matches.subset(&fit.inliers);
        let similarity = estimate_similarity(&inliers)?;
        out.push(RegionCorrespondence {
            region_a: cand.region_a,
            region_b: cand.region_b,
            homography: fit.homography,
            inlier_indices: fit.inliers.iter().map(|&i| cand.source_indices[i]).collect(),
            inliers,
            similarity,
        });
    }
    if out.is_empty() {
        return Err(Error::Consensus(format!(
            "no region pair reached {} inliers among {} candidates",
            params.min_inliers,
            candidates.len()
        )));
    }
    out.sort_by_key(|c| (c.region_a, c.region_b));
    Ok(out)
}

/// Whole-image fallback: one RANSAC over all matches, reported as a single
/// correspondence between label 0 of each image.
pub fn global_correspondence(matches: &MatchSet, params: &ConsensusParams) -> Result<RegionCorrespondence> {
    let fit = ransac_homography(matches, &params.ransac)
        .map_err(|e| Error::Consensus(format!("global RANSAC failed: {e}")))?;
    if fit.inliers.len() < params.min_inliers.min(matches.len()).max(4) {
        return Err(Error::Consensus(format!(
            "global RANSAC found only {} inliers",
            fit.inliers.len()
        )));
    }
    let inliers = matches.subset(&fit.inliers);
    let similarity = estimate_similarity(&inliers)?;
    Ok(RegionCorrespondence {
        region_a: 0,
        region_b: 0,
        homography: fit.homography,
        inlier_indices: fit.inliers,
        inliers,
        similarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointPair;

    fn half_masks(w: usize, h: usize) -> LabelMask {
        let labels = (0..w * h).map(|i| if i % w < w / 2 { 2 } else { 5 }).collect();
        LabelMask::new(w, h, labels).unwrap()
    }

    #[test]
    fn single_bucket() {
        let mask_a = LabelMask::filled(50, 50, 2);
        let mask_b = LabelMask::filled(50, 50, 5);
        let m: MatchSet = (0..20)
            .map(|i| PointPair::new(i as f64, 1.0, i as f64 + 1.0, 2.0))
            .collect();
        let c = group_matches_by_region(&m, &mask_a, &mask_b, &ConsensusParams::default());
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].region_a, c[0].region_b), (2, 5));
        assert_eq!(c[0].matches.len(), 20);
    }

    #[test]
    fn empty_input_no_candidates() {
        let mask = LabelMask::filled(10, 10, 0);
        let c = group_matches_by_region(&MatchSet::default(), &mask, &mask, &ConsensusParams::default());
        assert!(c.is_empty());
    }

    #[test]
    fn small_buckets_and_tiny_regions_dropped() {
        let mask_a = half_masks(100, 100);
        // label 9 covers a single pixel: below 0.5%
        let mut labels = mask_a.labels().to_vec();
        labels[0] = 9;
        let mask_b = LabelMask::new(100, 100, labels).unwrap();
        let mut pairs = vec![PointPair::new(0.0, 0.0, 0.0, 0.0); 10];
        pairs.extend((0..5).map(|i| PointPair::new(70.0 + i as f64, 5.0, 70.0, 5.0)));
        let c = group_matches_by_region(&MatchSet::new(pairs), &mask_a, &mask_b, &ConsensusParams::default());
        assert!(c.is_empty());
    }

    #[test]
    fn stronger_pairing_wins() {
        // region 0 of A matched to regions 1 (many) and 2 (few) of B
        let mask_a = LabelMask::filled(200, 200, 0);
        let labels = (0..200 * 200).map(|i| if i % 200 < 150 { 1 } else { 2 }).collect();
        let mask_b = LabelMask::new(200, 200, labels).unwrap();
        let mut pairs = Vec::new();
        for i in 0..50 {
            let (x, y) = ((i * 7 % 120) as f64 + 3.0, (i * 13 % 190) as f64 + 3.0);
            pairs.push(PointPair::new(x, y, x + 10.0, y));
        }
        for i in 0..20 {
            let (x, y) = ((i * 11 % 40) as f64 + 155.0, (i * 17 % 190) as f64 + 3.0);
            pairs.push(PointPair::new(x - 100.0, y, x, y * 0.5 + 20.0));
        }
        let params = ConsensusParams {
            min_inliers: 12,
            ..Default::default()
        };
        let mut cands = group_matches_by_region(&MatchSet::new(pairs), &mask_a, &mask_b, &params);
        assert_eq!(cands.len(), 2);
        let corr = regional_ransac(&mut cands, &params).unwrap();
        assert_eq!(corr.len(), 1);
        assert_eq!((corr[0].region_a, corr[0].region_b), (0, 1));
        assert_eq!(corr[0].inliers.len(), 50);
    }

    #[test]
    fn nothing_survives_is_consensus_error() {
        let mask = LabelMask::filled(100, 100, 0);
        let pairs = (0..10)
            .map(|i| PointPair::new(i as f64 * 9.0, (i * i % 97) as f64, (i * 31 % 89) as f64, i as f64))
            .collect();
        let params = ConsensusParams::default();
        let mut c = group_matches_by_region(&MatchSet::new(pairs), &mask, &mask, &params);
        assert!(matches!(regional_ransac(&mut c, &params), Err(Error::Consensus(_))));
    }
}
