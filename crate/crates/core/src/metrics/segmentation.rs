//! Instance-segmentation scores: optimal one-to-one mask matching, region
//! overlap and boundary precision/recall/F-measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskRole {
    Predicted,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    pub masks: Vec<Mask>,
    pub role: MaskRole,
}

impl MaskSet {
    pub fn new(masks: Vec<Mask>, role: MaskRole) -> Result<Self> {
        if let Some(first) = masks.first() {
            for m in &masks[1..] {
                first.same_shape(m)?;
            }
        }
        if role == MaskRole::GroundTruth {
            for i in 0..masks.len() {
                for j in i + 1..masks.len() {
                    if masks[i].intersection_count(&masks[j]) > 0 {
                        return Err(Error::InvalidArgument(format!(
                            "ground-truth masks {i} and {j} overlap"
                        )));
                    }
                }
            }
        }
        Ok(Self { masks, role })
    }

    fn shape(&self) -> Option<(usize, usize)> {
        self.masks.first().map(|m| (m.width, m.height))
    }
}

/// Pixel-overlap F-measure of two masks, in [0, 1].
pub fn overlap_f(pred: &Mask, gt: &Mask) -> f64 {
    let tp = pred.intersection_count(gt) as f64;
    let (np, ng) = (pred.count() as f64, gt.count() as f64);
    if tp == 0.0 {
        return 0.0;
    }
    let (p, r) = (tp / np, tp / ng);
    2.0 * p * r / (p + r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<'a> {
    pub pred: &'a MaskSet,
    pub gt: &'a MaskSet,
    /// `(pred index, gt index, overlap F)`; pairs with zero overlap are dropped.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

impl Assignment<'_> {
    pub fn match_of_gt(&self, g: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == g).map(|p| p.0)
    }
}

/// Minimum-cost perfect matching on a square matrix (Kuhn-Munkres with
/// potentials). Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
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
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// One-to-one assignment maximising the summed overlap F-measure.
pub fn match_masks<'a>(pred: &'a MaskSet, gt: &'a MaskSet) -> Result<Assignment<'a>> {
    if let (Some(a), Some(b)) = (pred.shape(), gt.shape()) {
        if a != b {
            return Err(Error::DimensionMismatch(format!("{a:?} vs {b:?}")));
        }
    }
    let (np, ng) = (pred.masks.len(), gt.masks.len());
    let n = np.max(ng);
    let mut score = vec![vec![0.0; n]; n];
    for i in 0..np {
        for j in 0..ng {
            score[i][j] = overlap_f(&pred.masks[i], &gt.masks[j]);
        }
    }
    let cost: Vec<Vec<f64>> = score.iter().map(|r| r.iter().map(|s| -s).collect()).collect();
    let assign = hungarian(&cost);
    let mut pairs = Vec::new();
    for (i, &j) in assign.iter().enumerate() {
        if i < np && j < ng && score[i][j] > 0.0 {
            pairs.push((i, j, score[i][j]));
        }
    }
    let unmatched_pred = (0..np).filter(|i| !pairs.iter().any(|p| p.0 == *i)).collect();
    let unmatched_gt = (0..ng).filter(|j| !pairs.iter().any(|p| p.1 == *j)).collect();
    Ok(Assignment {
        pred,
        gt,
        pairs,
        unmatched_pred,
        unmatched_gt,
    })
}

/// Percentages in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Prf {
    fn from_counts(tp_pred: usize, n_pred: usize, tp_gt: usize, n_gt: usize) -> Prf {
        if n_pred == 0 && n_gt == 0 {
            return Prf {
                precision: 100.0,
                recall: 100.0,
                f_measure: 100.0,
            };
        }
        let p = if n_pred == 0 { 0.0 } else { tp_pred as f64 / n_pred as f64 };
        let r = if n_gt == 0 { 0.0 } else { tp_gt as f64 / n_gt as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf {
            precision: 100.0 * p,
            recall: 100.0 * r,
            f_measure: 100.0 * f,
        }
    }
}

/// Pixel precision over all predicted pixels and recall over all
/// ground-truth pixels, counting overlap only within matched pairs.
pub fn overlap_prf(a: &Assignment) -> Prf {
    let tp: usize = a
        .pairs
        .iter()
        .map(|&(i, j, _)| a.pred.masks[i].intersection_count(&a.gt.masks[j]))
        .sum();
    let n_pred = a.pred.masks.iter().map(Mask::count).sum();
    let n_gt = a.gt.masks.iter().map(Mask::count).sum();
    Prf::from_counts(tp, n_pred, tp, n_gt)
}

/// Share of ground-truth objects whose matched overlap F is at least 75%.
pub fn overlap75(a: &Assignment) -> f64 {
    let n = a.gt.masks.len();
    if n == 0 {
        return 100.0;
    }
    let hit = a.pairs.iter().filter(|p| p.2 >= 0.75).count();
    100.0 * hit as f64 / n as f64
}

/// Pixels of `m` within Chebyshev distance `tol` of a set pixel of `near`.
fn within(m: &Mask, near: &Mask, tol: usize) -> usize {
    let (w, h) = (m.width as isize, m.height as isize);
    let t = tol as isize;
    m.pixels()
        .into_iter()
        .filter(|&(x, y)| {
            let (x, y) = (x as isize, y as isize);
            ((y - t).max(0)..=(y + t).min(h - 1))
                .any(|yy| ((x - t).max(0)..=(x + t).min(w - 1)).any(|xx| near.get(xx as usize, yy as usize)))
        })
        .count()
}

/// Boundary precision/recall: a boundary pixel counts when it lies within
/// `tolerance` pixels (Chebyshev) of the boundary of its matched mask.
pub fn boundary_prf(a: &Assignment, tolerance: usize) -> Prf {
    let pb: Vec<Mask> = a.pred.masks.iter().map(Mask::boundary).collect();
    let gb: Vec<Mask> = a.gt.masks.iter().map(Mask::boundary).collect();
    let (mut tp_pred, mut tp_gt) = (0, 0);
    for &(i, j, _) in &a.pairs {
        tp_pred += within(&pb[i], &gb[j], tolerance);
        tp_gt += within(&gb[j], &pb[i], tolerance);
    }
    let n_pred = pb.iter().map(Mask::count).sum();
    let n_gt = gb.iter().map(Mask::count).sum();
    Prf::from_counts(tp_pred, n_pred, tp_gt, n_gt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScores {
    pub overlap: Prf,
    pub boundary: Prf,
    pub overlap75: f64,
}

pub fn segmentation_scores(pred: &MaskSet, gt: &MaskSet, tolerance: usize) -> Result<SegmentationScores> {
    let a = match_masks(pred, gt)?;
    Ok(SegmentationScores {
        overlap: overlap_prf(&a),
        boundary: boundary_prf(&a, tolerance),
        overlap75: overlap75(&a),
    })
}

/// Per-image mean of every score.
pub fn mean_scores(per_image: &[SegmentationScores]) -> Option<SegmentationScores> {
    if per_image.is_empty() {
        return None;
    }
    let n = per_image.len() as f64;
    let avg = |f: &dyn Fn(&SegmentationScores) -> Prf| Prf {
        precision: per_image.iter().map(|s| f(s).precision).sum::<f64>() / n,
        recall: per_image.iter().map(|s| f(s).recall).sum::<f64>() / n,
        f_measure: per_image.iter().map(|s| f(s).f_measure).sum::<f64>() / n,
    };
    Some(SegmentationScores {
        overlap: avg(&|s| s.overlap),
        boundary: avg(&|s| s.boundary),
        overlap75: per_image.iter().map(|s| s.overlap75).sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Mask {
        Mask::from_fn(w, h, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
    }

    fn set(masks: Vec<Mask>, role: MaskRole) -> MaskSet {
        MaskSet::new(masks, role).unwrap()
    }

    #[test]
    fn identical_sets() {
        let m = vec![rect(30, 30, 0, 0, 10, 10), rect(30, 30, 15, 15, 25, 28)];
        let p = set(m.clone(), MaskRole::Predicted);
        let g = set(m, MaskRole::GroundTruth);
        let a = match_masks(&p, &g).unwrap();
        assert_eq!(a.pairs.iter().map(|x| (x.0, x.1)).collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
        let o = overlap_prf(&a);
        assert_eq!((o.precision, o.recall, o.f_measure), (100.0, 100.0, 100.0));
        assert_eq!(overlap75(&a), 100.0);
        assert_eq!(boundary_prf(&a, 0).f_measure, 100.0);
    }

    #[test]
    fn empty_prediction() {
        let p = set(vec![], MaskRole::Predicted);
        let g = set(vec![rect(10, 10, 0, 0, 5, 5)], MaskRole::GroundTruth);
        let a = match_masks(&p, &g).unwrap();
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_gt, vec![0]);
        assert_eq!(overlap_prf(&a).f_measure, 0.0);
    }

    #[test]
    fn half_mask() {
        let g = set(vec![rect(40, 40, 0, 0, 20, 10)], MaskRole::GroundTruth);
        let p = set(vec![rect(40, 40, 0, 0, 10, 10)], MaskRole::Predicted);
        let o = overlap_prf(&match_masks(&p, &g).unwrap());
        assert_eq!(o.precision, 100.0);
        assert_eq!(o.recall, 50.0);
        assert!((o.f_measure - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_masks() {
        let g = set(vec![rect(40, 40, 0, 0, 10, 10)], MaskRole::GroundTruth);
        let p = set(vec![rect(40, 40, 20, 20, 30, 30)], MaskRole::Predicted);
        let a = match_masks(&p, &g).unwrap();
        let o = overlap_prf(&a);
        assert_eq!((o.precision, o.recall, o.f_measure, overlap75(&a)), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(boundary_prf(&a, 2).f_measure, 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let p = set(vec![rect(10, 10, 0, 0, 2, 2)], MaskRole::Predicted);
        let g = set(vec![rect(11, 10, 0, 0, 2, 2)], MaskRole::GroundTruth);
        assert!(matches!(match_masks(&p, &g), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn overlapping_ground_truth_rejected() {
        let m = rect(10, 10, 0, 0, 5, 5);
        assert!(MaskSet::new(vec![m.clone(), m], MaskRole::GroundTruth).is_err());
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn shifted_square_boundary() {
        let g = set(vec![rect(20, 20, 5, 5, 15, 15)], MaskRole::GroundTruth);
        let p = set(vec![rect(20, 20, 6, 5, 16, 15)], MaskRole::Predicted);
        let a = match_masks(&p, &g).unwrap();
        assert_eq!(boundary_prf(&a, 1).f_measure, 100.0);
        let b0 = boundary_prf(&a, 0);
        assert!(b0.precision < 100.0 && b0.precision > 0.0);
    }
}
