use super::pose::Vec3;
use crate::error::{Error, Result};

/// Greedy farthest-point sampling.
///
/// Starts at `start`, then repeatedly takes the point whose distance to the
/// nearest already-selected point is largest, lowest index first on ties.
/// Returns all indices (in selection order) when `n >= points.len()`.
pub fn farthest_point_sample(points: &[Vec3], n: usize, start: usize) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::Empty("farthest point sampling needs at least one point"));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if start >= points.len() {
        return Err(Error::InvalidArgument(format!(
            "start index {start} out of range for {} points",
            points.len()
        )));
    }
    let n = n.min(points.len());
    let mut selected = Vec::with_capacity(n);
    let mut taken = vec![false; points.len()];
    let mut nearest = vec![f64::INFINITY; points.len()];

    let mut current = start;
    loop {
        selected.push(current);
        taken[current] = true;
        if selected.len() == n {
            break;
        }
        let origin = points[current];
        let mut best = None;
        let mut best_dist = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = (p - origin).norm();
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > best_dist {
                best_dist = nearest[i];
                best = Some(i);
            }
        }
        match best {
            Some(i) => current = i,
            None => break,
        }
    }
    Ok(selected)
}
