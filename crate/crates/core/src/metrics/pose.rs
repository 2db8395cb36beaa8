use crate::error::{Error, Result};
use crate::geometry::fps::farthest_point_sample;
use crate::geometry::mesh::TriMesh;
use crate::geometry::pca::PointCloud;
use crate::geometry::pose::{Pose, Vec3};

pub const MODEL_POINTS: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub object_id: String,
    pub estimated: Pose,
    pub ground_truth: Pose,
    pub model_points: PointCloud,
}

impl PoseEstimate {
    pub fn add_s(&self) -> Result<f64> {
        add_s(&self.estimated, &self.ground_truth, &self.model_points)
    }
}

fn transformed(pose: &Pose, cloud: &PointCloud) -> Result<Vec<Vec3>> {
    if cloud.points.is_empty() {
        return Err(Error::Empty("model points"));
    }
    Ok(cloud.points.iter().map(|p| pose.transform_point(p)).collect())
}

/// Mean distance between corresponding model points.
pub fn add(est: &Pose, gt: &Pose, model: &PointCloud) -> Result<f64> {
    let a = transformed(est, model)?;
    let b = transformed(gt, model)?;
    Ok(a.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum::<f64>() / a.len() as f64)
}

/// Mean over estimated points of the distance to the closest ground-truth point.
pub fn add_s(est: &Pose, gt: &Pose, model: &PointCloud) -> Result<f64> {
    let a = transformed(est, model)?;
    let b = transformed(gt, model)?;
    let total: f64 = a
        .iter()
        .map(|p| {
            b.iter()
                .map(|q| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(total / a.len() as f64)
}

/// `n` surface points chosen by farthest-point sampling from the mesh
/// vertices and a barycentric lattice on every face.
pub fn sample_model_points(mesh: &TriMesh, n: usize) -> Result<PointCloud> {
    if mesh.faces.is_empty() {
        return Err(Error::Empty("mesh faces"));
    }
    let mut level = 1usize;
    while mesh.faces.len() * (level + 1) * (level + 2) / 2 < 2 * n && level < 64 {
        level += 1;
    }
    let mut candidates = Vec::new();
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        for i in 0..=level {
            for j in 0..=level - i {
                let (u, v) = (i as f64 / level as f64, j as f64 / level as f64);
                candidates.push(a + (b - a) * u + (c - a) * v);
            }
        }
    }
    let idx = farthest_point_sample(&candidates, n, 0)?;
    Ok(PointCloud::new(idx.into_iter().map(|i| candidates[i]).collect()))
}
