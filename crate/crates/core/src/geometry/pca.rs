//! Principal axes of the X-Y projection of a point cloud, and the oriented
//! box built on them.

use super::polygon::Vec2;
use super::pose::Vec3;
use crate::error::{Error, Result};

/// Relative eigenvalue gap below which the two axes are treated as tied.
const EIGEN_TIE_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vec3>() / self.points.len() as f64)
    }
}

impl From<Vec<Vec3>> for PointCloud {
    fn from(points: Vec<Vec3>) -> Self {
        Self::new(points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarAxes {
    pub major: Vec2,
    pub minor: Vec2,
    /// Largest |projection| of the centred points onto `major` and `minor`.
    pub extents: [f64; 2],
    pub centroid: Vec2,
}

/// Flips `v` so that its larger-magnitude component is positive; on a tie, X decides.
fn canonical_sign(v: Vec2) -> Vec2 {
    let key = if v.y.abs() > v.x.abs() { v.y } else { v.x };
    if key < 0.0 {
        -v
    } else {
        v
    }
}

pub fn pca_xy(cloud: &PointCloud) -> Result<PlanarAxes> {
    let pts = &cloud.points;
    if pts.len() < 2 {
        return Err(Error::DegenerateCloud(format!(
            "need at least 2 points, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::DegenerateCloud("non-finite coordinate".into()));
    }
    let n = pts.len() as f64;
    let mean = pts.iter().fold(Vec2::zeros(), |acc, p| acc + Vec2::new(p.x, p.y)) / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let dx = p.x - mean.x;
        let dy = p.y - mean.y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (sxx, syy, sxy) = (sxx / n, syy / n, sxy / n);
    let trace = sxx + syy;
    if trace <= 0.0 {
        return Err(Error::DegenerateCloud("all points coincide in X-Y".into()));
    }
    let half_gap = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();

    let (major, minor) = if 2.0 * half_gap <= EIGEN_TIE_REL * trace {
        // isotropic spread: fixed convention, minor (closing) axis along +X
        (Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0))
    } else {
        let lambda = trace / 2.0 + half_gap;
        // pick the better-conditioned of the two eigenvector formulas
        let v = if sxx >= syy {
            Vec2::new(lambda - syy, sxy)
        } else {
            Vec2::new(sxy, lambda - sxx)
        };
        let major = canonical_sign(v.normalize());
        let minor = canonical_sign(Vec2::new(-major.y, major.x));
        (major, minor)
    };

    let mut extents = [0.0f64; 2];
    for p in pts {
        let d = Vec2::new(p.x, p.y) - mean;
        extents[0] = extents[0].max(d.dot(&major).abs());
        extents[1] = extents[1].max(d.dot(&minor).abs());
    }
    Ok(PlanarAxes {
        major,
        minor,
        extents,
        centroid: mean,
    })
}

/// Box whose first two axes are the planar principal axes and whose third is world Z.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    /// Half-lengths along `axes`.
    pub extents: [f64; 3],
}

impl OrientedBox {
    pub fn contains(&self, p: &Vec3, slack: f64) -> bool {
        let d = p - self.center;
        (0..3).all(|i| d.dot(&self.axes[i]).abs() <= self.extents[i] + slack)
    }

    pub fn footprint_area(&self) -> f64 {
        4.0 * self.extents[0] * self.extents[1]
    }

    pub fn inflated(&self, margin: f64) -> OrientedBox {
        OrientedBox {
            extents: self.extents.map(|e| e + margin),
            ..*self
        }
    }
}

pub fn oriented_bbox_xy(cloud: &PointCloud) -> Result<OrientedBox> {
    let pca = pca_xy(cloud)?;
    let axes2 = [pca.major, pca.minor];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &cloud.points {
        let d = Vec2::new(p.x, p.y) - pca.centroid;
        for k in 0..2 {
            let s = d.dot(&axes2[k]);
            lo[k] = lo[k].min(s);
            hi[k] = hi[k].max(s);
        }
        lo[2] = lo[2].min(p.z);
        hi[2] = hi[2].max(p.z);
    }
    let mid = |k: usize| (lo[k] + hi[k]) / 2.0;
    let c2 = pca.centroid + pca.major * mid(0) + pca.minor * mid(1);
    Ok(OrientedBox {
        center: Vec3::new(c2.x, c2.y, mid(2)),
        axes: [
            Vec3::new(pca.major.x, pca.major.y, 0.0),
            Vec3::new(pca.minor.x, pca.minor.y, 0.0),
            Vec3::z(),
        ],
        extents: [
            (hi[0] - lo[0]) / 2.0,
            (hi[1] - lo[1]) / 2.0,
            (hi[2] - lo[2]) / 2.0,
        ],
    })
}
