//! Grasp sets attached to object frames, and the top-down fallback grasp.
//!
//! Gripper frame: +Z is the approach direction, +Y the finger closing axis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::pca::{pca_xy, PointCloud};
use crate::geometry::pose::{Mat3, Pose, Vec3, ORTHONORMAL_TOL};
use crate::geometry::fps::farthest_point_sample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperSpec {
    pub max_opening: f64,
    /// Added to the measured object width.
    pub finger_clearance: f64,
    pub standoff: f64,
}

impl Default for GripperSpec {
    fn default() -> Self {
        Self {
            max_opening: 0.10,
            finger_clearance: 0.008,
            standoff: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grasp {
    pub pose: Pose,
    pub width: f64,
    pub standoff: f64,
}

impl Grasp {
    pub fn approach(&self) -> Vec3 {
        self.pose.rotation.column(2).into_owned()
    }

    pub fn closing_axis(&self) -> Vec3 {
        self.pose.rotation.column(1).into_owned()
    }

    pub fn validate(&self, gripper: &GripperSpec) -> Result<()> {
        if !(self.width >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative grasp width {}", self.width)));
        }
        if self.width > gripper.max_opening {
            return Err(Error::WidthExceeded {
                required: self.width,
                max_opening: gripper.max_opening,
            });
        }
        if !(self.standoff >= 0.0) || !self.pose.is_orthonormal() {
            return Err(Error::InvalidArgument("grasp pose or standoff invalid".into()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GraspRecord {
    quaternion: [f64; 4],
    translation: [f64; 3],
    width: f64,
    standoff: f64,
}

impl Serialize for Grasp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let t = self.pose.translation;
        GraspRecord {
            quaternion: self.pose.quaternion(),
            translation: [t.x, t.y, t.z],
            width: self.width,
            standoff: self.standoff,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grasp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GraspRecord::deserialize(d)?;
        let q = r.quaternion;
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !r.translation.iter().all(|c| c.is_finite()) {
            return Err(serde::de::Error::custom("invalid quaternion or translation"));
        }
        Ok(Grasp {
            pose: Pose::from_quaternion(q, Vec3::from(r.translation)),
            width: r.width,
            standoff: r.standoff,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspSet {
    pub object_id: String,
    pub grasps: Vec<Grasp>,
}

impl GraspSet {
    pub fn validate(&self, gripper: &GripperSpec) -> Result<()> {
        if self.grasps.is_empty() {
            return Err(Error::Empty("grasp set"));
        }
        for (i, g) in self.grasps.iter().enumerate() {
            g.validate(gripper)
                .map_err(|e| Error::parse(format!("grasp record {i}"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses a grasp file, reporting the index of the first malformed record.
pub fn parse_grasp_set(text: &str, gripper: &GripperSpec) -> Result<GraspSet> {
    #[derive(Deserialize)]
    struct Raw {
        object_id: String,
        grasps: Vec<serde_json::Value>,
    }
    let raw: Raw = serde_json::from_str(text).map_err(|e| Error::parse("grasp file", e.to_string()))?;
    let grasps = raw
        .grasps
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value::<Grasp>(v)
                .map_err(|e| Error::parse(format!("grasp record {i}"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let set = GraspSet {
        object_id: raw.object_id,
        grasps,
    };
    set.validate(gripper)?;
    Ok(set)
}

pub fn load_grasp_set(path: impl AsRef<Path>, gripper: &GripperSpec) -> Result<GraspSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grasp_set(&text, gripper)
}

/// Farthest-point subset of the grasps by translation, starting from grasp 0.
pub fn downsample_grasps(set: &GraspSet, n: usize) -> Result<GraspSet> {
    let pts: Vec<Vec3> = set.grasps.iter().map(|g| g.pose.translation).collect();
    let idx = farthest_point_sample(&pts, n, 0)?;
    Ok(GraspSet {
        object_id: set.object_id.clone(),
        grasps: idx.into_iter().map(|i| set.grasps[i].clone()).collect(),
    })
}

pub fn grasp_to_base_frame(grasp: &Grasp, object_pose: &Pose) -> Pose {
    object_pose.compose(&grasp.pose)
}

/// Straight-down grasp from a base-frame cloud, closing along the minor
/// principal axis of its X-Y spread.
pub fn top_down_grasp(cloud: &PointCloud, gripper: &GripperSpec) -> Result<Grasp> {
    let axes = pca_xy(cloud)?;
    let required = 2.0 * axes.extents[1] + gripper.finger_clearance;
    if required > gripper.max_opening {
        return Err(Error::WidthExceeded {
            required,
            max_opening: gripper.max_opening,
        });
    }
    let approach = Vec3::new(0.0, 0.0, -1.0);
    let closing = Vec3::new(axes.minor.x, axes.minor.y, 0.0);
    let rotation = Mat3::from_columns(&[closing.cross(&approach), closing, approach]);
    debug_assert!(crate::geometry::pose::is_rotation(&rotation, ORTHONORMAL_TOL));
    let top = cloud
        .points
        .iter()
        .map(|p| p.z)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Grasp {
        pose: Pose::new(
            rotation,
            Vec3::new(axes.centroid.x, axes.centroid.y, top + gripper.standoff),
        ),
        width: required,
        standoff: gripper.standoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::pose::rot_z;

    fn grasp_at(x: f64) -> Grasp {
        Grasp {
            pose: Pose::from_translation(Vec3::new(x, 0.0, 0.0)),
            width: 0.05,
            standoff: 0.1,
        }
    }

    fn box_cloud(sx: f64, sy: f64) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..=20 {
            for j in 0..=20 {
                let x = -sx / 2.0 + sx * i as f64 / 20.0;
                let y = -sy / 2.0 + sy * j as f64 / 20.0;
                pts.push(Vec3::new(x, y, 0.745));
                pts.push(Vec3::new(x, y, 0.80));
            }
        }
        PointCloud::new(pts)
    }

    #[test]
    fn file_round_trip_and_record_errors() {
        let set = GraspSet {
            object_id: "box".into(),
            grasps: (0..100).map(|i| grasp_at(i as f64 * 0.001)).collect(),
        };
        let text = set.to_json().unwrap();
        let back = parse_grasp_set(&text, &GripperSpec::default()).unwrap();
        assert_eq!(back.grasps.len(), 100);

        let bad = text.replacen("\"width\": 0.05", "\"width\": \"wide\"", 1);
        let err = parse_grasp_set(&bad, &GripperSpec::default()).unwrap_err();
        assert!(err.to_string().contains("grasp record 0"), "{err}");

        let empty = r#"{"object_id":"x","grasps":[]}"#;
        assert!(matches!(parse_grasp_set(empty, &GripperSpec::default()), Err(Error::Empty(_))));

        let wide = text.replace("\"width\": 0.05", "\"width\": 0.2");
        assert!(parse_grasp_set(&wide, &GripperSpec::default()).is_err());
    }

    #[test]
    fn downsample_on_a_line() {
        let set = GraspSet {
            object_id: "x".into(),
            grasps: (0..10).map(|i| grasp_at(i as f64)).collect(),
        };
        let d = downsample_grasps(&set, 3).unwrap();
        let xs: Vec<f64> = d.grasps.iter().map(|g| g.pose.translation.x).collect();
        assert_eq!(xs, vec![0.0, 9.0, 4.0]);
        assert_eq!(downsample_grasps(&set, 50).unwrap().grasps.len(), 10);
    }

    #[test]
    fn base_frame_transform() {
        let g = Grasp {
            pose: Pose::new(rot_z(0.3), Vec3::new(0.1, 0.0, 0.2)),
            width: 0.05,
            standoff: 0.1,
        };
        assert_eq!(grasp_to_base_frame(&g, &Pose::identity()), g.pose);
        let t = Vec3::new(1.0, 2.0, 3.0);
        let moved = grasp_to_base_frame(&g, &Pose::from_translation(t));
        assert!((moved.translation - (g.pose.translation + t)).norm() < 1e-12);
        let obj = Pose::new(rot_z(std::f64::consts::FRAC_PI_2), t);
        let h = obj.to_homogeneous() * g.pose.to_homogeneous();
        assert!((grasp_to_base_frame(&g, &obj).to_homogeneous() - h).norm() < 1e-12);
    }

    #[test]
    fn top_down_box() {
        let spec = GripperSpec::default();
        let g = top_down_grasp(&box_cloud(0.10, 0.04), &spec).unwrap();
        assert!((g.closing_axis() - Vec3::y()).norm() < 1e-6);
        assert!((g.width - (0.04 + spec.finger_clearance)).abs() < 1e-9);
        assert_eq!(g.approach().dot(&Vec3::new(0.0, 0.0, -1.0)), 1.0);
        assert!((g.pose.translation.z - (0.80 + spec.standoff)).abs() < 1e-12);

        let r = rot_z(30f64.to_radians());
        let rotated = PointCloud::new(box_cloud(0.10, 0.04).points.iter().map(|p| r * p).collect());
        let g2 = top_down_grasp(&rotated, &spec).unwrap();
        assert!((g2.closing_axis() - r * Vec3::y()).norm() < 1e-6);
    }

    #[test]
    fn top_down_too_wide() {
        assert!(matches!(
            top_down_grasp(&box_cloud(0.3, 0.2), &GripperSpec::default()),
            Err(Error::WidthExceeded { .. })
        ));
    }
}
