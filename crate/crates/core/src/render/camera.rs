use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::pose::{Mat3, Pose, Vec3};

/// Pinhole camera. `extrinsics` maps robot-base coordinates into the camera
/// frame (x right, y down, z forward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub extrinsics: Pose,
}

impl Default for CameraModel {
    /// 640×480 head camera looking down at the default table.
    fn default() -> Self {
        CameraModel {
            fx: 554.0,
            fy: 554.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
            extrinsics: look_at(
                &Vec3::new(0.15, 0.0, 1.45),
                &Vec3::new(0.8, 0.0, 0.745),
                &Vec3::z(),
            ),
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && (0.0..self.width as f64).contains(&self.cx)
            && (0.0..self.height as f64).contains(&self.cy)
            && self.extrinsics.is_orthonormal();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid camera {self:?}")))
        }
    }

    /// Same camera with intrinsics and resolution multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CameraModel {
        CameraModel {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: self.cx * factor,
            cy: self.cy * factor,
            width: (self.width as f64 * factor).round() as u32,
            height: (self.height as f64 * factor).round() as u32,
            extrinsics: self.extrinsics,
        }
    }

    pub fn to_camera(&self, p_base: &Vec3) -> Vec3 {
        self.extrinsics.transform_point(p_base)
    }

    /// Camera centre in base coordinates.
    pub fn eye(&self) -> Vec3 {
        self.extrinsics.inverse().translation
    }

    /// Ray direction in camera coordinates through pixel position `(u, v)`.
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

pub fn project_point(cam: &CameraModel, p: &Vec3) -> Result<(f64, f64)> {
    if p.z <= 0.0 {
        return Err(Error::BehindCamera {
            x: p.x,
            y: p.y,
            z: p.z,
        });
    }
    Ok((cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy))
}

/// Base→camera transform for a camera at `eye` looking at `target`.
pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Pose {
    let forward = (target - eye).normalize();
    let right = forward.cross(up).normalize();
    let down = forward.cross(&right);
    let cam_to_base = Mat3::from_columns(&[right, down, forward]);
    let r = cam_to_base.transpose();
    Pose::new(r, -(r * eye))
}
