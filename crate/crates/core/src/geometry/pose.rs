use nalgebra::{Matrix3, Matrix4, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `RᵀR = I` and `det R = 1` for a rotation to count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Rigid transform `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(Mat3::identity(), translation)
    }

    pub fn from_rotation(rotation: Mat3) -> Self {
        Self::new(rotation, Vec3::zeros())
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_orthonormal(&self) -> bool {
        is_rotation(&self.rotation, ORTHONORMAL_TOL)
    }

    /// Unit quaternion as `[w, x, y, z]`, with `w ≥ 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            self.rotation,
        ));
        let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
        [q.w, q.i, q.j, q.k]
    }

    pub fn from_quaternion(wxyz: [f64; 4], translation: Vec3) -> Pose {
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
            wxyz[0], wxyz[1], wxyz[2], wxyz[3],
        ));
        Pose::new(*q.to_rotation_matrix().matrix(), translation)
    }
}

pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    let should_be_identity = m.transpose() * m;
    (should_be_identity - Mat3::identity()).abs().max() <= tol && (m.determinant() - 1.0).abs() <= tol
}

/// Rotation by `angle` radians about world Z.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Smallest rotation taking unit vector `from` onto unit vector `to`.
/// Antiparallel inputs rotate by π about an axis perpendicular to `from`.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> Mat3 {
    match Rotation3::rotation_between(from, to) {
        Some(r) => *r.matrix(),
        None => {
            let helper = if from.x.abs() < 0.9 {
                Vec3::x()
            } else {
                Vec3::y()
            };
            let axis = nalgebra::Unit::new_normalize(from.cross(&helper));
            *Rotation3::from_axis_angle(&axis, std::f64::consts::PI).matrix()
        }
    }
}

/// Row-major flattening, the layout used by the pose record files.
pub fn mat3_row_major(m: &Mat3) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

pub fn mat3_from_row_major(v: &[f64; 9]) -> Mat3 {
    Mat3::from_row_slice(v)
}

/// File form. `rotation` (row-major) is written so files reload bit-exactly;
/// readers that only supply `quaternion` are accepted too.
#[derive(Serialize, Deserialize)]
struct PoseRecord {
    quaternion: [f64; 4],
    translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<[f64; 9]>,
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseRecord {
            quaternion: self.quaternion(),
            translation: [self.translation.x, self.translation.y, self.translation.z],
            rotation: Some(mat3_row_major(&self.rotation)),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = PoseRecord::deserialize(deserializer)?;
        if r.quaternion.iter().chain(&r.translation).any(|v| !v.is_finite()) {
            return Err(serde::de::Error::custom("non-finite pose component"));
        }
        let norm = r.quaternion.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(serde::de::Error::custom("zero quaternion"));
        }
        let from_q = Pose::from_quaternion(r.quaternion, Vec3::from(r.translation));
        match r.rotation {
            None => Ok(from_q),
            Some(m) => {
                let rot = mat3_from_row_major(&m);
                if !is_rotation(&rot, ORTHONORMAL_TOL) {
                    return Err(serde::de::Error::custom("rotation is not orthonormal"));
                }
                if (rot - from_q.rotation).amax() > 1e-6 {
                    return Err(serde::de::Error::custom("rotation disagrees with quaternion"));
                }
                Ok(Pose::new(rot, from_q.translation))
            }
        }
    }
}
