//! Quasi-static resting orientations of a rigid object on a horizontal plane.
//!
//! Each candidate is a face of the convex hull (triangles that are coplanar
//! within [`StableParams::coplanar_angle_deg`] are merged first). A face is
//! kept when the centre of mass, projected along the face normal, falls inside
//! the face polygon with at least [`StableParams::com_margin`] to spare. The
//! probability of a face is the solid angle it subtends at the centre of mass,
//! renormalised over the kept faces.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::hull::{convex_hull, ConvexHull};
use super::mesh::TriMesh;
use super::polygon::{convex_hull_2d, inside_margin, Vec2};
use super::pose::{is_rotation, mat3_from_row_major, mat3_row_major, rotation_between, Mat3, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterOfMass {
    UniformDensity,
    Point(Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub coplanar_angle_deg: f64,
    /// Minimum distance (m) between the projected centre of mass and every
    /// support-polygon edge.
    pub com_margin: f64,
}

impl Default for StableParams {
    fn default() -> Self {
        Self {
            coplanar_angle_deg: 0.1,
            com_margin: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StablePose {
    /// Object frame → resting frame; the support face points along −Z.
    pub rotation: Mat3,
    /// Height of the object origin above the plane.
    pub rest_height: f64,
    pub probability: f64,
}

/// One merged hull face with the data used to judge it.
#[derive(Debug, Clone)]
pub struct SupportFace {
    pub normal: Vec3,
    pub offset: f64,
    /// Hull-point indices of the face polygon.
    pub vertices: Vec<usize>,
    pub solid_angle: f64,
    /// Signed distance of the projected COM to the nearest polygon edge.
    pub com_margin: f64,
}

pub fn compute_stable_poses(mesh: &TriMesh, com: CenterOfMass) -> Result<Vec<StablePose>> {
    compute_stable_poses_with(mesh, com, &StableParams::default())
}

pub fn compute_stable_poses_with(
    mesh: &TriMesh,
    com: CenterOfMass,
    params: &StableParams,
) -> Result<Vec<StablePose>> {
    let hull = convex_hull(&mesh.vertices)?;
    let com = match com {
        CenterOfMass::UniformDensity => mesh.center_of_mass()?,
        CenterOfMass::Point(p) => p,
    };
    let faces = support_faces(&hull, &com, params.coplanar_angle_deg);

    let accepted: Vec<&SupportFace> = faces
        .iter()
        .filter(|f| f.com_margin >= params.com_margin)
        .collect();
    let total: f64 = accepted.iter().map(|f| f.solid_angle).sum();

    let mut poses: Vec<StablePose> = accepted
        .iter()
        .map(|f| StablePose {
            rotation: rotation_between(&f.normal, &-Vec3::z()),
            rest_height: f.offset,
            probability: if total > 0.0 { f.solid_angle / total } else { 0.0 },
        })
        .collect();
    poses.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    Ok(poses)
}

/// Merges coplanar hull triangles and evaluates each merged face against `com`.
pub fn support_faces(hull: &ConvexHull, com: &Vec3, coplanar_angle_deg: f64) -> Vec<SupportFace> {
    let n = hull.faces.len();
    let cos_limit = coplanar_angle_deg.to_radians().cos();
    let edges = hull.edge_map();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (fi, f) in hull.faces.iter().enumerate() {
        let v = f.vertices;
        for k in 0..3 {
            if let Some(&g) = edges.get(&(v[(k + 1) % 3], v[k])) {
                if f.normal.dot(&hull.faces[g].normal) >= cos_limit {
                    let (ra, rb) = (find(&mut parent, fi), find(&mut parent, g));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = std::collections::HashMap::new();
    for fi in 0..n {
        let r = find(&mut parent, fi);
        let gi = *group_of_root.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[gi].push(fi);
    }

    groups
        .into_iter()
        .map(|tris| {
            let mut normal = Vec3::zeros();
            let mut solid_angle = 0.0;
            let mut verts: Vec<usize> = Vec::new();
            for &t in &tris {
                let [a, b, c] = hull.faces[t].vertices;
                let (pa, pb, pc) = (hull.points[a], hull.points[b], hull.points[c]);
                normal += (pb - pa).cross(&(pc - pa));
                solid_angle += triangle_solid_angle(&(pa - com), &(pb - com), &(pc - com));
                verts.extend([a, b, c]);
            }
            let normal = normal.normalize();
            verts.sort_unstable();
            verts.dedup();
            let offset = verts
                .iter()
                .map(|&i| normal.dot(&hull.points[i]))
                .fold(f64::NEG_INFINITY, f64::max);

            let (u, w) = plane_basis(&normal);
            let poly = convex_hull_2d(
                &verts
                    .iter()
                    .map(|&i| Vec2::new(u.dot(&hull.points[i]), w.dot(&hull.points[i])))
                    .collect::<Vec<_>>(),
            );
            let com_margin = inside_margin(&poly, &Vec2::new(u.dot(com), w.dot(com)));
            SupportFace {
                normal,
                offset,
                vertices: verts,
                solid_angle,
                com_margin,
            }
        })
        .collect()
}

/// Right-handed basis `(u, w)` of the plane with normal `n`, so that
/// `u × w = n` and polygons wound counter-clockwise about `n` stay CCW in 2D.
fn plane_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = helper.cross(n).normalize();
    let w = n.cross(&u);
    (u, w)
}

/// Solid angle of triangle `(a, b, c)` seen from the origin (Van Oosterom–Strackee).
pub fn triangle_solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let numer = a.dot(&b.cross(c));
    let denom = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    2.0 * numer.atan2(denom)
}

#[derive(Serialize, Deserialize)]
struct StablePoseRecord {
    rotation: [f64; 9],
    rest_height: f64,
    probability: f64,
}

impl Serialize for StablePose {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StablePoseRecord {
            rotation: mat3_row_major(&self.rotation),
            rest_height: self.rest_height,
            probability: self.probability,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StablePose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = StablePoseRecord::deserialize(deserializer)?;
        let rotation = mat3_from_row_major(&r.rotation);
        if !is_rotation(&rotation, 1e-6) {
            return Err(serde::de::Error::custom("rotation is not orthonormal"));
        }
        if !(0.0..=1.0).contains(&r.probability) {
            return Err(serde::de::Error::custom("probability outside [0, 1]"));
        }
        Ok(StablePose {
            rotation,
            rest_height: r.rest_height,
            probability: r.probability,
        })
    }
}

/// The on-disk pose list for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StablePoseFile {
    pub object_id: String,
    pub poses: Vec<StablePose>,
}

impl StablePoseFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StablePoseFile = serde_json::from_str(text)?;
        if !file.poses.is_empty() {
            let sum: f64 = file.poses.iter().map(|p| p.probability).sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::parse(
                    file.object_id.clone(),
                    format!("pose probabilities sum to {sum}"),
                ));
            }
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::parse_obj;
    use crate::geometry::pose::rot_x;
    use std::f64::consts::PI;

    fn cube() -> TriMesh {
        parse_obj(include_str!("../../tests/fixtures/cube.obj"), "cube").unwrap()
    }

    fn boxed(sx: f64, sy: f64, sz: f64) -> TriMesh {
        let c = cube();
        let m = Mat3::from_diagonal(&Vec3::new(sx, sy, sz));
        c.transformed(&m, &Vec3::zeros())
    }

    #[test]
    fn cube_has_six_equal_poses() {
        let poses = compute_stable_poses(&cube(), CenterOfMass::UniformDensity).unwrap();
        assert_eq!(poses.len(), 6);
        for p in &poses {
            assert!((p.probability - 1.0 / 6.0).abs() < 1e-6);
            assert!((p.rest_height - 0.5).abs() < 1e-12);
            assert!(is_rotation(&p.rotation, 1e-9));
        }
    }

    #[test]
    fn solid_angles_cover_the_sphere() {
        let hull = convex_hull(&boxed(0.3, 0.1, 0.05).vertices).unwrap();
        let faces = support_faces(&hull, &Vec3::new(0.01, 0.0, 0.0), 0.1);
        assert_eq!(faces.len(), 6);
        let total: f64 = faces.iter().map(|f| f.solid_angle).sum();
        assert!((total - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn plate_prefers_large_faces() {
        let plate = boxed(0.10, 0.10, 0.01);
        let poses = compute_stable_poses(&plate, CenterOfMass::UniformDensity).unwrap();
        assert!(poses.len() >= 2);
        // both large faces first, with identical weight
        for p in &poses[..2] {
            let down = p.rotation.transpose() * -Vec3::z();
            assert!(down.z.abs() > 1.0 - 1e-9);
            assert!((p.rest_height - 0.005).abs() < 1e-12);
        }
        assert!((poses[0].probability - poses[1].probability).abs() < 1e-12);
        assert!(poses[1].probability > poses[2].probability);
    }

    #[test]
    fn offset_com_drops_faces() {
        // COM pushed beyond the +x face's neighbours: only faces that still
        // contain its projection survive
        let poses = compute_stable_poses(
            &cube(),
            CenterOfMass::Point(Vec3::new(0.4995, 0.0, 0.0)),
        )
        .unwrap();
        // ±y and ±z faces now have the projection 0.5 mm from an edge
        assert_eq!(poses.len(), 2);
        let sum: f64 = poses.iter().map(|p| p.probability).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coplanar_input_is_geometry_error() {
        let flat = TriMesh::new(
            "flat",
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let err = compute_stable_poses(&flat, CenterOfMass::Point(Vec3::zeros())).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn rest_height_is_origin_height() {
        let shifted = cube().transformed(&rot_x(0.3), &Vec3::new(0.0, 0.0, 2.0));
        let poses = compute_stable_poses(&shifted, CenterOfMass::UniformDensity).unwrap();
        for p in &poses {
            let min_z = shifted
                .vertices
                .iter()
                .map(|v| (p.rotation * v).z)
                .fold(f64::INFINITY, f64::min);
            assert!((p.rest_height + min_z).abs() < 1e-9);
        }
    }

    #[test]
    fn pose_file_round_trip() {
        let poses = compute_stable_poses(&cube(), CenterOfMass::UniformDensity).unwrap();
        let file = StablePoseFile {
            object_id: "cube".into(),
            poses,
        };
        let back = StablePoseFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back.poses.len(), 6);
        for (a, b) in back.poses.iter().zip(&file.poses) {
            assert_eq!(a.probability, b.probability);
            assert_eq!(a.rotation, b.rotation);
        }
    }
}
