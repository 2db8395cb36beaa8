//! Built-in proxy geometry for the sixteen benchmark objects.
//!
//! Each object is approximated by a few convex primitives sized after the
//! published YCB dimensions. Grasp sets are synthesised from the convex hull
//! so the pipeline can run without any external grasp planner.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::Result;
use crate::geometry::fps::farthest_point_sample;
use crate::geometry::hull::convex_hull;
use crate::geometry::mesh::TriMesh;
use crate::geometry::polygon::Vec2;
use crate::geometry::pose::{rot_y, Mat3, Pose, Vec3};
use crate::grasp::{Grasp, GraspSet, GripperSpec};
use crate::scene::ObjectModel;

pub const OBJECT_IDS: [&str; 16] = [
    "003_cracker_box",
    "004_sugar_box",
    "005_tomato_soup_can",
    "006_mustard_bottle",
    "007_tuna_fish_can",
    "008_pudding_box",
    "009_gelatin_box",
    "010_potted_meat_can",
    "011_banana",
    "021_bleach_cleanser",
    "024_bowl",
    "025_mug",
    "035_power_drill",
    "037_scissors",
    "040_large_marker",
    "052_extra_large_clamp",
];

const CYLINDER_SEGMENTS: usize = 12;

/// Grasps synthesised per object for [`grasp_sets`].
pub const GRASPS_PER_OBJECT: usize = 100;

/// Closed prism between two polygons with the same vertex count, the first
/// at z = −h/2 and the second at z = +h/2. Both must be counter-clockwise.
pub fn loft(name: &str, bottom: &[Vec2], top: &[Vec2], h: f64) -> TriMesh {
    assert_eq!(bottom.len(), top.len());
    let n = bottom.len();
    let mut vertices: Vec<Vec3> = bottom.iter().map(|p| Vec3::new(p.x, p.y, -h / 2.0)).collect();
    vertices.extend(top.iter().map(|p| Vec3::new(p.x, p.y, h / 2.0)));
    let mut faces = Vec::with_capacity(4 * n);
    for i in 1..n - 1 {
        faces.push([0, i + 1, i]);
        faces.push([n, n + i, n + i + 1]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([i, j, n + j]);
        faces.push([i, n + j, n + i]);
    }
    TriMesh::new(name, vertices, faces).expect("loft indices are in range")
}

fn ellipse(a: f64, b: f64, segments: usize) -> Vec<Vec2> {
    (0..segments)
        .map(|i| {
            let t = TAU * i as f64 / segments as f64;
            Vec2::new(a * t.cos(), b * t.sin())
        })
        .collect()
}

pub fn box_mesh(name: &str, size: [f64; 3]) -> TriMesh {
    let (x, y) = (size[0] / 2.0, size[1] / 2.0);
    let rect = [
        Vec2::new(-x, -y),
        Vec2::new(x, -y),
        Vec2::new(x, y),
        Vec2::new(-x, y),
    ];
    loft(name, &rect, &rect, size[2])
}

/// Cylinder along z with an elliptical cross-section.
pub fn elliptic_cylinder(name: &str, a: f64, b: f64, h: f64) -> TriMesh {
    let ring = ellipse(a, b, CYLINDER_SEGMENTS);
    loft(name, &ring, &ring, h)
}

pub fn cylinder(name: &str, r: f64, h: f64) -> TriMesh {
    elliptic_cylinder(name, r, r, h)
}

pub fn frustum(name: &str, r_bottom: f64, r_top: f64, h: f64) -> TriMesh {
    loft(
        name,
        &ellipse(r_bottom, r_bottom, CYLINDER_SEGMENTS),
        &ellipse(r_top, r_top, CYLINDER_SEGMENTS),
        h,
    )
}

fn moved(mesh: TriMesh, rotation: Mat3, translation: [f64; 3]) -> TriMesh {
    mesh.transformed(&rotation, &Vec3::from(translation))
}

fn boxed_at(name: &str, size: [f64; 3], at: [f64; 3]) -> TriMesh {
    moved(box_mesh(name, size), Mat3::identity(), at)
}

/// Proxy mesh for one of [`OBJECT_IDS`].
pub fn object_mesh(id: &str) -> Option<TriMesh> {
    let m = match id {
        "003_cracker_box" => box_mesh(id, [0.16, 0.06, 0.21]),
        "004_sugar_box" => box_mesh(id, [0.09, 0.045, 0.175]),
        "005_tomato_soup_can" => cylinder(id, 0.033, 0.101),
        "006_mustard_bottle" => elliptic_cylinder(id, 0.048, 0.029, 0.19),
        "007_tuna_fish_can" => cylinder(id, 0.043, 0.033),
        "008_pudding_box" => box_mesh(id, [0.11, 0.089, 0.035]),
        "009_gelatin_box" => box_mesh(id, [0.085, 0.073, 0.028]),
        "010_potted_meat_can" => box_mesh(id, [0.101, 0.051, 0.083]),
        "011_banana" => moved(elliptic_cylinder(id, 0.018, 0.016, 0.19), rot_y(FRAC_PI_2), [0.0; 3]),
        "021_bleach_cleanser" => box_mesh(id, [0.10, 0.065, 0.25]),
        "024_bowl" => frustum(id, 0.05, 0.08, 0.055),
        "025_mug" => TriMesh::merge(
            id,
            &[
                cylinder(id, 0.04, 0.08),
                boxed_at(id, [0.025, 0.012, 0.05], [0.0525, 0.0, 0.0]),
            ],
        ),
        "035_power_drill" => TriMesh::merge(
            id,
            &[
                boxed_at(id, [0.18, 0.05, 0.06], [0.0, 0.0, 0.06]),
                boxed_at(id, [0.05, 0.045, 0.12], [-0.03, 0.0, -0.03]),
            ],
        ),
        "037_scissors" => {
            let outline = [
                Vec2::new(-0.10, -0.02),
                Vec2::new(0.0, -0.043),
                Vec2::new(0.10, -0.004),
                Vec2::new(0.10, 0.004),
                Vec2::new(0.0, 0.043),
                Vec2::new(-0.10, 0.02),
            ];
            loft(id, &outline, &outline, 0.014)
        }
        "040_large_marker" => moved(cylinder(id, 0.009, 0.12), rot_y(FRAC_PI_2), [0.0; 3]),
        "052_extra_large_clamp" => TriMesh::merge(
            id,
            &[
                boxed_at(id, [0.20, 0.03, 0.035], [0.0, -0.05, 0.0]),
                boxed_at(id, [0.03, 0.10, 0.035], [0.085, 0.015, 0.0]),
            ],
        ),
        _ => return None,
    };
    Some(m)
}

/// `003_cracker_box` → `003 cracker box`.
pub fn display_name(id: &str) -> String {
    id.replace('_', " ")
}

pub fn object_models() -> Result<Vec<ObjectModel>> {
    OBJECT_IDS
        .iter()
        .map(|id| {
            let mesh = object_mesh(id).expect("catalog id");
            Ok(ObjectModel::from_mesh(mesh)?.with_display_name(display_name(id)))
        })
        .collect()
}

/// Approach directions spread over the sphere (Fibonacci lattice).
fn sphere_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            Vec3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

/// Up to `count` grasps aimed at the hull centre from evenly spread
/// directions. For each direction the closing axis is the one, among
/// twelve candidates, with the smallest hull width; directions whose best
/// width does not fit the gripper are skipped.
pub fn synthesize_grasps(mesh: &TriMesh, count: usize, gripper: &GripperSpec) -> Result<GraspSet> {
    let hull = convex_hull(&mesh.vertices)?.vertices();
    let (lo, hi) = mesh.aabb();
    let center = (lo + hi) / 2.0;
    let width_along = |axis: &Vec3| {
        let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let s = axis.dot(&(p - center));
            a = a.min(s);
            b = b.max(s);
        }
        b - a
    };
    let mut grasps = Vec::with_capacity(count);
    for approach in sphere_directions(count * 12) {
        let helper = if approach.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let u = helper.cross(&approach).normalize();
        let v = approach.cross(&u);
        let (width, closing) = (0..12)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 12.0;
                let axis = u * t.cos() + v * t.sin();
                (width_along(&axis), axis)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("twelve candidates");
        let width = width + gripper.finger_clearance;
        if width > gripper.max_opening {
            continue;
        }
        let rotation = Mat3::from_columns(&[closing.cross(&approach), closing, approach]);
        grasps.push(Grasp {
            pose: Pose::new(rotation, center),
            width,
            standoff: gripper.standoff,
        });
    }
    if grasps.len() > count {
        // keep an evenly spread subset of the feasible approach directions
        let dirs: Vec<Vec3> = grasps.iter().map(Grasp::approach).collect();
        let mut keep = farthest_point_sample(&dirs, count, 0)?;
        keep.sort_unstable();
        grasps = keep.into_iter().map(|i| grasps[i].clone()).collect();
    }
    let set = GraspSet {
        object_id: mesh.name.clone(),
        grasps,
    };
    set.validate(gripper)?;
    Ok(set)
}

pub fn grasp_sets(models: &[ObjectModel], gripper: &GripperSpec) -> Result<BTreeMap<String, GraspSet>> {
    models
        .iter()
        .map(|m| Ok((m.id.clone(), synthesize_grasps(&m.mesh, GRASPS_PER_OBJECT, gripper)?)))
        .collect()
}
