//! Cluttered five-object tabletop scenes on reachable cells.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::hull::convex_hull;
use crate::geometry::mesh::TriMesh;
use crate::geometry::pca::{oriented_bbox_xy, OrientedBox, PointCloud};
use crate::geometry::pose::{rot_z, Pose, Vec3};
use crate::geometry::stable::{compute_stable_poses, CenterOfMass, StablePose};
use crate::grasp::{grasp_to_base_frame, GraspSet};
use crate::reachability::{ReachabilityMap, TableSpec};
use crate::render::CameraModel;
use crate::seed;

pub const MAX_OBJECTS_PER_SCENE: usize = 5;

/// An object mesh together with its resting orientations.
#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub id: String,
    pub display_name: String,
    pub mesh: TriMesh,
    pub stable_poses: Vec<StablePose>,
    hull_points: Vec<Vec3>,
}

impl ObjectModel {
    pub fn new(mesh: TriMesh, stable_poses: Vec<StablePose>) -> Result<Self> {
        if stable_poses.is_empty() {
            return Err(Error::Geometry(format!("{} has no stable pose", mesh.name)));
        }
        let hull_points = convex_hull(&mesh.vertices)?.vertices();
        Ok(Self {
            id: mesh.name.clone(),
            display_name: mesh.name.clone(),
            mesh,
            stable_poses,
            hull_points,
        })
    }

    /// Uses uniform density for the centre of mass.
    pub fn from_mesh(mesh: TriMesh) -> Result<Self> {
        let poses = compute_stable_poses(&mesh, CenterOfMass::UniformDensity)?;
        Self::new(mesh, poses)
    }

    pub fn with_display_name(mut self, name: impl Into<String>) -> Self {
        self.display_name = name.into();
        self
    }

    pub fn hull_points(&self) -> &[Vec3] {
        &self.hull_points
    }

    pub fn world_hull(&self, pose: &Pose) -> Vec<Vec3> {
        self.hull_points.iter().map(|p| pose.transform_point(p)).collect()
    }
}

pub fn find_object<'a>(objects: &'a [ObjectModel], id: &str) -> Result<&'a ObjectModel> {
    objects
        .iter()
        .find(|o| o.id == id)
        .ok_or_else(|| Error::Asset(format!("unknown object {id}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub object_id: String,
    pub stable_pose_index: usize,
    /// Radians in [0, 2π).
    pub z_rotation: f64,
    pub cell: (usize, usize),
    pub world_pose: Pose,
}

impl Placement {
    pub fn new(
        object: &ObjectModel,
        stable_pose_index: usize,
        z_rotation: f64,
        cell: (usize, usize),
        map: &ReachabilityMap,
    ) -> Result<Self> {
        let pose = object.stable_poses.get(stable_pose_index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{} has no stable pose {stable_pose_index}",
                object.id
            ))
        })?;
        let c = map.cell_center(cell.0, cell.1);
        Ok(Self {
            object_id: object.id.clone(),
            stable_pose_index,
            z_rotation,
            cell,
            world_pose: Pose::new(
                rot_z(z_rotation) * pose.rotation,
                Vec3::new(c.x, c.y, c.z + pose.rest_height),
            ),
        })
    }
}

/// Axis-aligned X-Y rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Footprint {
    pub fn of_points(points: &[Vec3]) -> Footprint {
        let mut fp = Footprint {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        };
        for p in points {
            fp.min = [fp.min[0].min(p.x), fp.min[1].min(p.y)];
            fp.max = [fp.max[0].max(p.x), fp.max[1].max(p.y)];
        }
        fp
    }
}

pub fn footprint(object: &ObjectModel, placement: &Placement) -> Footprint {
    Footprint::of_points(&object.world_hull(&placement.world_pose))
}

/// True iff the two rectangles, each grown by `margin`, are disjoint.
/// Touching counts as a collision.
pub fn check_collision_free(a: &Footprint, b: &Footprint, margin: f64) -> bool {
    let overlaps = |k: usize| {
        a.min[k] - margin <= b.max[k] + margin && b.min[k] - margin <= a.max[k] + margin
    };
    !(overlaps(0) && overlaps(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub seed: u64,
    pub table: TableSpec,
    pub camera: CameraModel,
    pub placements: Vec<Placement>,
}

impl Scene {
    pub fn id_for_seed(seed: u64) -> String {
        format!("scene-{seed:016x}")
    }

    pub fn object_ids(&self) -> Vec<&str> {
        self.placements.iter().map(|p| p.object_id.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGenConfig {
    pub objects_per_scene: usize,
    pub nearby_radius: f64,
    pub collision_margin: f64,
    /// Candidate cells tried per placement before restarting the scene.
    pub cell_attempts: usize,
    pub restarts: usize,
    pub camera: CameraModel,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            objects_per_scene: MAX_OBJECTS_PER_SCENE,
            nearby_radius: 0.25,
            collision_margin: 0.005,
            cell_attempts: 100,
            restarts: 20,
            camera: CameraModel::default(),
        }
    }
}

impl SceneGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_OBJECTS_PER_SCENE).contains(&self.objects_per_scene) {
            return Err(Error::Config(format!(
                "objects_per_scene must be in 1..={MAX_OBJECTS_PER_SCENE}"
            )));
        }
        if !(self.nearby_radius >= 0.0) || !(self.collision_margin >= 0.0) {
            return Err(Error::Config("radius and margin must be non-negative".into()));
        }
        if self.cell_attempts == 0 || self.restarts == 0 {
            return Err(Error::Config("retry budget must be positive".into()));
        }
        self.camera.validate()
    }
}

fn xy_distance(a: &Vec3, b: &Vec3) -> f64 {
    (a.xy() - b.xy()).norm()
}

/// Places `cfg.objects_per_scene` distinct objects one at a time. The first
/// goes to a uniformly random reachable cell; each later one goes to a
/// reachable cell within `nearby_radius` of a uniformly chosen placed anchor.
pub fn generate_scene(
    objects: &[ObjectModel],
    map: &ReachabilityMap,
    seed: u64,
    cfg: &SceneGenConfig,
) -> Result<Scene> {
    cfg.validate()?;
    if map.is_empty() {
        return Err(Error::Empty("reachability map has no reachable cell"));
    }
    if objects.len() < cfg.objects_per_scene {
        return Err(Error::Config(format!(
            "{} objects requested but only {} available",
            cfg.objects_per_scene,
            objects.len()
        )));
    }
    let ids: BTreeSet<&str> = objects.iter().map(|o| o.id.as_str()).collect();
    if ids.len() != objects.len() {
        return Err(Error::Config("object ids are not unique".into()));
    }

    let cells = map.reachable_cells();
    let centers: Vec<Vec3> = cells.iter().map(|&(r, c)| map.cell_center(r, c)).collect();
    let neighbours: Vec<Vec<usize>> = centers
        .iter()
        .map(|a| {
            (0..centers.len())
                .filter(|&j| xy_distance(a, &centers[j]) <= cfg.nearby_radius)
                .collect()
        })
        .collect();
    let pose_dists: Vec<WeightedIndex<f64>> = objects
        .iter()
        .map(|o| {
            WeightedIndex::new(o.stable_poses.iter().map(|p| p.probability))
                .map_err(|e| Error::Geometry(format!("{}: bad pose probabilities ({e})", o.id)))
        })
        .collect::<Result<_>>()?;

    let mut rng = seed::rng(seed);
    let mut best: Vec<Placement> = Vec::new();

    for _ in 0..cfg.restarts {
        let mut placed: Vec<(usize, usize, Footprint)> = Vec::new(); // (object, cell slot, footprint)
        let mut placements: Vec<Placement> = Vec::new();
        while placements.len() < cfg.objects_per_scene {
            let mut success = false;
            for _ in 0..cfg.cell_attempts {
                let free: Vec<usize> = (0..objects.len())
                    .filter(|i| placed.iter().all(|p| p.0 != *i))
                    .collect();
                let oi = free[rng.random_range(0..free.len())];
                let slot = if placed.is_empty() {
                    rng.random_range(0..cells.len())
                } else {
                    let anchor = placed[rng.random_range(0..placed.len())].1;
                    let near = &neighbours[anchor];
                    near[rng.random_range(0..near.len())]
                };
                let pose_index = pose_dists[oi].sample(&mut rng);
                let theta = rng.random_range(0.0..TAU);
                let placement = Placement::new(&objects[oi], pose_index, theta, cells[slot], map)?;
                let fp = footprint(&objects[oi], &placement);
                if placed
                    .iter()
                    .all(|(_, _, other)| check_collision_free(&fp, other, cfg.collision_margin))
                {
                    placed.push((oi, slot, fp));
                    placements.push(placement);
                    success = true;
                    break;
                }
            }
            if !success {
                break;
            }
        }
        if placements.len() == cfg.objects_per_scene {
            return Ok(Scene {
                id: Scene::id_for_seed(seed),
                seed,
                table: map.table,
                camera: cfg.camera,
                placements,
            });
        }
        if placements.len() > best.len() {
            best = placements;
        }
    }

    Err(Error::GenerationFailed {
        restarts: cfg.restarts,
        placed: best.len(),
        requested: cfg.objects_per_scene,
        partial: Box::new(Scene {
            id: Scene::id_for_seed(seed),
            seed,
            table: map.table,
            camera: cfg.camera,
            placements: best,
        }),
    })
}

/// Structural problems with a scene, one message per violation.
pub fn scene_violations(
    scene: &Scene,
    objects: &[ObjectModel],
    map: &ReachabilityMap,
    cfg: &SceneGenConfig,
) -> Vec<String> {
    let mut out = Vec::new();
    if scene.placements.len() > MAX_OBJECTS_PER_SCENE {
        out.push(format!("{} placements exceed the limit", scene.placements.len()));
    }
    let mut seen = BTreeSet::new();
    let mut fps = Vec::new();
    for (i, p) in scene.placements.iter().enumerate() {
        if !seen.insert(p.object_id.as_str()) {
            out.push(format!("placement {i}: {} appears twice", p.object_id));
        }
        let (r, c) = p.cell;
        if r >= map.gridspec.rows || c >= map.gridspec.cols || !map.get(r, c) {
            out.push(format!("placement {i}: cell ({r}, {c}) is not reachable"));
            continue;
        }
        let Ok(obj) = find_object(objects, &p.object_id) else {
            out.push(format!("placement {i}: unknown object {}", p.object_id));
            continue;
        };
        match Placement::new(obj, p.stable_pose_index, p.z_rotation, p.cell, map) {
            Ok(expected) => {
                let d = expected.world_pose.to_homogeneous() - p.world_pose.to_homogeneous();
                if d.amax() > 1e-9 {
                    out.push(format!("placement {i}: world pose inconsistent with its fields"));
                }
            }
            Err(e) => out.push(format!("placement {i}: {e}")),
        }
        if !(0.0..TAU).contains(&p.z_rotation) {
            out.push(format!("placement {i}: z rotation {} outside [0, 2π)", p.z_rotation));
        }
        fps.push((i, footprint(obj, p)));
    }
    for a in 0..fps.len() {
        for b in a + 1..fps.len() {
            if !check_collision_free(&fps[a].1, &fps[b].1, cfg.collision_margin) {
                out.push(format!("placements {} and {} collide", fps[a].0, fps[b].0));
            }
        }
    }
    out
}

/// Decides whether a gripper pose can be reached without hitting obstacles.
pub trait PlanOracle: Send + Sync {
    fn query(&self, grasp_pose: &Pose, obstacles: &[OrientedBox]) -> bool;

    /// Same as [`PlanOracle::query`] but told which object is targeted.
    fn query_object(&self, _object_id: &str, grasp_pose: &Pose, obstacles: &[OrientedBox]) -> bool {
        self.query(grasp_pose, obstacles)
    }
}

impl<F> PlanOracle for F
where
    F: Fn(&Pose, &[OrientedBox]) -> bool + Send + Sync,
{
    fn query(&self, grasp_pose: &Pose, obstacles: &[OrientedBox]) -> bool {
        self(grasp_pose, obstacles)
    }
}

/// Geometric stand-in for a motion planner: the grasp and its pre-grasp
/// point must lie inside the arm's reach shell, above the table, outside
/// every obstacle box, and the approach must not come from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPlanOracle {
    pub shoulder: Vec3,
    pub r_min: f64,
    pub r_max: f64,
    pub table_height: f64,
    /// Largest allowed z component of the approach direction.
    pub max_approach_z: f64,
    pub pregrasp_distance: f64,
    pub obstacle_clearance: f64,
}

impl Default for AnalyticPlanOracle {
    fn default() -> Self {
        Self {
            shoulder: Vec3::new(0.0, 0.0, 0.895),
            r_min: 0.30,
            r_max: 1.15,
            table_height: TableSpec::default().surface_height(),
            max_approach_z: 0.2,
            pregrasp_distance: 0.10,
            obstacle_clearance: 0.01,
        }
    }
}

impl PlanOracle for AnalyticPlanOracle {
    fn query(&self, grasp_pose: &Pose, obstacles: &[OrientedBox]) -> bool {
        let approach = grasp_pose.rotation.column(2).into_owned();
        if approach.z > self.max_approach_z {
            return false;
        }
        let p = grasp_pose.translation;
        let pre = p - approach * self.pregrasp_distance;
        let in_shell = |q: &Vec3| {
            let r = (q - self.shoulder).norm();
            (self.r_min..=self.r_max).contains(&r)
        };
        if !in_shell(&p) || !in_shell(&pre) {
            return false;
        }
        if p.z < self.table_height || pre.z < self.table_height + self.obstacle_clearance {
            return false;
        }
        obstacles.iter().all(|b| {
            let inflated = b.inflated(self.obstacle_clearance);
            !inflated.contains(&p, 0.0) && !inflated.contains(&pre, 0.0)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectVerdict {
    pub placement: usize,
    pub object_id: String,
    /// Index of the first grasp the oracle accepted.
    pub accepted_grasp: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub verdicts: Vec<ObjectVerdict>,
}

impl FeasibilityReport {
    pub fn infeasible_objects(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| v.accepted_grasp.is_none())
            .map(|v| v.object_id.as_str())
            .collect()
    }
}

/// World-frame oriented boxes of every placement, in placement order.
pub fn placement_boxes(scene: &Scene, objects: &[ObjectModel]) -> Result<Vec<OrientedBox>> {
    scene
        .placements
        .iter()
        .map(|p| {
            let obj = find_object(objects, &p.object_id)?;
            oriented_bbox_xy(&PointCloud::new(obj.world_hull(&p.world_pose)))
        })
        .collect()
}

/// Every object needs at least one grasp the oracle accepts with the other
/// objects' boxes as obstacles. All objects are evaluated even after a failure.
pub fn validate_scene_feasibility(
    scene: &Scene,
    objects: &[ObjectModel],
    grasps: &BTreeMap<String, GraspSet>,
    oracle: &dyn PlanOracle,
) -> Result<FeasibilityReport> {
    let boxes = placement_boxes(scene, objects)?;
    let mut verdicts = Vec::with_capacity(scene.placements.len());
    for (i, p) in scene.placements.iter().enumerate() {
        let set = grasps
            .get(&p.object_id)
            .ok_or_else(|| Error::Config(format!("no grasp set for {}", p.object_id)))?;
        let obstacles: Vec<OrientedBox> = boxes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| *b)
            .collect();
        let accepted_grasp = set.grasps.iter().position(|g| {
            oracle.query_object(&p.object_id, &grasp_to_base_frame(g, &p.world_pose), &obstacles)
        });
        verdicts.push(ObjectVerdict {
            placement: i,
            object_id: p.object_id.clone(),
            accepted_grasp,
        });
    }
    Ok(FeasibilityReport {
        feasible: verdicts.iter().all(|v| v.accepted_grasp.is_some()),
        verdicts,
    })
}

/// Seed used for the `attempt`-th try of a feasible scene. Attempt 0 uses
/// `seed` itself.
pub fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    if attempt == 0 {
        seed
    } else {
        seed::derive_indexed(seed, "scene-attempt", attempt as u64)
    }
}

/// Generates scenes from successive attempt seeds until one passes the
/// feasibility check. The returned scene records the seed that produced it.
pub fn generate_feasible_scene(
    objects: &[ObjectModel],
    map: &ReachabilityMap,
    grasps: &BTreeMap<String, GraspSet>,
    oracle: &dyn PlanOracle,
    seed: u64,
    cfg: &SceneGenConfig,
    max_attempts: usize,
) -> Result<(Scene, FeasibilityReport)> {
    for attempt in 0..max_attempts {
        let s = attempt_seed(seed, attempt);
        let scene = match generate_scene(objects, map, s, cfg) {
            Ok(scene) => scene,
            Err(Error::GenerationFailed { .. }) => continue,
            Err(e) => return Err(e),
        };
        let report = validate_scene_feasibility(&scene, objects, grasps, oracle)?;
        if report.feasible {
            return Ok((scene, report));
        }
    }
    Err(Error::NoFeasibleScene {
        seed,
        attempts: max_attempts,
    })
}

/// `count` feasible candidates, the i-th derived from `(master_seed, i)`.
pub fn generate_candidates(
    objects: &[ObjectModel],
    map: &ReachabilityMap,
    grasps: &BTreeMap<String, GraspSet>,
    oracle: &dyn PlanOracle,
    master_seed: u64,
    count: usize,
    cfg: &SceneGenConfig,
    max_attempts: usize,
) -> Result<Vec<Scene>> {
    let idx: Vec<u64> = (0..count as u64).collect();
    crate::par::map(&idx, true, |&i| {
        let s = seed::derive_indexed(master_seed, "scene", i);
        generate_feasible_scene(objects, map, grasps, oracle, s, cfg, max_attempts).map(|(sc, _)| sc)
    })
    .into_iter()
    .collect()
}
