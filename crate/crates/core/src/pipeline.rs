//! End-to-end benchmark construction from the built-in object catalog.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::grasp::{GraspSet, GripperSpec};
use crate::reachability::{compute_reachability_map, AnalyticReachOracle, GridSpec, ReachabilityMap, TableSpec};
use crate::scene::{generate_candidates, AnalyticPlanOracle, ObjectModel, Scene, SceneGenConfig};
use crate::seed::derive_seed;
use crate::select::{select_best_set, SceneSet, SelectionConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub master_seed: u64,
    pub candidates: usize,
    pub reach_iterations: u32,
    pub table: TableSpec,
    pub grid: GridSpec,
    pub reach_oracle: AnalyticReachOracle,
    pub plan_oracle: AnalyticPlanOracle,
    pub gripper: GripperSpec,
    pub scene: SceneGenConfig,
    pub selection: SelectionConfig,
    /// Generation attempts per candidate before giving up on feasibility.
    pub max_attempts: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            candidates: 164,
            reach_iterations: 20,
            table: TableSpec::default(),
            grid: GridSpec::default(),
            reach_oracle: AnalyticReachOracle::default(),
            plan_oracle: AnalyticPlanOracle::default(),
            gripper: GripperSpec::default(),
            scene: SceneGenConfig::default(),
            selection: SelectionConfig::default(),
            max_attempts: 50,
        }
    }
}

/// The seeds each stage actually used, by label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub master: u64,
    pub candidates: u64,
    pub selection: u64,
}

impl StageSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            candidates: derive_seed(master, "candidates"),
            selection: derive_seed(master, "selection"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub objects: Vec<ObjectModel>,
    pub grasps: BTreeMap<String, GraspSet>,
    pub map: ReachabilityMap,
    pub candidates: Vec<Scene>,
    pub set: SceneSet,
    pub seeds: StageSeeds,
}

impl Benchmark {
    pub fn selected_scenes(&self) -> Vec<&Scene> {
        self.set
            .scenes
            .iter()
            .filter_map(|id| self.candidates.iter().find(|s| &s.id == id))
            .collect()
    }
}

pub fn build_benchmark(cfg: &BenchmarkConfig) -> Result<Benchmark> {
    let objects = catalog::object_models()?;
    let grasps = catalog::grasp_sets(&objects, &cfg.gripper)?;
    let map = compute_reachability_map(&cfg.table, &cfg.grid, &cfg.reach_oracle, cfg.reach_iterations)?;
    if map.is_empty() {
        return Err(Error::Empty("reachability map has no reachable cell"));
    }
    let seeds = StageSeeds::from_master(cfg.master_seed);
    let candidates = generate_candidates(
        &objects,
        &map,
        &grasps,
        &cfg.plan_oracle,
        seeds.candidates,
        cfg.candidates,
        &cfg.scene,
        cfg.max_attempts,
    )?;
    let mut selection = cfg.selection.clone();
    if selection.objects.is_empty() {
        selection.objects = objects.iter().map(|o| o.id.clone()).collect();
    }
    for o in &objects {
        selection.pose_counts.entry(o.id.clone()).or_insert(o.stable_poses.len());
    }
    let set = select_best_set(&candidates, &selection, seeds.selection)?;
    Ok(Benchmark {
        objects,
        grasps,
        map,
        candidates,
        set,
        seeds,
    })
}
