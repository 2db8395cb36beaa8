//! WebAssembly bindings for the browser demo in `www/`. The page can pick
//! a seed, change the arm's reach and hover over the rendered image.

use std::collections::BTreeMap;

use wasm_bindgen::prelude::*;

use tablescene::catalog;
use tablescene::geometry::Vec3;
use tablescene::grasp::{GraspSet, GripperSpec};
use tablescene::reachability::{
    analytic_reach_oracle, compute_reachability_map, GridSpec, ReachabilityMap, TableSpec, DEFAULT_STANDOFF_HEIGHT,
};
use tablescene::render::{rasterize_scene, ReferenceImage, RenderOptions};
use tablescene::scene::{generate_feasible_scene, AnalyticPlanOracle, ObjectModel, Scene, SceneGenConfig};

const SHOULDER: [f64; 3] = [0.0, 0.0, 0.895];
const REACH_MIN: f64 = 0.40;
const MAX_ATTEMPTS: usize = 50;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct Demo {
    objects: Vec<ObjectModel>,
    grasps: BTreeMap<String, GraspSet>,
    map: ReachabilityMap,
    scale: f64,
    scene: Option<Scene>,
    image: Option<ReferenceImage>,
}

#[wasm_bindgen]
impl Demo {
    /// Catalog, grasps and the reachability map for an arm reaching `reach` metres.
    #[wasm_bindgen(constructor)]
    pub fn new(reach: f64, scale: f64) -> Result<Demo, String> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(format!("scale must be in (0, 1], got {scale}"));
        }
        let objects = catalog::object_models().map_err(err)?;
        let grasps = catalog::grasp_sets(&objects, &GripperSpec::default()).map_err(err)?;
        Ok(Demo {
            map: reach_map(reach)?,
            objects,
            grasps,
            scale,
            scene: None,
            image: None,
        })
    }

    /// Recomputes the map; the current scene is dropped. Returns the number of reachable cells.
    pub fn set_reach(&mut self, reach: f64) -> Result<usize, String> {
        self.map = reach_map(reach)?;
        self.scene = None;
        self.image = None;
        Ok(self.map.reachable_count())
    }

    pub fn grid_rows(&self) -> usize {
        self.map.gridspec.rows
    }

    pub fn grid_cols(&self) -> usize {
        self.map.gridspec.cols
    }

    /// Row-major 0/1 per cell.
    pub fn reachable(&self) -> Vec<u8> {
        self.map.cells.iter().map(|&c| c as u8).collect()
    }

    /// Generates and renders a feasible scene. Returns its JSON.
    pub fn generate(&mut self, seed: u32) -> Result<String, String> {
        if self.map.is_empty() {
            return Err("no table cell is reachable".into());
        }
        let cfg = SceneGenConfig::default();
        let (mut scene, _) = generate_feasible_scene(
            &self.objects,
            &self.map,
            &self.grasps,
            &AnalyticPlanOracle::default(),
            seed as u64,
            &cfg,
            MAX_ATTEMPTS,
        )
        .map_err(err)?;
        scene.camera = scene.camera.scaled(self.scale);
        let image = rasterize_scene(&scene, &self.objects, &scene.camera, &RenderOptions::default()).map_err(err)?;
        let json = scene.to_json().map_err(err)?;
        self.scene = Some(scene);
        self.image = Some(image);
        Ok(json)
    }

    pub fn width(&self) -> usize {
        self.image.as_ref().map_or(0, |i| i.width)
    }

    pub fn height(&self) -> usize {
        self.image.as_ref().map_or(0, |i| i.height)
    }

    /// RGBA pixels of the last render, empty before the first.
    pub fn rgba(&self) -> Vec<u8> {
        let Some(img) = &self.image else { return Vec::new() };
        img.color.iter().flat_map(|&[r, g, b]| [r, g, b, 255]).collect()
    }

    /// RGBA of the last render with placement `index` highlighted and the rest dimmed.
    pub fn highlight(&self, index: usize) -> Vec<u8> {
        let Some(img) = &self.image else { return Vec::new() };
        let label = index as u16 + 1;
        img.color
            .iter()
            .zip(&img.instance)
            .flat_map(|(&[r, g, b], &l)| {
                if l == label {
                    [r / 2 + 127, g / 2 + 127, b / 2, 255]
                } else {
                    [r / 3, g / 3, b / 3, 255]
                }
            })
            .collect()
    }

    /// Placement index under pixel (x, y), or -1.
    pub fn pick(&self, x: usize, y: usize) -> i32 {
        match &self.image {
            Some(img) if x < img.width && y < img.height => img.instance[y * img.width + x] as i32 - 1,
            _ => -1,
        }
    }

    /// Display name of placement `index`.
    pub fn object_name(&self, index: usize) -> Option<String> {
        let p = self.scene.as_ref()?.placements.get(index)?;
        Some(catalog::display_name(&p.object_id))
    }

    /// Pixel count of each placement's visible region.
    pub fn visible_pixels(&self) -> Vec<u32> {
        let (Some(scene), Some(img)) = (&self.scene, &self.image) else {
            return Vec::new();
        };
        let mut counts = vec![0u32; scene.placements.len()];
        for &l in &img.instance {
            if l > 0 {
                counts[l as usize - 1] += 1;
            }
        }
        counts
    }
}

fn reach_map(reach: f64) -> Result<ReachabilityMap, String> {
    if !(reach > REACH_MIN) {
        return Err(format!("reach must exceed {REACH_MIN} m, got {reach}"));
    }
    let oracle = analytic_reach_oracle(Vec3::from(SHOULDER), REACH_MIN, reach, DEFAULT_STANDOFF_HEIGHT).map_err(err)?;
    compute_reachability_map(&TableSpec::default(), &GridSpec::default(), &oracle, 1).map_err(err)
}
