use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde_json::json;

use tablescene::catalog;
use tablescene::geometry::{
    compute_stable_poses, parse_obj, CenterOfMass, PointCloud, Pose, StablePoseFile, TriMesh, Vec3,
};
use tablescene::grasp::{downsample_grasps, parse_grasp_set, top_down_grasp, GraspSet, GripperSpec};
use tablescene::metrics::{
    add, add_s, aggregate_results, mean_scores, parse_trial_log, sample_model_points, segmentation_scores, MaskRole,
    MaskSet,
};
use tablescene::pipeline::StageSeeds;
use tablescene::reachability::{
    analytic_reach_oracle, compute_reachability_map, FlakyPlanner, GridSpec, ReachabilityMap, TableSpec,
};
use tablescene::render::bundle::{instance_masks, METADATA_FILE};
use tablescene::render::{export_overlay_asset, rasterize_scene, CameraModel, OverlayBundle, RenderOptions};
use tablescene::scene::{
    generate_candidates, scene_violations, validate_scene_feasibility, AnalyticPlanOracle, ObjectModel, Scene,
    SceneGenConfig,
};
use tablescene::seed::derive_seed;
use tablescene::select::{select_best_set, SceneSet, SelectionConfig};

use crate::args::*;
use crate::manifest::{manifest_path, parent_dir, RunManifest, Stage, MANIFEST_FILE};

pub const CANDIDATE_INDEX: &str = "candidates.json";

/// Parsed command line plus the raw arguments it came from.
pub struct Invocation<'a> {
    pub argv: &'a [String],
    pub manifest: Option<&'a Path>,
}

pub fn execute(cli: Cli, argv: &[String]) -> Result<()> {
    let inv = Invocation {
        argv,
        manifest: cli.manifest.as_deref(),
    };
    match &cli.command {
        Command::StablePoses(a) => stable_poses(&inv, a),
        Command::Reachability(a) => reachability(&inv, a),
        Command::Generate(a) => generate(&inv, a),
        Command::Select(a) => select(&inv, a),
        Command::Render(a) => render(&inv, a),
        Command::Grasps(c) => grasps(&inv, c),
        Command::Validate(a) => validate(a),
        Command::Metrics(c) => metrics(&inv, c),
        Command::Pipeline(a) => pipeline(&inv, a),
        Command::Replay(a) => replay(a),
        Command::Serve(a) => crate::serve::run(a),
    }
}

fn text(s: String) -> Vec<u8> {
    (s + "\n").into_bytes()
}

fn gripper(a: &GripperArgs) -> GripperSpec {
    GripperSpec {
        max_opening: a.max_opening,
        finger_clearance: a.finger_clearance,
        standoff: a.grasp_standoff,
    }
}

/// Fixed settings every stage inherits, written into each manifest entry.
fn fixed_defaults() -> serde_json::Value {
    let plan = AnalyticPlanOracle::default();
    let grip = GripperSpec::default();
    json!({
        "table": TableSpec::default(),
        "camera": CameraModel::default(),
        "objects": catalog::OBJECT_IDS,
        "plan_oracle": {
            "shoulder": [plan.shoulder.x, plan.shoulder.y, plan.shoulder.z],
            "r_min": plan.r_min,
            "r_max": plan.r_max,
            "table_height": plan.table_height,
            "max_approach_z": plan.max_approach_z,
            "pregrasp_distance": plan.pregrasp_distance,
            "obstacle_clearance": plan.obstacle_clearance,
        },
        "gripper": {
            "max_opening": grip.max_opening,
            "finger_clearance": grip.finger_clearance,
            "standoff": grip.standoff,
        },
        "grasps_per_object": catalog::GRASPS_PER_OBJECT,
    })
}

fn stable_poses(inv: &Invocation, a: &StablePosesArgs) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    let mesh: TriMesh = match (&a.mesh, &a.object) {
        (Some(path), _) => {
            let src = stage.read_string(path)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            parse_obj(&src, &stem).with_context(|| format!("{}", path.display()))?
        }
        (None, Some(id)) => catalog::object_mesh(id).with_context(|| format!("unknown catalog object {id:?}"))?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let com = match a.com {
        ComSource::Uniform => CenterOfMass::UniformDensity,
        ComSource::Vertices => {
            let c = PointCloud::new(mesh.vertices.clone()).centroid().context("mesh has no vertices")?;
            CenterOfMass::Point(c)
        }
    };
    let poses = compute_stable_poses(&mesh, com)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.poses.json", mesh.name)));
    let file = StablePoseFile {
        object_id: mesh.name.clone(),
        poses,
    };
    stage.write(&out, &text(file.to_json()?))?;
    stage.config(json!({ "com": a.com, "object_id": mesh.name }))?;
    eprintln!("{}: {} stable poses -> {}", file.object_id, file.poses.len(), out.display());
    stage.finish(&format!("stable-poses {}", out.display()), &manifest_path(inv.manifest, &parent_dir(&out)))
}

fn compute_map(r: &ReachArgs, master: u64) -> Result<(ReachabilityMap, Option<u64>)> {
    let grid = GridSpec {
        rows: r.rows,
        cols: r.cols,
        block_size: r.block_size,
    };
    let table = TableSpec::default();
    let oracle = analytic_reach_oracle(Vec3::from(r.shoulder), r.r_min, r.r_max, r.standoff)?;
    ensure!(
        r.planner_success > 0.0 && r.planner_success <= 1.0,
        "--planner-success must be in (0, 1], got {}",
        r.planner_success
    );
    if r.planner_success < 1.0 {
        let seed = derive_seed(master, "reachability");
        let flaky = FlakyPlanner {
            inner: oracle,
            success: r.planner_success,
            seed,
        };
        Ok((compute_reachability_map(&table, &grid, &flaky, r.iterations)?, Some(seed)))
    } else {
        Ok((compute_reachability_map(&table, &grid, &oracle, r.iterations)?, None))
    }
}

fn reachability(inv: &Invocation, a: &ReachabilityArgs) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    let (map, planner_seed) = compute_map(&a.reach, a.seed)?;
    if let Some(s) = planner_seed {
        stage.master_seed(a.seed);
        stage.seed("reachability", s);
    }
    stage.config(json!({ "reach": a.reach, "table": map.table }))?;
    stage.write(&a.out, &text(map.to_json()?))?;
    eprint!("{}", map.ascii());
    eprintln!("{} of {} cells reachable -> {}", map.reachable_count(), map.cells.len(), a.out.display());
    stage.finish(&format!("reachability {}", a.out.display()), &manifest_path(inv.manifest, &parent_dir(&a.out)))
}

fn scene_config(s: &SceneArgs) -> SceneGenConfig {
    SceneGenConfig {
        nearby_radius: s.nearby_radius,
        collision_margin: s.collision_margin,
        ..Default::default()
    }
}

fn candidates(map: &ReachabilityMap, seeds: &StageSeeds, count: usize, s: &SceneArgs) -> Result<Vec<Scene>> {
    ensure!(!map.is_empty(), "reachability map has no reachable cell");
    let objects = catalog::object_models()?;
    let grasps = catalog::grasp_sets(&objects, &GripperSpec::default())?;
    Ok(generate_candidates(
        &objects,
        map,
        &grasps,
        &AnalyticPlanOracle::default(),
        seeds.candidates,
        count,
        &scene_config(s),
        s.max_attempts,
    )?)
}

fn write_scenes(stage: &mut Stage, dir: &Path, scenes: &[&Scene], index: bool) -> Result<()> {
    for s in scenes {
        stage.write(&dir.join(format!("{}.json", s.id)), &text(s.to_json()?))?;
    }
    if index {
        let ids: Vec<&str> = scenes.iter().map(|s| s.id.as_str()).collect();
        stage.write(&dir.join(CANDIDATE_INDEX), &text(serde_json::to_string_pretty(&ids)?))?;
    }
    Ok(())
}

fn generate(inv: &Invocation, a: &GenerateArgs) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    let map = ReachabilityMap::from_json(&stage.read_string(&a.map)?).with_context(|| a.map.display().to_string())?;
    let seeds = StageSeeds::from_master(a.seed);
    stage.master_seed(a.seed);
    stage.seed("candidates", seeds.candidates);
    stage.config(json!({ "count": a.count, "scene": a.scene, "defaults": fixed_defaults() }))?;
    let scenes = candidates(&map, &seeds, a.count, &a.scene)?;
    write_scenes(&mut stage, &a.out, &scenes.iter().collect::<Vec<_>>(), true)?;
    eprintln!("{} candidate scenes -> {}", scenes.len(), a.out.display());
    stage.finish(&format!("generate {}", a.out.display()), &manifest_path(inv.manifest, &parent_dir(&a.out)))
}

fn selection_config(s: &SelectionArgs, objects: &[ObjectModel]) -> SelectionConfig {
    SelectionConfig {
        k: s.k,
        count_min: s.count_min,
        count_max: s.count_max,
        num_sets: s.num_sets,
        objects: objects.iter().map(|o| o.id.clone()).collect(),
        pose_counts: objects.iter().map(|o| (o.id.clone(), o.stable_poses.len())).collect(),
    }
}

/// Candidate scenes of a `generate` directory, in generation order.
fn read_candidates(stage: &mut Stage, dir: &Path) -> Result<Vec<Scene>> {
    let index = dir.join(CANDIDATE_INDEX);
    let ids: Vec<String> = if index.exists() {
        serde_json::from_str(&stage.read_string(&index)?).with_context(|| index.display().to_string())?
    } else {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
            let p = entry?.path();
            let name = p.file_name().unwrap_or_default();
            if p.extension().is_some_and(|e| e == "json") && name != CANDIDATE_INDEX && name != MANIFEST_FILE {
                ids.push(p.file_stem().unwrap_or_default().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        ids
    };
    ids.iter()
        .map(|id| {
            let p = dir.join(format!("{id}.json"));
            Scene::from_json(&stage.read_string(&p)?).with_context(|| p.display().to_string())
        })
        .collect()
}

fn choose(cands: &[Scene], seeds: &StageSeeds, s: &SelectionArgs) -> Result<SceneSet> {
    let objects = catalog::object_models()?;
    Ok(select_best_set(cands, &selection_config(s, &objects), seeds.selection)?)
}

fn chosen<'a>(cands: &'a [Scene], set: &SceneSet) -> Vec<&'a Scene> {
    set.scenes
        .iter()
        .filter_map(|id| cands.iter().find(|s| &s.id == id))
        .collect()
}

fn report_set(set: &SceneSet) {
    print!("{}", set.count_table(catalog::display_name));
    eprintln!("score {:.6} over {} scenes; {}", set.score, set.scenes.len(), set.stats);
}

fn select(inv: &Invocation, a: &SelectArgs) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    let cands = read_candidates(&mut stage, &a.scenes)?;
    ensure!(!cands.is_empty(), "no candidate scenes in {}", a.scenes.display());
    let seeds = StageSeeds::from_master(a.seed);
    stage.master_seed(a.seed);
    stage.seed("selection", seeds.selection);
    stage.config(json!({ "selection": a.selection, "objects": catalog::OBJECT_IDS }))?;
    let set = choose(&cands, &seeds, &a.selection)?;
    stage.write(&a.out, &text(serde_json::to_string_pretty(&set)?))?;
    if let Some(dir) = &a.selected {
        write_scenes(&mut stage, dir, &chosen(&cands, &set), false)?;
    }
    report_set(&set);
    stage.finish(&format!("select {}", a.out.display()), &manifest_path(inv.manifest, &parent_dir(&a.out)))
}

fn render_bundle(scene: &Scene, objects: &[ObjectModel], o: &RenderOpts) -> Result<OverlayBundle> {
    ensure!(o.scale > 0.0 && o.scale.is_finite(), "--scale must be positive");
    let mut scene = scene.clone();
    scene.camera = scene.camera.scaled(o.scale);
    let opts = RenderOptions {
        draw_table: !o.no_table,
        bands: o.bands,
    };
    let img = rasterize_scene(&scene, objects, &scene.camera, &opts)?;
    Ok(export_overlay_asset(&img, &scene, objects)?)
}

fn write_bundle(stage: &mut Stage, dir: &Path, b: &OverlayBundle) -> Result<()> {
    stage.write(&dir.join(METADATA_FILE), b.metadata_json()?.as_bytes())?;
    for (name, bytes) in &b.files {
        stage.write(&dir.join(name), bytes)?;
    }
    Ok(())
}

fn render(inv: &Invocation, a: &RenderArgs) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    let scene = Scene::from_json(&stage.read_string(&a.scene)?).with_context(|| a.scene.display().to_string())?;
    let objects = catalog::object_models()?;
    let bundle = render_bundle(&scene, &objects, &a.opts)?;
    stage.config(json!({ "render": a.opts, "camera": bundle.metadata.camera }))?;
    write_bundle(&mut stage, &a.out, &bundle)?;
    eprintln!("{} ({}x{}) -> {}", scene.id, bundle.metadata.width, bundle.metadata.height, a.out.display());
    stage.finish(&format!("render {}", a.out.display()), &manifest_path(inv.manifest, &parent_dir(&a.out)))
}

fn read_cloud(path: &Path, src: &str) -> Result<PointCloud> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
        return Ok(PointCloud::new(parse_obj(src, "cloud")?.vertices));
    }
    let mut pts = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        ensure!(v.len() == 3, "{} line {}: expected 3 numbers", path.display(), i + 1);
        pts.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok(PointCloud::new(pts))
}

fn write_grasps(inv: &Invocation, mut stage: Stage, out: &Path, set: &GraspSet, what: &str) -> Result<()> {
    stage.write(out, &text(set.to_json()?))?;
    eprintln!("{}: {} grasps -> {}", set.object_id, set.grasps.len(), out.display());
    stage.finish(&format!("grasps {what} {}", out.display()), &manifest_path(inv.manifest, &parent_dir(out)))
}

fn grasps(inv: &Invocation, c: &GraspsCommand) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    match c {
        GraspsCommand::Load { file, gripper: g } => {
            let set = parse_grasp_set(&stage.read_string(file)?, &gripper(g)).with_context(|| file.display().to_string())?;
            let widths = set.grasps.iter().map(|g| g.width);
            let lo = widths.clone().fold(f64::INFINITY, f64::min);
            let hi = widths.fold(0.0, f64::max);
            println!("{}: {} grasps, width {:.4}..{:.4} m", set.object_id, set.grasps.len(), lo, hi);
            Ok(())
        }
        GraspsCommand::Downsample { file, n, gripper: g, out } => {
            let set = parse_grasp_set(&stage.read_string(file)?, &gripper(g)).with_context(|| file.display().to_string())?;
            stage.config(json!({ "n": n, "gripper": g }))?;
            let small = downsample_grasps(&set, *n)?;
            write_grasps(inv, stage, out, &small, "downsample")
        }
        GraspsCommand::TopDown { cloud, object_id, gripper: g, out } => {
            let pts = read_cloud(cloud, &stage.read_string(cloud)?)?;
            stage.config(json!({ "object_id": object_id, "gripper": g }))?;
            let grasp = top_down_grasp(&pts, &gripper(g))?;
            let set = GraspSet {
                object_id: object_id.clone(),
                grasps: vec![grasp],
            };
            write_grasps(inv, stage, out, &set, "top-down")
        }
        GraspsCommand::Synthesize { object, count, gripper: g, out } => {
            let mesh = catalog::object_mesh(object).with_context(|| format!("unknown catalog object {object:?}"))?;
            stage.config(json!({ "object": object, "count": count, "gripper": g }))?;
            let set = catalog::synthesize_grasps(&mesh, *count, &gripper(g))?;
            write_grasps(inv, stage, out, &set, "synthesize")
        }
    }
}

fn default_map() -> Result<ReachabilityMap> {
    let r = ReachArgs {
        rows: 16,
        cols: 16,
        block_size: 0.03,
        iterations: 20,
        shoulder: [0.0, 0.0, 0.895],
        r_min: 0.40,
        r_max: 1.05,
        standoff: 0.15,
        planner_success: 1.0,
    };
    Ok(compute_map(&r, 0)?.0)
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let src = std::fs::read_to_string(&a.scene).with_context(|| format!("reading {}", a.scene.display()))?;
    let scene = Scene::from_json(&src).with_context(|| a.scene.display().to_string())?;
    let map = match &a.map {
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ReachabilityMap::from_json(&src).with_context(|| p.display().to_string())?
        }
        None => default_map()?,
    };
    let objects = catalog::object_models()?;
    let grasps = catalog::grasp_sets(&objects, &GripperSpec::default())?;
    let cfg = SceneGenConfig {
        collision_margin: a.collision_margin,
        ..Default::default()
    };
    let violations = scene_violations(&scene, &objects, &map, &cfg);
    let feasibility = validate_scene_feasibility(&scene, &objects, &grasps, &AnalyticPlanOracle::default())?;
    let report = json!({
        "scene_id": scene.id,
        "violations": violations,
        "feasibility": feasibility,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !violations.is_empty() {
        bail!("{}: {} violation(s): {}", scene.id, violations.len(), violations.join("; "));
    }
    if !feasibility.feasible {
        bail!("{}: no plannable grasp for {}", scene.id, feasibility.infeasible_objects().join(", "));
    }
    Ok(())
}

fn read_pose(path: &Path) -> Result<Pose> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&src).with_context(|| format!("pose file {}", path.display()))
}

fn metrics(inv: &Invocation, c: &MetricsCommand) -> Result<()> {
    match c {
        MetricsCommand::AddS {
            est,
            gt,
            object,
            mesh,
            points,
        } => {
            let mesh = match (object, mesh) {
                (Some(id), _) => catalog::object_mesh(id).with_context(|| format!("unknown catalog object {id:?}"))?,
                (None, Some(p)) => tablescene::geometry::load_mesh(p)?,
                (None, None) => unreachable!("clap requires a model"),
            };
            let model = sample_model_points(&mesh, *points)?;
            let (e, g) = (read_pose(est)?, read_pose(gt)?);
            let out = json!({
                "object_id": mesh.name,
                "model_points": model.points.len(),
                "add_s": add_s(&e, &g, &model)?,
                "add": add(&e, &g, &model)?,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        MetricsCommand::Segmentation {
            pred,
            gt,
            tolerance,
            out,
        } => {
            ensure!(pred.len() == gt.len(), "{} --pred images but {} --gt images", pred.len(), gt.len());
            let mut stage = Stage::new(inv.argv)?;
            let mut per_image = Vec::new();
            for (p, g) in pred.iter().zip(gt) {
                let pm = MaskSet::new(instance_masks(&stage.read(p)?)?, MaskRole::Predicted)?;
                let gm = MaskSet::new(instance_masks(&stage.read(g)?)?, MaskRole::GroundTruth)
                    .with_context(|| g.display().to_string())?;
                per_image.push(segmentation_scores(&pm, &gm, *tolerance).with_context(|| p.display().to_string())?);
            }
            let report = json!({
                "tolerance_px": tolerance,
                "averaging": "macro",
                "per_image": per_image,
                "mean": mean_scores(&per_image),
            });
            let body = serde_json::to_string_pretty(&report)?;
            println!("{body}");
            if let Some(out) = out {
                stage.config(json!({ "tolerance": tolerance }))?;
                stage.write(out, &text(body))?;
                stage.finish(&format!("metrics segmentation {}", out.display()), &manifest_path(inv.manifest, &parent_dir(out)))?;
            }
            Ok(())
        }
        MetricsCommand::Aggregate { log, per_object, summary } => {
            let mut stage = Stage::new(inv.argv)?;
            let records = parse_trial_log(&stage.read_string(log)?).with_context(|| log.display().to_string())?;
            let table = aggregate_results(&records)?;
            let mut wrote = None;
            for (path, body) in [(per_object, table.per_object_csv()), (summary, table.summary_csv())] {
                match path {
                    Some(p) => {
                        stage.write(p, body.as_bytes())?;
                        wrote = Some(p.clone());
                    }
                    None => print!("{body}"),
                }
            }
            eprintln!("{} records, {} methods, {} objects", records.len(), table.methods.len(), table.objects.len());
            match wrote {
                Some(p) => stage.finish(&format!("metrics aggregate {}", log.display()), &manifest_path(inv.manifest, &parent_dir(&p))),
                None => Ok(()),
            }
        }
    }
}

fn pipeline(inv: &Invocation, a: &PipelineArgs) -> Result<()> {
    let mut stage = Stage::new(inv.argv)?;
    let out = &a.out;
    let seeds = StageSeeds::from_master(a.seed);
    stage.master_seed(a.seed);
    stage.seed("candidates", seeds.candidates);
    stage.seed("selection", seeds.selection);
    stage.config(json!({
        "candidates": a.candidates,
        "reach": a.reach,
        "scene": a.scene,
        "selection": a.selection,
        "render": if a.no_render { serde_json::Value::Null } else { serde_json::to_value(&a.render)? },
        "defaults": fixed_defaults(),
    }))?;

    let (map, planner_seed) = compute_map(&a.reach, a.seed)?;
    if let Some(s) = planner_seed {
        stage.seed("reachability", s);
    }
    stage.write(&out.join("map.json"), &text(map.to_json()?))?;
    eprintln!("reachability: {} of {} cells", map.reachable_count(), map.cells.len());

    let cands = candidates(&map, &seeds, a.candidates, &a.scene)?;
    write_scenes(&mut stage, &out.join("candidates"), &cands.iter().collect::<Vec<_>>(), true)?;
    eprintln!("generated {} candidates", cands.len());

    let set = choose(&cands, &seeds, &a.selection)?;
    stage.write(&out.join("set.json"), &text(serde_json::to_string_pretty(&set)?))?;
    let picked = chosen(&cands, &set);
    write_scenes(&mut stage, &out.join("selected"), &picked, false)?;
    stage.write(&out.join("counts.csv"), set.count_table(catalog::display_name).as_bytes())?;
    report_set(&set);

    if !a.no_render {
        let objects = catalog::object_models()?;
        for s in &picked {
            let b = render_bundle(s, &objects, &a.render)?;
            write_bundle(&mut stage, &out.join("bundles").join(&s.id), &b)?;
        }
        eprintln!("rendered {} overlay bundles", picked.len());
    }
    stage.finish(&format!("pipeline {}", out.display()), &manifest_path(inv.manifest, out))
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let recorded = RunManifest::load(&a.from)?;
    let keys: Vec<String> = match &a.stage {
        Some(k) => vec![k.clone()],
        None => recorded.stages.keys().cloned().collect(),
    };
    let exe = std::env::current_exe()?;
    let mut failures = BTreeMap::new();
    for key in &keys {
        let rec = recorded.stages.get(key).with_context(|| format!("no stage {key:?} in {}", a.from.display()))?;
        let status = std::process::Command::new(&exe)
            .args(&rec.command)
            .current_dir(&rec.cwd)
            .stdout(std::process::Stdio::null())
            .status()
            .with_context(|| format!("rerunning {key}"))?;
        ensure!(status.success(), "stage {key} failed on replay ({status})");
        let bad = recorded.verify(key)?;
        if bad.is_empty() {
            eprintln!("{key}: {} outputs identical", rec.outputs.len());
        } else {
            for m in &bad {
                eprintln!("{key}: {} differs (expected {})", m.path, m.expected);
            }
            failures.insert(key.clone(), bad.len());
        }
    }
    ensure!(failures.is_empty(), "replay produced different outputs: {failures:?}");
    Ok(())
}
