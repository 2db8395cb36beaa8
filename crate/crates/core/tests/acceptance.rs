//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails outright.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::catch_unwind;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tablescene::catalog;
use tablescene::geometry::hull::convex_hull;
use tablescene::geometry::pose::{rot_z, Mat3, Pose, Vec3};
use tablescene::geometry::{compute_stable_poses, farthest_point_sample, CenterOfMass, PointCloud, TriMesh};
use tablescene::grasp::{top_down_grasp, GripperSpec};
use tablescene::mask::Mask;
use tablescene::metrics::{self, MaskRole, MaskSet, Ordering, Outcome, Phase, TrialRecord};
use tablescene::pipeline::{build_benchmark, Benchmark, BenchmarkConfig};
use tablescene::reachability::{
    analytic_reach_oracle, compute_reachability_map, FlakyPlanner, GridSpec, TableSpec,
};
use tablescene::render::{rasterize_scene, CameraModel, RenderOptions};
use tablescene::scene::{generate_scene, scene_violations, Placement, Scene, SceneGenConfig};
use tablescene::select::{select_best_set, SelectionConfig};
use tablescene::Error;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Cannot be met by any correct implementation; the detail says why.
    Unattainable(String),
}

fn benchmark() -> &'static (Benchmark, Duration) {
    static B: OnceLock<(Benchmark, Duration)> = OnceLock::new();
    B.get_or_init(|| {
        let t = Instant::now();
        let b = build_benchmark(&BenchmarkConfig::default()).expect("benchmark build");
        (b, t.elapsed())
    })
}

fn count_objects<'a>(scenes: impl IntoIterator<Item = &'a Scene>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for s in scenes {
        for p in &s.placements {
            *counts.entry(p.object_id.clone()).or_insert(0) += 1;
        }
    }
    counts
}

fn benchmark_regeneration() -> Verdict {
    let (b, took) = benchmark();
    let mut problems = Vec::new();
    if b.candidates.len() < 164 {
        problems.push(format!("only {} candidates", b.candidates.len()));
    }
    let scenes = b.selected_scenes();
    if scenes.len() != 20 {
        problems.push(format!("{} scenes selected", scenes.len()));
    }
    for s in &scenes {
        if s.placements.len() != 5 {
            problems.push(format!("{} has {} objects", s.id, s.placements.len()));
        }
    }
    let counts = count_objects(scenes.iter().copied());
    for id in catalog::OBJECT_IDS {
        let c = counts.get(id).copied().unwrap_or(0);
        if !(5..=7).contains(&c) {
            problems.push(format!("{id} appears {c} times"));
        }
    }
    let total: usize = counts.values().sum();
    if total != 100 {
        problems.push(format!("{total} placements"));
    }
    if *took > Duration::from_secs(600) {
        problems.push(format!("took {took:?}"));
    }
    let detail = format!(
        "{} candidates, {} scenes, {} placements, counts {:?}, {:.1}s",
        b.candidates.len(),
        scenes.len(),
        total,
        counts.values().collect::<Vec<_>>(),
        took.as_secs_f64()
    );
    if problems.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", problems.join("; ")))
    }
}

fn hull_2d(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn solid_com(mesh: &TriMesh) -> Vec3 {
    let (mut vol, mut acc) = (0.0, Vec3::zeros());
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let v = a.dot(&b.cross(&c)) / 6.0;
        vol += v;
        acc += (a + b + c) / 4.0 * v;
    }
    acc / vol
}

fn stable_poses() -> Verdict {
    let cube = catalog::box_mesh("cube", [1.0, 1.0, 1.0]);
    let poses = compute_stable_poses(&cube, CenterOfMass::UniformDensity).expect("cube poses");
    if poses.len() != 6 || poses.iter().any(|p| (p.probability - 1.0 / 6.0).abs() > 1e-6) {
        return Verdict::Fail(format!(
            "cube: {:?}",
            poses.iter().map(|p| p.probability).collect::<Vec<_>>()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for i in 0..100 {
        let n = rng.random_range(8..40);
        let axes = [
            rng.random_range(0.02..0.15),
            rng.random_range(0.02..0.15),
            rng.random_range(0.02..0.15),
        ];
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(
                    axes[0] * rng.random_range(-1.0..1.0),
                    axes[1] * rng.random_range(-1.0..1.0),
                    axes[2] * rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let hull = convex_hull(&pts).expect("hull");
        let mesh = TriMesh::new(
            format!("random{i}"),
            hull.points.clone(),
            hull.faces.iter().map(|f| f.vertices).collect(),
        )
        .expect("mesh");
        let com = solid_com(&mesh);
        let used: BTreeSet<usize> = mesh.faces.iter().flatten().copied().collect();
        let poses = match compute_stable_poses(&mesh, CenterOfMass::UniformDensity) {
            Ok(p) => p,
            Err(e) => return Verdict::Fail(format!("mesh {i}: {e}")),
        };
        if poses.is_empty() {
            return Verdict::Fail(format!("mesh {i}: no stable pose"));
        }
        let total: f64 = poses.iter().map(|p| p.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Verdict::Fail(format!("mesh {i}: probabilities sum to {total}"));
        }
        for (k, p) in poses.iter().enumerate() {
            let r = p.rotation;
            if (r.transpose() * r - Mat3::identity()).amax() > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
                return Verdict::Fail(format!("mesh {i} pose {k}: not a rotation"));
            }
            let rotated: Vec<Vec3> = used.iter().map(|&v| r * mesh.vertices[v]).collect();
            let zmin = rotated.iter().map(|v| v.z).fold(f64::INFINITY, f64::min);
            if (p.rest_height + zmin).abs() > 1e-9 {
                return Verdict::Fail(format!("mesh {i} pose {k}: rest height {} vs {}", p.rest_height, -zmin));
            }
            // faces within 0.1 degrees of each other rest together
            let band = 2.0 * mesh.bounding_extent() * 0.1f64.to_radians().tan() + 1e-9;
            let support: Vec<(f64, f64)> = rotated
                .iter()
                .filter(|v| v.z - zmin <= band)
                .map(|v| (v.x, v.y))
                .collect();
            let poly = hull_2d(support);
            if poly.len() < 3 {
                return Verdict::Fail(format!("mesh {i} pose {k}: degenerate support"));
            }
            let c = r * com;
            let inside = (0..poly.len()).all(|j| {
                let (a, b) = (poly[j], poly[(j + 1) % poly.len()]);
                (b.0 - a.0) * (c.y - a.1) - (b.1 - a.1) * (c.x - a.0) > 0.0
            });
            if !inside {
                return Verdict::Fail(format!("mesh {i} pose {k}: centre of mass outside support"));
            }
            checked += 1;
        }
    }
    Verdict::Pass(format!("cube has 6 poses at 1/6; {checked} poses on 100 random hulls all supported"))
}

fn toy_scene(id: String, objects: &[(String, usize)]) -> Scene {
    Scene {
        id,
        seed: 0,
        table: TableSpec::default(),
        camera: CameraModel::default(),
        placements: objects
            .iter()
            .map(|(o, p)| Placement {
                object_id: o.clone(),
                stable_pose_index: *p,
                z_rotation: 0.0,
                cell: (0, 0),
                world_pose: Pose::identity(),
            })
            .collect(),
    }
}

fn entropy_oracle(scenes: &[&Scene]) -> f64 {
    let mut hist: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    for s in scenes {
        for p in &s.placements {
            *hist.entry(&p.object_id).or_default().entry(p.stable_pose_index).or_default() += 1.0;
        }
    }
    hist.values()
        .map(|poses| {
            let n: f64 = poses.values().sum();
            -poses.values().map(|c| c / n * (c / n).ln()).sum::<f64>()
        })
        .sum()
}

fn counts_ok(scenes: &[&Scene], universe: &BTreeSet<String>, lo: usize, hi: usize) -> bool {
    let counts = count_objects(scenes.iter().copied());
    universe.iter().all(|o| {
        let c = counts.get(o).copied().unwrap_or(0);
        (lo..=hi).contains(&c)
    })
}

fn selection_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pool = ["a", "b", "c"];
    let mut solved = 0;
    for inst in 0..50 {
        let candidates: Vec<Scene> = (0..6)
            .map(|i| {
                let mut objs = pool.to_vec();
                objs.shuffle(&mut rng);
                let placed: Vec<(String, usize)> =
                    objs[..2].iter().map(|o| (o.to_string(), rng.random_range(0..3))).collect();
                toy_scene(format!("s{inst}-{i}"), &placed)
            })
            .collect();
        let universe: BTreeSet<String> = candidates
            .iter()
            .flat_map(|s| s.placements.iter().map(|p| p.object_id.clone()))
            .collect();
        let mut oracle: Vec<(f64, Vec<String>)> = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                let set = [&candidates[i], &candidates[j]];
                if counts_ok(&set, &universe, 1, 2) {
                    let mut ids = vec![set[0].id.clone(), set[1].id.clone()];
                    ids.sort();
                    oracle.push((entropy_oracle(&set), ids));
                }
            }
        }
        let cfg = SelectionConfig {
            k: 2,
            count_min: 1,
            count_max: 2,
            ..Default::default()
        };
        let got = select_best_set(&candidates, &cfg, inst);
        match (got, oracle.is_empty()) {
            (Err(Error::SelectionFailed(_)), true) => {}
            (Ok(set), false) => {
                let best = oracle.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max);
                let expected = oracle
                    .iter()
                    .filter(|o| o.0 >= best - 1e-12)
                    .map(|o| o.1.clone())
                    .min()
                    .expect("non-empty");
                if (set.score - best).abs() > 1e-12 || set.scenes != expected {
                    return Verdict::Fail(format!(
                        "instance {inst}: got {:?} ({}) expected {expected:?} ({best})",
                        set.scenes, set.score
                    ));
                }
                solved += 1;
            }
            (got, _) => {
                return Verdict::Fail(format!(
                    "instance {inst}: library {:?}, {} valid subsets",
                    got.map(|s| s.scenes),
                    oracle.len()
                ))
            }
        }
    }

    let (b, _) = benchmark();
    let selected = b.selected_scenes();
    let universe: BTreeSet<String> = catalog::OBJECT_IDS.iter().map(|s| s.to_string()).collect();
    if !counts_ok(&selected, &universe, 5, 7) {
        return Verdict::Fail("selected benchmark set violates the count bounds".into());
    }
    let own = entropy_oracle(&selected);
    if (own - b.set.score).abs() > 1e-9 {
        return Verdict::Fail(format!("reported score {} but recomputed {own}", b.set.score));
    }
    // independent greedy-then-reject sampler over the same candidates
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut valid, mut attempts, mut best) = (0, 0u64, f64::NEG_INFINITY);
    let mut order: Vec<usize> = (0..b.candidates.len()).collect();
    while valid < 1000 && attempts < 20_000_000 {
        attempts += 1;
        order.shuffle(&mut rng);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut chosen: Vec<&Scene> = Vec::with_capacity(20);
        for &i in &order {
            if chosen.len() == 20 {
                break;
            }
            let s = &b.candidates[i];
            if s.placements.iter().all(|p| counts.get(p.object_id.as_str()).copied().unwrap_or(0) < 7) {
                for p in &s.placements {
                    *counts.entry(&p.object_id).or_insert(0) += 1;
                }
                chosen.push(s);
            }
        }
        if chosen.len() == 20 && counts_ok(&chosen, &universe, 5, 7) {
            valid += 1;
            best = best.max(entropy_oracle(&chosen));
        }
    }
    if valid < 1000 {
        return Verdict::Fail(format!("independent sampler found only {valid} valid sets"));
    }
    if best > b.set.score + 1e-9 {
        return Verdict::Fail(format!("sampled set scores {best} > selected {}", b.set.score));
    }
    Verdict::Pass(format!(
        "{solved}/50 small instances solvable, all match enumeration; selected {:.4} >= best of 1000 sampled {:.4}",
        b.set.score, best
    ))
}

fn world_aabb(mesh: &TriMesh, pose: &Pose) -> [f64; 4] {
    let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for v in &mesh.vertices {
        let w = pose.transform_point(v);
        bb = [bb[0].min(w.x), bb[1].min(w.y), bb[2].max(w.x), bb[3].max(w.y)];
    }
    bb
}

fn scene_validity() -> Verdict {
    let (b, _) = benchmark();
    let cfg = SceneGenConfig::default();
    let m = cfg.collision_margin;
    let mut problems = Vec::new();
    for seed in 0..1000u64 {
        let scene = match generate_scene(&b.objects, &b.map, seed, &cfg) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let ids: BTreeSet<&str> = scene.object_ids().into_iter().collect();
        if scene.placements.len() > 5 || ids.len() != scene.placements.len() {
            problems.push(format!("seed {seed}: bad object list {:?}", scene.object_ids()));
        }
        let mut boxes = Vec::new();
        for p in &scene.placements {
            let (r, c) = p.cell;
            if r >= b.map.gridspec.rows || c >= b.map.gridspec.cols || !b.map.get(r, c) {
                problems.push(format!("seed {seed}: unreachable cell {:?}", p.cell));
            }
            let obj = b.objects.iter().find(|o| o.id == p.object_id).expect("catalog object");
            boxes.push(world_aabb(&obj.mesh, &p.world_pose));
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                let (a, c) = (boxes[i], boxes[j]);
                let apart = a[2] + m < c[0] - m || c[2] + m < a[0] - m || a[3] + m < c[1] - m || c[3] + m < a[1] - m;
                if !apart {
                    problems.push(format!("seed {seed}: placements {i} and {j} overlap"));
                }
            }
        }
        problems.extend(scene_violations(&scene, &b.objects, &b.map, &cfg).into_iter().map(|v| format!("seed {seed}: {v}")));
        let again = generate_scene(&b.objects, &b.map, seed, &cfg).expect("regeneration");
        let (x, y) = (scene.to_json().expect("json"), again.to_json().expect("json"));
        if x != y {
            problems.push(format!("seed {seed}: regeneration differs"));
        }
        if Scene::from_json(&x).ok().as_ref() != Some(&scene) {
            problems.push(format!("seed {seed}: file round trip differs"));
        }
    }
    if problems.is_empty() {
        Verdict::Pass("1000 seeds: no violations, byte-identical regeneration".into())
    } else {
        Verdict::Fail(format!("{} problems, first: {}", problems.len(), problems[0]))
    }
}

fn reachability() -> Verdict {
    let table = TableSpec::default();
    let grid = GridSpec {
        rows: 16,
        cols: 16,
        block_size: 0.03,
    };
    let (r_min, r_max) = (0.40, 1.05);
    let shoulder = Vec3::new(0.0, 0.0, 0.895);
    let oracle = analytic_reach_oracle(shoulder, r_min, r_max, 0.15).expect("oracle");
    let map = compute_reachability_map(&table, &grid, &oracle, 20).expect("map");
    let flaky = FlakyPlanner {
        inner: oracle,
        success: 0.5,
        seed: 3,
    };
    let flaky_map = compute_reachability_map(&table, &grid, &flaky, 20).expect("map");
    let mut expected = 0;
    for r in 0..16 {
        for c in 0..16 {
            let p = Vec3::new(0.3 + (r as f64 + 0.5) / 16.0, -0.5 + (c as f64 + 0.5) / 16.0, 0.745 + 0.15);
            let d = (p - shoulder).norm();
            let hand = r_min <= d && d <= r_max;
            expected += hand as usize;
            if map.get(r, c) != hand {
                return Verdict::Fail(format!("cell ({r}, {c}) differs from the annulus"));
            }
            if flaky_map.get(r, c) != hand {
                return Verdict::Fail(format!("cell ({r}, {c}) differs under the unreliable planner"));
            }
            if map.get(r, c) != map.get(r, 15 - c) {
                return Verdict::Fail(format!("cell ({r}, {c}) breaks mirror symmetry"));
            }
        }
    }
    Verdict::Pass(format!("{expected} reachable cells equal the annulus; mirror symmetric"))
}

fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Mask {
    Mask::from_fn(w, h, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
}

fn brute_boundary(m: &Mask) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for y in 0..m.height as i64 {
        for x in 0..m.width as i64 {
            if !m.get(x as usize, y as usize) {
                continue;
            }
            let edge = (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0 || ny < 0 || nx >= m.width as i64 || ny >= m.height as i64 || !m.get(nx as usize, ny as usize)
                })
            });
            if edge {
                out.push((x, y));
            }
        }
    }
    out
}

fn prf(tp_p: f64, n_p: f64, tp_g: f64, n_g: f64) -> [f64; 3] {
    let p = tp_p / n_p;
    let r = tp_g / n_g;
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    [100.0 * p, 100.0 * r, 100.0 * f]
}

fn overlap_f(a: &Mask, b: &Mask) -> f64 {
    let tp = (0..a.data.len()).filter(|&i| a.data[i] && b.data[i]).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let (p, r) = (tp / a.count() as f64, tp / b.count() as f64);
    2.0 * p * r / (p + r)
}

fn best_assignment(f: &[Vec<f64>], np: usize, ng: usize) -> f64 {
    fn go(row: usize, used: &mut Vec<bool>, f: &[Vec<f64>], np: usize, ng: usize) -> f64 {
        if row == np {
            return 0.0;
        }
        let mut best = go(row + 1, used, f, np, ng);
        for j in 0..ng {
            if !used[j] {
                used[j] = true;
                best = best.max(f[row][j] + go(row + 1, used, f, np, ng));
                used[j] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; ng], f, np, ng)
}

fn metrics_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mesh = catalog::object_mesh("006_mustard_bottle").expect("mesh");
    let model = metrics::sample_model_points(&mesh, metrics::MODEL_POINTS).expect("points");
    for _ in 0..10 {
        let gt = Pose::new(rot_z(rng.random_range(0.0..6.0)), Vec3::new(rng.random(), rng.random(), rng.random()));
        let v = metrics::add_s(&gt, &gt, &model).expect("add-s");
        if v > 1e-9 {
            return Verdict::Fail(format!("identity gives {v}"));
        }
        let t = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let single = PointCloud::new(vec![Vec3::new(rng.random(), rng.random(), rng.random())]);
        let est = Pose::new(gt.rotation, gt.translation + t);
        let v = metrics::add_s(&est, &gt, &single).expect("add-s");
        if (v - t.norm()).abs() > 1e-9 {
            return Verdict::Fail(format!("translation gives {v}, expected {}", t.norm()));
        }
        let pair = PointCloud::new(vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)]);
        let flipped = gt.compose(&Pose::from_rotation(rot_z(std::f64::consts::PI)));
        let v = metrics::add_s(&flipped, &gt, &pair).expect("add-s");
        if v > 1e-9 {
            return Verdict::Fail(format!("two-point symmetry gives {v}"));
        }
    }

    let (w, h) = (48, 36);
    for k in 0..20 {
        let (x0, y0) = (rng.random_range(2..20), rng.random_range(2..14));
        let (x1, y1) = (x0 + rng.random_range(8..20), y0 + rng.random_range(8..18));
        let gt = rect(w, h, x0, y0, x1, y1);
        let (dx, dy) = (rng.random_range(0..4), rng.random_range(0..4));
        let pred = if k % 2 == 0 {
            rect(w, h, x0 + dx, y0 + dy, x1 + dx, (y1 + dy).min(h))
        } else {
            let (cx, cy, r) = ((x0 + x1) as f64 / 2.0 + dx as f64, (y0 + y1) as f64 / 2.0, (x1 - x0) as f64 / 2.0);
            Mask::from_fn(w, h, |x, y| (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= r * r)
        };
        let ps = MaskSet::new(vec![pred.clone()], MaskRole::Predicted).expect("set");
        let gs = MaskSet::new(vec![gt.clone()], MaskRole::GroundTruth).expect("set");
        let a = metrics::match_masks(&ps, &gs).expect("match");
        let o = metrics::overlap_prf(&a);
        let tp = (0..w * h).filter(|&i| pred.data[i] && gt.data[i]).count() as f64;
        let want = prf(tp, pred.count() as f64, tp, gt.count() as f64);
        let bp = brute_boundary(&pred);
        let bg = brute_boundary(&gt);
        let near = |p: &(i64, i64), set: &[(i64, i64)]| set.iter().any(|q| (p.0 - q.0).abs().max((p.1 - q.1).abs()) <= 2);
        let tp_p = bp.iter().filter(|p| near(p, &bg)).count() as f64;
        let tp_g = bg.iter().filter(|q| near(q, &bp)).count() as f64;
        let want_b = prf(tp_p, bp.len() as f64, tp_g, bg.len() as f64);
        let bnd = metrics::boundary_prf(&a, 2);
        let got = [o.precision, o.recall, o.f_measure];
        let got_b = [bnd.precision, bnd.recall, bnd.f_measure];
        if (0..3).any(|i| (got[i] - want[i]).abs() > 1e-9 || (got_b[i] - want_b[i]).abs() > 1e-9) {
            return Verdict::Fail(format!("pair {k}: overlap {got:?} vs {want:?}, boundary {got_b:?} vs {want_b:?}"));
        }
    }

    for inst in 0..100 {
        let (w, h) = (32, 32);
        let ng = rng.random_range(1..=4);
        let np = rng.random_range(1..=4);
        let gt: Vec<Mask> = (0..ng)
            .map(|q| {
                let (ox, oy) = ((q % 2) * 16, (q / 2) * 16);
                let x0 = ox + rng.random_range(0..6);
                let y0 = oy + rng.random_range(0..6);
                rect(w, h, x0, y0, x0 + rng.random_range(4..10), y0 + rng.random_range(4..10))
            })
            .collect();
        let pred: Vec<Mask> = (0..np)
            .map(|_| {
                let x0 = rng.random_range(0..24);
                let y0 = rng.random_range(0..24);
                rect(w, h, x0, y0, x0 + rng.random_range(4..9), y0 + rng.random_range(4..9))
            })
            .collect();
        let f: Vec<Vec<f64>> = pred.iter().map(|p| gt.iter().map(|g| overlap_f(p, g)).collect()).collect();
        let want = best_assignment(&f, np, ng);
        let ps = MaskSet::new(pred, MaskRole::Predicted).expect("set");
        let gs = MaskSet::new(gt, MaskRole::GroundTruth).expect("set");
        let a = metrics::match_masks(&ps, &gs).expect("match");
        let got: f64 = a.pairs.iter().map(|p| p.2).sum();
        if (got - want).abs() > 1e-9 {
            return Verdict::Fail(format!("instance {inst}: assignment total {got} vs exhaustive {want}"));
        }
    }
    Verdict::Pass("pose oracles within 1e-9; 20 mask pairs match pixel counting; 100 assignments match enumeration".into())
}

struct Section {
    ordering: Ordering,
    rows: Vec<(String, usize, Vec<[usize; 4]>)>,
    published: Vec<[usize; 4]>,
}

fn parse_outcomes() -> Vec<Section> {
    let text = include_str!("fixtures/per_object_outcomes.txt");
    let mut out: Vec<Section> = Vec::new();
    let num = |s: &str| if s == "-" { 0 } else { s.parse::<usize>().expect("count") };
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        if let Some(name) = line.strip_prefix('[') {
            out.push(Section {
                ordering: name.trim_end_matches(']').parse().expect("ordering"),
                rows: Vec::new(),
                published: Vec::new(),
            });
            continue;
        }
        let cells: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cells.len(), 26, "{line}");
        let groups: Vec<[usize; 4]> = cells[2..]
            .chunks(4)
            .map(|c| [num(c[0]), num(c[1]), num(c[2]), num(c[3])])
            .collect();
        let section = out.last_mut().expect("section header");
        if cells[0] == "ALL" {
            section.published = groups;
        } else {
            section.rows.push((cells[0].to_string(), num(cells[1]), groups));
        }
    }
    out
}

fn aggregation() -> Verdict {
    let sections = parse_outcomes();
    let mut records = Vec::new();
    for sec in &sections {
        for (object, _, groups) in &sec.rows {
            for (m, g) in groups.iter().enumerate() {
                let kinds = [
                    (Outcome::Success, None),
                    (Outcome::PerceptionFailure, Some(Phase::PreGrasping)),
                    (Outcome::PlanningFailure, Some(Phase::PreGrasping)),
                    (Outcome::ExecutionFailure, Some(Phase::PostGrasping)),
                ];
                let mut trial = 0;
                for (k, (outcome, phase)) in kinds.into_iter().enumerate() {
                    for _ in 0..g[k] {
                        trial += 1;
                        records.push(TrialRecord {
                            scene_id: format!("trial-{trial}"),
                            object_id: object.clone(),
                            ordering: sec.ordering,
                            method: Some(format!("M{}", m + 1)),
                            outcome,
                            phase,
                            note: String::new(),
                        });
                    }
                }
            }
        }
    }
    let table = match metrics::aggregate_results(&records) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let mut mismatched = Vec::new();
    let mut aggregator_wrong = Vec::new();
    for sec in &sections {
        for m in 0..6 {
            let label = format!("M{}", m + 1);
            let all = table.all(sec.ordering, &label);
            let got = [all.s, all.pef, all.plf, all.ef];
            let mut sums = [0; 4];
            for (_, _, g) in &sec.rows {
                for k in 0..4 {
                    sums[k] += g[m][k];
                }
            }
            if got != sums {
                aggregator_wrong.push(format!("{} {label}: {got:?} vs column sums {sums:?}", sec.ordering));
            }
            if got != sec.published[m] {
                mismatched.push(format!("{} {label}: {got:?} vs published {:?}", sec.ordering, sec.published[m]));
            }
        }
    }
    let rows_over_count: Vec<String> = sections
        .iter()
        .flat_map(|sec| {
            sec.rows.iter().flat_map(move |(o, count, g)| {
                g.iter().enumerate().filter(|(_, c)| c.iter().sum::<usize>() != *count).map(move |(m, c)| {
                    format!("{} {o} M{}: {} outcomes for count {count}", sec.ordering, m + 1, c.iter().sum::<usize>())
                })
            })
        })
        .collect();
    if !aggregator_wrong.is_empty() {
        return Verdict::Fail(aggregator_wrong.join("; "));
    }
    if mismatched.is_empty() {
        return Verdict::Pass("all 12 ALL rows reproduced".into());
    }
    Verdict::Unattainable(format!(
        "{}/12 ALL rows reproduced; the rest differ from the column sums of their own per-object rows: {}; inconsistent object rows: {}",
        12 - mismatched.len(),
        mismatched.join("; "),
        rows_over_count.join("; ")
    ))
}

fn grasp_tools() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for c in 0..100 {
        let n = rng.random_range(2..200);
        let pts: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
        let idx = farthest_point_sample(&pts, 2, 0).expect("fps");
        let best = pts.iter().map(|p| (p - pts[0]).norm()).fold(0.0, f64::max);
        if (pts[idx[1]] - pts[0]).norm() != best {
            return Verdict::Fail(format!("cloud {c}: second sample is not the farthest point"));
        }
    }
    let gripper = GripperSpec::default();
    for t in 0..10 {
        let yaw = rng.random_range(0.0..std::f64::consts::PI);
        let center = Vec3::new(rng.random_range(0.5..1.0), rng.random_range(-0.3..0.3), 0.745);
        let r = rot_z(yaw);
        let mut pts = Vec::new();
        for i in 0..=20 {
            for j in 0..=8 {
                for z in [0.0, 0.05] {
                    let local = Vec3::new(-0.05 + 0.1 * i as f64 / 20.0, -0.02 + 0.04 * j as f64 / 8.0, z);
                    pts.push(center + r * local);
                }
            }
        }
        let g = match top_down_grasp(&PointCloud::new(pts), &gripper) {
            Ok(g) => g,
            Err(e) => return Verdict::Fail(format!("trial {t}: {e}")),
        };
        let minor = r * Vec3::y();
        let axis = g.closing_axis();
        let err = (axis - minor).norm().min((axis + minor).norm());
        if err > 1e-6 {
            return Verdict::Fail(format!("trial {t}: closing axis off by {err}"));
        }
        let want = 0.04 + gripper.finger_clearance;
        if (g.width - want).abs() > 1e-6 {
            return Verdict::Fail(format!("trial {t}: width {} vs {want}", g.width));
        }
    }
    Verdict::Pass("FPS second sample optimal on 100 clouds; top-down axis and width within 1e-6 on 10 yaws".into())
}

fn ray_triangle(d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(f64, f64)> {
    let (e1, e2) = (b - a, c - a);
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let s = -a;
    let u = s.dot(&p) / det;
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    let w = 1.0 - u - v;
    if u < 0.0 || v < 0.0 || w < 0.0 {
        return None;
    }
    let t = e2.dot(&q) / det;
    (t > 0.0).then_some((t, u.min(v).min(w)))
}

fn render() -> Verdict {
    let (b, _) = benchmark();
    for s in b.selected_scenes() {
        let img = match rasterize_scene(s, &b.objects, &s.camera, &RenderOptions::default()) {
            Ok(i) => i,
            Err(e) => return Verdict::Fail(format!("{}: {e}", s.id)),
        };
        let n = s.placements.len();
        if img.instance.iter().any(|&v| v as usize > n) {
            return Verdict::Fail(format!("{}: instance id out of range", s.id));
        }
        let masks: Vec<Mask> = (0..n).map(|i| img.instance_mask(i)).collect();
        let fg = img.foreground();
        for px in 0..fg.data.len() {
            let owners = masks.iter().filter(|m| m.data[px]).count();
            if owners != fg.data[px] as usize {
                return Verdict::Fail(format!("{}: pixel {px} has {owners} owners", s.id));
            }
        }
    }

    let opts = RenderOptions {
        draw_table: false,
        ..Default::default()
    };
    let cfg = SceneGenConfig::default();
    let (mut compared, mut covered, mut skipped) = (0, 0, 0);
    for k in 0..5u64 {
        let scene = generate_scene(&b.objects, &b.map, 7000 + k, &cfg).expect("scene");
        let cam = scene.camera.scaled(0.125);
        let img = rasterize_scene(&scene, &b.objects, &cam, &opts).expect("render");
        let mut tris: Vec<(u16, [Vec3; 3])> = Vec::new();
        for (i, p) in scene.placements.iter().enumerate() {
            let obj = b.objects.iter().find(|o| o.id == p.object_id).expect("object");
            for f in 0..obj.mesh.faces.len() {
                let t = obj.mesh.triangle(f).map(|v| cam.to_camera(&p.world_pose.transform_point(&v)));
                tris.push((i as u16 + 1, t));
            }
        }
        for y in 0..img.height {
            for x in 0..img.width {
                let d = cam.ray(x as f64 + 0.5, y as f64 + 0.5);
                let mut hits: Vec<(f64, f64, u16)> = tris
                    .iter()
                    .filter_map(|(id, [a, b, c])| ray_triangle(&d, a, b, c).map(|(t, m)| (t, m, *id)))
                    .collect();
                hits.sort_by(|a, b| a.0.total_cmp(&b.0));
                let ambiguous = hits.first().is_some_and(|h| h.1 < 1e-6)
                    || (hits.len() > 1 && hits[1].0 - hits[0].0 < 1e-9 && hits[1].2 != hits[0].2);
                if ambiguous {
                    skipped += 1;
                    continue;
                }
                let px = y * img.width + x;
                let want = hits.first().map_or(0, |h| h.2);
                if img.instance[px] != want {
                    return Verdict::Fail(format!(
                        "scene {k} pixel ({x}, {y}): z-buffer {} vs ray {want}",
                        img.instance[px]
                    ));
                }
                if let Some(h) = hits.first() {
                    covered += 1;
                    if (img.depth[px] - h.0).abs() > 1e-9 * h.0.max(1.0) {
                        return Verdict::Fail(format!("scene {k} pixel ({x}, {y}): depth {} vs {}", img.depth[px], h.0));
                    }
                }
                compared += 1;
            }
        }
    }
    Verdict::Pass(format!(
        "20 renders partition their foreground; ray test agrees on {compared} pixels, {covered} on objects ({skipped} edge pixels skipped)"
    ))
}

fn main() {
    let checks: [(&str, fn() -> Verdict); 9] = [
        ("benchmark regeneration", benchmark_regeneration),
        ("stable poses", stable_poses),
        ("selection optimality", selection_optimality),
        ("scene validity", scene_validity),
        ("reachability", reachability),
        ("metrics oracles", metrics_oracles),
        ("aggregation reproduction", aggregation),
        ("grasp tools", grasp_tools),
        ("render", render),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let t = Instant::now();
        let verdict = catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Verdict::Pass(d) => println!("PASS {name}: {d} ({secs:.1}s)"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d} ({secs:.1}s)");
            }
            Verdict::Unattainable(d) => println!("FAIL {name} [unattainable from the source data]: {d} ({secs:.1}s)"),
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
