//! Choosing a diverse scene set: per-object appearance bounds plus a
//! stable-pose entropy score.
//!
//! When the number of k-subsets does not exceed `num_sets` every subset is
//! scored. Otherwise `num_sets` subsets are drawn with a constructive sampler
//! that only extends a partial set with scenes keeping every object under
//! `count_max` and leaving the `count_min` deficit coverable by the remaining
//! picks. Uniform rejection sampling almost never hits a valid set at
//! benchmark scale, so the sampler works inside the constraint instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    pub count_min: usize,
    pub count_max: usize,
    pub num_sets: usize,
    /// Objects that must satisfy the bounds. Empty means every object seen
    /// in the candidates.
    #[serde(default)]
    pub objects: Vec<String>,
    /// Number of stable poses per object, used only to tighten the entropy
    /// upper bound for early exit.
    #[serde(default)]
    pub pose_counts: BTreeMap<String, usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: 20,
            count_min: 5,
            count_max: 7,
            num_sets: 100_000,
            objects: Vec::new(),
            pose_counts: BTreeMap::new(),
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.count_min > self.count_max {
            return Err(Error::Config(format!(
                "count_min {} exceeds count_max {}",
                self.count_min, self.count_max
            )));
        }
        Ok(())
    }
}

/// Stable-pose index counts per object.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoseHistogram {
    pub counts: BTreeMap<String, BTreeMap<usize, usize>>,
}

impl PoseHistogram {
    pub fn from_scenes<'a>(scenes: impl IntoIterator<Item = &'a Scene>) -> Self {
        let mut h = PoseHistogram::default();
        for s in scenes {
            for p in &s.placements {
                *h.counts
                    .entry(p.object_id.clone())
                    .or_default()
                    .entry(p.stable_pose_index)
                    .or_default() += 1;
            }
        }
        h
    }

    pub fn object_counts(&self) -> BTreeMap<String, usize> {
        self.counts
            .iter()
            .map(|(o, poses)| (o.clone(), poses.values().sum()))
            .collect()
    }
}

/// Shannon entropy (nats) of a count distribution; counts are sorted first so
/// the result does not depend on their order.
pub fn entropy_of_counts(counts: &[usize]) -> f64 {
    let mut c: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    c.sort_unstable();
    let total: usize = c.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -c.iter()
        .map(|&n| {
            let p = n as f64 / t;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Sum over objects of the entropy of each object's pose distribution.
pub fn pose_entropy(hist: &PoseHistogram) -> Result<f64> {
    if hist.counts.is_empty() {
        return Err(Error::Empty("pose histogram"));
    }
    let mut score = 0.0;
    for (object, poses) in &hist.counts {
        let counts: Vec<usize> = poses.values().copied().collect();
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidArgument(format!("{object} has no appearances")));
        }
        score += entropy_of_counts(&counts);
    }
    Ok(score)
}

fn universe(scenes: &[&Scene], cfg: &SelectionConfig) -> BTreeSet<String> {
    let mut u: BTreeSet<String> = cfg.objects.iter().cloned().collect();
    if u.is_empty() {
        for s in scenes {
            u.extend(s.placements.iter().map(|p| p.object_id.clone()));
        }
    }
    u
}

/// Every object (the configured list, or all objects present) appears
/// between `count_min` and `count_max` times.
pub fn object_count_constraint(set: &[&Scene], cfg: &SelectionConfig) -> bool {
    let counts = PoseHistogram::from_scenes(set.iter().copied()).object_counts();
    let mut objects = universe(set, cfg);
    objects.extend(counts.keys().cloned());
    objects.iter().all(|o| {
        let c = counts.get(o).copied().unwrap_or(0);
        (cfg.count_min..=cfg.count_max).contains(&c)
    })
}

/// Why sampled sets were discarded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectionStats {
    pub sampled: usize,
    pub valid: usize,
    pub above_max: usize,
    pub below_min: usize,
    /// Constructive draws that ran out of admissible scenes.
    pub dead_ends: usize,
    pub infeasible_scenes_excluded: usize,
    pub exhaustive: bool,
}

impl RejectionStats {
    fn merge(&mut self, o: &RejectionStats) {
        self.sampled += o.sampled;
        self.valid += o.valid;
        self.above_max += o.above_max;
        self.below_min += o.below_min;
        self.dead_ends += o.dead_ends;
    }

    pub fn dominant(&self) -> &'static str {
        let worst = [
            (self.above_max, "count above maximum"),
            (self.below_min, "count below minimum"),
            (self.dead_ends, "no admissible scene left while sampling"),
        ]
        .into_iter()
        .max_by_key(|(n, _)| *n)
        .expect("non-empty");
        if self.sampled == 0 {
            "no sets were sampled"
        } else {
            worst.1
        }
    }
}

impl fmt::Display for RejectionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} sets sampled, {} valid; rejected: {} above max, {} below min, {} dead ends; \
             {} infeasible scenes excluded; dominant cause: {}",
            self.sampled,
            self.valid,
            self.above_max,
            self.below_min,
            self.dead_ends,
            self.infeasible_scenes_excluded,
            self.dominant()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSet {
    pub scenes: Vec<String>,
    pub histogram: PoseHistogram,
    pub score: f64,
    pub stats: RejectionStats,
}

impl SceneSet {
    pub fn object_counts(&self) -> BTreeMap<String, usize> {
        self.histogram.object_counts()
    }

    /// `Object,Count` rows plus an `ALL` total.
    pub fn count_table(&self, display: impl Fn(&str) -> String) -> String {
        let counts = self.object_counts();
        let mut out = String::from("Object,Count\n");
        for (o, c) in &counts {
            out.push_str(&format!("{},{c}\n", display(o)));
        }
        out.push_str(&format!("ALL,{}\n", counts.values().sum::<usize>()));
        out
    }
}

/// Outcome of scoring one subset.
struct Scored {
    score: f64,
    ids: Vec<String>,
}

fn better(a: &Scored, b: &Scored) -> bool {
    match a.score.total_cmp(&b.score) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => a.ids < b.ids,
    }
}

/// Compact per-scene data used while sampling.
struct Pool<'a> {
    scenes: Vec<&'a Scene>,
    /// Object slot indices per scene.
    members: Vec<Vec<usize>>,
    n_objects: usize,
    max_size: usize,
}

impl<'a> Pool<'a> {
    fn new(scenes: Vec<&'a Scene>, objects: &BTreeSet<String>) -> Self {
        let mut slots: BTreeMap<&str, usize> =
            objects.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
        for s in &scenes {
            for p in &s.placements {
                let n = slots.len();
                slots.entry(p.object_id.as_str()).or_insert(n);
            }
        }
        let members: Vec<Vec<usize>> = scenes
            .iter()
            .map(|s| s.placements.iter().map(|p| slots[p.object_id.as_str()]).collect())
            .collect();
        let max_size = members.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            n_objects: slots.len(),
            scenes,
            members,
            max_size,
        }
    }

    fn score(&self, picked: &[usize], cfg: &SelectionConfig, stats: &mut RejectionStats) -> Option<Scored> {
        stats.sampled += 1;
        let mut counts = vec![0usize; self.n_objects];
        for &i in picked {
            for &o in &self.members[i] {
                counts[o] += 1;
            }
        }
        if counts.iter().any(|&c| c > cfg.count_max) {
            stats.above_max += 1;
            return None;
        }
        if counts.iter().any(|&c| c < cfg.count_min) {
            stats.below_min += 1;
            return None;
        }
        stats.valid += 1;
        let hist = PoseHistogram::from_scenes(picked.iter().map(|&i| self.scenes[i]));
        let score = pose_entropy(&hist).unwrap_or(0.0);
        let mut ids: Vec<String> = picked.iter().map(|&i| self.scenes[i].id.clone()).collect();
        ids.sort();
        Some(Scored { score, ids })
    }

    /// One constructive draw; `None` on a dead end.
    fn draw(&self, k: usize, cfg: &SelectionConfig, rng: &mut impl Rng) -> Option<Vec<usize>> {
        let mut counts = vec![0usize; self.n_objects];
        let mut used = vec![false; self.scenes.len()];
        let mut picked = Vec::with_capacity(k);
        let mut admissible = Vec::with_capacity(self.scenes.len());
        for step in 0..k {
            let remaining = k - step - 1;
            admissible.clear();
            for (i, m) in self.members.iter().enumerate() {
                if used[i] || m.iter().any(|&o| counts[o] + 1 > cfg.count_max) {
                    continue;
                }
                let deficit: usize = (0..self.n_objects)
                    .map(|o| {
                        let c = counts[o] + m.iter().filter(|&&x| x == o).count();
                        cfg.count_min.saturating_sub(c)
                    })
                    .sum();
                if deficit <= self.max_size * remaining {
                    admissible.push(i);
                }
            }
            if admissible.is_empty() {
                return None;
            }
            let i = admissible[rng.random_range(0..admissible.len())];
            used[i] = true;
            for &o in &self.members[i] {
                counts[o] += 1;
            }
            picked.push(i);
        }
        Some(picked)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

const CHUNK: usize = 2048;

pub fn select_best_set(candidates: &[Scene], cfg: &SelectionConfig, seed: u64) -> Result<SceneSet> {
    select_best_set_flagged(candidates, &vec![true; candidates.len()], cfg, seed)
}

/// Like [`select_best_set`]; scenes whose `feasible` flag is false never
/// enter a set.
pub fn select_best_set_flagged(
    candidates: &[Scene],
    feasible: &[bool],
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<SceneSet> {
    cfg.validate()?;
    if feasible.len() != candidates.len() {
        return Err(Error::InvalidArgument("one feasibility flag per candidate required".into()));
    }
    let ids: BTreeSet<&str> = candidates.iter().map(|s| s.id.as_str()).collect();
    if ids.len() != candidates.len() {
        return Err(Error::InvalidArgument("candidate scene ids are not unique".into()));
    }
    let all: Vec<&Scene> = candidates.iter().collect();
    let objects = universe(&all, cfg);
    let usable: Vec<&Scene> = candidates
        .iter()
        .zip(feasible)
        .filter(|(_, f)| **f)
        .map(|(s, _)| s)
        .collect();
    let mut stats = RejectionStats {
        infeasible_scenes_excluded: candidates.len() - usable.len(),
        ..Default::default()
    };
    if usable.len() < cfg.k {
        return Err(Error::SelectionFailed(stats));
    }
    let pool = Pool::new(usable, &objects);
    let upper_bound: f64 = objects
        .iter()
        .map(|o| {
            let cap = cfg.pose_counts.get(o).copied().unwrap_or(usize::MAX).min(cfg.count_max);
            (cap.max(1) as f64).ln()
        })
        .sum();

    let mut best: Option<Scored> = None;
    let exhaustive = binomial(pool.scenes.len(), cfg.k) <= cfg.num_sets as u128;
    stats.exhaustive = exhaustive;

    let fold = |results: Vec<(Option<Scored>, RejectionStats)>,
                best: &mut Option<Scored>,
                stats: &mut RejectionStats| {
        for (s, st) in results {
            stats.merge(&st);
            if let Some(s) = s {
                if best.as_ref().is_none_or(|b| better(&s, b)) {
                    *best = Some(s);
                }
            }
        }
    };

    if exhaustive {
        let subsets = all_subsets(pool.scenes.len(), cfg.k);
        let results = crate::par::map(&subsets, true, |sub| {
            let mut st = RejectionStats::default();
            (pool.score(sub, cfg, &mut st), st)
        });
        fold(results, &mut best, &mut stats);
    } else {
        let mut start = 0;
        while start < cfg.num_sets {
            let end = (start + CHUNK).min(cfg.num_sets);
            let idx: Vec<u64> = (start as u64..end as u64).collect();
            let results = crate::par::map(&idx, true, |&i| {
                let mut st = RejectionStats::default();
                let mut rng = seed::rng(seed::derive_indexed(seed, "select", i));
                match pool.draw(cfg.k, cfg, &mut rng) {
                    Some(picked) => (pool.score(&picked, cfg, &mut st), st),
                    None => {
                        st.sampled += 1;
                        st.dead_ends += 1;
                        (None, st)
                    }
                }
            });
            fold(results, &mut best, &mut stats);
            if best.as_ref().is_some_and(|b| b.score >= upper_bound - 1e-12) {
                break;
            }
            start = end;
        }
    }

    let best = best.ok_or_else(|| Error::SelectionFailed(stats.clone()))?;
    let chosen: Vec<&Scene> = pool
        .scenes
        .iter()
        .copied()
        .filter(|s| best.ids.binary_search(&s.id).is_ok())
        .collect();
    Ok(SceneSet {
        histogram: PoseHistogram::from_scenes(chosen),
        scenes: best.ids,
        score: best.score,
        stats,
    })
}
