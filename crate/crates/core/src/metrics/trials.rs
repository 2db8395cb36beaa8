//! Pick-and-place trial outcomes: failure taxonomy, record log and
//! per-object result tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ADD-S above which a pose estimate counts as a perception error.
pub const DEFAULT_PERCEPTION_THRESHOLD_M: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    NearToFar,
    Fixed,
}

impl Ordering {
    pub const ALL: [Ordering; 2] = [Ordering::NearToFar, Ordering::Fixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Ordering::NearToFar => "near-to-far",
            Ordering::Fixed => "fixed",
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Ordering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "near-to-far" => Ok(Ordering::NearToFar),
            "fixed" => Ok(Ordering::Fixed),
            _ => Err(Error::InvalidArgument(format!("unknown ordering {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    PerceptionFailure,
    PlanningFailure,
    ExecutionFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PreGrasping,
    DuringGrasping,
    PostGrasping,
}

/// Is `phase` a legal companion of `outcome`?
pub fn valid_combination(outcome: Outcome, phase: Option<Phase>) -> bool {
    use Outcome::*;
    use Phase::*;
    matches!(
        (outcome, phase),
        (Success, None)
            | (PerceptionFailure, Some(PreGrasping | DuringGrasping))
            | (PlanningFailure, Some(PreGrasping | DuringGrasping))
            | (ExecutionFailure, Some(PostGrasping))
    )
}

/// What happened during one attempt. `perception_error_exceeds_threshold`
/// refers to whichever estimate the failing step relied on: the target when
/// the grasp failed, the obstacles when no grasp was found or one was hit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialEvent {
    pub recognized: bool,
    pub grasp_found: bool,
    pub plan_found: bool,
    pub lifted: bool,
    pub hit_obstacle: bool,
    pub placed: bool,
    pub perception_error_exceeds_threshold: bool,
}

impl TrialEvent {
    pub fn success() -> Self {
        Self {
            recognized: true,
            grasp_found: true,
            plan_found: true,
            lifted: true,
            placed: true,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidEvent(m.to_string()));
        if self.placed && !self.lifted {
            return bad("placed without lifting");
        }
        if self.lifted && !self.plan_found {
            return bad("lifted without a plan");
        }
        if self.plan_found && !self.grasp_found {
            return bad("plan found without a grasp");
        }
        if self.grasp_found && !self.recognized {
            return bad("grasp found for an unrecognized target");
        }
        if self.hit_obstacle && !self.plan_found {
            return bad("hit an obstacle without executing a plan");
        }
        if self.hit_obstacle && self.placed {
            return bad("placed after hitting an obstacle");
        }
        Ok(())
    }
}

pub fn classify_failure(event: &TrialEvent) -> Result<(Outcome, Option<Phase>)> {
    event.check()?;
    let perception = event.perception_error_exceeds_threshold;
    let r = if !event.recognized {
        (Outcome::PerceptionFailure, Some(Phase::PreGrasping))
    } else if !event.grasp_found || !event.plan_found {
        if perception {
            (Outcome::PerceptionFailure, Some(Phase::PreGrasping))
        } else {
            (Outcome::PlanningFailure, Some(Phase::PreGrasping))
        }
    } else if event.hit_obstacle || !event.lifted {
        if perception {
            (Outcome::PerceptionFailure, Some(Phase::DuringGrasping))
        } else {
            (Outcome::PlanningFailure, Some(Phase::DuringGrasping))
        }
    } else if !event.placed {
        (Outcome::ExecutionFailure, Some(Phase::PostGrasping))
    } else {
        (Outcome::Success, None)
    };
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scene_id: String,
    pub object_id: String,
    pub ordering: Ordering,
    /// Method label; records of several methods may share one log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl TrialRecord {
    pub fn from_event(
        scene_id: impl Into<String>,
        object_id: impl Into<String>,
        ordering: Ordering,
        event: &TrialEvent,
    ) -> Result<Self> {
        let (outcome, phase) = classify_failure(event)?;
        Ok(Self {
            scene_id: scene_id.into(),
            object_id: object_id.into(),
            ordering,
            method: None,
            outcome,
            phase,
            note: String::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !valid_combination(self.outcome, self.phase) {
            return Err(Error::InvalidEvent(format!(
                "{:?} cannot occur in phase {:?}",
                self.outcome, self.phase
            )));
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// A physical scene was set up to match its reference render. Written to
/// the trial log as `{"confirmation": {...}}` so it never parses as a trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationConfirmation {
    pub scene_id: String,
    /// Seconds since the Unix epoch.
    pub confirmed_at: u64,
    /// Placement indices ticked off, in confirmation order.
    #[serde(default)]
    pub objects: Vec<usize>,
    /// Client-chosen key; one confirmation per scene and session.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub session: String,
}

#[derive(Serialize, Deserialize)]
struct ConfirmationLine {
    confirmation: ReplicationConfirmation,
}

impl ReplicationConfirmation {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(&ConfirmationLine {
            confirmation: self.clone(),
        })?)
    }
}

enum LogLine {
    Trial(TrialRecord),
    Confirmation(ReplicationConfirmation),
}

fn log_lines(text: &str) -> Result<Vec<LogLine>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let loc = || format!("trial log line {}", i + 1);
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::parse(loc(), e.to_string()))?;
        if v.get("confirmation").is_some() {
            let c: ConfirmationLine = serde_json::from_value(v).map_err(|e| Error::parse(loc(), e.to_string()))?;
            out.push(LogLine::Confirmation(c.confirmation));
            continue;
        }
        let r: TrialRecord = serde_json::from_value(v).map_err(|e| Error::parse(loc(), e.to_string()))?;
        r.validate().map_err(|e| Error::parse(loc(), e.to_string()))?;
        out.push(LogLine::Trial(r));
    }
    Ok(out)
}

/// Trial records, one per non-blank line. Confirmation lines are skipped.
pub fn parse_trial_log(text: &str) -> Result<Vec<TrialRecord>> {
    Ok(log_lines(text)?
        .into_iter()
        .filter_map(|l| match l {
            LogLine::Trial(r) => Some(r),
            LogLine::Confirmation(_) => None,
        })
        .collect())
}

pub fn parse_confirmations(text: &str) -> Result<Vec<ReplicationConfirmation>> {
    Ok(log_lines(text)?
        .into_iter()
        .filter_map(|l| match l {
            LogLine::Confirmation(c) => Some(c),
            LogLine::Trial(_) => None,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub s: usize,
    pub pef: usize,
    pub plf: usize,
    pub ef: usize,
}

impl OutcomeCounts {
    pub fn attempts(&self) -> usize {
        self.s + self.pef + self.plf + self.ef
    }

    /// Object grasped and lifted: successes plus failures after lifting.
    pub fn grasping_success(&self) -> usize {
        self.s + self.ef
    }

    fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Success => self.s += 1,
            Outcome::PerceptionFailure => self.pef += 1,
            Outcome::PlanningFailure => self.plf += 1,
            Outcome::ExecutionFailure => self.ef += 1,
        }
    }

    fn merge(&mut self, o: &OutcomeCounts) {
        self.s += o.s;
        self.pef += o.pef;
        self.plf += o.plf;
        self.ef += o.ef;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultsTable {
    /// Method labels in order of first appearance ("" for unlabelled records).
    pub methods: Vec<String>,
    /// Object ids in order of first appearance.
    pub objects: Vec<String>,
    rows: BTreeMap<(Ordering, String, String), OutcomeCounts>,
}

impl ResultsTable {
    pub fn row(&self, ordering: Ordering, method: &str, object_id: &str) -> OutcomeCounts {
        self.rows
            .get(&(ordering, method.to_string(), object_id.to_string()))
            .copied()
            .unwrap_or_default()
    }

    /// Column sums over every object.
    pub fn all(&self, ordering: Ordering, method: &str) -> OutcomeCounts {
        let mut t = OutcomeCounts::default();
        for ((o, m, _), c) in &self.rows {
            if *o == ordering && m == method {
                t.merge(c);
            }
        }
        t
    }

    pub fn orderings(&self) -> Vec<Ordering> {
        let present: BTreeSet<Ordering> = self.rows.keys().map(|k| k.0).collect();
        present.into_iter().collect()
    }

    /// Per-object attempts; when methods disagree the largest is reported.
    pub fn count(&self, ordering: Ordering, object_id: &str) -> usize {
        self.methods
            .iter()
            .map(|m| self.row(ordering, m, object_id).attempts())
            .max()
            .unwrap_or(0)
    }

    /// Object rows then an ALL row for each ordering, one S/PeF/PlF/EF
    /// column group per method.
    pub fn per_object_csv(&self) -> String {
        let mut out = String::from("Ordering,Object,Count");
        for m in &self.methods {
            for col in ["S", "PeF", "PlF", "EF"] {
                if m.is_empty() {
                    let _ = write!(out, ",{col}");
                } else {
                    let _ = write!(out, ",{m} {col}");
                }
            }
        }
        out.push('\n');
        for ord in self.orderings() {
            let mut lines: Vec<(String, Vec<OutcomeCounts>, usize)> = Vec::new();
            for obj in &self.objects {
                let cells: Vec<_> = self.methods.iter().map(|m| self.row(ord, m, obj)).collect();
                if cells.iter().all(|c| c.attempts() == 0) {
                    continue;
                }
                lines.push((obj.clone(), cells, self.count(ord, obj)));
            }
            let all: Vec<_> = self.methods.iter().map(|m| self.all(ord, m)).collect();
            let total = lines.iter().map(|l| l.2).sum();
            lines.push(("ALL".into(), all, total));
            for (name, cells, count) in lines {
                let _ = write!(out, "{ord},{name},{count}");
                for c in cells {
                    let _ = write!(out, ",{},{},{},{}", c.s, c.pef, c.plf, c.ef);
                }
                out.push('\n');
            }
        }
        out
    }

    /// One line per method and ordering with success totals.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("Method,Ordering,Pick-and-Place Success,Grasping Success,Attempts\n");
        for m in &self.methods {
            for ord in self.orderings() {
                let a = self.all(ord, m);
                if a.attempts() == 0 {
                    continue;
                }
                let _ = writeln!(out, "{m},{ord},{},{},{}", a.s, a.grasping_success(), a.attempts());
            }
        }
        out
    }
}

pub fn aggregate_results(records: &[TrialRecord]) -> Result<ResultsTable> {
    let mut table = ResultsTable::default();
    let mut seen = BTreeSet::new();
    for r in records {
        r.validate()?;
        let method = r.method.clone().unwrap_or_default();
        if !seen.insert((method.clone(), r.scene_id.clone(), r.object_id.clone(), r.ordering)) {
            return Err(Error::DuplicateRecord {
                scene_id: r.scene_id.clone(),
                object_id: r.object_id.clone(),
                ordering: r.ordering.to_string(),
            });
        }
        if !table.methods.contains(&method) {
            table.methods.push(method.clone());
        }
        if !table.objects.contains(&r.object_id) {
            table.objects.push(r.object_id.clone());
        }
        table
            .rows
            .entry((r.ordering, method, r.object_id.clone()))
            .or_default()
            .add(r.outcome);
    }
    Ok(table)
}
