//! Discretised tabletop reachability.
//!
//! The table top is split into a `rows × cols` lattice. Every cell gets a
//! stand-off pose hovering above its centre with the gripper pointing down,
//! and a [`ReachOracle`] decides whether that pose can be reached. Cells are
//! re-probed for a number of iterations; a cell accepted once stays reachable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::pose::{Mat3, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    /// Extent along x, y and the table height, in metres.
    pub size: [f64; 3],
    /// Table centre relative to the robot base (z is the floor level).
    pub offset: [f64; 3],
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            size: [1.0, 1.0, 0.745],
            offset: [0.8, 0.0, 0.0],
        }
    }
}

impl TableSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size.iter().all(|s| *s > 0.0 && s.is_finite()) && self.offset.iter().all(|o| o.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid table spec {self:?}")))
        }
    }

    /// Height of the table surface in the base frame.
    pub fn surface_height(&self) -> f64 {
        self.offset[2] + self.size[2]
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(self.offset[0], self.offset[1], self.surface_height())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Side of the probe block placed in each cell.
    pub block_size: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 16,
            block_size: 0.03,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows >= 1 && self.cols >= 1 && self.block_size > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid grid spec {self:?}")))
        }
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }
}

/// Cell centres in row-major order. Rows run along base x, columns along base y.
pub fn build_grid(table: &TableSpec, grid: &GridSpec) -> Result<Vec<Vec3>> {
    table.validate()?;
    grid.validate()?;
    let z = table.surface_height();
    let (x0, y0) = (
        table.offset[0] - table.size[0] / 2.0,
        table.offset[1] - table.size[1] / 2.0,
    );
    let (dx, dy) = (
        table.size[0] / grid.rows as f64,
        table.size[1] / grid.cols as f64,
    );
    let mut centers = Vec::with_capacity(grid.cell_count());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            centers.push(Vec3::new(
                x0 + (r as f64 + 0.5) * dx,
                y0 + (c as f64 + 0.5) * dy,
                z,
            ));
        }
    }
    Ok(centers)
}

/// Gripper pointing straight down: tool z maps to base −z.
pub fn downward_rotation() -> Mat3 {
    Mat3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityProbe {
    pub cell: (usize, usize),
    pub standoff_pose: Pose,
    /// 1-based iteration in which this query is made.
    pub attempts: u32,
}

/// Decides whether a motion plan to a stand-off pose exists.
///
/// Implementations must be deterministic for a fixed configuration: any
/// randomness has to be derived from the probe (cell and attempt), never from
/// call order.
pub trait ReachOracle: Send + Sync {
    fn query(&self, probe: &ReachabilityProbe) -> std::result::Result<bool, String>;

    /// Height of the stand-off pose above the cell centre.
    fn standoff_height(&self) -> f64 {
        DEFAULT_STANDOFF_HEIGHT
    }

    /// Whether queries may run on several threads at once.
    fn concurrent(&self) -> bool {
        true
    }
}

pub const DEFAULT_STANDOFF_HEIGHT: f64 = 0.15;

impl<F> ReachOracle for F
where
    F: Fn(&ReachabilityProbe) -> bool + Send + Sync,
{
    fn query(&self, probe: &ReachabilityProbe) -> std::result::Result<bool, String> {
        Ok(self(probe))
    }
}

/// Accepts a stand-off pose iff its distance from the shoulder lies in `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReachOracle {
    pub shoulder: [f64; 3],
    pub r_min: f64,
    pub r_max: f64,
    pub standoff_height: f64,
}

impl Default for AnalyticReachOracle {
    fn default() -> Self {
        // shoulder level with the stand-off plane so the test is planar
        Self {
            shoulder: [0.0, 0.0, 0.745 + DEFAULT_STANDOFF_HEIGHT],
            r_min: 0.40,
            r_max: 1.05,
            standoff_height: DEFAULT_STANDOFF_HEIGHT,
        }
    }
}

pub fn analytic_reach_oracle(
    shoulder: Vec3,
    r_min: f64,
    r_max: f64,
    standoff_height: f64,
) -> Result<AnalyticReachOracle> {
    if !(0.0 <= r_min && r_min < r_max) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= r_min < r_max, got {r_min}, {r_max}"
        )));
    }
    Ok(AnalyticReachOracle {
        shoulder: shoulder.into(),
        r_min,
        r_max,
        standoff_height,
    })
}

impl AnalyticReachOracle {
    pub fn accepts(&self, p: &Vec3) -> bool {
        let d = (p - Vec3::from(self.shoulder)).norm();
        self.r_min <= d && d <= self.r_max
    }
}

impl ReachOracle for AnalyticReachOracle {
    fn query(&self, probe: &ReachabilityProbe) -> std::result::Result<bool, String> {
        Ok(self.accepts(&probe.standoff_pose.translation))
    }

    fn standoff_height(&self) -> f64 {
        self.standoff_height
    }
}

/// Wraps an oracle with a planner that only succeeds with probability
/// `success` per attempt, drawn from a hash of `(seed, cell, attempt)`.
#[derive(Debug, Clone, Copy)]
pub struct FlakyPlanner<O> {
    pub inner: O,
    pub success: f64,
    pub seed: u64,
}

impl<O: ReachOracle> ReachOracle for FlakyPlanner<O> {
    fn query(&self, probe: &ReachabilityProbe) -> std::result::Result<bool, String> {
        if !self.inner.query(probe)? {
            return Ok(false);
        }
        let label = format!("{}:{}:{}", probe.cell.0, probe.cell.1, probe.attempts);
        let draw = crate::seed::derive_seed(self.seed, &label) as f64 / u64::MAX as f64;
        Ok(draw < self.success)
    }

    fn standoff_height(&self) -> f64 {
        self.inner.standoff_height()
    }

    fn concurrent(&self) -> bool {
        self.inner.concurrent()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityMap {
    pub table: TableSpec,
    pub gridspec: GridSpec,
    /// Row-major; `true` = reachable.
    pub cells: Vec<bool>,
}

/// File layout: the grid is one `"#..#"` string per row so map files stay readable.
#[derive(Serialize, Deserialize)]
struct MapRecord {
    table: TableSpec,
    grid: GridSpec,
    rows: Vec<String>,
}

impl ReachabilityMap {
    pub fn new(table: TableSpec, gridspec: GridSpec, cells: Vec<bool>) -> Result<Self> {
        table.validate()?;
        gridspec.validate()?;
        if cells.len() != gridspec.cell_count() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} cells, expected {}",
                cells.len(),
                gridspec.cell_count()
            )));
        }
        Ok(Self {
            table,
            gridspec,
            cells,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.gridspec.cols + col]
    }

    pub fn centers(&self) -> Vec<Vec3> {
        build_grid(&self.table, &self.gridspec).expect("validated at construction")
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Vec3 {
        let t = &self.table;
        let g = &self.gridspec;
        let (dx, dy) = (t.size[0] / g.rows as f64, t.size[1] / g.cols as f64);
        Vec3::new(
            t.offset[0] - t.size[0] / 2.0 + (row as f64 + 0.5) * dx,
            t.offset[1] - t.size[1] / 2.0 + (col as f64 + 0.5) * dy,
            t.surface_height(),
        )
    }

    /// Reachable cells as `(row, col)`, row-major.
    pub fn reachable_cells(&self) -> Vec<(usize, usize)> {
        let cols = self.gridspec.cols;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .map(|(i, _)| (i / cols, i % cols))
            .collect()
    }

    pub fn reachable_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.reachable_count() == 0
    }

    pub fn to_json(&self) -> Result<String> {
        let rows = self
            .cells
            .chunks(self.gridspec.cols)
            .map(|row| row.iter().map(|&c| if c { '#' } else { '.' }).collect())
            .collect();
        let record = MapRecord {
            table: self.table,
            grid: self.gridspec,
            rows,
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: MapRecord = serde_json::from_str(text)?;
        if record.rows.len() != record.grid.rows
            || record.rows.iter().any(|r| r.chars().count() != record.grid.cols)
        {
            return Err(Error::parse("reachability grid", "row/column count does not match grid spec"));
        }
        let mut cells = Vec::with_capacity(record.grid.cell_count());
        for (r, row) in record.rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::parse(
                            format!("reachability grid row {r} col {c}"),
                            format!("bad cell '{other}'"),
                        ))
                    }
                });
            }
        }
        Self::new(record.table, record.grid, cells)
    }

    /// One line per row, `#` reachable, `.` not.
    pub fn ascii(&self) -> String {
        let mut s = String::new();
        for r in 0..self.gridspec.rows {
            for c in 0..self.gridspec.cols {
                s.push(if self.get(r, c) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}

/// Probes every cell for `iterations` rounds. A cell accepted in any round is
/// reachable; only cells still unaccepted are re-queried.
pub fn compute_reachability_map(
    table: &TableSpec,
    grid: &GridSpec,
    oracle: &dyn ReachOracle,
    iterations: u32,
) -> Result<ReachabilityMap> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    let centers = build_grid(table, grid)?;
    let rotation = downward_rotation();
    let lift = Vec3::new(0.0, 0.0, oracle.standoff_height());
    let mut reachable = vec![false; centers.len()];

    for attempt in 1..=iterations {
        let pending: Vec<usize> = (0..centers.len()).filter(|&i| !reachable[i]).collect();
        if pending.is_empty() {
            break;
        }
        let probe = |i: usize| -> Result<(usize, bool)> {
            let cell = (i / grid.cols, i % grid.cols);
            let p = ReachabilityProbe {
                cell,
                standoff_pose: Pose::new(rotation, centers[i] + lift),
                attempts: attempt,
            };
            oracle
                .query(&p)
                .map(|ok| (i, ok))
                .map_err(|message| Error::Oracle {
                    row: cell.0,
                    col: cell.1,
                    message,
                })
        };
        let results: Vec<Result<(usize, bool)>> = crate::par::map(&pending, oracle.concurrent(), |&i| probe(i));
        // results are in cell order, so the first error is the lowest failing cell
        for r in results {
            let (i, ok) = r?;
            if ok {
                reachable[i] = true;
            }
        }
    }
    ReachabilityMap::new(*table, *grid, reachable)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_geometry() {
        let centers = build_grid(&TableSpec::default(), &GridSpec::default()).unwrap();
        assert_eq!(centers.len(), 256);
        for c in &centers {
            assert!(c.x > 0.3 && c.x < 1.3);
            assert!(c.y > -0.5 && c.y < 0.5);
            assert_eq!(c.z, 0.745);
        }
    }

    #[test]
    fn single_cell_is_table_center() {
        let g = GridSpec {
            rows: 1,
            cols: 1,
            block_size: 0.03,
        };
        let c = build_grid(&TableSpec::default(), &g).unwrap();
        assert_eq!(c, vec![Vec3::new(0.8, 0.0, 0.745)]);
    }

    #[test]
    fn two_by_two_lattice() {
        let g = GridSpec {
            rows: 2,
            cols: 2,
            block_size: 0.03,
        };
        let c = build_grid(&TableSpec::default(), &g).unwrap();
        let expect = [(0.55, -0.25), (0.55, 0.25), (1.05, -0.25), (1.05, 0.25)];
        for (p, (x, y)) in c.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = GridSpec {
            rows: 0,
            cols: 4,
            block_size: 0.03,
        };
        assert!(build_grid(&TableSpec::default(), &bad).is_err());
        let t = TableSpec {
            size: [1.0, -1.0, 0.7],
            offset: [0.0; 3],
        };
        assert!(build_grid(&t, &GridSpec::default()).is_err());
    }

    #[test]
    fn stub_oracles() {
        let t = TableSpec::default();
        let g = GridSpec::default();
        let all = compute_reachability_map(&t, &g, &|_: &ReachabilityProbe| true, 20).unwrap();
        assert_eq!(all.reachable_count(), 256);
        let none = compute_reachability_map(&t, &g, &|_: &ReachabilityProbe| false, 20).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn oracle_error_names_cell() {
        struct Broken;
        impl ReachOracle for Broken {
            fn query(&self, p: &ReachabilityProbe) -> std::result::Result<bool, String> {
                if p.cell == (3, 5) {
                    Err("planner crashed".into())
                } else {
                    Ok(true)
                }
            }
        }
        let err = compute_reachability_map(&TableSpec::default(), &GridSpec::default(), &Broken, 1)
            .unwrap_err();
        match err {
            Error::Oracle { row, col, .. } => assert_eq!((row, col), (3, 5)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn analytic_oracle_boundaries() {
        let o = analytic_reach_oracle(Vec3::zeros(), 0.5, 1.0, 0.15).unwrap();
        assert!(!o.accepts(&Vec3::new(1.0 + 1e-9, 0.0, 0.0)));
        assert!(o.accepts(&Vec3::new(0.75, 0.0, 0.0)));
        assert!(!o.accepts(&Vec3::new(0.3, 0.0, 0.0)));
        assert!(analytic_reach_oracle(Vec3::zeros(), 1.0, 1.0, 0.15).is_err());
        assert!(analytic_reach_oracle(Vec3::zeros(), -0.1, 1.0, 0.15).is_err());
    }

    #[test]
    fn standoff_poses_point_down_above_cell() {
        let seen = std::sync::Mutex::new(Vec::new());
        let oracle = |p: &ReachabilityProbe| {
            seen.lock().unwrap().push(p.clone());
            false
        };
        let g = GridSpec {
            rows: 2,
            cols: 3,
            block_size: 0.03,
        };
        compute_reachability_map(&TableSpec::default(), &g, &oracle, 2).unwrap();
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), 12);
        let centers = build_grid(&TableSpec::default(), &g).unwrap();
        for p in &seen {
            let c = centers[p.cell.0 * 3 + p.cell.1];
            assert!((p.standoff_pose.translation - c - Vec3::new(0.0, 0.0, 0.15)).norm() < 1e-12);
            assert_eq!(p.standoff_pose.rotation * Vec3::z(), -Vec3::z());
            assert!(p.attempts >= 1);
        }
    }

    #[test]
    fn map_file_round_trip() {
        let m = compute_reachability_map(
            &TableSpec::default(),
            &GridSpec::default(),
            &AnalyticReachOracle::default(),
            20,
        )
        .unwrap();
        let back = ReachabilityMap::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(ReachabilityMap::from_json(&m.to_json().unwrap().replace('#', "x")).is_err());
    }
}
