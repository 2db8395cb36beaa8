use proptest::prelude::*;

use tablescene::geometry::Vec3;
use tablescene::reachability::{
    analytic_reach_oracle, compute_reachability_map, FlakyPlanner, GridSpec, ReachabilityProbe, TableSpec,
};

fn grid() -> impl Strategy<Value = GridSpec> {
    (2usize..20, 2usize..20).prop_map(|(rows, cols)| GridSpec {
        rows,
        cols,
        block_size: 0.03,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn more_iterations_never_lose_cells(g in grid(), seed in any::<u64>(), p in 0.05..0.95f64, k in 1u32..8) {
        let inner = analytic_reach_oracle(Vec3::new(0.0, 0.0, 0.895), 0.35, 1.1, 0.15).unwrap();
        let flaky = FlakyPlanner { inner, success: p, seed };
        let table = TableSpec::default();
        let a = compute_reachability_map(&table, &g, &flaky, k).unwrap();
        let b = compute_reachability_map(&table, &g, &flaky, k + 1).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            prop_assert!(!x || *y);
        }
    }

    #[test]
    fn symmetric_oracle_gives_symmetric_map(
        g in grid(),
        r_min in 0.0..0.6f64,
        width in 0.1..0.8f64,
        sx in 0.0..0.4f64,
        sz in 0.7..1.1f64,
    ) {
        let oracle = analytic_reach_oracle(Vec3::new(sx, 0.0, sz), r_min, r_min + width, 0.15).unwrap();
        let map = compute_reachability_map(&TableSpec::default(), &g, &oracle, 3).unwrap();
        for r in 0..g.rows {
            for c in 0..g.cols {
                prop_assert_eq!(map.get(r, c), map.get(r, g.cols - 1 - c));
            }
        }
    }

    #[test]
    fn maps_are_reproducible(g in grid(), seed in any::<u64>(), k in 1u32..6) {
        let inner = analytic_reach_oracle(Vec3::new(0.0, 0.0, 0.895), 0.35, 1.1, 0.15).unwrap();
        let flaky = FlakyPlanner { inner, success: 0.5, seed };
        let table = TableSpec::default();
        let a = compute_reachability_map(&table, &g, &flaky, k).unwrap();
        let b = compute_reachability_map(&table, &g, &flaky, k).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}

#[test]
fn closure_oracle_sees_downward_standoff() {
    let oracle = |p: &ReachabilityProbe| {
        let z = p.standoff_pose.rotation * Vec3::z();
        (z + Vec3::z()).norm() < 1e-12 && p.standoff_pose.translation.y > 0.0
    };
    let g = GridSpec::default();
    let map = compute_reachability_map(&TableSpec::default(), &g, &oracle, 1).unwrap();
    assert_eq!(map.reachable_count(), g.cell_count() / 2);
}
