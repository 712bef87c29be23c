//! Cost-effectiveness summaries of the three standard strategies at the
//! reference scenario, frozen as regression values, plus the exact
//! identities the summaries must satisfy.

use tb_optctl_core::measures::efficacy;
use tb_optctl_core::model::Parameters;
use tb_optctl_core::ode::{TimeGrid, Trajectory};
use tb_optctl_core::optctl::StrategyMask;
use tb_optctl_core::scenarios::{strategy_comparison, ScenarioSpec, StrategyComparison};

fn compare() -> StrategyComparison<f64> {
    let params = Parameters::baseline(100.0, 0.25).unwrap();
    let base = ScenarioSpec::new(params, StrategyMask::both(), "base").unwrap();
    strategy_comparison(100.0, 0.25, &base, None).unwrap()
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

#[test]
fn the_three_strategies_reproduce_their_frozen_summaries() {
    let cmp = compare();
    assert_eq!(cmp.results.len(), 3);
    let [a, b, c] = [&cmp.results[0], &cmp.results[1], &cmp.results[2]];
    assert_eq!(a.spec.label, "a");
    assert_eq!(b.spec.label, "b");
    assert_eq!(c.spec.label, "c");
    for r in [a, b, c] {
        assert!(r.converged(), "{} did not converge", r.spec.label);
    }

    assert!(close(a.measures.cases_averted, 55.90505327, 1.0e-3));
    assert!(close(a.measures.total_cost, 23449.53739687, 1.0e-3));
    assert!(close(a.measures.acer.unwrap(), 419.45291214, 2.0e-3));
    assert!((a.measures.effectiveness - 0.46690724).abs() <= 1.0e-3);
    assert!((a.measures.tr1 - 4.195).abs() <= 0.05);
    assert!((a.measures.tr2 - 2.000).abs() <= 0.05);
    assert!(close(a.solution.objective, 3367.1618789088, 1.0e-3));

    assert!(close(b.measures.cases_averted, 36.98907741, 1.0e-3));
    assert!(close(b.measures.total_cost, 211.491583, 2.0e-3));
    assert!(close(b.measures.acer.unwrap(), 5.717677, 3.0e-3));
    assert!((b.measures.effectiveness - 0.30892499).abs() <= 1.0e-3);
    assert!((b.measures.tr1 - 4.545).abs() <= 0.05);
    assert_eq!(b.measures.tr2, 0.0);

    assert!(close(c.measures.cases_averted, 23.37810959, 1.0e-3));
    assert!(close(c.measures.total_cost, 23976.262168, 1.0e-3));
    assert!(close(c.measures.acer.unwrap(), 1025.586011, 2.0e-3));
    assert!((c.measures.effectiveness - 0.19524905).abs() <= 1.0e-3);
    assert_eq!(c.measures.tr1, 0.0);
    assert!((c.measures.tr2 - 2.155).abs() <= 0.05);
}

#[test]
fn the_ranking_drops_the_single_late_control_strategy() {
    let cmp = compare();
    let table = &cmp.table;
    assert_eq!(table.entries.len(), 3);
    // Ordered by cases averted: c, b, a.
    let labels: Vec<&str> = table.entries.iter().map(|e| e.label.as_str()).collect();
    assert_eq!(labels, ["c", "b", "a"]);

    let c = table.entry("c").unwrap();
    let b = table.entry("b").unwrap();
    let a = table.entry("a").unwrap();

    // c averts less than b at far higher cost, so it is dominated and gets
    // no increment.
    assert!(c.dominated);
    assert_eq!(c.icer, None);
    assert!(!b.dominated && !a.dominated);

    // The least effective retained strategy ranks against doing nothing.
    assert_eq!(b.icer, b.acer);

    let expected = (a.total_cost - b.total_cost) / (a.cases_averted - b.cases_averted);
    let icer_a = a.icer.unwrap();
    assert!((icer_a - expected).abs() <= 1.0e-12 * expected);
    assert!(
        (1200.0..=1260.0).contains(&icer_a),
        "incremental ratio {icer_a}"
    );
}

#[test]
fn summary_identities_hold_to_rounding() {
    let cmp = compare();
    for r in &cmp.results {
        let i0 = r.solution.state_traj.first().i;
        let t_f = r.spec.params.t_f;
        let lhs = r.measures.effectiveness * (t_f * i0);
        assert!(
            (lhs - r.measures.cases_averted).abs() <= 1.0e-12 * r.measures.cases_averted.abs(),
            "effectiveness identity broke for {}",
            r.spec.label
        );
        let acer = r.measures.acer.unwrap();
        assert!(
            (acer * r.measures.cases_averted - r.measures.total_cost).abs()
                <= 1.0e-12 * r.measures.total_cost.abs(),
            "cost identity broke for {}",
            r.spec.label
        );
    }
}

#[test]
fn efficacy_ends_near_three_quarters_at_the_reference_point() {
    let cmp = compare();
    let a = &cmp.results[0];
    let e = &a.measures.efficacy_traj;
    assert_eq!(e.first(), 0.0);
    assert!((e.last() - 0.7360).abs() <= 2.0e-3, "terminal efficacy {}", e.last());
    assert!(e.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn efficacy_above_the_reference_level_is_reported_not_clamped() {
    // A prevalence curve that rises above its starting level must yield
    // negative efficacy values rather than silently clamping at zero.
    let grid = TimeGrid::new(0.0, 5.0, 5).unwrap();
    let i_traj = Trajectory::new(grid, vec![10.0, 12.0, 15.0, 9.0, 8.0, 7.0]).unwrap();
    let e = efficacy(&i_traj, 10.0).unwrap();
    assert!(e.value(1) < 0.0);
    assert!(e.value(2) < e.value(1));
    assert!(e.last() > 0.0);
}

#[test]
fn summary_rows_carry_the_scenario_coordinates() {
    let cmp = compare();
    let row = cmp.results[1].summary_row();
    assert_eq!(row.beta, 100.0);
    assert_eq!(row.sigma_r, 0.25);
    assert_eq!(row.strategy, "b");
    assert!(row.converged);
    assert_eq!(row.cases_averted, cmp.results[1].measures.cases_averted);
    assert_eq!(row.objective, cmp.results[1].solution.objective);
}
