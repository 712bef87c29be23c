//! The forward-backward sweep on the reference scenario: frozen solution
//! values, schedule shape, robustness to the starting guess and to grid
//! refinement, and optimality certificates.

use tb_optctl_core::equilibrium::{default_tolerance, endemic_equilibrium};
use tb_optctl_core::model::{dynamics_rhs, ControlPoint, Parameters, State};
use tb_optctl_core::ode::{rk4_forward, TimeGrid, Trajectory};
use tb_optctl_core::optctl::{
    objective, project_controls, solve_fbs, solve_fbs_with_guess, FbsSettings, OptimalSolution,
    StrategyMask,
};

fn baseline() -> Parameters<f64> {
    Parameters::baseline(100.0, 0.25).unwrap()
}

fn endemic_state(params: &Parameters<f64>) -> State<f64> {
    endemic_equilibrium(params, default_tolerance(params), 5000.0)
        .unwrap()
        .state
}

fn solve_reference() -> (Parameters<f64>, OptimalSolution<f64>) {
    let params = baseline();
    let start = endemic_state(&params);
    let settings = FbsSettings::with_default_grid(params.t_f).unwrap();
    let sol = solve_fbs(&params, start, StrategyMask::both(), &settings).unwrap();
    (params, sol)
}

#[test]
fn reference_solve_matches_the_frozen_objective() {
    let (_, sol) = solve_reference();
    assert!(sol.converged);
    assert!(sol.residual <= 1.0e-4);
    assert!(
        (10..=25).contains(&sol.iterations),
        "iterations {}",
        sol.iterations
    );
    let expected = 3367.1618789088;
    assert!(
        (sol.objective - expected).abs() <= 1.0e-4 * expected,
        "objective {}",
        sol.objective
    );
}

#[test]
fn schedule_starts_saturated_and_releases_by_the_horizon() {
    let (_, sol) = solve_reference();
    let first = sol.control_traj.first();
    let last = sol.control_traj.last();
    assert!(first.u1 > 0.99 && first.u2 > 0.99, "start {first:?}");
    assert!(last.u1 < 1.0e-3 && last.u2 < 1.0e-3, "end {last:?}");
    assert!(sol.control_traj.values().iter().all(|u| u.is_admissible()));
}

#[test]
fn prevalence_falls_throughout_the_horizon() {
    let (_, sol) = solve_reference();
    let i: Vec<f64> = sol.state_traj.values().iter().map(|x| x.i).collect();
    let i0 = i[0];
    assert!((i0 - 23.9469634658).abs() <= 1.0e-3 * i0);
    // Strict decay until shortly before the horizon, where the collapsing
    // controls allow a sub-1e-4 uptick.
    let grid = sol.state_traj.grid();
    let guard = (0.98 * grid.n_steps() as f64) as usize;
    for k in 1..=guard {
        assert!(i[k] < i[k - 1], "prevalence rose at node {k}");
    }
    let minimum = i.iter().copied().fold(f64::INFINITY, f64::min);
    let terminal = i[i.len() - 1];
    assert!(terminal - minimum < 1.0e-2);
    assert!(terminal < 0.3 * i0, "terminal prevalence {terminal}");
}

#[test]
fn different_starting_guesses_reach_the_same_schedule() {
    let params = baseline();
    let start = endemic_state(&params);
    let settings = FbsSettings::with_default_grid(params.t_f).unwrap();
    let tol = settings.tol;
    let from_zero = solve_fbs_with_guess(
        &params,
        start,
        StrategyMask::both(),
        &settings,
        ControlPoint::new(0.0, 0.0),
    )
    .unwrap();
    let from_one = solve_fbs_with_guess(
        &params,
        start,
        StrategyMask::both(),
        &settings,
        ControlPoint::new(1.0, 1.0),
    )
    .unwrap();

    let objective_gap = (from_zero.objective - from_one.objective).abs()
        / from_zero.objective.abs().max(1.0);
    assert!(objective_gap <= 10.0 * tol, "objective gap {objective_gap:e}");

    let control_gap = from_zero
        .control_traj
        .values()
        .iter()
        .zip(from_one.control_traj.values())
        .map(|(a, b)| (a.u1 - b.u1).abs().max((a.u2 - b.u2).abs()))
        .fold(0.0, f64::max);
    assert!(control_gap <= 100.0 * tol, "control gap {control_gap:e}");
}

#[test]
fn a_ten_times_finer_grid_confirms_the_objective() {
    let (params, sol) = solve_reference();
    let start = endemic_state(&params);
    let fine = FbsSettings::new(TimeGrid::new(0.0, params.t_f, 10_000).unwrap());
    let fine_sol = solve_fbs(&params, start, StrategyMask::both(), &fine).unwrap();
    let gap = (sol.objective - fine_sol.objective).abs() / fine_sol.objective;
    assert!(gap <= 1.0e-3, "objective gap {gap:e} against the fine grid");
}

#[test]
fn prohibitive_effort_weights_shut_the_controls_off() {
    let mut params = baseline();
    params.w1 = 1.0e8;
    params.w2 = 1.0e8;
    let start = endemic_state(&params);
    let settings = FbsSettings::with_default_grid(params.t_f).unwrap();
    let sol = solve_fbs(&params, start, StrategyMask::both(), &settings).unwrap();
    let max_u = sol
        .control_traj
        .values()
        .iter()
        .map(|u| u.u1.max(u.u2))
        .fold(0.0, f64::max);
    assert!(max_u <= 1.0e-3, "controls did not shut off: {max_u:e}");

    // With controls this small the state should track the uncontrolled run.
    let uncontrolled = rk4_forward(&settings.grid, start, |_, x| {
        dynamics_rhs(x, ControlPoint::new(0.0, 0.0), &params).expect("finite state")
    })
    .unwrap();
    let worst = sol
        .state_traj
        .values()
        .iter()
        .zip(uncontrolled.values())
        .map(|(a, b)| (a.i - b.i).abs() / b.i.abs().max(1.0))
        .fold(0.0, f64::max);
    assert!(worst <= 1.0e-3, "state deviated by {worst:e}");
}

#[test]
fn the_schedule_beats_both_constant_extremes() {
    let (params, sol) = solve_reference();
    let start = endemic_state(&params);
    let grid = *sol.state_traj.grid();
    for level in [0.0, 1.0] {
        let constant = Trajectory::constant(grid, ControlPoint::new(level, level));
        let states = rk4_forward(&grid, start, |t, x| {
            dynamics_rhs(x, constant.sample(t), &params).expect("finite state")
        })
        .unwrap();
        let j_constant = objective(&states, &constant, &params).unwrap();
        assert!(
            sol.objective < j_constant,
            "schedule {} does not beat constant {level}: {j_constant}",
            sol.objective
        );
    }
}

#[test]
fn the_converged_schedule_is_a_projection_fixed_point() {
    let (params, sol) = solve_reference();
    let scale = sol
        .control_traj
        .values()
        .iter()
        .map(|u| u.u1.abs().max(u.u2.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    let gap = sol
        .state_traj
        .values()
        .iter()
        .zip(sol.adjoint_traj.values())
        .zip(sol.control_traj.values())
        .map(|((&x, &l), &u)| {
            let v = project_controls(x, l, &params, StrategyMask::both());
            (v.u1 - u.u1).abs().max((v.u2 - u.u2).abs())
        })
        .fold(0.0, f64::max);
    assert!(gap / scale <= 1.0e-4, "projection gap {gap:e}");
}
