use beamtraj::model::{evaluate_plan, rate_from_snr, DiscretePlan, Point, Scenario, ScenarioFile};
use beamtraj::presets;
use beamtraj::relaxed::{solve_p11, solve_p21};
use beamtraj::sca::{
    init_direct, init_fly_hover_fly, init_successive_hover_fly, outage_postprocess, power_subproblem, read_plan_csv,
    select_init, serve_top_slots, shortest_tour, solve_finite, surrogate_objective, traj_subproblem, write_plan_csv,
    FiniteSolver, InitKind,
};
use beamtraj::{Mode, SolveConfig};

fn cfg(n: usize) -> SolveConfig {
    SolveConfig { n_slots: n, ..SolveConfig::default() }
}

fn parked_single(p_avg_dbm: f64, horizon: f64, gamma_db: Option<f64>) -> Scenario {
    let mut f = presets::single_sensor(p_avg_dbm, horizon, gamma_db);
    f.uav.q_init_m = [0.0, 0.0];
    f.uav.q_final_m = [0.0, 0.0];
    f.load().unwrap()
}

fn hover_plan(scn: &Scenario, n: usize, at: Point, powers: Vec<Vec<f64>>) -> DiscretePlan {
    DiscretePlan { slot_len: scn.horizon() / n as f64, waypoints: vec![at; n], powers }
}

#[test]
fn direct_path_two_slots_passes_the_midpoint() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let t = init_direct(&scn, &cfg(2)).unwrap();
    assert_eq!(t.waypoints, vec![Point::new(100.0, 100.0), Point::new(200.0, 200.0)]);
    let t = init_direct(&scn, &cfg(64)).unwrap();
    let step = scn.q_init().dist(scn.q_final()) / 64.0;
    let mut prev = scn.q_init();
    for q in &t.waypoints {
        assert!((q.dist(prev) - step).abs() < 1e-9);
        prev = *q;
    }
}

#[test]
fn direct_path_is_stationary_when_endpoints_coincide() {
    let scn = presets::two_sensor(80.0, 30.0, None).load().unwrap();
    let t = init_direct(&scn, &cfg(16)).unwrap();
    assert!(t.waypoints.iter().all(|q| *q == Point::new(0.0, 0.0)));
}

#[test]
fn fly_hover_fly_single_sensor_hovers_over_it() {
    let scn = presets::single_sensor(30.0, 10.0, None).load().unwrap();
    let t = init_fly_hover_fly(&scn, &cfg(100)).unwrap();
    assert_eq!(t.hover_points, vec![Point::new(0.0, 0.0)]);
    // 20 m in, 20 m out at 40 m/s.
    assert!((t.fly_time - 1.0).abs() < 1e-6);
    assert!((t.hover_durations[0] - 9.0).abs() < 1e-6);
    t.with_powers(&scn.budgets()).check(&scn).unwrap();
}

#[test]
fn fly_hover_fly_on_the_field_fills_the_horizon() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let t = init_fly_hover_fly(&scn, &cfg(128)).unwrap();
    let fix = t.hover_points[0];
    let path = scn.q_init().dist(fix) + fix.dist(scn.q_final());
    assert!((t.hover_durations[0] - (20.0 - path / 40.0)).abs() < 1e-6);
    t.with_powers(&scn.budgets()).check(&scn).unwrap();
}

#[test]
fn tour_of_three_hover_points_is_the_shortest_permutation() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let c = cfg(128);
    let (hover, _) = solve_p11(&scn, &c).unwrap();
    assert_eq!(hover.points.len(), 3);
    let pts: Vec<Point> = hover.points.iter().map(|p| p.location).collect();
    let len = |order: &[usize]| {
        let mut at = scn.q_init();
        let mut l = 0.0;
        for &i in order {
            l += at.dist(pts[i]);
            at = pts[i];
        }
        l + at.dist(scn.q_final())
    };
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let best = perms.iter().map(|p| len(p)).fold(f64::INFINITY, f64::min);
    let (order, optimal) = shortest_tour(&scn, &pts, 8);
    assert!(optimal);
    assert!((len(&order) - best).abs() < 1e-9);

    let t = init_successive_hover_fly(&scn, &hover, &c).unwrap();
    assert_eq!(t.kind, InitKind::SuccessiveHoverFly);
    assert!((t.fly_time - best / 40.0).abs() < 1e-6);
    assert!((t.hover_durations.iter().sum::<f64>() + t.fly_time - 20.0).abs() < 1e-6);
    t.with_powers(&scn.budgets()).check(&scn).unwrap();
}

#[test]
fn two_point_tour_takes_the_shorter_direction() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let pts = [Point::new(180.0, 190.0), Point::new(10.0, 5.0)];
    let (order, _) = shortest_tour(&scn, &pts, 8);
    assert_eq!(order, vec![1, 0]);
    // The heuristic agrees on an easy instance and says so.
    let (order, optimal) = shortest_tour(&scn, &pts, 0);
    assert_eq!(order, vec![1, 0]);
    assert!(!optimal);
}

#[test]
fn constant_channel_single_sensor_gets_uniform_power() {
    let scn = parked_single(30.0, 10.0, None);
    let n = 8;
    let p = scn.budgets()[0];
    let uneven = (0..n).map(|i| vec![if i % 2 == 0 { 1.6 * p } else { 0.4 * p }]).collect();
    let mut plan = hover_plan(&scn, n, Point::new(0.0, 0.0), uneven);
    for _ in 0..30 {
        plan = power_subproblem(&plan, Mode::Rate, &scn, &cfg(n)).unwrap().plan;
    }
    for row in &plan.powers {
        assert!((row[0] - p).abs() < 1e-3 * p, "{:?}", plan.powers);
    }
}

#[test]
fn zero_budget_sensor_stays_silent() {
    let scn = presets::two_sensor(80.0, 30.0, None).load().unwrap().with_budget(1, 0.0);
    let n = 8;
    let plan = hover_plan(&scn, n, Point::new(0.0, 0.0), vec![vec![1.0, 0.0]; n]);
    let step = power_subproblem(&plan, Mode::Rate, &scn, &cfg(n)).unwrap();
    assert!(step.plan.powers.iter().all(|r| r[1] == 0.0));
    assert!(step.objective_after >= step.objective_before);
}

#[test]
fn trajectory_step_never_lowers_the_objective() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let c = cfg(32);
    let t = init_direct(&scn, &c).unwrap();
    let plan = t.with_powers(&scn.budgets());
    for mode in [Mode::Rate, Mode::Outage] {
        let s = traj_subproblem(&plan, mode, &scn, &c).unwrap();
        assert!(s.objective_after >= s.objective_before);
        assert_eq!(s.objective_before, surrogate_objective(&plan, mode, &scn).unwrap());
        s.plan.check(&scn).unwrap();
    }
}

#[test]
fn single_candidate_is_selected() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let c = cfg(32);
    let t = init_direct(&scn, &c).unwrap();
    let (plan, kind) = select_init(&scn, std::slice::from_ref(&t), Mode::Rate, &c).unwrap();
    assert_eq!(kind, InitKind::Direct);
    assert_eq!(plan.waypoints, t.waypoints);
}

#[test]
fn rate_sca_is_sandwiched_and_monotone() {
    let scn = presets::two_sensor(80.0, 30.0, None).load().unwrap();
    let c = cfg(32);
    let out = solve_finite(&scn, Mode::Rate, FiniteSolver::Sca, &c).unwrap();
    let objs = out.trace.objectives();
    assert!(objs.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
    let (relaxed, _) = solve_p11(&scn, &c).unwrap();
    assert!(out.objective <= relaxed.objective + c.duality_gap_tol);
    assert!(out.objective >= out.init_objective - 1e-9);
    out.plan.check(&scn).unwrap();
}

#[test]
fn single_sensor_long_horizon_hovers_over_it() {
    let scn = presets::single_sensor(30.0, 60.0, None).load().unwrap();
    let c = cfg(60);
    let out = solve_finite(&scn, Mode::Rate, FiniteSolver::Sca, &c).unwrap();
    let near = out.plan.waypoints.iter().filter(|q| q.norm() < 1.0).count();
    assert!(near >= 55, "only {near} slots near the sensor");
    let ch = scn.channel();
    let hover = rate_from_snr(scn.budgets()[0] * ch.beta0 * 50f64.powf(-ch.alpha) / ch.sigma2);
    assert!(out.objective <= hover + 1e-9);
    assert!(out.objective >= 0.98 * hover);
}

#[test]
fn outage_sca_is_sandwiched() {
    let scn = presets::two_sensor(80.0, 30.0, Some(17.0)).load().unwrap();
    let c = cfg(32);
    let out = solve_finite(&scn, Mode::Outage, FiniteSolver::Sca, &c).unwrap();
    let (relaxed, _) = solve_p21(&scn, &c).unwrap();
    assert!(out.objective >= relaxed.objective - c.duality_gap_tol);
    assert!(out.objective <= out.init_objective);
    let post = out.post.as_ref().unwrap();
    assert_eq!(evaluate_plan(&out.plan, &scn).outage_prob.unwrap(), post.outage_prob);
    out.plan.check(&scn).unwrap();
}

#[test]
fn post_processing_count_matches_closed_form() {
    let n = 64;
    // Hovering at 50 m over the sensor needs P = γσ²H^α/β0 per served slot.
    for (p_dbm, gamma_db) in [(20.0, 20.0), (25.0, 23.0), (30.0, 31.0)] {
        let scn = parked_single(p_dbm, 10.0, Some(gamma_db));
        let ch = scn.channel();
        let need = scn.gamma_min().unwrap() * ch.sigma2 * 50f64.powf(ch.alpha) / ch.beta0;
        let expect = ((n as f64 * scn.budgets()[0] / need).floor() as usize).min(n);
        let plan = hover_plan(&scn, n, Point::new(0.0, 0.0), vec![scn.budgets(); n]);
        let post = outage_postprocess(&plan, &scn, &cfg(n)).unwrap();
        assert_eq!(post.n_served, expect, "P = {p_dbm} dBm, γ = {gamma_db} dB");
        assert_eq!(post.outage_prob, 1.0 - expect as f64 / n as f64);
        assert!(!post.linear_scan);
    }
}

#[test]
fn tiny_threshold_serves_every_slot() {
    let scn = presets::field(20.0, 30.0).load().unwrap().with_gamma_min(Some(1e-6));
    let c = cfg(32);
    let plan = init_direct(&scn, &c).unwrap().with_powers(&scn.budgets());
    let post = outage_postprocess(&plan, &scn, &c).unwrap();
    assert_eq!(post.n_served, 32);
    assert_eq!(post.outage_prob, 0.0);
}

#[test]
fn served_count_feasibility_is_monotone() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let c = cfg(24);
    let plan = init_fly_hover_fly(&scn, &c).unwrap().with_powers(&scn.budgets());
    let snr = evaluate_plan(&plan, &scn).per_slot_snr;
    let mut order: Vec<usize> = (0..24).collect();
    order.sort_by(|&a, &b| snr[b].total_cmp(&snr[a]));
    let feasible: Vec<bool> = (0..=24).map(|m| serve_top_slots(&plan, &order, m, &scn, &c).is_some()).collect();
    let last = feasible.iter().rposition(|&f| f).unwrap();
    assert!(feasible[..=last].iter().all(|&f| f), "{feasible:?}");
    let post = outage_postprocess(&plan, &scn, &c).unwrap();
    assert_eq!(post.n_served, last);
    let served = evaluate_plan(&post.plan, &scn).per_slot_snr;
    for &s in &post.order[..post.n_served] {
        assert!(served[s] >= scn.gamma_min().unwrap() - c.tol_feas);
    }
    post.plan.check(&scn).unwrap();
}

#[test]
fn plan_csv_round_trips() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let c = cfg(16);
    let plan = init_fly_hover_fly(&scn, &c).unwrap().with_powers(&scn.budgets());
    let mut buf = Vec::new();
    write_plan_csv(&plan, &scn, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("n,t_s,x_m,y_m,p1_w,"));
    assert!(text.lines().next().unwrap().ends_with("p10_w,snr_linear,rate_bpshz,outage_flag"));
    let back = read_plan_csv(buf.as_slice(), &scn).unwrap();
    assert_eq!(back, plan);
    let (a, b) = (evaluate_plan(&plan, &scn), evaluate_plan(&back, &scn));
    assert!((a.avg_rate - b.avg_rate).abs() <= 1e-9);
}

#[test]
fn trajectory_only_with_average_powers_always_fails_the_threshold() {
    let scn = presets::field(20.0, 30.0).load().unwrap();
    let out = solve_finite(&scn, Mode::Outage, FiniteSolver::TrajOnly, &cfg(32)).unwrap();
    assert_eq!(out.objective, 1.0);
    assert!(out.post.is_none());
}

#[test]
fn scenario_file_round_trips_through_json() {
    let f = presets::field(20.0, 30.0);
    assert_eq!(ScenarioFile::from_json(&f.to_json()).unwrap(), f);
}
