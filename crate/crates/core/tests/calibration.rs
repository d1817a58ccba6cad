use std::cell::RefCell;

use loadertwin_core::calibration::*;
use loadertwin_core::mechanism::{forward_kinematics, CylinderExtensions, LinkageGeometry};
use loadertwin_core::terrain::*;
use loadertwin_core::trace::{ForceTrace, PoseSample, PoseTrace};
use proptest::prelude::*;

fn trace(samples: Vec<(f64, f64)>) -> ForceTrace {
    ForceTrace::new("t", samples).unwrap()
}

/// Piecewise-linear interpolation written out directly, clamped at both ends.
fn lerp_at(s: &[(f64, f64)], t: f64) -> f64 {
    if t <= s[0].0 {
        return s[0].1;
    }
    for w in s.windows(2) {
        if t <= w[1].0 {
            let u = (t - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + u * (w[1].1 - w[0].1);
        }
    }
    s[s.len() - 1].1
}

fn oracle_avg(sim: &[(f64, f64)], meas: &[(f64, f64)], points: usize) -> f64 {
    let t0 = sim[0].0.max(meas[0].0);
    let t1 = sim[sim.len() - 1].0.min(meas[meas.len() - 1].0);
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..points {
        let t = t0 + (t1 - t0) * k as f64 / (points - 1) as f64;
        num += (lerp_at(sim, t) - lerp_at(meas, t)).abs();
        den += lerp_at(meas, t);
    }
    100.0 * num / den
}

/// Smooth positive force history sampled at `n` uneven instants.
fn force_samples(t0: f64, t1: f64, n: usize, amp: f64, phase: f64, jitter: &[f64]) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let base = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
            let dt = if k == 0 || k == n - 1 { 0.0 } else { 0.3 * (t1 - t0) / (n - 1) as f64 * jitter[k % jitter.len()] };
            let t = base + dt;
            (t, amp * (1.4 + (3.0 * t + phase).sin() + 0.3 * (7.0 * t).cos()))
        })
        .collect()
}

proptest! {
    #[test]
    fn avg_error_agrees_with_dense_summation(
        ratio in 0.5f64..2.0,
        amp_m in 10.0f64..5000.0,
        phase in 0.0f64..6.0,
        shift in -0.5f64..0.5,
        n_s in 10usize..80,
        n_m in 10usize..80,
        jitter in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let sim = force_samples(shift, 3.0 + shift, n_s, ratio * amp_m, phase, &jitter);
        let meas = force_samples(0.0, 3.0, n_m, amp_m, 0.0, &jitter);
        let got = avg_error(&trace(sim.clone()), &trace(meas.clone())).unwrap();
        let want = oracle_avg(&sim, &meas, 10 * DEFAULT_GRID_POINTS);
        prop_assert!((got - want).abs() < 0.1, "got {got} oracle {want}");
    }

    #[test]
    fn avg_error_scaling_identity(a in 0.01f64..10.0, values in proptest::collection::vec(1.0f64..1000.0, 2..40)) {
        let meas: Vec<(f64, f64)> = values.iter().enumerate().map(|(k, &f)| (k as f64 * 0.1, f)).collect();
        let sim: Vec<(f64, f64)> = meas.iter().map(|&(t, f)| (t, a * f)).collect();
        let e = avg_error(&trace(sim), &trace(meas)).unwrap();
        prop_assert!((e - 100.0 * (a - 1.0).abs()).abs() < 1e-9 * (1.0 + 100.0 * a));
    }

    #[test]
    fn trajectory_match_agrees_with_direct_rmse(
        heights in proptest::collection::vec(-500.0f64..2500.0, 4..30),
        angles in proptest::collection::vec(-3.0f64..3.0, 4..30),
        offset in -0.3f64..0.3,
    ) {
        let n = heights.len().min(angles.len());
        let a: Vec<PoseSample> = (0..n)
            .map(|k| PoseSample { t: k as f64 * 0.05, y_p8: heights[k], theta4: angles[k] })
            .collect();
        let b: Vec<PoseSample> = (0..n)
            .map(|k| PoseSample { t: offset + k as f64 * 0.05, y_p8: heights[n - 1 - k], theta4: -angles[k] })
            .collect();
        let ha: Vec<(f64, f64)> = a.iter().map(|s| (s.t, s.y_p8)).collect();
        let hb: Vec<(f64, f64)> = b.iter().map(|s| (s.t, s.y_p8)).collect();
        let aa: Vec<(f64, f64)> = a.iter().map(|s| (s.t, s.theta4)).collect();
        let ab: Vec<(f64, f64)> = b.iter().map(|s| (s.t, s.theta4)).collect();
        let (t0, t1) = (a[0].t.max(b[0].t), a[n - 1].t.min(b[n - 1].t));
        prop_assume!(t1 > t0);
        let m = DEFAULT_GRID_POINTS;
        let (mut sh, mut sa) = (0.0, 0.0);
        for k in 0..m {
            let t = if k == m - 1 { t1 } else { t0 + (t1 - t0) * k as f64 / (m - 1) as f64 };
            sh += (lerp_at(&ha, t) - lerp_at(&hb, t)).powi(2);
            sa += (lerp_at(&aa, t) - lerp_at(&ab, t)).powi(2);
        }
        let (h, g) = trajectory_match(&PoseTrace::new(a).unwrap(), &PoseTrace::new(b).unwrap()).unwrap();
        prop_assert!((h - (sh / m as f64).sqrt()).abs() < 1e-9);
        prop_assert!((g - (sa / m as f64).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn trajectory_match_constant_offset() {
    let a: Vec<PoseSample> = (0..10)
        .map(|k| PoseSample { t: k as f64, y_p8: 100.0 * k as f64, theta4: 0.1 * k as f64 })
        .collect();
    let b: Vec<PoseSample> = a.iter().map(|s| PoseSample { y_p8: s.y_p8 + 1.0, ..*s }).collect();
    let (h, g) = trajectory_match(&PoseTrace::new(b).unwrap(), &PoseTrace::new(a.clone()).unwrap()).unwrap();
    assert!((h - 1.0).abs() < 1e-12 && g == 0.0);
    let far: Vec<PoseSample> = a.iter().map(|s| PoseSample { t: s.t + 100.0, ..*s }).collect();
    assert!(matches!(
        trajectory_match(&PoseTrace::new(far).unwrap(), &PoseTrace::new(a).unwrap()),
        Err(CalibrationError::NoOverlap)
    ));
}

#[test]
fn metrics_zero_only_on_coincidence() {
    let m = trace(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]);
    assert_eq!(peak_error(&m, &m).unwrap(), 0.0);
    assert_eq!(avg_error(&m, &m).unwrap(), 0.0);
    let same_peak = trace(vec![(0.0, 3.0), (1.0, 1.0), (2.0, 2.0)]);
    assert_eq!(peak_error(&same_peak, &m).unwrap(), 0.0);
    assert!(avg_error(&same_peak, &m).unwrap() > 0.0);
    let zero = trace(vec![(0.0, 0.0), (1.0, 0.0)]);
    assert!(matches!(peak_error(&m, &zero), Err(CalibrationError::ZeroReference)));
    assert!(matches!(avg_error(&m, &zero), Err(CalibrationError::ZeroReference)));
}

fn small_scenario(seed: u64) -> DigScenario {
    let tr = Trajectory::push_and_curl(-0.2, 0.45, 0.12, -0.1, 0.9, 0.3, 0.8, 0.5, 27).unwrap();
    DigScenario::new(BedSpec { width: 0.8, height: 0.3 }, tr, seed)
}

fn self_problem(truth: TerrainParams) -> CalibrationProblem {
    let sc = small_scenario(3);
    let measured = run_dig_cycle(&sc, &truth).unwrap();
    assert!(measured.peak() > 0.0);
    CalibrationProblem::new(truth, sc, measured)
}

#[test]
fn evaluate_properties_on_self_trace() {
    let truth = TerrainParams::CALIBRATED;
    let mut problem = self_problem(truth);
    assert_eq!(evaluate(&truth, &problem), 0.0);

    let other = TerrainParams { friction: 0.45, ..truth };
    let a = evaluate(&other, &problem);
    let b = evaluate(&other, &problem);
    assert_eq!(a.to_bits(), b.to_bits());
    assert!(a > 0.0);

    problem.weights = Weights { peak: 1.0, avg: 0.0 };
    let d = evaluate_detailed(&other, &problem);
    let sim = simulate(&other, &problem).unwrap();
    assert_eq!(d.objective, peak_error(&sim, &problem.measured).unwrap());
    assert_eq!(d.objective, d.peak_error);
}

#[test]
fn fixed_point_with_minimal_budget() {
    let truth = TerrainParams::CALIBRATED;
    let mut problem = self_problem(truth);
    problem.budget = 6;
    let r = calibrate(&problem).unwrap();
    assert_eq!(r.fitted, truth);
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.evaluations, 6);
    assert_eq!(r.history.len(), 6);
    assert_eq!(r.initial().params, truth);
}

#[test]
fn failing_simulations_give_calibration_failed() {
    let mut problem = self_problem(TerrainParams::CALIBRATED);
    problem.scenario.blowup_speed = 1e-9;
    problem.budget = 6;
    let e = evaluate_detailed(&problem.initial, &problem);
    assert!(e.objective.is_infinite());
    assert!(matches!(e.failure, Some(CalibrationError::Simulation(_))));
    assert!(matches!(calibrate(&problem), Err(CalibrationError::CalibrationFailed)));
}

/// Cheap stand-in problem; the mock evaluator never runs the simulator.
fn mock_problem() -> CalibrationProblem {
    let measured = trace(vec![(0.0, 1.0), (1.0, 1.0)]);
    CalibrationProblem::new(TerrainParams::default(), small_scenario(0), measured)
}

struct Quadratic {
    target: [f64; 5],
    calls: RefCell<Vec<usize>>,
}

impl BatchEvaluator for Quadratic {
    fn evaluate_batch(&self, problem: &CalibrationProblem, candidates: &[TerrainParams]) -> Vec<Evaluation> {
        self.calls.borrow_mut().push(candidates.len());
        let (lo, hi) = problem.bounds.search_box();
        candidates
            .iter()
            .map(|p| {
                let x = to_search_vector(p);
                let f: f64 = (0..5)
                    .filter(|&k| hi[k] > lo[k])
                    .map(|k| ((x[k] - self.target[k]) / (hi[k] - lo[k])).powi(2))
                    .sum();
                Evaluation {
                    params: *p,
                    objective: f,
                    peak_error: f,
                    avg_error: f,
                    failure: None,
                }
            })
            .collect()
    }
}

#[test]
fn nelder_mead_converges_on_quadratic() {
    let mut problem = mock_problem();
    problem.budget = 2000;
    problem.tolerance = 1e-6;
    let target = to_search_vector(&TerrainParams::CALIBRATED);
    let q = Quadratic { target, calls: RefCell::new(Vec::new()) };
    let r = calibrate_with(&problem, &q).unwrap();
    assert!(r.converged);
    assert!(r.objective < 1e-9, "{}", r.objective);
    let x = to_search_vector(&r.fitted);
    let (lo, hi) = problem.bounds.search_box();
    for k in 0..5 {
        assert!((x[k] - target[k]).abs() < 1e-3 * (hi[k] - lo[k]), "axis {k}");
    }
    assert_eq!(q.calls.borrow()[0], 6);
    assert_eq!(q.calls.borrow().iter().sum::<usize>(), r.evaluations);
    assert!(r.best_so_far().windows(2).all(|w| w[1] <= w[0]));
    assert!(r.history.iter().all(|e| problem.bounds.contains(&e.params)));
}

#[test]
fn optimum_outside_box_lands_on_the_bound() {
    let mut problem = mock_problem();
    problem.budget = 400;
    let mut target = to_search_vector(&TerrainParams::CALIBRATED);
    target[1] = 1.4;
    let q = Quadratic { target, calls: RefCell::new(Vec::new()) };
    let r = calibrate_with(&problem, &q).unwrap();
    assert!(r.history.iter().all(|e| problem.bounds.contains(&e.params)));
    assert!((r.fitted.friction - problem.bounds.friction.1).abs() < 1e-3);
}

#[test]
fn frozen_axes_stay_fixed() {
    let mut problem = mock_problem();
    problem.bounds = ParamBounds::default().freezing_restitution_and_size(&problem.initial);
    problem.budget = 300;
    assert_eq!(problem.active_axes(), vec![0, 1, 4]);
    let q = Quadratic {
        target: to_search_vector(&TerrainParams::CALIBRATED),
        calls: RefCell::new(Vec::new()),
    };
    let r = calibrate_with(&problem, &q).unwrap();
    assert_eq!(q.calls.borrow()[0], 4);
    for e in &r.history {
        assert_eq!(e.params.restitution, problem.initial.restitution);
        assert_eq!(e.params.particle_size, problem.initial.particle_size);
    }
}

struct Flat;

impl BatchEvaluator for Flat {
    fn evaluate_batch(&self, _: &CalibrationProblem, candidates: &[TerrainParams]) -> Vec<Evaluation> {
        candidates
            .iter()
            .map(|p| Evaluation { params: *p, objective: 1.0, peak_error: 1.0, avg_error: 1.0, failure: None })
            .collect()
    }
}

#[test]
fn ties_resolve_to_the_earliest_candidate() {
    let mut problem = mock_problem();
    problem.budget = 30;
    let r = calibrate_with(&problem, &Flat).unwrap();
    assert_eq!(r.fitted, problem.initial);
}

#[test]
fn budget_below_simplex_size() {
    let mut problem = mock_problem();
    problem.budget = 5;
    assert!(matches!(
        calibrate_with(&problem, &Flat),
        Err(CalibrationError::BudgetTooSmall { budget: 5, required: 6 })
    ));
    problem.bounds = ParamBounds::default().freezing_restitution_and_size(&problem.initial);
    problem.budget = 4;
    assert!(calibrate_with(&problem, &Flat).is_ok());
}

#[test]
fn invalid_problems_are_rejected() {
    let mut problem = mock_problem();
    problem.initial.young_modulus = 1e9;
    assert!(matches!(calibrate_with(&problem, &Flat), Err(CalibrationError::InvalidProblem(_))));
    let mut problem = mock_problem();
    problem.weights = Weights { peak: 0.0, avg: 0.0 };
    assert!(matches!(calibrate_with(&problem, &Flat), Err(CalibrationError::InvalidProblem(_))));
}

#[test]
fn search_vector_round_trip() {
    let p = TerrainParams::CALIBRATED;
    let q = from_search_vector(&to_search_vector(&p), &p);
    assert!((q.young_modulus - p.young_modulus).abs() < 1e-6);
    assert_eq!(q.friction, p.friction);
    assert_eq!(q.density, p.density);
}

#[test]
fn kinematics_round_trip() {
    let g = LinkageGeometry::default();
    let profile = BucketProfile::default();
    let samples: Vec<JointSample> = (0..12)
        .map(|k| {
            let u = k as f64 / 11.0;
            let s1 = g.stroke_lift.min + g.stroke_lift.span() * u;
            let s2 = g.stroke_tilt.max - g.stroke_tilt.span() * (0.2 + 0.6 * u);
            let (_, joints) = forward_kinematics(CylinderExtensions::from_extensions(s1, s2, &g), &g).unwrap();
            JointSample {
                t: 0.25 * k as f64,
                machine_x: 0.05 * k as f64,
                joints,
            }
        })
        .collect();
    let traj = trajectory_from_joints(&samples, &profile, &g).unwrap();
    let poses = pose_trace_from_trajectory(&traj, &profile, &g).unwrap();
    for (s, p) in samples.iter().zip(poses.samples()) {
        assert!((p.y_p8 - s.joints.p8[1]).abs() < 1e-9, "{} vs {}", p.y_p8, s.joints.p8[1]);
        assert!((p.theta4 - s.joints.theta4).abs() < 1e-9);
    }
}
