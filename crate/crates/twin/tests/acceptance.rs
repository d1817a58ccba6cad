//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use loadertwin::config::TwinConfig;
use loadertwin::parallel::ParallelEvaluator;
use loadertwin::sensor::{extract_traces, generate_synthetic, read_sensor_log, write_sensor_log, ColumnMapping};
use loadertwin_core::calibration::{calibrate_with, peak_error, CalibrationProblem, ForceTrace, ParamBounds};
use loadertwin_core::mechanism::*;
use loadertwin_core::statics::*;
use loadertwin_core::terrain::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn wrapped_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

// ---------------------------------------------------------------- kinematics

fn kinematics_round_trip(solutions: &mut Vec<JointSolution>) -> Outcome {
    let t0 = Instant::now();
    let g = LinkageGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ext_err: f64 = 0.0;
    let mut pose_err: f64 = 0.0;
    for _ in 0..1000 {
        let s1 = rng.gen_range(g.stroke_lift.min..=g.stroke_lift.max);
        let s2 = rng.gen_range(g.stroke_tilt.min..=g.stroke_tilt.max);
        let (target, fk) = forward_kinematics(CylinderExtensions::from_extensions(s1, s2, &g), &g)
            .map_err(|e| format!("FK failed at ({s1}, {s2}): {e}"))?;
        let ik = inverse_kinematics(target, &g).map_err(|e| format!("IK failed at {target:?}: {e}"))?;
        ext_err = ext_err.max((ik.extensions.s1 - s1).abs()).max((ik.extensions.s2 - s2).abs());
        solutions.push(fk);
        solutions.push(ik);
    }
    let mut reached = 0;
    let mut tried = 0;
    while reached < 1000 {
        tried += 1;
        let target = TaskTarget {
            theta4: rng.gen_range(-0.5..2.5),
            y_p8: rng.gen_range(-800.0..1800.0),
        };
        let Ok(ik) = inverse_kinematics(target, &g) else {
            continue;
        };
        let (back, fk) = forward_kinematics(ik.extensions, &g).map_err(|e| format!("FK of IK failed: {e}"))?;
        pose_err = pose_err
            .max(wrapped_diff(back.theta4, target.theta4))
            .max((back.y_p8 - target.y_p8).abs());
        solutions.push(ik);
        solutions.push(fk);
        reached += 1;
    }
    let elapsed = t0.elapsed();
    check(
        ext_err < 1e-9 && pose_err < 1e-6 && elapsed < Duration::from_secs(10),
        format!(
            "max extension error {ext_err:.2e} mm, max pose error {pose_err:.2e}, \
             {reached} reachable of {tried} sampled targets, {elapsed:.2?}"
        ),
    )
}

fn loop_closure(solutions: &[JointSolution]) -> Outcome {
    let g = LinkageGeometry::default();
    let mut res: f64 = 0.0;
    let mut offset: f64 = 0.0;
    for j in solutions {
        res = res.max(j.residuals(&g).max_abs());
        offset = offset.max((j.theta3 - j.theta10 - g.beta5).abs());
    }
    check(
        res < 1e-9 && offset <= 1e-14,
        format!(
            "{} solutions, max residual {res:.2e} mm, max |θ3 − θ10 − β5| {offset:.1e} rad",
            solutions.len()
        ),
    )
}

fn trig_solvers() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lin: f64 = 0.0;
    let mut n = 0;
    while n < 10_000 {
        let (b, c) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if f64::hypot(b, c) <= 1e-3 {
            continue;
        }
        // Roots within 0.01 rad of the arcsin fold are ill-conditioned for any solver.
        let u = rng.gen_range(-FRAC_PI_2 + 0.01..FRAC_PI_2 - 0.01);
        let phase = (-c).atan2(b);
        let (x_star, branch) = if rng.gen_bool(0.5) {
            (PI - u - phase, Branch::Supplementary)
        } else {
            (u - phase, Branch::Principal)
        };
        let a = b * x_star.sin() - c * x_star.cos();
        let x = solve_linear_trig(a, b, c, branch).map_err(|e| format!("linear trig failed: {e}"))?;
        lin = lin.max(wrapped_diff(x, x_star));
        n += 1;
    }
    let mut sys: f64 = 0.0;
    n = 0;
    while n < 10_000 {
        let x_star = rng.gen_range(-PI + 1e-9..PI);
        let [p, q, r, s]: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        if (p * r - q * s).abs() <= 0.2 {
            continue;
        }
        let c3 = p * x_star.cos() + q * x_star.sin();
        let f3 = r * x_star.sin() + s * x_star.cos();
        let sol = solve_cos_sin_system(p, q, r, s, c3, f3).map_err(|e| format!("cos/sin system failed: {e}"))?;
        sys = sys.max(wrapped_diff(sol.angle, x_star));
        n += 1;
    }
    let elapsed = t0.elapsed();
    check(
        lin < 1e-12 && sys < 1e-12 && elapsed < Duration::from_secs(5),
        format!("linear trig max error {lin:.2e} rad, cos/sin system {sys:.2e} rad, {elapsed:.2?}"),
    )
}

// ---------------------------------------------------------------- statics

fn pin(q_base: SampledLoad, q_link: SampledLoad) -> LoadPin {
    LoadPin {
        length: 300.0,
        span_base: 80.0,
        span_link: 60.0,
        grooves: [90.0, 230.0],
        q_base,
        q_link,
    }
}

fn statics_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let h = HingeForces {
            f_mp_x: rng.gen_range(-1e5..1e5),
            f_mp_y: rng.gen_range(-1e5..1e5),
            f_sp_x: rng.gen_range(-1e5..1e5),
            f_sp_y: rng.gen_range(-1e5..1e5),
        };
        let b = BucketBody::at_rest(rng.gen_range(1.0..5000.0));
        let s = soil_force_from_hinges(&h, &b);
        let (rx, ry) = static_residual(&h, &s, &b);
        worst = worst.max(rx.abs()).max(ry.abs());
    }
    let mut quad: f64 = 0.0;
    for q0 in [0.5, 35.0, 1200.0] {
        let uniform = pin(
            SampledLoad::from_fn(0.0, 80.0, 101, |_| q0),
            SampledLoad::from_fn(240.0, 300.0, 101, |_| -q0),
        );
        let (v1, v2) = pin_shears(&uniform).map_err(|e| e.to_string())?;
        quad = quad.max((v1 - q0 * 80.0).abs() / (q0 * 80.0));
        quad = quad.max((v2 + q0 * 60.0).abs() / (q0 * 60.0));
        let triangular = pin(
            SampledLoad::from_fn(0.0, 80.0, 1001, |s| q0 * s / 80.0),
            SampledLoad::from_fn(240.0, 300.0, 1001, |s| q0 * (300.0 - s) / 60.0),
        );
        let (v1, v2) = pin_shears(&triangular).map_err(|e| e.to_string())?;
        quad = quad.max((v1 - q0 * 40.0).abs() / (q0 * 40.0));
        quad = quad.max((v2 - q0 * 30.0).abs() / (q0 * 30.0));
    }
    check(
        worst < 1e-9 && quad < 1e-9,
        format!("max static residual {worst:.2e} N, max quadrature relative error {quad:.2e}"),
    )
}

// ---------------------------------------------------------------- DEM

fn frictionless(e: f64) -> TerrainParams {
    TerrainParams {
        restitution: e,
        friction: 0.0,
        rolling_resistance: 0.0,
        ..TerrainParams::CALIBRATED
    }
}

fn elastic_collision() -> Result<(f64, f64), String> {
    let p = frictionless(1.0);
    let model = ContactModel::new(&p);
    let mut a = Particle::new([0.3, 1.0], 0.03, p.density);
    let mut b = Particle::new([0.5, 1.005], 0.027, p.density);
    a.vel = [1.5, 0.0];
    b.vel = [-0.5, 0.0];
    let mut st = SimState::new(vec![a, b], 2.0, 0);
    let opts = SimOptions {
        gravity: [0.0, 0.0],
        ..SimOptions::default()
    };
    let (e0, m0) = (st.kinetic_energy(), st.momentum());
    let dt = stable_dt(&p);
    let mut touched = false;
    for _ in 0..20_000 {
        st.advance(dt, &model, &opts).map_err(|e| e.to_string())?;
        let (pa, pb) = (st.particles[0], st.particles[1]);
        let gap = f64::hypot(pb.pos[0] - pa.pos[0], pb.pos[1] - pa.pos[1]) - pa.radius - pb.radius;
        touched |= gap < 0.0;
        if touched && gap > 0.01 {
            break;
        }
    }
    if !touched {
        return Err("particles never collided".into());
    }
    let (e1, m1) = (st.kinetic_energy(), st.momentum());
    let dm = f64::hypot(m1[0] - m0[0], m1[1] - m0[1]) / f64::hypot(m0[0], m0[1]);
    Ok(((e1 - e0).abs() / e0, dm))
}

fn rebound_ratio(e: f64) -> Result<f64, String> {
    let p = frictionless(e);
    let model = ContactModel::new(&p);
    let r = 0.03;
    let mut st = SimState::new(vec![Particle::new([0.5, r + 5.0], r, p.density)], 1.0, 0);
    let dt = 0.1 * stable_dt(&p);
    let opts = SimOptions::default();
    let (mut v_in, mut in_contact) = (0.0, false);
    for _ in 0..5_000_000 {
        let before = st.particles[0];
        st.advance(dt, &model, &opts).map_err(|e| e.to_string())?;
        let now = st.particles[0];
        let contact = now.pos[1] < now.radius;
        if contact && !in_contact {
            v_in = -before.vel[1];
        }
        if !contact && in_contact {
            return Ok(now.vel[1] / v_in);
        }
        in_contact = contact;
    }
    Err(format!("no rebound for e = {e}"))
}

fn internal_force_balance() -> Result<f64, String> {
    let p = TerrainParams::CALIBRATED;
    let spec = BedSpec { width: 1.2, height: 0.45 };
    let bed = fill_bed(spec, &p, 2).map_err(|e| e.to_string())?;
    let y = bed.surface_height() - 0.2;
    let tr = Trajectory::push_and_curl(-0.2, 0.6, y, -0.1, 1.0, 0.4, 1.0, 0.6, 33).map_err(|e| e.to_string())?;
    let sc = DigScenario::new(spec, tr, 2);
    let model = ContactModel::new(&p);
    let mut st = bed.with_bucket(sc.profile.clone(), sc.trajectory.clone());
    let dt = stable_dt(&p);
    let mut worst: f64 = 0.0;
    while st.time < 1.2 {
        let d = st.advance(dt, &model, &SimOptions::default()).map_err(|e| e.to_string())?;
        if d.max_pair_force > 0.0 {
            worst = worst.max(f64::hypot(d.internal_force_sum[0], d.internal_force_sum[1]) / d.max_pair_force);
        }
    }
    Ok(worst)
}

fn deterministic_dig() -> Result<bool, String> {
    let tr = Trajectory::push_and_curl(-0.2, 0.6, 0.15, -0.1, 1.0, 0.4, 1.0, 0.6, 33).map_err(|e| e.to_string())?;
    let sc = DigScenario::new(BedSpec { width: 1.2, height: 0.45 }, tr, 9);
    let p = TerrainParams::default();
    let bits = |t: ForceTrace| t.samples().iter().map(|s| (s.0.to_bits(), s.1.to_bits())).collect::<Vec<_>>();
    let a = bits(run_dig_cycle(&sc, &p).map_err(|e| e.to_string())?);
    let b = bits(run_dig_cycle(&sc, &p).map_err(|e| e.to_string())?);
    Ok(a == b)
}

fn dem_checks() -> Outcome {
    let t0 = Instant::now();
    let (de, dm) = elastic_collision()?;
    let mut ratios = Vec::new();
    for e in [0.25, 0.5, 0.9] {
        ratios.push((e, rebound_ratio(e)?));
    }
    let balance = internal_force_balance()?;
    let deterministic = deterministic_dig()?;
    let elapsed = t0.elapsed();
    let restitution_ok = ratios.iter().all(|(e, r)| (r - e).abs() <= 0.05 * e);
    let shown: Vec<String> = ratios.iter().map(|(e, r)| format!("{e}→{r:.4}")).collect();
    check(
        de <= 0.01 && dm <= 1e-9 && restitution_ok && balance < 1e-9 && deterministic && elapsed < Duration::from_secs(60),
        format!(
            "energy change {:.3}%, momentum change {dm:.1e}, rebound ratios [{}], \
             internal force sum {balance:.1e}·max, deterministic {deterministic}, {elapsed:.2?}",
            100.0 * de,
            shown.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- calibration

/// Desk-scale dig: sixteen 1.3 m × 0.35 m slices, each carrying a sixteenth of the bucket width.
fn desk_scenario(trajectory: Trajectory) -> DigScenario {
    let mut sc = DigScenario::new(BedSpec { width: 1.3, height: 0.35 }, trajectory, 7);
    sc.slices = 16;
    sc
}

fn calibration_trajectory() -> Trajectory {
    Trajectory::push_and_curl(-0.2, 0.7, 0.12, -0.1, 1.0, 0.4, 1.5, 1.0, 26).unwrap()
}

fn bed_particles(sc: &DigScenario, p: &TerrainParams) -> Result<usize, String> {
    let mut n = 0;
    for k in 0..sc.slices as u64 {
        n += fill_bed(sc.bed, p, sc.seed + k).map_err(|e| e.to_string())?.particles.len();
    }
    Ok(n)
}

fn calibration_recovery(pool: &ParallelEvaluator, fitted: &mut Option<TerrainParams>) -> Outcome {
    let t0 = Instant::now();
    let truth = TerrainParams::CALIBRATED;
    let initial = TerrainParams::default();
    let sc = desk_scenario(calibration_trajectory());
    let particles = bed_particles(&sc, &truth)?;
    let measured = pool.run_dig_cycle(&sc, &truth).map_err(|e| e.to_string())?.with_label("measured");
    let mut problem = CalibrationProblem::new(initial, sc, measured);
    problem.bounds = ParamBounds::default().freezing_restitution_and_size(&initial);
    problem.budget = 100;
    let res = calibrate_with(&problem, pool).map_err(|e| e.to_string())?;
    let first = res.initial();
    let elapsed = t0.elapsed();
    *fitted = Some(res.fitted);
    let f = &res.fitted;
    check(
        res.peak_error_pct < 5.0
            && res.avg_error_pct < 10.1
            && first.peak_error > 30.0
            && first.avg_error > 30.0
            && particles <= 2000
            && res.evaluations <= 100
            && elapsed < Duration::from_secs(1800),
        format!(
            "initial peak {:.2}% avg {:.2}% → final peak {:.2}% avg {:.2}%; \
             E {:.4e} Pa, μt {:.4}, μr {:.4}; {} evaluations, {particles} particles, {elapsed:.0?}",
            first.peak_error,
            first.avg_error,
            res.peak_error_pct,
            res.avg_error_pct,
            f.young_modulus,
            f.friction,
            f.rolling_resistance,
            res.evaluations,
        ),
    )
}

fn held_out_validation(pool: &ParallelEvaluator, fitted: Option<TerrainParams>) -> Outcome {
    let fitted = fitted.ok_or("no fitted parameters from the calibration run")?;
    let held_out = [
        ("shallow, flat", Trajectory::push_and_curl(-0.2, 0.7, 0.17, -0.02, 0.9, 0.4, 1.5, 1.0, 26).unwrap()),
        ("deep, tilted", Trajectory::push_and_curl(-0.2, 0.6, 0.06, -0.25, 1.2, 0.5, 1.4, 1.0, 26).unwrap()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, tr) in held_out {
        let sc = desk_scenario(tr);
        let measured = pool.run_dig_cycle(&sc, &TerrainParams::CALIBRATED).map_err(|e| e.to_string())?;
        let simulated = pool.run_dig_cycle(&sc, &fitted).map_err(|e| e.to_string())?;
        let err = peak_error(&simulated, &measured).map_err(|e| e.to_string())?;
        ok &= err < 15.0;
        parts.push(format!("{name}: peak {err:.2}%"));
    }
    check(ok, parts.join(", "))
}

// ---------------------------------------------------------------- data path

fn data_round_trip() -> Outcome {
    let cfg = TwinConfig::from_toml_str("[bed]\nwidth = 0.8\nheight = 0.3\n[simulation]\nslices = 2\nseed = 5\n")
        .map_err(|e| e.to_string())?;
    let tr = Trajectory::push_and_curl(-0.2, 0.45, 0.12, -0.1, 0.9, 0.3, 0.8, 0.5, 27).unwrap();
    let run = generate_synthetic(&cfg, &TerrainParams::CALIBRATED, &tr).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("log.csv");
    write_sensor_log(&run.log, std::fs::File::create(&path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let log = read_sensor_log(&path, &ColumnMapping::default()).map_err(|e| e.to_string())?;
    let (pose, force) = extract_traces(&log, &cfg).map_err(|e| e.to_string())?;
    let mut pose_err: f64 = 0.0;
    for (a, b) in pose.samples().iter().zip(run.pose.samples()) {
        pose_err = pose_err
            .max((a.t - b.t).abs())
            .max((a.y_p8 - b.y_p8).abs())
            .max((a.theta4 - b.theta4).abs());
    }
    let mut force_err: f64 = 0.0;
    for (a, b) in force.samples().iter().zip(run.force.samples()) {
        force_err = force_err.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
    }
    let same_len = pose.samples().len() == run.pose.samples().len() && force.samples().len() == run.force.samples().len();
    check(
        same_len && pose_err < 1e-9 && force_err < 1e-9 && run.force.peak() > 0.0,
        format!(
            "{} rows, max pose error {pose_err:.1e}, max force error {force_err:.1e} N (peak {:.1} N)",
            log.len(),
            run.force.peak()
        ),
    )
}

fn main() -> ExitCode {
    let pool = ParallelEvaluator::new(None).expect("thread pool");
    let mut solutions = Vec::new();
    let mut fitted = None;
    let mut failed = 0;
    let mut report = |n: u32, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n} {tag}: {name}: {detail}");
    };
    report(1, "IK/FK round trip", kinematics_round_trip(&mut solutions));
    report(2, "loop closure", loop_closure(&solutions));
    report(3, "trig solvers", trig_solvers());
    report(4, "statics closure and pin quadrature", statics_closure());
    report(5, "DEM physical checks", dem_checks());
    report(6, "synthetic calibration recovery", calibration_recovery(&pool, &mut fitted));
    report(7, "held-out trajectories", held_out_validation(&pool, fitted));
    report(8, "sensor-log round trip", data_round_trip());
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
