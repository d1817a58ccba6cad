use loadertwin_core::terrain::*;

fn frictionless(e: f64) -> TerrainParams {
    TerrainParams {
        restitution: e,
        friction: 0.0,
        rolling_resistance: 0.0,
        ..TerrainParams::CALIBRATED
    }
}

fn kin(overlap: f64, vn: f64) -> ContactKinematics {
    ContactKinematics {
        overlap,
        vn,
        vt: 0.0,
        w_rel: 0.0,
        r_eff: 0.03,
        m_eff: 2.0,
    }
}

#[test]
fn hertz_force_matches_closed_form() {
    let p = TerrainParams {
        young_modulus: 20e6,
        poisson: 0.3,
        ..TerrainParams::CALIBRATED
    };
    let c = hertz_mindlin_contact(&kin(1e-3, 0.0), &p, SpringState::default(), 1e-4);
    // (4/3) E/(2(1-ν²)) √R* δ^{3/2}, evaluated independently at 30 digits.
    assert!((c.normal - 80.25238937804632).abs() < 1e-10);
    assert_eq!(c.tangential, 0.0);
    assert_eq!(c.rolling_torque, 0.0);
}

#[test]
fn elastic_contact_has_no_damping() {
    let p = frictionless(1.0);
    let model = ContactModel::new(&p);
    assert_eq!(model.alpha, 0.0);
    let still = model.evaluate(&kin(2e-3, 0.0), SpringState::default(), 1e-4);
    let moving = model.evaluate(&kin(2e-3, 3.0), SpringState::default(), 1e-4);
    assert_eq!(still.normal, moving.normal);
    let k = model.hertz_coefficient(0.03);
    assert_eq!(still.normal, k * 2e-3 * (2e-3f64).sqrt());
}

#[test]
fn zero_overlap_gives_nothing() {
    let c = hertz_mindlin_contact(
        &kin(0.0, 1.0),
        &TerrainParams::default(),
        SpringState { slip: 1e-3, roll: 0.2 },
        1e-4,
    );
    assert_eq!(c, ContactForces::default());
}

#[test]
fn friction_and_rolling_caps() {
    let p = TerrainParams::CALIBRATED;
    let model = ContactModel::new(&p);
    let k = ContactKinematics {
        vt: 50.0,
        w_rel: -500.0,
        ..kin(1e-3, 0.0)
    };
    let c = model.evaluate(&k, SpringState::default(), 1e-3);
    assert!((c.tangential + p.friction * c.normal).abs() < 1e-9 * c.normal);
    assert!((c.rolling_torque - p.rolling_resistance * c.normal * 0.03).abs() < 1e-12 * c.normal);
    // Spring reset to the cap: evaluating again without motion gives the same capped force.
    let again = model.evaluate(&ContactKinematics { vt: 0.0, w_rel: 0.0, ..k }, c.springs, 1e-3);
    assert!((again.tangential - c.tangential).abs() < 1e-9 * c.normal);
}

#[test]
fn restitution_map_is_monotone() {
    let mut last = f64::INFINITY;
    for k in 1..=10 {
        let a = damping_ratio_for_restitution(k as f64 / 10.0);
        assert!(a < last);
        last = a;
    }
    assert_eq!(last, 0.0);
}

#[test]
fn fill_bed_count_and_rest() {
    let p = TerrainParams::CALIBRATED;
    let st = fill_bed(BedSpec { width: 1.0, height: 0.5 }, &p, 3).unwrap();
    let estimate = 0.8 * 0.5 / (std::f64::consts::PI * 0.03 * 0.03);
    let n = st.particles.len() as f64;
    assert!((n - estimate).abs() <= 0.1 * estimate, "{n} vs {estimate}");
    assert!(st.max_speed() < 1e-4);
    assert!(st.particles.iter().all(|q| q.radius > 0.0 && q.mass > 0.0));
    assert!(st.particles.iter().all(|q| q.pos[0] > 0.0 && q.pos[0] < 1.0 && q.pos[1] > 0.0));
}

#[test]
fn fill_bed_is_deterministic() {
    let p = TerrainParams::default();
    let spec = BedSpec { width: 0.6, height: 0.3 };
    let a = fill_bed(spec, &p, 11).unwrap();
    let b = fill_bed(spec, &p, 11).unwrap();
    assert_eq!(a, b);
    let bits = |s: &SimState| -> Vec<u64> {
        s.particles
            .iter()
            .flat_map(|q| [q.pos[0], q.pos[1], q.vel[0], q.vel[1], q.omega, q.radius])
            .map(f64::to_bits)
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    let c = fill_bed(spec, &p, 12).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn extent_too_small() {
    let r = fill_bed(BedSpec { width: 0.05, height: 1.0 }, &TerrainParams::default(), 1);
    assert!(matches!(r, Err(TerrainError::ExtentTooSmall { .. })));
}

#[test]
fn step_is_deterministic_and_conserves_count() {
    let p = TerrainParams::CALIBRATED;
    let st = fill_bed(BedSpec { width: 0.6, height: 0.3 }, &p, 5).unwrap();
    let dt = stable_dt(&p);
    let a = step(&st, dt, &p).unwrap();
    let b = step(&st, dt, &p).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.particles.len(), st.particles.len());
    assert!(a.particles.iter().all(|q| q.pos.iter().chain(&q.vel).all(|v| v.is_finite())));
}

#[test]
fn oversized_step_is_reported() {
    let p = TerrainParams::CALIBRATED;
    let mut a = Particle::new([0.2, 0.5], 0.03, p.density);
    let mut b = Particle::new([0.25, 0.5], 0.03, p.density);
    a.vel = [5.0, 0.0];
    b.vel = [-5.0, 0.0];
    let st = SimState::new(vec![a, b], 1.0, 0);
    let r = step(&st, 0.05, &p);
    assert!(matches!(r, Err(TerrainError::UnstableStep { .. })), "{r:?}");
    assert!(matches!(step(&st, 0.0, &p), Err(TerrainError::InvalidTimeStep)));
}

#[test]
fn empty_bed_static_bucket_feels_nothing() {
    let p = TerrainParams::CALIBRATED;
    let tr = Trajectory::new(vec![
        BucketPose { t: 0.0, x: 0.5, y: 0.1, angle: 0.0 },
        BucketPose { t: 0.1, x: 0.5, y: 0.1, angle: 0.0 },
    ])
    .unwrap();
    let mut st = SimState::new(Vec::new(), 1.0, 0).with_bucket(BucketProfile::default(), tr);
    let model = ContactModel::new(&p);
    for _ in 0..20 {
        st.advance(1e-3, &model, &SimOptions::default()).unwrap();
        assert_eq!(st.bucket_force, [0.0, 0.0]);
        assert_eq!(st.bucket_torque, 0.0);
    }
}

#[test]
fn elastic_pair_collision_conserves_energy_and_momentum() {
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
        st.advance(dt, &model, &opts).unwrap();
        let (pa, pb) = (st.particles[0], st.particles[1]);
        let gap = ((pb.pos[0] - pa.pos[0]).powi(2) + (pb.pos[1] - pa.pos[1]).powi(2)).sqrt()
            - pa.radius
            - pb.radius;
        touched |= gap < 0.0;
        if touched && gap > 0.01 {
            break;
        }
    }
    assert!(touched);
    let (e1, m1) = (st.kinetic_energy(), st.momentum());
    assert!((e1 - e0).abs() <= 0.01 * e0, "energy {e0} -> {e1}");
    let norm = (m0[0] * m0[0] + m0[1] * m0[1]).sqrt();
    assert!(((m1[0] - m0[0]).powi(2) + (m1[1] - m0[1]).powi(2)).sqrt() <= 1e-9 * norm);
    // Oblique impact: the pair actually exchanged momentum.
    assert!(st.particles[1].vel[0] > 0.0);
}

/// Rebound ratio of a particle dropped from `height` onto the floor.
fn drop_rebound_ratio(e: f64, height: f64) -> f64 {
    let p = frictionless(e);
    let model = ContactModel::new(&p);
    let r = 0.03;
    let mut st = SimState::new(vec![Particle::new([0.5, r + height], r, p.density)], 1.0, 0);
    let dt = 0.1 * stable_dt(&p);
    let opts = SimOptions::default();
    let (mut v_in, mut in_contact) = (0.0, false);
    for _ in 0..5_000_000 {
        let before = st.particles[0];
        st.advance(dt, &model, &opts).unwrap();
        let now = st.particles[0];
        let contact = now.pos[1] < now.radius;
        if contact && !in_contact {
            v_in = -before.vel[1];
        }
        if !contact && in_contact {
            return now.vel[1] / v_in;
        }
        in_contact = contact;
    }
    panic!("particle never rebounded");
}

#[test]
fn drop_rebound_matches_restitution() {
    for e in [0.25, 0.5, 0.9] {
        let ratio = drop_rebound_ratio(e, 5.0);
        assert!((ratio - e).abs() <= 0.05 * e, "e={e}: rebound ratio {ratio}");
    }
}

fn dig_scenario(depth_below_surface: f64, surface: f64, seed: u64) -> DigScenario {
    let y = surface - depth_below_surface;
    let tr = Trajectory::push_and_curl(-0.2, 0.6, y, -0.1, 1.0, 0.4, 1.0, 0.6, 33).unwrap();
    DigScenario::new(BedSpec { width: 1.2, height: 0.45 }, tr, seed)
}

#[test]
fn bucket_reaction_and_third_law() {
    let p = TerrainParams::CALIBRATED;
    let bed = fill_bed(BedSpec { width: 1.2, height: 0.45 }, &p, 2).unwrap();
    let sc = dig_scenario(0.2, bed.surface_height(), 2);
    let model = ContactModel::new(&p);
    let mut st = bed.with_bucket(sc.profile.clone(), sc.trajectory.clone());
    let dt = stable_dt(&p);
    let mut engaged = 0;
    while st.time < 1.2 {
        let d = st.advance(dt, &model, &SimOptions::default()).unwrap();
        let sum = (d.internal_force_sum[0].powi(2) + d.internal_force_sum[1].powi(2)).sqrt();
        assert!(sum <= 1e-9 * d.max_pair_force.max(1e-300), "sum {sum} max {}", d.max_pair_force);
        assert_eq!(st.bucket_force, [-d.bucket_on_particles[0], -d.bucket_on_particles[1]]);
        if st.bucket_force != [0.0, 0.0] {
            engaged += 1;
        }
    }
    assert!(engaged > 100);
}

#[test]
fn trajectory_above_bed_records_zero() {
    let p = TerrainParams::CALIBRATED;
    let sc = dig_scenario(-0.3, 0.45, 4);
    let f = run_dig_cycle(&sc, &p).unwrap();
    assert_eq!(f.samples().len(), 33);
    assert!(f.samples().iter().all(|s| s.1 == 0.0));
}

#[test]
fn dig_cycle_is_deterministic() {
    let p = TerrainParams::default();
    let sc = dig_scenario(0.15, 0.3, 9);
    assert_eq!(run_dig_cycle(&sc, &p).unwrap(), run_dig_cycle(&sc, &p).unwrap());
}

#[test]
fn deeper_cut_gives_higher_peak() {
    let p = TerrainParams::CALIBRATED;
    let bed = fill_bed(BedSpec { width: 1.2, height: 0.45 }, &p, 6).unwrap();
    let surface = bed.surface_height();
    let shallow = dig_from(bed.clone(), &dig_scenario(0.1, surface, 6), &p).unwrap();
    let deep = dig_from(bed, &dig_scenario(0.2, surface, 6), &p).unwrap();
    assert!(deep.peak() > shallow.peak(), "{} vs {}", deep.peak(), shallow.peak());
}

#[test]
fn peak_force_grows_with_friction() {
    let mut peaks = Vec::new();
    for mu in [0.2, 0.5, 0.9] {
        let p = TerrainParams {
            friction: mu,
            ..TerrainParams::CALIBRATED
        };
        let mut sc = dig_scenario(0.2, 0.4, 8);
        sc.slices = 2;
        peaks.push(run_dig_cycle(&sc, &p).unwrap().peak());
    }
    assert!(peaks.windows(2).all(|w| w[1] >= w[0]), "{peaks:?}");
}

#[test]
fn slices_sum_to_the_full_width() {
    let p = TerrainParams::CALIBRATED;
    let mut sc = dig_scenario(0.15, 0.4, 1);
    sc.slices = 2;
    let two = run_dig_cycle(&sc, &p).unwrap();
    let a = run_dig_slice(&sc, &p, 0).unwrap();
    let b = run_dig_slice(&sc, &p, 1).unwrap();
    for (k, s) in two.samples().iter().enumerate() {
        let half = 0.5 * sc.bucket_width;
        let f = [
            half * (a.mean_force[k][0] + b.mean_force[k][0]),
            half * (a.mean_force[k][1] + b.mean_force[k][1]),
        ];
        let expected = (f[0] * f[0] + f[1] * f[1]).sqrt();
        assert_eq!(s.1, expected);
    }
}

#[test]
fn params_validation() {
    assert!(TerrainParams::default().validate().is_ok());
    let bad = [
        TerrainParams { young_modulus: 0.0, ..Default::default() },
        TerrainParams { friction: -0.1, ..Default::default() },
        TerrainParams { restitution: 1.1, ..Default::default() },
        TerrainParams { particle_size: 0.0, ..Default::default() },
        TerrainParams { rolling_resistance: -1.0, ..Default::default() },
        TerrainParams { density: 0.0, ..Default::default() },
        TerrainParams { poisson: 0.5, ..Default::default() },
        TerrainParams { friction: f64::NAN, ..Default::default() },
    ];
    for p in bad {
        assert!(matches!(p.validate(), Err(TerrainError::InvalidParams(_))), "{p:?}");
    }
}
