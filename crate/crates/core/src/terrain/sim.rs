//! Particle state, time stepping, bed preparation and dig cycles.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, floor, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bucket::{BucketProfile, PoseState, Trajectory};
use super::contact::{ContactKinematics, ContactModel, SpringState};
use super::{TerrainError, TerrainParams};
use crate::trace::ForceTrace;
use crate::GRAVITY;

/// Relative radius jitter applied when filling a bed.
const RADIUS_JITTER: f64 = 0.1;
/// Lattice spacing in nominal diameters.
const LATTICE_SPACING: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub omega: f64,
    pub radius: f64,
    /// Mass per unit depth, kg/m.
    pub mass: f64,
}

impl Particle {
    pub fn new(pos: [f64; 2], radius: f64, density: f64) -> Self {
        Self {
            pos,
            vel: [0.0; 2],
            omega: 0.0,
            radius,
            mass: density * core::f64::consts::PI * radius * radius,
        }
    }

    pub fn inertia(&self) -> f64 {
        0.5 * self.mass * self.radius * self.radius
    }

    pub fn speed(&self) -> f64 {
        sqrt(self.vel[0] * self.vel[0] + self.vel[1] * self.vel[1])
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * (self.vel[0] * self.vel[0] + self.vel[1] * self.vel[1])
            + 0.5 * self.inertia() * self.omega * self.omega
    }
}

/// Container size used when filling a bed, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BedSpec {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    pub max_speed: f64,
    pub max_steps: usize,
    /// Global viscous damping rate during settling, 1/s.
    pub damping: f64,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self {
            max_speed: 1e-4,
            max_steps: 200_000,
            damping: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Global viscous damping rate, 1/s. Zero outside settling.
    pub damping: f64,
    /// Speed treated as a numerical blow-up, m/s.
    pub blowup_speed: f64,
    /// Body acceleration, m/s².
    pub gravity: [f64; 2],
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            damping: 0.0,
            blowup_speed: 50.0,
            gravity: [0.0, -GRAVITY],
        }
    }
}

/// Prescribed bucket: profile plus the trajectory that poses it.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketState {
    pub profile: BucketProfile,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Spring {
    i: u32,
    b: u32,
    state: SpringState,
}

/// Everything needed to advance the bed deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub particles: Vec<Particle>,
    /// Container width; walls at `x = 0` and `x = width`, floor at `y = 0`.
    pub width: f64,
    pub time: f64,
    pub bucket: Option<BucketState>,
    /// Force and torque (about the blade tip) on the bucket from the last step, per unit depth.
    pub bucket_force: [f64; 2],
    pub bucket_torque: f64,
    pub seed: u64,
    springs: Vec<Spring>,
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    /// Vector sum of all particle-particle forces.
    pub internal_force_sum: [f64; 2],
    /// Largest particle-particle contact force magnitude.
    pub max_pair_force: f64,
    /// Sum of the forces the bucket exerted on particles.
    pub bucket_on_particles: [f64; 2],
    pub contacts: usize,
    pub max_speed: f64,
}

/// Critical-step heuristic `0.2 √(m_min / k_max)` with `k_max` the Hertz tangent stiffness at
/// overlap `0.01 d` for the largest wall contact radius.
pub fn stable_dt(params: &TerrainParams) -> f64 {
    let r = 0.5 * params.particle_size;
    let (r_min, r_max) = (r * (1.0 - RADIUS_JITTER), r * (1.0 + RADIUS_JITTER));
    let m_min = params.density * core::f64::consts::PI * r_min * r_min;
    let k_max = ContactModel::new(params).normal_stiffness(r_max, 0.01 * params.particle_size);
    0.2 * sqrt(m_min / k_max)
}

struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl Grid {
    fn build(particles: &[Particle]) -> Self {
        let n = particles.len();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        let mut dmax: f64 = 0.0;
        for p in particles {
            x0 = x0.min(p.pos[0]);
            y0 = y0.min(p.pos[1]);
            x1 = x1.max(p.pos[0]);
            y1 = y1.max(p.pos[1]);
            dmax = dmax.max(2.0 * p.radius);
        }
        let mut cell = dmax;
        let budget = (16 * n + 1024) as f64;
        let area = (x1 - x0 + cell) * (y1 - y0 + cell);
        if area / (cell * cell) > budget {
            cell = sqrt(area / budget);
        }
        let nx = floor((x1 - x0) / cell) as usize + 1;
        let ny = floor((y1 - y0) / cell) as usize + 1;
        let mut start = vec![0u32; nx * ny + 1];
        let cell_of: Vec<usize> = particles
            .iter()
            .map(|p| {
                let cx = floor((p.pos[0] - x0) / cell) as usize;
                let cy = floor((p.pos[1] - y0) / cell) as usize;
                cy.min(ny - 1) * nx + cx.min(nx - 1)
            })
            .collect();
        for &c in &cell_of {
            start[c + 1] += 1;
        }
        for c in 0..nx * ny {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut items = vec![0u32; n];
        for (i, &c) in cell_of.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            start,
            items,
        }
    }

    fn coords(&self, pos: [f64; 2]) -> (usize, usize) {
        let cx = floor((pos[0] - self.x0) / self.cell) as usize;
        let cy = floor((pos[1] - self.y0) / self.cell) as usize;
        (cx.min(self.nx - 1), cy.min(self.ny - 1))
    }

    fn cell(&self, cx: usize, cy: usize) -> &[u32] {
        let c = cy * self.nx + cx;
        &self.items[self.start[c] as usize..self.start[c + 1] as usize]
    }
}

/// Accumulated loads for one force evaluation.
struct Loads {
    force: Vec<[f64; 2]>,
    torque: Vec<f64>,
    internal: Vec<[f64; 2]>,
    springs: Vec<Spring>,
    bucket_on_particles: [f64; 2],
    bucket_torque: f64,
    max_pair_force: f64,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl SimState {
    /// A state with the given particles and no bucket.
    pub fn new(particles: Vec<Particle>, width: f64, seed: u64) -> Self {
        Self {
            particles,
            width,
            time: 0.0,
            bucket: None,
            bucket_force: [0.0; 2],
            bucket_torque: 0.0,
            seed,
            springs: Vec::new(),
        }
    }

    pub fn with_bucket(mut self, profile: BucketProfile, trajectory: Trajectory) -> Self {
        self.bucket = Some(BucketState {
            profile,
            trajectory,
        });
        self
    }

    pub fn max_speed(&self) -> f64 {
        self.particles.iter().map(Particle::speed).fold(0.0, f64::max)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.particles.iter().map(Particle::kinetic_energy).sum()
    }

    pub fn momentum(&self) -> [f64; 2] {
        self.particles.iter().fold([0.0; 2], |m, p| {
            [m[0] + p.mass * p.vel[0], m[1] + p.mass * p.vel[1]]
        })
    }

    /// Height of the highest particle top, m.
    pub fn surface_height(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| p.pos[1] + p.radius)
            .fold(0.0, f64::max)
    }

    /// Number of tracked contacts with a live tangential spring history.
    pub fn contact_count(&self) -> usize {
        self.springs.len()
    }

    pub fn bucket_pose(&self) -> Option<PoseState> {
        self.bucket.as_ref().map(|b| b.trajectory.state_at(self.time))
    }

    fn spring(&self, i: usize, b: usize) -> SpringState {
        let key = (i as u32, b as u32);
        match self.springs.binary_search_by(|s| (s.i, s.b).cmp(&key)) {
            Ok(k) => self.springs[k].state,
            Err(_) => SpringState::default(),
        }
    }

    fn compute_loads(&self, model: &ContactModel, dt: f64) -> Loads {
        let ps = &self.particles;
        let n = ps.len();
        let mut l = Loads {
            force: vec![[0.0; 2]; n],
            torque: vec![0.0; n],
            internal: vec![[0.0; 2]; n],
            springs: Vec::with_capacity(self.springs.len() + 16),
            bucket_on_particles: [0.0; 2],
            bucket_torque: 0.0,
            max_pair_force: 0.0,
        };
        if n == 0 {
            return l;
        }
        let grid = Grid::build(ps);

        for i in 0..n {
            let pi = &ps[i];
            let (cx, cy) = grid.coords(pi.pos);
            for gy in cy.saturating_sub(1)..=(cy + 1).min(grid.ny - 1) {
                for gx in cx.saturating_sub(1)..=(cx + 1).min(grid.nx - 1) {
                    for &j in grid.cell(gx, gy) {
                        let j = j as usize;
                        if j <= i {
                            continue;
                        }
                        self.pair_contact(model, dt, i, j, &mut l);
                    }
                }
            }
        }

        let w = self.width;
        for i in 0..n {
            let p = ps[i];
            // Floor, left wall, right wall: gap and normal towards the wall.
            let walls = [
                (p.pos[1], [0.0, -1.0]),
                (p.pos[0], [-1.0, 0.0]),
                (w - p.pos[0], [1.0, 0.0]),
            ];
            for (k, (dist, normal)) in walls.into_iter().enumerate() {
                if dist < p.radius {
                    self.body_contact(model, dt, i, n + k, normal, p.radius - dist, [0.0; 2], 0.0, &mut l);
                }
            }
        }

        if let Some(pose) = self.bucket_pose() {
            let profile = &self.bucket.as_ref().expect("bucket present").profile;
            let verts = profile.world_vertices(pose.x, pose.y, pose.angle);
            let rmax = ps.iter().map(|p| p.radius).fold(0.0, f64::max);
            let (mut bx0, mut by0, mut bx1, mut by1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for v in &verts {
                bx0 = bx0.min(v[0]);
                by0 = by0.min(v[1]);
                bx1 = bx1.max(v[0]);
                by1 = by1.max(v[1]);
            }
            for i in 0..n {
                let p = ps[i];
                if p.pos[0] < bx0 - rmax
                    || p.pos[0] > bx1 + rmax
                    || p.pos[1] < by0 - rmax
                    || p.pos[1] > by1 + rmax
                {
                    continue;
                }
                for k in 0..verts.len() - 1 {
                    let (a, b) = (verts[k], verts[k + 1]);
                    let ab = [b[0] - a[0], b[1] - a[1]];
                    let ap = [p.pos[0] - a[0], p.pos[1] - a[1]];
                    let s = (dot(ap, ab) / dot(ab, ab)).clamp(0.0, 1.0);
                    if k > 0 && s <= 0.0 {
                        // Shared vertex already handled by the previous segment.
                        continue;
                    }
                    let c = [a[0] + s * ab[0], a[1] + s * ab[1]];
                    let d = [c[0] - p.pos[0], c[1] - p.pos[1]];
                    let dist = sqrt(dot(d, d));
                    if dist >= p.radius || dist == 0.0 {
                        continue;
                    }
                    let normal = [d[0] / dist, d[1] / dist];
                    let arm = [c[0] - pose.x, c[1] - pose.y];
                    let vc = [pose.vx - pose.omega * arm[1], pose.vy + pose.omega * arm[0]];
                    let f = self.body_contact(
                        model,
                        dt,
                        i,
                        n + 3 + k,
                        normal,
                        p.radius - dist,
                        vc,
                        pose.omega,
                        &mut l,
                    );
                    // f is the force on the particle; the bucket receives its negative.
                    l.bucket_on_particles[0] += f.0[0];
                    l.bucket_on_particles[1] += f.0[1];
                    l.bucket_torque -= arm[0] * f.0[1] - arm[1] * f.0[0];
                    l.bucket_torque += f.1;
                }
            }
        }

        l.springs.sort_unstable_by_key(|a| (a.i, a.b));
        l
    }

    fn pair_contact(&self, model: &ContactModel, dt: f64, i: usize, j: usize, l: &mut Loads) {
        let (pi, pj) = (&self.particles[i], &self.particles[j]);
        let d = [pj.pos[0] - pi.pos[0], pj.pos[1] - pi.pos[1]];
        let dist2 = dot(d, d);
        let rsum = pi.radius + pj.radius;
        if dist2 >= rsum * rsum || dist2 == 0.0 {
            return;
        }
        let dist = sqrt(dist2);
        let n = [d[0] / dist, d[1] / dist];
        let t = [-n[1], n[0]];
        let overlap = rsum - dist;
        let dv = [pi.vel[0] - pj.vel[0], pi.vel[1] - pj.vel[1]];
        let kin = ContactKinematics {
            overlap,
            vn: dot(dv, n),
            vt: dot(dv, t) + pi.omega * pi.radius + pj.omega * pj.radius,
            w_rel: pi.omega - pj.omega,
            r_eff: pi.radius * pj.radius / rsum,
            m_eff: pi.mass * pj.mass / (pi.mass + pj.mass),
        };
        let c = model.evaluate(&kin, self.spring(i, j), dt);

        let f = [-c.normal * n[0] + c.tangential * t[0], -c.normal * n[1] + c.tangential * t[1]];
        l.force[i][0] += f[0];
        l.force[i][1] += f[1];
        l.force[j][0] -= f[0];
        l.force[j][1] -= f[1];
        l.internal[i][0] += f[0];
        l.internal[i][1] += f[1];
        l.internal[j][0] -= f[0];
        l.internal[j][1] -= f[1];
        l.max_pair_force = l.max_pair_force.max(sqrt(dot(f, f)));
        l.torque[i] += pi.radius * c.tangential + c.rolling_torque;
        l.torque[j] += pj.radius * c.tangential - c.rolling_torque;
        l.springs.push(Spring {
            i: i as u32,
            b: j as u32,
            state: c.springs,
        });
    }

    /// Contact between particle `i` and a rigid body. `normal` points from the particle towards
    /// the body, `vc` is the body velocity at the contact point and `body_omega` its spin.
    /// Returns the force on the particle and the rolling torque on the body.
    #[allow(clippy::too_many_arguments)]
    fn body_contact(
        &self,
        model: &ContactModel,
        dt: f64,
        i: usize,
        key: usize,
        normal: [f64; 2],
        overlap: f64,
        vc: [f64; 2],
        body_omega: f64,
        l: &mut Loads,
    ) -> ([f64; 2], f64) {
        let p = &self.particles[i];
        let t = [-normal[1], normal[0]];
        let dv = [p.vel[0] - vc[0], p.vel[1] - vc[1]];
        let kin = ContactKinematics {
            overlap,
            vn: dot(dv, normal),
            vt: dot(dv, t) + p.omega * p.radius,
            w_rel: p.omega - body_omega,
            r_eff: p.radius,
            m_eff: p.mass,
        };
        let c = model.evaluate(&kin, self.spring(i, key), dt);
        let f = [
            -c.normal * normal[0] + c.tangential * t[0],
            -c.normal * normal[1] + c.tangential * t[1],
        ];
        l.force[i][0] += f[0];
        l.force[i][1] += f[1];
        l.torque[i] += p.radius * c.tangential + c.rolling_torque;
        l.springs.push(Spring {
            i: i as u32,
            b: key as u32,
            state: c.springs,
        });
        (f, -c.rolling_torque)
    }

    /// Advances the state by one symplectic Euler step.
    pub fn advance(
        &mut self,
        dt: f64,
        model: &ContactModel,
        opts: &SimOptions,
    ) -> Result<StepDiagnostics, TerrainError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TerrainError::InvalidTimeStep);
        }
        let loads = self.compute_loads(model, dt);
        let mut diag = StepDiagnostics {
            max_pair_force: loads.max_pair_force,
            bucket_on_particles: loads.bucket_on_particles,
            contacts: loads.springs.len(),
            ..Default::default()
        };
        for f in &loads.internal {
            diag.internal_force_sum[0] += f[0];
            diag.internal_force_sum[1] += f[1];
        }
        for (k, p) in self.particles.iter_mut().enumerate() {
            let inv_m = 1.0 / p.mass;
            let fx = loads.force[k][0] - opts.damping * p.mass * p.vel[0];
            let fy = loads.force[k][1] - opts.damping * p.mass * p.vel[1];
            let tq = loads.torque[k] - opts.damping * p.inertia() * p.omega;
            p.vel[0] += dt * (fx * inv_m + opts.gravity[0]);
            p.vel[1] += dt * (fy * inv_m + opts.gravity[1]);
            p.omega += dt * tq / p.inertia();
            p.pos[0] += dt * p.vel[0];
            p.pos[1] += dt * p.vel[1];
            let speed = p.speed();
            if !(speed <= opts.blowup_speed) || !p.omega.is_finite() {
                return Err(TerrainError::UnstableStep {
                    particle: k,
                    speed,
                    time: self.time + dt,
                });
            }
            diag.max_speed = diag.max_speed.max(speed);
        }
        self.springs = loads.springs;
        self.bucket_force = [-loads.bucket_on_particles[0], -loads.bucket_on_particles[1]];
        self.bucket_torque = loads.bucket_torque;
        self.time += dt;
        Ok(diag)
    }
}

/// One step with default options, returning the successor state.
pub fn step(state: &SimState, dt: f64, params: &TerrainParams) -> Result<SimState, TerrainError> {
    params.validate()?;
    let mut next = state.clone();
    next.advance(dt, &ContactModel::new(params), &SimOptions::default())?;
    Ok(next)
}

/// Fills a container with a jittered hexagonal packing and lets it settle under gravity.
pub fn fill_bed(extent: BedSpec, params: &TerrainParams, seed: u64) -> Result<SimState, TerrainError> {
    fill_bed_with(extent, params, seed, &SettleOptions::default())
}

pub fn fill_bed_with(
    extent: BedSpec,
    params: &TerrainParams,
    seed: u64,
    settle: &SettleOptions,
) -> Result<SimState, TerrainError> {
    params.validate()?;
    let d = params.particle_size;
    if !(extent.width >= d && extent.height >= d) {
        return Err(TerrainError::ExtentTooSmall {
            width: extent.width,
            height: extent.height,
        });
    }
    let r = 0.5 * d;
    let s = LATTICE_SPACING * d;
    let row = s * sqrt(3.0) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut particles = Vec::new();
    let mut y = r;
    let mut j = 0usize;
    while y <= extent.height - r + 1e-12 {
        let mut x = r + if j % 2 == 1 { 0.5 * s } else { 0.0 };
        while x <= extent.width - r + 1e-12 {
            let jitter: f64 = rng.gen_range(-RADIUS_JITTER..=RADIUS_JITTER);
            particles.push(Particle::new([x, y], r * (1.0 + jitter), params.density));
            x += s;
        }
        y += row;
        j += 1;
    }
    let mut state = SimState::new(particles, extent.width, seed);
    settle_bed(&mut state, params, settle)?;
    state.time = 0.0;
    Ok(state)
}

/// Steps with global damping until the bed is at rest or the step cap is reached.
pub fn settle_bed(
    state: &mut SimState,
    params: &TerrainParams,
    settle: &SettleOptions,
) -> Result<usize, TerrainError> {
    let model = ContactModel::new(params);
    let dt = stable_dt(params);
    let opts = SimOptions {
        damping: settle.damping,
        ..SimOptions::default()
    };
    for k in 0..settle.max_steps {
        let diag = state.advance(dt, &model, &opts)?;
        // Skip the first steps: the bed starts at rest before gravity acts.
        if k > 10 && diag.max_speed < settle.max_speed {
            return Ok(k + 1);
        }
    }
    Ok(settle.max_steps)
}

/// Everything that defines a dig experiment apart from the soil parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DigScenario {
    pub bed: BedSpec,
    pub profile: BucketProfile,
    /// Bucket width in m; scales per-unit-depth forces to N.
    pub bucket_width: f64,
    pub trajectory: Trajectory,
    pub seed: u64,
    /// Independent bed realisations across the bucket width. Slice `k` uses seed `seed + k` and
    /// carries `bucket_width / slices` of the bucket.
    pub slices: usize,
    /// Fixed time step; `None` uses [`stable_dt`] for the parameters.
    pub dt: Option<f64>,
    pub settle: SettleOptions,
    pub blowup_speed: f64,
}

impl DigScenario {
    pub fn new(bed: BedSpec, trajectory: Trajectory, seed: u64) -> Self {
        Self {
            bed,
            profile: BucketProfile::default(),
            bucket_width: 1.0,
            trajectory,
            seed,
            slices: 1,
            dt: None,
            settle: SettleOptions::default(),
            blowup_speed: SimOptions::default().blowup_speed,
        }
    }

    pub fn slice_seed(&self, slice: usize) -> u64 {
        self.seed.wrapping_add(slice as u64)
    }
}

/// Bucket force of one slice, per unit depth, averaged over each keyframe interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceForces {
    pub times: Vec<f64>,
    /// Entry `k > 0` is the mean over `(t_{k−1}, t_k]`; entry 0 is zero.
    pub mean_force: Vec<[f64; 2]>,
}

/// Fills and settles the bed of one slice and drives the bucket through it.
pub fn run_dig_slice(
    scenario: &DigScenario,
    params: &TerrainParams,
    slice: usize,
) -> Result<SliceForces, TerrainError> {
    let bed = fill_bed_with(scenario.bed, params, scenario.slice_seed(slice), &scenario.settle)?;
    dig_slice_from(bed, scenario, params)
}

/// Bucket force vector in N at each keyframe: `(width / slices) Σ_s F_s,k`.
pub fn combined_force(scenario: &DigScenario, slices: &[SliceForces]) -> Vec<(f64, [f64; 2])> {
    let times = &slices[0].times;
    let scale = scenario.bucket_width / slices.len() as f64;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut f = [0.0; 2];
            for s in slices {
                f[0] += s.mean_force[k][0];
                f[1] += s.mean_force[k][1];
            }
            (t, [scale * f[0], scale * f[1]])
        })
        .collect()
}

/// Magnitudes of [`combined_force`] as a trace.
pub fn combine_slices(scenario: &DigScenario, slices: &[SliceForces]) -> ForceTrace {
    let samples = combined_force(scenario, slices)
        .into_iter()
        .map(|(t, f)| (t, sqrt(dot(f, f))))
        .collect();
    ForceTrace::new("simulated", samples).expect("keyframe times are strictly increasing")
}

/// Runs every slice of the scenario and records the bucket force at the trajectory keyframes.
///
/// Sample `k > 0` is the magnitude of the bucket force averaged over the interval between
/// keyframes `k − 1` and `k`. Sample 0 is zero: the bucket has not acted yet.
pub fn run_dig_cycle(scenario: &DigScenario, params: &TerrainParams) -> Result<ForceTrace, TerrainError> {
    let slices = (0..scenario.slices.max(1))
        .map(|k| run_dig_slice(scenario, params, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(combine_slices(scenario, &slices))
}

/// Drives the bucket through an already settled bed, which carries the full bucket width.
pub fn dig_from(
    bed: SimState,
    scenario: &DigScenario,
    params: &TerrainParams,
) -> Result<ForceTrace, TerrainError> {
    let forces = dig_slice_from(bed, scenario, params)?;
    let single = DigScenario {
        slices: 1,
        ..scenario.clone()
    };
    Ok(combine_slices(&single, &[forces]))
}

fn dig_slice_from(
    bed: SimState,
    scenario: &DigScenario,
    params: &TerrainParams,
) -> Result<SliceForces, TerrainError> {
    params.validate()?;
    scenario.profile.validate()?;
    if !(scenario.bucket_width > 0.0) {
        return Err(TerrainError::InvalidProfile("bucket width must be positive"));
    }
    let dt_max = scenario.dt.unwrap_or_else(|| stable_dt(params));
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(TerrainError::InvalidTimeStep);
    }
    let model = ContactModel::new(params);
    let opts = SimOptions {
        blowup_speed: scenario.blowup_speed,
        ..SimOptions::default()
    };
    let keys = scenario.trajectory.keyframes();
    let mut state = bed.with_bucket(scenario.profile.clone(), scenario.trajectory.clone());

    let mut times = Vec::with_capacity(keys.len());
    let mut mean_force = Vec::with_capacity(keys.len());
    times.push(keys[0].t);
    mean_force.push([0.0; 2]);
    for w in keys.windows(2) {
        let span = w[1].t - w[0].t;
        let n = ceil(span / dt_max).max(1.0) as usize;
        let dt = span / n as f64;
        let mut acc = [0.0; 2];
        for k in 0..n {
            state.time = w[0].t + k as f64 * dt;
            state.advance(dt, &model, &opts)?;
            acc[0] += state.bucket_force[0];
            acc[1] += state.bucket_force[1];
        }
        times.push(w[1].t);
        mean_force.push([acc[0] / n as f64, acc[1] / n as f64]);
    }
    Ok(SliceForces { times, mean_force })
}
