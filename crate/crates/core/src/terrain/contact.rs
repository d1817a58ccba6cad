//! Hertz–Mindlin contact law with restitution-matched damping.
//!
//! Normal force `F_n = k δ^{3/2} + α(e) √(m* k) δ^{1/4} δ̇` with `k = (4/3) E* √R*`, clamped at zero
//! so contacts never pull. Tangential force from a Mindlin spring `k_t = 8 G* √(R* δ)` capped by
//! Coulomb friction. Rolling resistance torque capped at `μ_r F_n R*`.

use libm::{pow, sqrt};

use super::TerrainParams;

/// Damping coefficient α giving restitution `e` for an isolated Hertzian impact.
///
/// Under the scaling `δ = L X`, `t = T τ` the contact equation becomes
/// `X'' = −max(0, X^{3/2} + α X^{1/4} X')` with `X(0) = 0`, `X'(0) = 1`, independent of impact
/// speed, mass and stiffness. The rebound speed `−X'` at separation is monotone decreasing in α,
/// so α is found by bisection.
pub fn damping_ratio_for_restitution(e: f64) -> f64 {
    if e >= 1.0 {
        return 0.0;
    }
    let target = e.max(1e-4);
    let mut hi = 1.0;
    while normalized_restitution(hi) > target && hi < 1e4 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if normalized_restitution(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Rebound speed of the normalized impact for damping `alpha` (RK4).
pub fn normalized_restitution(alpha: f64) -> f64 {
    let accel = |x: f64, v: f64| {
        let x = x.max(0.0);
        -(pow(x, 1.5) + alpha * pow(x, 0.25) * v).max(0.0)
    };
    let h = 5e-4;
    let (mut x, mut v) = (0.0f64, 1.0f64);
    for _ in 0..2_000_000 {
        let (k1x, k1v) = (v, accel(x, v));
        let (k2x, k2v) = (v + 0.5 * h * k1v, accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v));
        let (k3x, k3v) = (v + 0.5 * h * k2v, accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v));
        let (k4x, k4v) = (v + h * k3v, accel(x + h * k3x, v + h * k3v));
        let xn = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        let vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if xn <= 0.0 && vn < 0.0 {
            // Separation inside this step; the force is tiny here, so velocity is nearly constant.
            let w = x / (x - xn);
            return -(v + w * (vn - v));
        }
        x = xn;
        v = vn;
    }
    0.0
}

/// Contact law constants derived once from [`TerrainParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactModel {
    /// Effective Young's modulus `E / (2(1 − ν²))` for like materials.
    pub e_star: f64,
    /// Effective shear modulus `G / (2(2 − ν))`, `G = E / (2(1 + ν))`.
    pub g_star: f64,
    pub alpha: f64,
    pub mu_t: f64,
    pub mu_r: f64,
}

/// Elongations of the tangential and rolling springs carried between steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpringState {
    /// Tangential spring elongation, m.
    pub slip: f64,
    /// Relative rolling angle, rad.
    pub roll: f64,
}

/// Output of one contact evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactForces {
    /// Repulsive normal force, `≥ 0`.
    pub normal: f64,
    /// Tangential force on the first body along the contact tangent.
    pub tangential: f64,
    /// Rolling resistance torque on the first body; the second body receives its negative.
    pub rolling_torque: f64,
    pub springs: SpringState,
}

/// Relative kinematics of one contact.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactKinematics {
    pub overlap: f64,
    /// Approach speed `dδ/dt`.
    pub vn: f64,
    /// Tangential slip speed of the first body relative to the second.
    pub vt: f64,
    /// Relative spin `ω₁ − ω₂`.
    pub w_rel: f64,
    pub r_eff: f64,
    pub m_eff: f64,
}

impl ContactModel {
    pub fn new(p: &TerrainParams) -> Self {
        let nu = p.poisson;
        let g = p.young_modulus / (2.0 * (1.0 + nu));
        Self {
            e_star: p.young_modulus / (2.0 * (1.0 - nu * nu)),
            g_star: g / (2.0 * (2.0 - nu)),
            alpha: damping_ratio_for_restitution(p.restitution),
            mu_t: p.friction,
            mu_r: p.rolling_resistance,
        }
    }

    /// Hertz coefficient `k` in `F = k δ^{3/2}`.
    pub fn hertz_coefficient(&self, r_eff: f64) -> f64 {
        4.0 / 3.0 * self.e_star * sqrt(r_eff)
    }

    /// Tangent stiffness `dF/dδ = 2 E* √(R* δ)`.
    pub fn normal_stiffness(&self, r_eff: f64, overlap: f64) -> f64 {
        2.0 * self.e_star * sqrt(r_eff * overlap)
    }

    /// Evaluates one contact over a step of length `dt`.
    ///
    /// The tangential spring has Mindlin stiffness `8 G* √(R* δ)` and slips at `μ_t F_n`. Rolling
    /// resistance is a rotational spring of stiffness `2.25 k_n μ_r² R*²` that yields at
    /// `μ_r F_n R*`, so steady relative rolling is opposed by exactly that torque.
    pub fn evaluate(&self, k: &ContactKinematics, prev: SpringState, dt: f64) -> ContactForces {
        let overlap = k.overlap;
        if !(overlap > 0.0) {
            return ContactForces::default();
        }
        let kh = self.hertz_coefficient(k.r_eff);
        let sqrt_d = sqrt(overlap);
        let elastic = kh * overlap * sqrt_d;
        let damping = if self.alpha == 0.0 {
            0.0
        } else {
            self.alpha * sqrt(k.m_eff * kh) * sqrt(sqrt_d) * k.vn
        };
        let normal = (elastic + damping).max(0.0);

        let kt = 8.0 * self.g_star * sqrt(k.r_eff * overlap);
        let (tangential, slip) = spring_with_cap(kt, prev.slip + k.vt * dt, self.mu_t * normal);

        let kr = 2.25 * self.normal_stiffness(k.r_eff, overlap) * self.mu_r * self.mu_r * k.r_eff * k.r_eff;
        let (rolling_torque, roll) = spring_with_cap(
            kr,
            prev.roll + k.w_rel * dt,
            self.mu_r * normal * k.r_eff,
        );

        ContactForces {
            normal,
            tangential,
            rolling_torque,
            springs: SpringState { slip, roll },
        }
    }
}

/// Restoring force `−k x` limited to `cap`; on yield the elongation is reset to the cap.
fn spring_with_cap(k: f64, x: f64, cap: f64) -> (f64, f64) {
    let f = -k * x;
    if libm::fabs(f) <= cap {
        return (f, x);
    }
    let f = if f > 0.0 { cap } else { -cap };
    (f, if k > 0.0 { -f / k } else { 0.0 })
}

/// Stateless form of [`ContactModel::evaluate`] built from the raw parameters.
pub fn hertz_mindlin_contact(
    kinematics: &ContactKinematics,
    params: &TerrainParams,
    prev: SpringState,
    dt: f64,
) -> ContactForces {
    ContactModel::new(params).evaluate(kinematics, prev, dt)
}
