//! Rigid bucket cross-section and its prescribed motion.

use alloc::vec;
use alloc::vec::Vec;

use libm::{atan2, cos, sin};

use super::TerrainError;

/// Bucket cross-section as an open polyline in the bucket frame, in metres.
///
/// The frame origin is the blade tip P₈, which is also the first vertex. `pivot` is the bucket
/// hinge in the same frame; it fixes how a mechanism pose maps onto the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketProfile {
    pub vertices: Vec<[f64; 2]>,
    pub pivot: [f64; 2],
}

impl Default for BucketProfile {
    /// A 0.55 m deep bucket opening towards +x with its floor level at zero rotation.
    fn default() -> Self {
        Self {
            vertices: vec![
                [0.0, 0.0],
                [-0.42, -0.02],
                [-0.55, 0.10],
                [-0.56, 0.38],
                [-0.48, 0.56],
            ],
            pivot: [-0.60, 0.486],
        }
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(sub(p2, p1), sub(q1, p1));
    let d2 = cross(sub(p2, p1), sub(q2, p1));
    let d3 = cross(sub(q2, q1), sub(p1, q1));
    let d4 = cross(sub(q2, q1), sub(p2, q1));
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

impl BucketProfile {
    pub fn validate(&self) -> Result<(), TerrainError> {
        let v = &self.vertices;
        if v.len() < 2 {
            return Err(TerrainError::InvalidProfile("need at least two vertices"));
        }
        if v.iter().chain([&self.pivot]).flatten().any(|c| !c.is_finite()) {
            return Err(TerrainError::InvalidProfile("coordinates must be finite"));
        }
        if v[0] != [0.0, 0.0] {
            return Err(TerrainError::InvalidProfile(
                "first vertex is the blade tip and must be the origin",
            ));
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(TerrainError::InvalidProfile("zero-length segment"));
        }
        let n = v.len() - 1;
        for i in 0..n {
            for j in i + 2..n {
                if segments_cross(v[i], v[i + 1], v[j], v[j + 1]) {
                    return Err(TerrainError::InvalidProfile("polyline self-intersects"));
                }
            }
        }
        Ok(())
    }

    /// Direction of the hinge-to-blade segment in the bucket frame.
    pub fn blade_direction(&self) -> f64 {
        atan2(-self.pivot[1], -self.pivot[0])
    }

    /// Profile rotation that puts the hinge-to-blade segment at world direction `psi`.
    pub fn rotation_for_blade_direction(&self, psi: f64) -> f64 {
        psi - self.blade_direction()
    }

    /// Vertices placed at a pose.
    pub fn world_vertices(&self, x: f64, y: f64, angle: f64) -> Vec<[f64; 2]> {
        let (s, c) = (sin(angle), cos(angle));
        self.vertices
            .iter()
            .map(|p| [x + c * p[0] - s * p[1], y + s * p[0] + c * p[1]])
            .collect()
    }
}

/// Blade-tip position (m) and profile rotation (rad) at time `t` (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketPose {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

/// Interpolated pose with its (piecewise constant) velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseState {
    pub x: f64,
    pub y: f64,
    pub angle: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

/// Time-sorted bucket keyframes, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    keyframes: Vec<BucketPose>,
}

impl Trajectory {
    pub fn new(keyframes: Vec<BucketPose>) -> Result<Self, TerrainError> {
        if keyframes.len() < 2 {
            return Err(TerrainError::InvalidTrajectory("need at least two keyframes"));
        }
        if keyframes
            .iter()
            .any(|k| !(k.t.is_finite() && k.x.is_finite() && k.y.is_finite() && k.angle.is_finite()))
        {
            return Err(TerrainError::InvalidTrajectory("keyframes must be finite"));
        }
        if keyframes.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(TerrainError::InvalidTrajectory(
                "keyframe times must be strictly increasing",
            ));
        }
        Ok(Self { keyframes })
    }

    /// A straight horizontal push at fixed height and rotation followed by a curl-and-lift.
    ///
    /// The blade enters from `x_start` (left of the bed), travels to `x_end` at `depth_y`, then
    /// rotates by `curl` while rising by `lift` over `curl_time`.
    #[allow(clippy::too_many_arguments)]
    pub fn push_and_curl(
        x_start: f64,
        x_end: f64,
        depth_y: f64,
        angle: f64,
        curl: f64,
        lift: f64,
        push_time: f64,
        curl_time: f64,
        samples: usize,
    ) -> Result<Self, TerrainError> {
        let total = push_time + curl_time;
        let n = samples.max(2);
        let keyframes = (0..n)
            .map(|i| {
                let t = total * i as f64 / (n - 1) as f64;
                if t <= push_time {
                    let w = t / push_time;
                    BucketPose {
                        t,
                        x: x_start + w * (x_end - x_start),
                        y: depth_y,
                        angle,
                    }
                } else {
                    let w = (t - push_time) / curl_time;
                    BucketPose {
                        t,
                        x: x_end,
                        y: depth_y + w * lift,
                        angle: angle + w * curl,
                    }
                }
            })
            .collect();
        Self::new(keyframes)
    }

    pub fn keyframes(&self) -> &[BucketPose] {
        &self.keyframes
    }

    pub fn start(&self) -> f64 {
        self.keyframes[0].t
    }

    pub fn end(&self) -> f64 {
        self.keyframes[self.keyframes.len() - 1].t
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            keyframes: self
                .keyframes
                .iter()
                .map(|k| BucketPose {
                    x: k.x + dx,
                    y: k.y + dy,
                    ..*k
                })
                .collect(),
        }
    }

    /// Pose at time `t`; held at the end keyframes outside the covered interval.
    pub fn state_at(&self, t: f64) -> PoseState {
        let k = &self.keyframes;
        let n = k.len();
        let hold = |p: &BucketPose| PoseState {
            x: p.x,
            y: p.y,
            angle: p.angle,
            vx: 0.0,
            vy: 0.0,
            omega: 0.0,
        };
        if t < k[0].t {
            return hold(&k[0]);
        }
        if t >= k[n - 1].t {
            return hold(&k[n - 1]);
        }
        let hi = k.partition_point(|p| p.t <= t);
        let (a, b) = (&k[hi - 1], &k[hi]);
        let h = b.t - a.t;
        let w = (t - a.t) / h;
        PoseState {
            x: a.x + w * (b.x - a.x),
            y: a.y + w * (b.y - a.y),
            angle: a.angle + w * (b.angle - a.angle),
            vx: (b.x - a.x) / h,
            vy: (b.y - a.y) / h,
            omega: (b.angle - a.angle) / h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_is_valid() {
        let p = BucketProfile::default();
        p.validate().unwrap();
        let psi = 0.3;
        let a = p.rotation_for_blade_direction(psi);
        let w = p.world_vertices(0.0, 0.0, a);
        let (s, c) = (sin(a), cos(a));
        let hinge = [c * p.pivot[0] - s * p.pivot[1], s * p.pivot[0] + c * p.pivot[1]];
        let dir = atan2(w[0][1] - hinge[1], w[0][0] - hinge[0]);
        assert!((dir - psi).abs() < 1e-12);
    }

    #[test]
    fn self_intersection_rejected() {
        let p = BucketProfile {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            pivot: [0.0, 1.0],
        };
        assert!(matches!(p.validate(), Err(TerrainError::InvalidProfile(_))));
    }

    #[test]
    fn interpolation_and_velocity() {
        let tr = Trajectory::new(vec![
            BucketPose { t: 0.0, x: 0.0, y: 1.0, angle: 0.0 },
            BucketPose { t: 2.0, x: 1.0, y: 1.0, angle: 0.4 },
        ])
        .unwrap();
        let s = tr.state_at(0.5);
        assert_eq!((s.x, s.y, s.angle), (0.25, 1.0, 0.1));
        assert_eq!((s.vx, s.vy, s.omega), (0.5, 0.0, 0.2));
        assert_eq!(tr.state_at(5.0).vx, 0.0);
        assert!(Trajectory::new(vec![tr.keyframes()[1], tr.keyframes()[0]]).is_err());
    }
}
