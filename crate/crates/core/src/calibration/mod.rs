//! Terrain-parameter calibration against a measured bucket-force trace.
//!
//! Calibration has two steps. The first checks that the simulated linkage follows the measured
//! pose ([`trajectory_match`]); the second fits the soil parameters by minimising a weighted sum
//! of [`peak_error`] and [`avg_error`] with a bounded Nelder–Mead search over
//! `(log₁₀ E, μ_t, e, d, μ_r)`.

mod kinematics;
mod metrics;

use alloc::vec::Vec;

use libm::{log10, pow};

pub use kinematics::{pose_trace_from_trajectory, trajectory_from_joints, JointSample};
pub use metrics::{
    avg_error, avg_error_with, peak_error, trajectory_match, trajectory_match_with,
    DEFAULT_GRID_POINTS,
};

pub use crate::trace::{ForceTrace, PoseSample, PoseTrace, TraceError};
use crate::terrain::{run_dig_cycle, DigScenario, TerrainError, TerrainParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("reference trace is identically zero")]
    ZeroReference,
    #[error("traces do not overlap in time")]
    NoOverlap,
    #[error("budget of {budget} evaluations is below the {required} needed for the initial simplex")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("every objective evaluation failed")]
    CalibrationFailed,
    #[error("invalid calibration problem: {0}")]
    InvalidProblem(&'static str),
    #[error("simulation failed: {0}")]
    Simulation(#[from] TerrainError),
}

/// Names of the search coordinates, in vector order.
pub const SEARCH_AXES: [&str; 5] = [
    "log10_young_modulus",
    "friction",
    "restitution",
    "particle_size",
    "rolling_resistance",
];

/// Initial simplex offsets per search axis.
const SIMPLEX_OFFSETS: [f64; 5] = [0.5, 0.1, 0.1, 0.01, 0.1];

/// Closed intervals for the calibrated parameters. A collapsed interval freezes its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    /// Pa.
    pub young_modulus: (f64, f64),
    pub friction: (f64, f64),
    pub restitution: (f64, f64),
    /// m.
    pub particle_size: (f64, f64),
    pub rolling_resistance: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            young_modulus: (0.5e6, 50.0e6),
            friction: (0.3, 1.0),
            restitution: (0.05, 0.95),
            particle_size: (0.04, 0.08),
            rolling_resistance: (0.0, 0.5),
        }
    }
}

impl ParamBounds {
    /// Copy with restitution and particle size frozen at the values in `p`.
    pub fn freezing_restitution_and_size(mut self, p: &TerrainParams) -> Self {
        self.restitution = (p.restitution, p.restitution);
        self.particle_size = (p.particle_size, p.particle_size);
        self
    }

    fn intervals(&self) -> [(f64, f64); 5] {
        [
            self.young_modulus,
            self.friction,
            self.restitution,
            self.particle_size,
            self.rolling_resistance,
        ]
    }

    /// Bounds in search coordinates.
    pub fn search_box(&self) -> ([f64; 5], [f64; 5]) {
        let iv = self.intervals();
        let mut lo = [0.0; 5];
        let mut hi = [0.0; 5];
        for k in 0..5 {
            lo[k] = iv[k].0;
            hi[k] = iv[k].1;
        }
        lo[0] = log10(lo[0]);
        hi[0] = log10(hi[0]);
        (lo, hi)
    }

    pub fn contains(&self, p: &TerrainParams) -> bool {
        let v = [
            p.young_modulus,
            p.friction,
            p.restitution,
            p.particle_size,
            p.rolling_resistance,
        ];
        self.intervals()
            .iter()
            .zip(v)
            .all(|(&(lo, hi), x)| lo <= x && x <= hi)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let iv = self.intervals();
        if iv.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(CalibrationError::InvalidProblem(
                "each bound must be a finite interval with lower <= upper",
            ));
        }
        let ok = self.young_modulus.0 > 0.0
            && self.friction.0 >= 0.0
            && self.restitution.0 >= 0.0
            && self.restitution.1 <= 1.0
            && self.particle_size.0 > 0.0
            && self.rolling_resistance.0 >= 0.0;
        if !ok {
            return Err(CalibrationError::InvalidProblem(
                "bounds leave the physically valid parameter range",
            ));
        }
        Ok(())
    }
}

/// Objective weights `(w_peak, w_avg)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub peak: f64,
    pub avg: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { peak: 0.5, avg: 0.5 }
    }
}

/// Search vector `(log₁₀ E, μ_t, e, d, μ_r)` of a parameter set.
pub fn to_search_vector(p: &TerrainParams) -> [f64; 5] {
    [
        log10(p.young_modulus),
        p.friction,
        p.restitution,
        p.particle_size,
        p.rolling_resistance,
    ]
}

/// Inverse of [`to_search_vector`]; the auxiliary fields come from `base`.
pub fn from_search_vector(v: &[f64; 5], base: &TerrainParams) -> TerrainParams {
    TerrainParams {
        young_modulus: pow(10.0, v[0]),
        friction: v[1],
        restitution: v[2],
        particle_size: v[3],
        rolling_resistance: v[4],
        ..*base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProblem {
    pub initial: TerrainParams,
    pub bounds: ParamBounds,
    pub scenario: DigScenario,
    pub measured: ForceTrace,
    pub weights: Weights,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Normalised simplex diameter below which the search stops.
    pub tolerance: f64,
}

impl CalibrationProblem {
    pub fn new(initial: TerrainParams, scenario: DigScenario, measured: ForceTrace) -> Self {
        Self {
            initial,
            bounds: ParamBounds::default(),
            scenario,
            measured,
            weights: Weights::default(),
            budget: 100,
            tolerance: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        self.bounds.validate()?;
        self.initial.validate()?;
        if !self.bounds.contains(&self.initial) {
            return Err(CalibrationError::InvalidProblem(
                "initial parameters lie outside the bounds",
            ));
        }
        let w = self.weights;
        if !(w.peak >= 0.0 && w.avg >= 0.0 && w.peak + w.avg > 0.0) {
            return Err(CalibrationError::InvalidProblem(
                "weights must be non-negative and not both zero",
            ));
        }
        if self.budget < 1 {
            return Err(CalibrationError::BudgetTooSmall {
                budget: self.budget,
                required: 1,
            });
        }
        Ok(())
    }

    /// Indices of search axes whose bounds are not collapsed.
    pub fn active_axes(&self) -> Vec<usize> {
        let (lo, hi) = self.bounds.search_box();
        (0..5).filter(|&k| hi[k] > lo[k]).collect()
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub params: TerrainParams,
    /// `+∞` when the simulation or a metric failed.
    pub objective: f64,
    pub peak_error: f64,
    pub avg_error: f64,
    pub failure: Option<CalibrationError>,
}

impl Evaluation {
    fn failed(params: TerrainParams, err: CalibrationError) -> Self {
        Self {
            params,
            objective: f64::INFINITY,
            peak_error: f64::NAN,
            avg_error: f64::NAN,
            failure: Some(err),
        }
    }
}

/// Simulated force trace for `params` under the problem's scenario.
pub fn simulate(params: &TerrainParams, problem: &CalibrationProblem) -> Result<ForceTrace, TerrainError> {
    run_dig_cycle(&problem.scenario, params)
}

/// Full evaluation with both metrics.
pub fn evaluate_detailed(params: &TerrainParams, problem: &CalibrationProblem) -> Evaluation {
    score(params, problem, simulate(params, problem))
}

/// Scores an already simulated trace against the measured one.
pub fn score(
    params: &TerrainParams,
    problem: &CalibrationProblem,
    simulated: Result<ForceTrace, TerrainError>,
) -> Evaluation {
    let sim = match simulated {
        Ok(s) => s,
        Err(e) => return Evaluation::failed(*params, e.into()),
    };
    let metrics = peak_error(&sim, &problem.measured)
        .and_then(|p| avg_error(&sim, &problem.measured).map(|a| (p, a)));
    match metrics {
        Ok((peak, avg)) => {
            let objective = problem.weights.peak * peak + problem.weights.avg * avg;
            Evaluation {
                params: *params,
                objective: if objective.is_nan() { f64::INFINITY } else { objective },
                peak_error: peak,
                avg_error: avg,
                failure: None,
            }
        }
        Err(e) => Evaluation::failed(*params, e),
    }
}

/// Weighted objective `w_peak · peak_error + w_avg · avg_error`; `+∞` on failure.
pub fn evaluate(params: &TerrainParams, problem: &CalibrationProblem) -> f64 {
    evaluate_detailed(params, problem).objective
}

/// Evaluates a batch of independent candidates. Results are returned in candidate order.
pub trait BatchEvaluator {
    fn evaluate_batch(&self, problem: &CalibrationProblem, candidates: &[TerrainParams]) -> Vec<Evaluation>;
}

/// Evaluates candidates one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialEvaluator;

impl BatchEvaluator for SequentialEvaluator {
    fn evaluate_batch(&self, problem: &CalibrationProblem, candidates: &[TerrainParams]) -> Vec<Evaluation> {
        candidates.iter().map(|p| evaluate_detailed(p, problem)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub fitted: TerrainParams,
    pub objective: f64,
    pub peak_error_pct: f64,
    pub avg_error_pct: f64,
    /// Every evaluation in the order performed; entry 0 is the initial parameter set.
    pub history: Vec<Evaluation>,
    pub evaluations: usize,
    /// Whether the simplex shrank below the tolerance before the budget ran out.
    pub converged: bool,
}

impl CalibrationResult {
    /// Best objective seen after each evaluation.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|e| {
                best = best.min(e.objective);
                best
            })
            .collect()
    }

    pub fn initial(&self) -> &Evaluation {
        &self.history[0]
    }
}

/// Nelder–Mead with the sequential evaluator.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult, CalibrationError> {
    calibrate_with(problem, &SequentialEvaluator)
}

struct Vertex {
    x: [f64; 5],
    f: f64,
    /// History index; breaks objective ties.
    id: usize,
}

struct Search<'a, E: BatchEvaluator> {
    problem: &'a CalibrationProblem,
    evaluator: &'a E,
    lo: [f64; 5],
    hi: [f64; 5],
    history: Vec<Evaluation>,
}

impl<E: BatchEvaluator> Search<'_, E> {
    fn remaining(&self) -> usize {
        self.problem.budget - self.history.len()
    }

    fn clamp(&self, mut x: [f64; 5]) -> [f64; 5] {
        for k in 0..5 {
            x[k] = x[k].clamp(self.lo[k], self.hi[k]);
        }
        x
    }

    /// Parameters at a search point. Axes still at the initial coordinate keep the initial value
    /// exactly, so the log round trip of E cannot perturb an unmoved start.
    fn params_at(&self, x: &[f64; 5]) -> TerrainParams {
        let init = &self.problem.initial;
        let mut p = from_search_vector(x, init);
        let x0 = to_search_vector(init);
        let exact = [
            &mut p.young_modulus,
            &mut p.friction,
            &mut p.restitution,
            &mut p.particle_size,
            &mut p.rolling_resistance,
        ];
        let orig = [
            init.young_modulus,
            init.friction,
            init.restitution,
            init.particle_size,
            init.rolling_resistance,
        ];
        for (k, field) in exact.into_iter().enumerate() {
            if x[k] == x0[k] {
                *field = orig[k];
            }
        }
        p
    }

    fn run(&mut self, points: &[[f64; 5]]) -> Vec<Vertex> {
        let candidates: Vec<TerrainParams> = points.iter().map(|x| self.params_at(x)).collect();
        let results = self.evaluator.evaluate_batch(self.problem, &candidates);
        debug_assert_eq!(results.len(), points.len());
        let mut out = Vec::with_capacity(points.len());
        for (x, mut e) in points.iter().zip(results) {
            if e.objective.is_nan() {
                e.objective = f64::INFINITY;
            }
            out.push(Vertex {
                x: *x,
                f: e.objective,
                id: self.history.len(),
            });
            self.history.push(e);
        }
        out
    }

    fn one(&mut self, x: [f64; 5]) -> Vertex {
        self.run(&[x]).pop().expect("one result per candidate")
    }
}

fn better(a: &Vertex, b: &Vertex) -> bool {
    (a.f, a.id) < (b.f, b.id)
}

fn lerp(active: &[usize], from: &[f64; 5], to: &[f64; 5], t: f64) -> [f64; 5] {
    let mut x = *from;
    for &k in active {
        x[k] = from[k] + t * (to[k] - from[k]);
    }
    x
}

/// Bounded Nelder–Mead over the non-frozen search axes.
///
/// Reflection 1, expansion 2, contraction ½, shrink ½. Candidates outside the bounds are
/// projected onto them. The initial simplex steps each active axis by a fixed offset
/// (`0.5` decades of E, `0.1` for μ_t, e and μ_r, `0.01 m` for d), downwards when the upward step
/// would leave the box. Initial-simplex and shrink evaluations go through `evaluator` as batches.
pub fn calibrate_with<E: BatchEvaluator>(
    problem: &CalibrationProblem,
    evaluator: &E,
) -> Result<CalibrationResult, CalibrationError> {
    problem.validate()?;
    let active = problem.active_axes();
    let n = active.len();
    if problem.budget < n + 1 {
        return Err(CalibrationError::BudgetTooSmall {
            budget: problem.budget,
            required: n + 1,
        });
    }
    let (lo, hi) = problem.bounds.search_box();
    let mut s = Search {
        problem,
        evaluator,
        lo,
        hi,
        history: Vec::with_capacity(problem.budget),
    };

    let x0 = s.clamp(to_search_vector(&problem.initial));
    let mut points = alloc::vec![x0];
    for &k in &active {
        let mut x = x0;
        let off = SIMPLEX_OFFSETS[k].min(hi[k] - lo[k]);
        x[k] = if x0[k] + off <= hi[k] { x0[k] + off } else { x0[k] - off };
        points.push(s.clamp(x));
    }
    let mut simplex = s.run(&points);
    let mut converged = false;

    while n > 0 && !converged {
        simplex.sort_by(|a, b| (a.f, a.id).partial_cmp(&(b.f, b.id)).expect("objectives are not NaN"));
        let x_best = simplex[0].x;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| {
                active
                    .iter()
                    .map(move |&k| libm::fabs(v.x[k] - x_best[k]) / (hi[k] - lo[k]))
            })
            .fold(0.0, f64::max);
        if diameter < problem.tolerance {
            converged = true;
            break;
        }
        if s.remaining() == 0 {
            break;
        }

        let mut centroid = [0.0; 5];
        centroid.copy_from_slice(&simplex[0].x);
        for &k in &active {
            centroid[k] = simplex[..n].iter().map(|v| v.x[k]).sum::<f64>() / n as f64;
        }
        let worst = simplex[n].x;
        let reflected = s.one(s.clamp(lerp(&active, &centroid, &worst, -1.0)));

        if better(&reflected, &simplex[0]) {
            if s.remaining() > 0 {
                let expanded = s.one(s.clamp(lerp(&active, &centroid, &worst, -2.0)));
                simplex[n] = if better(&expanded, &reflected) { expanded } else { reflected };
            } else {
                simplex[n] = reflected;
            }
            continue;
        }
        if better(&reflected, &simplex[n - 1]) {
            simplex[n] = reflected;
            continue;
        }
        if s.remaining() == 0 {
            break;
        }
        if better(&reflected, &simplex[n]) {
            let c = s.one(s.clamp(lerp(&active, &centroid, &reflected.x, 0.5)));
            if !better(&reflected, &c) {
                simplex[n] = c;
                continue;
            }
        } else {
            let c = s.one(s.clamp(lerp(&active, &centroid, &worst, 0.5)));
            if better(&c, &simplex[n]) {
                simplex[n] = c;
                continue;
            }
        }
        if s.remaining() < n {
            break;
        }
        let best = simplex[0].x;
        let shrunk: Vec<[f64; 5]> = simplex[1..]
            .iter()
            .map(|v| s.clamp(lerp(&active, &best, &v.x, 0.5)))
            .collect();
        let fresh = s.run(&shrunk);
        simplex.truncate(1);
        simplex.extend(fresh);
    }

    let best = s
        .history
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.objective, a.0).partial_cmp(&(b.1.objective, b.0)).expect("no NaN"))
        .map(|(_, e)| e.clone())
        .expect("at least one evaluation");
    if !best.objective.is_finite() {
        return Err(CalibrationError::CalibrationFailed);
    }
    Ok(CalibrationResult {
        fitted: best.params,
        objective: best.objective,
        peak_error_pct: best.peak_error,
        avg_error_pct: best.avg_error,
        evaluations: s.history.len(),
        history: s.history,
        converged,
    })
}
