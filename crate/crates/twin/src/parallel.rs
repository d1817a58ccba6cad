//! Parallel objective evaluation.

use loadertwin_core::calibration::{score, BatchEvaluator, CalibrationProblem, Evaluation};
use loadertwin_core::terrain::{combine_slices, run_dig_slice, DigScenario, TerrainError, TerrainParams};
use loadertwin_core::trace::ForceTrace;
use rayon::prelude::*;

/// Runs every (candidate, slice) pair of a batch on a rayon pool.
///
/// Each slice owns its simulation state and slices are combined in slice order, so results are
/// bit-identical to the sequential evaluator whatever the thread count.
pub struct ParallelEvaluator {
    pool: rayon::ThreadPool,
}

impl ParallelEvaluator {
    /// `jobs = None` uses one thread per core.
    pub fn new(jobs: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Same trace as the sequential dig cycle, slices run in parallel.
    pub fn run_dig_cycle(&self, scenario: &DigScenario, params: &TerrainParams) -> Result<ForceTrace, TerrainError> {
        let slices = self.pool.install(|| {
            (0..scenario.slices.max(1))
                .into_par_iter()
                .map(|k| run_dig_slice(scenario, params, k))
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(combine_slices(scenario, &slices))
    }
}

impl BatchEvaluator for ParallelEvaluator {
    fn evaluate_batch(&self, problem: &CalibrationProblem, candidates: &[TerrainParams]) -> Vec<Evaluation> {
        let k = problem.scenario.slices.max(1);
        let runs: Vec<_> = self.pool.install(|| {
            (0..candidates.len() * k)
                .into_par_iter()
                .map(|j| run_dig_slice(&problem.scenario, &candidates[j / k], j % k))
                .collect()
        });
        candidates
            .iter()
            .zip(runs.chunks(k))
            .map(|(p, chunk)| {
                let sim = chunk
                    .iter()
                    .cloned()
                    .collect::<Result<Vec<_>, _>>()
                    .map(|slices| combine_slices(&problem.scenario, &slices));
                let e = score(p, problem, sim);
                match &e.failure {
                    Some(err) => log::warn!("evaluation failed for {p:?}: {err}"),
                    None => log::debug!("objective {:.4} at {p:?}", e.objective),
                }
                e
            })
            .collect()
    }
}
