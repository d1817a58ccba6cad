use loadertwin::parallel::ParallelEvaluator;
use loadertwin_core::calibration::*;
use loadertwin_core::terrain::{run_dig_cycle, BedSpec, DigScenario, TerrainParams, Trajectory};

fn problem() -> CalibrationProblem {
    let tr = Trajectory::push_and_curl(-0.2, 0.45, 0.12, -0.1, 0.6, 0.3, 0.5, 0.3, 12).unwrap();
    let mut sc = DigScenario::new(BedSpec { width: 0.8, height: 0.3 }, tr, 5);
    sc.slices = 2;
    let measured = run_dig_cycle(&sc, &TerrainParams::default()).unwrap();
    CalibrationProblem::new(TerrainParams::default(), sc, measured)
}

#[test]
fn parallel_batch_matches_sequential_bit_for_bit() {
    let problem = problem();
    let candidates = [
        TerrainParams::default(),
        TerrainParams {
            friction: 0.6,
            rolling_resistance: 0.3,
            ..TerrainParams::default()
        },
    ];
    let seq = SequentialEvaluator.evaluate_batch(&problem, &candidates);
    for jobs in [1, 3] {
        let par = ParallelEvaluator::new(Some(jobs)).unwrap();
        assert_eq!(par.threads(), jobs);
        let got = par.evaluate_batch(&problem, &candidates);
        assert_eq!(got.len(), seq.len());
        for (a, b) in got.iter().zip(&seq) {
            assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            assert_eq!(a.peak_error.to_bits(), b.peak_error.to_bits());
            assert_eq!(a.avg_error.to_bits(), b.avg_error.to_bits());
        }
    }
    assert_eq!(seq[0].objective, 0.0);
}

#[test]
fn parallel_dig_cycle_matches_sequential() {
    let problem = problem();
    let par = ParallelEvaluator::new(Some(2)).unwrap();
    let got = par.run_dig_cycle(&problem.scenario, &TerrainParams::default()).unwrap();
    assert_eq!(got, problem.measured);
}

#[test]
fn failures_are_reported_per_candidate() {
    let mut problem = problem();
    problem.scenario.blowup_speed = 1e-9;
    let par = ParallelEvaluator::new(Some(2)).unwrap();
    let got = par.evaluate_batch(&problem, &[TerrainParams::default()]);
    assert!(got[0].failure.is_some());
    assert_eq!(got[0].objective, f64::INFINITY);
}
