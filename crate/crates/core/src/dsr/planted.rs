//! Recovery check against a known generating expression.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{run_regression, DsrError, FitnessData, HofEntry, RegressionConfig, TargetMode};
use crate::expr::{ExprTree, TokenSet, VAR_COUNT};

/// How the noise-free dataset and the equivalence check are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedProtocol {
    pub rows: usize,
    /// Uniform sampling range of each variable.
    pub ranges: [(f64, f64); VAR_COUNT],
    pub data_seed: u64,
    /// Fresh points on which the winner must agree with the target.
    pub check_points: usize,
    /// Fitness must reach `1 - tolerance`; check points must agree to this
    /// relative tolerance.
    pub tolerance: f64,
}

impl Default for PlantedProtocol {
    fn default() -> Self {
        Self {
            rows: 1000,
            ranges: [(0.05, 2.0), (0.05, 6.0), (1.0, 10.0), (0.0, 0.5)],
            data_seed: 7,
            check_points: 1000,
            tolerance: 1e-9,
        }
    }
}

impl PlantedProtocol {
    pub fn points(&self, n: usize, seed: u64) -> Vec<[f64; VAR_COUNT]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| self.ranges.map(|(lo, hi)| rng.random_range(lo..=hi)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    pub seed: u64,
    pub recovered: bool,
    pub best: Option<HofEntry>,
    /// Largest relative disagreement with the target on the check points.
    pub max_check_error: f64,
    pub iterations: usize,
    pub elapsed_s: f64,
}

/// Runs the regression on data generated by `target` and checks whether the
/// top expression is equivalent on fresh points. `cfg` is used as given
/// except that the target is raw and the run stops at the fitness goal.
pub fn recover_planted(
    target: &ExprTree,
    protocol: &PlantedProtocol,
    cfg: &RegressionConfig,
) -> Result<RecoveryOutcome, DsrError> {
    let data = FitnessData::planted(target, &protocol.points(protocol.rows, protocol.data_seed))?;
    let goal = 1.0 - protocol.tolerance;
    let cfg = RegressionConfig {
        target: TargetMode::Raw,
        stop_fitness: Some(goal),
        ..cfg.clone()
    };
    let start = Instant::now();
    let result = run_regression(&data, &cfg)?;
    let elapsed_s = start.elapsed().as_secs_f64();
    let best = result.best().cloned();
    let check = protocol.points(protocol.check_points, protocol.data_seed.wrapping_add(1));
    let max_check_error = match &best {
        Some(e) => {
            let tree = e.tree(&TokenSet::regression())?;
            check
                .iter()
                .map(|p| {
                    let (got, want) = (tree.evaluate(p), target.evaluate(p));
                    (got - want).abs() / want.abs().max(1.0)
                })
                .fold(0.0, f64::max)
        }
        None => f64::INFINITY,
    };
    let fit = best.as_ref().map_or(0.0, |e| e.fitness);
    Ok(RecoveryOutcome {
        seed: cfg.seed,
        recovered: fit >= goal && max_check_error <= protocol.tolerance,
        best,
        max_check_error,
        iterations: result.curve.len(),
        elapsed_s,
    })
}
