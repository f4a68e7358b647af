//! Deep symbolic regression: a learned autoregressive distribution over
//! pre-order token sequences, trained with a risk-seeking policy gradient to
//! produce expressions that fit a dataset.

mod controller;
mod fitness;
mod hof;
mod planted;
mod sampler;
mod train;

use std::collections::HashMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use controller::{
    build_controller, Controller, ControllerKind, Forward, RecurrentController, StepInput,
    TabularController,
};
pub use fitness::{fitness_from_nrmse, FitnessData, TargetMode};
pub use hof::{HallOfFame, HofEntry};
pub use planted::{recover_planted, PlantedProtocol, RecoveryOutcome};
pub use sampler::{allowed_mask, masked_softmax, sample_expression, ContextTracker, Sample};
pub use train::{elite_count, train_step, Adam, TrainStats};

use crate::env::Units;
use crate::expr::{ExprError, Token, TokenSet, DEFAULT_MAX_LENGTH};

#[derive(Debug, thiserror::Error)]
pub enum DsrError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("label variance is zero; fitness is undefined")]
    DegenerateDataset,
    #[error("feature columns and labels differ in length")]
    Shape,
    #[error("invalid `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn regression_symbols() -> Vec<String> {
    TokenSet::regression()
        .tokens()
        .iter()
        .map(|t| t.symbol().to_string())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionConfig {
    /// Token symbols available to the sampler.
    pub tokens: Vec<String>,
    pub max_length: usize,
    pub batch_size: usize,
    /// Fraction of each batch that drives the update.
    pub risk_quantile: f64,
    pub learning_rate: f64,
    /// Training steps after the initial batch.
    pub max_iterations: usize,
    pub entropy_weight: f64,
    pub seed: u64,
    pub controller: ControllerKind,
    /// Hidden width of the recurrent controller.
    pub hidden_size: usize,
    /// Stop once this much wall-clock time has passed.
    pub time_budget_s: Option<f64>,
    /// Stop once the best fitness reaches this value.
    pub stop_fitness: Option<f64>,
    pub hall_of_fame_size: usize,
    pub target: TargetMode,
    /// Units in which `x1` and `x2` are fed to expressions.
    pub units: Units,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            tokens: regression_symbols(),
            max_length: DEFAULT_MAX_LENGTH,
            batch_size: 500,
            risk_quantile: 0.05,
            learning_rate: 0.05,
            max_iterations: 200,
            entropy_weight: 0.005,
            seed: 0,
            controller: ControllerKind::Tabular,
            hidden_size: 32,
            time_budget_s: None,
            stop_fitness: None,
            hall_of_fame_size: 20,
            target: TargetMode::Action,
            units: Units::Milliseconds,
        }
    }
}

impl RegressionConfig {
    pub fn token_set(&self) -> Result<TokenSet, DsrError> {
        let mut tokens = Vec::with_capacity(self.tokens.len());
        for s in &self.tokens {
            let t = Token::from_symbol(s).ok_or_else(|| DsrError::Config {
                field: "tokens",
                reason: format!("unknown symbol `{s}`"),
            })?;
            tokens.push(t);
        }
        Ok(TokenSet::new(tokens)?)
    }

    pub fn validate(&self) -> Result<(), DsrError> {
        let bad = |field, reason: String| Err(DsrError::Config { field, reason });
        let set = self.token_set()?;
        if set.len() > 32 {
            return bad("tokens", "at most 32 distinct tokens".into());
        }
        if self.max_length == 0 {
            return bad("max_length", "must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1".into());
        }
        if !(self.risk_quantile > 0.0 && self.risk_quantile < 1.0) {
            return bad(
                "risk_quantile",
                format!("must lie in (0, 1), got {}", self.risk_quantile),
            );
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(
                "learning_rate",
                format!("must be positive, got {}", self.learning_rate),
            );
        }
        if !(self.entropy_weight.is_finite() && self.entropy_weight >= 0.0) {
            return bad(
                "entropy_weight",
                format!("must be non-negative, got {}", self.entropy_weight),
            );
        }
        if self.controller == ControllerKind::Recurrent && self.hidden_size == 0 {
            return bad("hidden_size", "must be at least 1".into());
        }
        if self.hall_of_fame_size == 0 {
            return bad("hall_of_fame_size", "must be at least 1".into());
        }
        if let Some(t) = self.time_budget_s {
            if !(t.is_finite() && t > 0.0) {
                return bad("time_budget_s", format!("must be positive, got {t}"));
            }
        }
        Ok(())
    }
}

/// One line of the training curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub quantile: f64,
    pub batch_best: f64,
    pub best_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub hall_of_fame: HallOfFame,
    pub curve: Vec<CurvePoint>,
    /// Why the run ended: `iterations`, `stop_fitness` or `time_budget`.
    pub stopped_by: String,
    pub expressions_evaluated: usize,
}

#[derive(Serialize)]
struct HofDocument<'a> {
    config: &'a RegressionConfig,
    stopped_by: &'a str,
    iterations: usize,
    entries: &'a [HofEntry],
    pareto_front: Vec<HofEntry>,
}

impl RegressionResult {
    pub fn best(&self) -> Option<&HofEntry> {
        self.hall_of_fame.best()
    }

    pub fn write_hall_of_fame<W: Write>(
        &self,
        cfg: &RegressionConfig,
        w: W,
    ) -> Result<(), DsrError> {
        let doc = HofDocument {
            config: cfg,
            stopped_by: &self.stopped_by,
            iterations: self.curve.len(),
            entries: self.hall_of_fame.entries(),
            pareto_front: self.hall_of_fame.pareto_front(),
        };
        serde_json::to_writer_pretty(w, &doc)?;
        Ok(())
    }

    pub fn write_curve<W: Write>(&self, w: W) -> Result<(), DsrError> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.curve {
            out.serialize(p)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads the `entries` of a hall-of-fame document.
pub fn read_hall_of_fame(json: &str) -> Result<Vec<HofEntry>, DsrError> {
    #[derive(Deserialize)]
    struct Doc {
        entries: Vec<HofEntry>,
    }
    Ok(serde_json::from_str::<Doc>(json)?.entries)
}

/// Samples, scores and trains until the iteration budget, the wall-clock
/// budget or the fitness target is hit. Deterministic in `cfg.seed` as long
/// as the wall-clock budget does not fire.
pub fn run_regression(
    data: &FitnessData,
    cfg: &RegressionConfig,
) -> Result<RegressionResult, DsrError> {
    cfg.validate()?;
    let set = cfg.token_set()?;
    let arities: Vec<usize> = set.tokens().iter().map(|t| t.arity()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut controller = build_controller(cfg.controller, set.len(), cfg.hidden_size, cfg.seed);
    let mut opt = Adam::new(controller.params().len(), cfg.learning_rate);
    let mut hof = HallOfFame::new(cfg.hall_of_fame_size);
    let mut cache: HashMap<Vec<u8>, f64> = HashMap::new();
    let mut curve = Vec::new();
    let budget = cfg.time_budget_s.map(Duration::from_secs_f64);
    let start = Instant::now();
    let mut stopped_by = "iterations";

    for iteration in 0..=cfg.max_iterations {
        let batch: Vec<Sample> = (0..cfg.batch_size)
            .map(|_| sample_expression(controller.as_ref(), &arities, cfg.max_length, &mut rng))
            .collect();

        let mut fresh: Vec<Vec<u8>> = batch
            .iter()
            .filter(|s| !cache.contains_key(&s.tokens))
            .map(|s| s.tokens.clone())
            .collect();
        fresh.sort();
        fresh.dedup();
        let scored: Vec<(Vec<u8>, f64)> = fresh
            .into_par_iter()
            .map(|toks| {
                let tree = Sample {
                    tokens: toks.clone(),
                    inputs: Vec::new(),
                    masks: Vec::new(),
                }
                .tree(&set);
                let f = data.fitness(&tree);
                (toks, f)
            })
            .collect();
        for (toks, f) in scored {
            let s = Sample {
                tokens: toks.clone(),
                inputs: Vec::new(),
                masks: Vec::new(),
            };
            hof.offer(HofEntry::from_tree(&s.tree(&set), f, iteration));
            cache.insert(toks, f);
        }
        let fitness: Vec<f64> = batch.iter().map(|s| cache[&s.tokens]).collect();

        let previous_best = curve.last().map_or(0.0, |p: &CurvePoint| p.best_fitness);
        let best = hof.best_fitness();
        assert!(best >= previous_best, "hall of fame lost its best entry");

        let last = iteration == cfg.max_iterations;
        let stats = if last {
            let k = elite_count(batch.len(), cfg.risk_quantile);
            let mut sorted = fitness.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            TrainStats {
                quantile: sorted[k - 1],
                batch_best: sorted[0],
                contributors: k,
                updated: false,
            }
        } else {
            train_step(
                controller.as_mut(),
                &mut opt,
                &batch,
                &fitness,
                cfg.risk_quantile,
                cfg.entropy_weight,
            )
        };
        curve.push(CurvePoint {
            iteration,
            quantile: stats.quantile,
            batch_best: stats.batch_best,
            best_fitness: best,
        });
        log::debug!(
            "iteration {iteration}: best {best:.6} batch {:.6} quantile {:.6}",
            stats.batch_best,
            stats.quantile
        );
        if cfg.stop_fitness.is_some_and(|t| best >= t) {
            stopped_by = "stop_fitness";
            break;
        }
        if budget.is_some_and(|b| start.elapsed() >= b) {
            stopped_by = "time_budget";
            break;
        }
    }
    Ok(RegressionResult {
        hall_of_fame: hof,
        curve,
        stopped_by: stopped_by.into(),
        expressions_evaluated: cache.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprTree;

    fn planted(expr: &str) -> FitnessData {
        let target = ExprTree::parse_infix(expr, &TokenSet::regression()).unwrap();
        let pts: Vec<[f64; 4]> = (0..200)
            .map(|i| {
                let t = i as f64;
                [
                    0.5 + (t * 0.37) % 3.0,
                    0.2 + (t * 0.91) % 4.0,
                    1.0 + (t * 0.13) % 2.0,
                    (t * 0.07) % 1.0,
                ]
            })
            .collect();
        FitnessData::planted(&target, &pts).unwrap()
    }

    fn small() -> RegressionConfig {
        RegressionConfig {
            batch_size: 100,
            max_iterations: 5,
            ..Default::default()
        }
    }

    #[test]
    fn zero_iterations_scores_initial_batch_only() {
        let cfg = RegressionConfig {
            max_iterations: 0,
            ..small()
        };
        let r = run_regression(&planted("cos(x2)"), &cfg).unwrap();
        assert_eq!(r.curve.len(), 1);
        assert!(r.hall_of_fame.entries().iter().all(|e| e.iteration == 0));
    }

    #[test]
    fn best_fitness_never_decreases() {
        let r = run_regression(&planted("x1 / x3 + x2"), &small()).unwrap();
        for w in r.curve.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
    }

    #[test]
    fn same_seed_same_hall_of_fame() {
        for controller in [ControllerKind::Tabular, ControllerKind::Recurrent] {
            let cfg = RegressionConfig {
                controller,
                hidden_size: 8,
                ..small()
            };
            let data = planted("x1 * x2");
            let a = run_regression(&data, &cfg).unwrap();
            let b = run_regression(&data, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let data = planted("x1");
        for cfg in [
            RegressionConfig {
                risk_quantile: 0.0,
                ..small()
            },
            RegressionConfig {
                batch_size: 0,
                ..small()
            },
            RegressionConfig {
                max_length: 0,
                ..small()
            },
            RegressionConfig {
                tokens: vec!["+".into(), "tan".into(), "x1".into()],
                ..small()
            },
        ] {
            assert!(matches!(
                run_regression(&data, &cfg),
                Err(DsrError::Config { .. })
            ));
        }
    }

    #[test]
    fn hall_of_fame_entries_round_trip() {
        let r = run_regression(&planted("cos(x2)"), &small()).unwrap();
        let set = TokenSet::regression();
        for e in r.hall_of_fame.entries() {
            let tree = e.tree(&set).unwrap();
            assert_eq!(tree.to_infix(), e.infix);
            assert_eq!(tree.len(), e.complexity);
        }
        let mut json = Vec::new();
        r.write_hall_of_fame(&small(), &mut json).unwrap();
        let back = read_hall_of_fame(std::str::from_utf8(&json).unwrap()).unwrap();
        assert_eq!(back, r.hall_of_fame.entries());
    }
}
