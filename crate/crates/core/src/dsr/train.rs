use serde::{Deserialize, Serialize};

use super::controller::Controller;
use super::sampler::{masked_softmax, Sample};

/// Adam on a flat parameter vector, climbing the objective.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] += self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Fitness of the weakest contributing sample.
    pub quantile: f64,
    pub batch_best: f64,
    pub contributors: usize,
    /// False when the gradient vanished and no step was taken.
    pub updated: bool,
}

/// Number of samples that make it into the update.
pub fn elite_count(batch: usize, risk_quantile: f64) -> usize {
    ((risk_quantile * batch as f64).ceil() as usize).clamp(1, batch.max(1))
}

/// One risk-seeking policy-gradient step: only the top `ceil(ε·N)` samples
/// contribute, weighted by how far their fitness exceeds the weakest of them,
/// plus an entropy bonus over the same samples.
pub fn train_step(
    controller: &mut dyn Controller,
    opt: &mut Adam,
    batch: &[Sample],
    fitness: &[f64],
    risk_quantile: f64,
    entropy_weight: f64,
) -> TrainStats {
    assert_eq!(batch.len(), fitness.len());
    let k = elite_count(batch.len(), risk_quantile);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    let elite = &order[..k];
    let quantile = fitness[elite[k - 1]];
    let batch_best = fitness[elite[0]];

    let n = controller.token_count();
    let mut grad = vec![0.0; controller.params().len()];
    let mut probs = vec![0.0; n];
    let scale = 1.0 / k as f64;
    let mut any = false;
    for &i in elite {
        let adv = fitness[i] - quantile;
        if adv == 0.0 && entropy_weight == 0.0 {
            continue;
        }
        let s = &batch[i];
        let fwd = controller.forward(&s.inputs);
        let mut dlogits = vec![0.0; fwd.logits.len()];
        for t in 0..s.tokens.len() {
            masked_softmax(&fwd.logits[t * n..(t + 1) * n], s.masks[t], &mut probs);
            let entropy: f64 = -probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * p.ln())
                .sum::<f64>();
            let d = &mut dlogits[t * n..(t + 1) * n];
            for j in 0..n {
                if probs[j] == 0.0 {
                    continue;
                }
                let onehot = if j == s.tokens[t] as usize { 1.0 } else { 0.0 };
                let pg = adv * (onehot - probs[j]);
                let ent = -probs[j] * (probs[j].ln() + entropy);
                d[j] = scale * (pg + entropy_weight * ent);
            }
        }
        controller.backward(&s.inputs, &fwd, &dlogits, &mut grad);
        any = true;
    }
    let updated = any && grad.iter().any(|&g| g != 0.0);
    if updated {
        opt.ascend(controller.params_mut(), &grad);
    }
    TrainStats {
        quantile,
        batch_best,
        contributors: k,
        updated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsr::controller::{build_controller, ControllerKind, TabularController};
    use crate::dsr::sampler::sample_expression;
    use crate::expr::TokenSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch(c: &dyn Controller, n: usize, seed: u64) -> Vec<Sample> {
        let ar: Vec<usize> = TokenSet::regression()
            .tokens()
            .iter()
            .map(|t| t.arity())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| sample_expression(c, &ar, 32, &mut rng))
            .collect()
    }

    fn log_prob(c: &dyn Controller, s: &Sample) -> f64 {
        let n = c.token_count();
        let fwd = c.forward(&s.inputs);
        let mut p = vec![0.0; n];
        (0..s.tokens.len())
            .map(|t| {
                masked_softmax(&fwd.logits[t * n..(t + 1) * n], s.masks[t], &mut p);
                p[s.tokens[t] as usize].ln()
            })
            .sum()
    }

    #[test]
    fn top_five_percent_of_five_hundred_is_twenty_five() {
        assert_eq!(elite_count(500, 0.05), 25);
        assert_eq!(elite_count(10, 0.05), 1);
    }

    #[test]
    fn flat_batch_leaves_parameters_unchanged() {
        for kind in [ControllerKind::Tabular, ControllerKind::Recurrent] {
            let mut c = build_controller(kind, 9, 8, 2);
            let before = c.params().to_vec();
            let b = batch(c.as_ref(), 50, 1);
            let mut opt = Adam::new(before.len(), 0.1);
            let stats = train_step(c.as_mut(), &mut opt, &b, &vec![0.4; 50], 0.05, 0.0);
            assert!(!stats.updated);
            assert_eq!(c.params(), &before[..]);
        }
    }

    #[test]
    fn update_favours_the_best_sample() {
        let mut c = TabularController::new(9);
        let b = batch(&c, 40, 4);
        let fit: Vec<f64> = (0..40)
            .map(|i| if i == 7 { 0.9 } else { 0.1 + i as f64 * 1e-3 })
            .collect();
        let before = log_prob(&c, &b[7]);
        let mut opt = Adam::new(c.params().len(), 0.05);
        let stats = train_step(&mut c, &mut opt, &b, &fit, 0.1, 0.0);
        assert_eq!(stats.contributors, 4);
        assert_eq!(stats.batch_best, 0.9);
        assert!(log_prob(&c, &b[7]) > before);
    }
}
