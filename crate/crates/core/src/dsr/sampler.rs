use rand::Rng;

use super::controller::{Controller, StepInput};
use crate::expr::{ExprTree, Token, TokenSet};

/// A sampled sequence with everything needed to replay its likelihood.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sample {
    /// Token-set indices in pre-order.
    pub tokens: Vec<u8>,
    pub inputs: Vec<StepInput>,
    /// Bit `j` set when token `j` was allowed at that step.
    pub masks: Vec<u32>,
}

impl Sample {
    pub fn to_tokens(&self, set: &TokenSet) -> Vec<Token> {
        self.tokens
            .iter()
            .map(|&i| set.tokens()[i as usize])
            .collect()
    }

    pub fn tree(&self, set: &TokenSet) -> ExprTree {
        ExprTree::parse_preorder(&self.to_tokens(set)).expect("sampler emits complete sequences")
    }
}

/// Tokens whose shortest completion still fits in `max_length`, given
/// `len` tokens emitted and `deficit` open child slots.
pub fn allowed_mask(arities: &[usize], len: usize, deficit: usize, max_length: usize) -> u32 {
    let mut mask = 0u32;
    for (j, &k) in arities.iter().enumerate() {
        if len + deficit + k <= max_length {
            mask |= 1 << j;
        }
    }
    mask
}

struct Open {
    token: u8,
    arity: usize,
    filled: usize,
    first_child: Option<u8>,
}

/// Tracks parent and sibling of the next token during a pre-order walk.
pub struct ContextTracker<'a> {
    arities: &'a [usize],
    stack: Vec<Open>,
}

impl<'a> ContextTracker<'a> {
    pub fn new(arities: &'a [usize]) -> Self {
        Self {
            arities,
            stack: Vec::new(),
        }
    }

    pub fn current(&self) -> StepInput {
        match self.stack.last() {
            None => StepInput::default(),
            Some(top) => StepInput {
                parent: Some(top.token),
                sibling: if top.filled > 0 {
                    top.first_child
                } else {
                    None
                },
            },
        }
    }

    pub fn push(&mut self, token: u8) {
        if let Some(top) = self.stack.last_mut() {
            if top.filled == 0 {
                top.first_child = Some(token);
            }
            top.filled += 1;
        }
        let arity = self.arities[token as usize];
        if arity > 0 {
            self.stack.push(Open {
                token,
                arity,
                filled: 0,
                first_child: None,
            });
        } else {
            while self.stack.last().is_some_and(|t| t.filled == t.arity) {
                self.stack.pop();
            }
        }
    }
}

/// Writes the masked softmax of `logits` into `probs`.
pub fn masked_softmax(logits: &[f64], mask: u32, probs: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for (j, &z) in logits.iter().enumerate() {
        if mask & (1 << j) != 0 {
            max = max.max(z);
        }
    }
    let mut sum = 0.0;
    for (j, (&z, p)) in logits.iter().zip(probs.iter_mut()).enumerate() {
        *p = if mask & (1 << j) != 0 {
            (z - max).exp()
        } else {
            0.0
        };
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
}

/// Draws one complete pre-order sequence of at most `max_length` tokens.
pub fn sample_expression<R: Rng + ?Sized>(
    controller: &dyn Controller,
    arities: &[usize],
    max_length: usize,
    rng: &mut R,
) -> Sample {
    debug_assert!(max_length >= 1);
    let n = controller.token_count();
    let mut state = controller.initial_state();
    let mut logits = vec![0.0; n];
    let mut probs = vec![0.0; n];
    let mut tracker = ContextTracker::new(arities);
    let mut sample = Sample {
        tokens: Vec::new(),
        inputs: Vec::new(),
        masks: Vec::new(),
    };
    let mut deficit = 1usize;
    while deficit > 0 {
        let input = tracker.current();
        let mask = allowed_mask(arities, sample.tokens.len(), deficit, max_length);
        controller.step(&mut state, input, &mut logits);
        masked_softmax(&logits, mask, &mut probs);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for (j, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                pick = Some(j);
                acc += p;
                if u < acc {
                    break;
                }
            }
        }
        let j = pick.expect("at least one leaf is always allowed") as u8;
        tracker.push(j);
        sample.tokens.push(j);
        sample.inputs.push(input);
        sample.masks.push(mask);
        deficit = deficit - 1 + arities[j as usize];
    }
    sample
}
