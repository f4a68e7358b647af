use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tree context of the token about to be sampled, as token-set indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepInput {
    pub parent: Option<u8>,
    pub sibling: Option<u8>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[default]
    Tabular,
    Recurrent,
}

/// Teacher-forced pass over one sequence.
#[derive(Clone, Debug, Default)]
pub struct Forward {
    /// `steps × token_count` logits, row-major.
    pub logits: Vec<f64>,
    /// Whatever the backward pass needs (hidden states for the RNN).
    pub cache: Vec<f64>,
}

/// An autoregressive distribution over next tokens with a flat parameter
/// vector. Masking and softmax are applied by the caller.
pub trait Controller: Send + Sync {
    fn kind(&self) -> ControllerKind;
    fn token_count(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Recurrent state at the start of a sequence.
    fn initial_state(&self) -> Vec<f64>;
    /// Writes next-token logits for `input` and advances `state`.
    fn step(&self, state: &mut [f64], input: StepInput, logits: &mut [f64]);
    fn forward(&self, inputs: &[StepInput]) -> Forward;
    /// Adds `∂J/∂params` to `grad` given `∂J/∂logits` for every step.
    fn backward(&self, inputs: &[StepInput], fwd: &Forward, dlogits: &[f64], grad: &mut [f64]);
}

pub fn build_controller(
    kind: ControllerKind,
    token_count: usize,
    hidden: usize,
    seed: u64,
) -> Box<dyn Controller> {
    match kind {
        ControllerKind::Tabular => Box::new(TabularController::new(token_count)),
        ControllerKind::Recurrent => Box::new(RecurrentController::new(token_count, hidden, seed)),
    }
}

fn slot(token: Option<u8>, n: usize) -> usize {
    token.map_or(n, usize::from)
}

/// One logit vector per (parent, sibling) pair, "none" included.
#[derive(Clone, Debug)]
pub struct TabularController {
    n: usize,
    logits: Vec<f64>,
}

impl TabularController {
    pub fn new(token_count: usize) -> Self {
        let ctx = (token_count + 1) * (token_count + 1);
        Self {
            n: token_count,
            logits: vec![0.0; ctx * token_count],
        }
    }

    fn offset(&self, input: StepInput) -> usize {
        let ctx = slot(input.parent, self.n) * (self.n + 1) + slot(input.sibling, self.n);
        ctx * self.n
    }
}

impl Controller for TabularController {
    fn kind(&self) -> ControllerKind {
        ControllerKind::Tabular
    }

    fn token_count(&self) -> usize {
        self.n
    }

    fn params(&self) -> &[f64] {
        &self.logits
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    fn initial_state(&self) -> Vec<f64> {
        Vec::new()
    }

    fn step(&self, _state: &mut [f64], input: StepInput, logits: &mut [f64]) {
        let o = self.offset(input);
        logits.copy_from_slice(&self.logits[o..o + self.n]);
    }

    fn forward(&self, inputs: &[StepInput]) -> Forward {
        let mut logits = Vec::with_capacity(inputs.len() * self.n);
        for &input in inputs {
            let o = self.offset(input);
            logits.extend_from_slice(&self.logits[o..o + self.n]);
        }
        Forward {
            logits,
            cache: Vec::new(),
        }
    }

    fn backward(&self, inputs: &[StepInput], _fwd: &Forward, dlogits: &[f64], grad: &mut [f64]) {
        for (t, &input) in inputs.iter().enumerate() {
            let o = self.offset(input);
            for j in 0..self.n {
                grad[o + j] += dlogits[t * self.n + j];
            }
        }
    }
}

/// Elman network reading one-hot (parent, sibling) inputs:
/// `h_t = tanh(Wx x_t + Wh h_{t-1} + bh)`, `z_t = Wo h_t + bo`.
#[derive(Clone, Debug)]
pub struct RecurrentController {
    n: usize,
    hidden: usize,
    params: Vec<f64>,
}

struct Layout {
    wx: usize,
    wh: usize,
    bh: usize,
    wo: usize,
    bo: usize,
    end: usize,
}

impl RecurrentController {
    pub fn new(token_count: usize, hidden: usize, seed: u64) -> Self {
        let mut c = Self {
            n: token_count,
            hidden,
            params: Vec::new(),
        };
        let l = c.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (hidden as f64).sqrt();
        c.params = vec![0.0; l.end];
        for p in &mut c.params[l.wx..l.bh] {
            *p = rng.random_range(-scale..scale);
        }
        // zero output layer: uniform initial distribution, like the table
        c
    }

    fn input_width(&self) -> usize {
        2 * (self.n + 1)
    }

    fn layout(&self) -> Layout {
        let (h, i, n) = (self.hidden, self.input_width(), self.n);
        let wx = 0;
        let wh = wx + h * i;
        let bh = wh + h * h;
        let wo = bh + h;
        let bo = wo + n * h;
        Layout {
            wx,
            wh,
            bh,
            wo,
            bo,
            end: bo + n,
        }
    }

    fn cell(
        &self,
        l: &Layout,
        prev: &[f64],
        input: StepInput,
        next: &mut [f64],
        logits: &mut [f64],
    ) {
        let (h, iw, n) = (self.hidden, self.input_width(), self.n);
        let p = &self.params;
        let a = slot(input.parent, n);
        let b = n + 1 + slot(input.sibling, n);
        for r in 0..h {
            let mut s = p[l.bh + r] + p[l.wx + r * iw + a] + p[l.wx + r * iw + b];
            let row = &p[l.wh + r * h..l.wh + (r + 1) * h];
            s += row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>();
            next[r] = s.tanh();
        }
        for j in 0..n {
            let row = &p[l.wo + j * h..l.wo + (j + 1) * h];
            logits[j] = p[l.bo + j] + row.iter().zip(next.iter()).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

impl Controller for RecurrentController {
    fn kind(&self) -> ControllerKind {
        ControllerKind::Recurrent
    }

    fn token_count(&self) -> usize {
        self.n
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.hidden]
    }

    fn step(&self, state: &mut [f64], input: StepInput, logits: &mut [f64]) {
        let l = self.layout();
        let prev = state.to_vec();
        self.cell(&l, &prev, input, state, logits);
    }

    fn forward(&self, inputs: &[StepInput]) -> Forward {
        let (h, n) = (self.hidden, self.n);
        let l = self.layout();
        // cache[0..h] is h_0, then one block per step
        let mut cache = vec![0.0; (inputs.len() + 1) * h];
        let mut logits = vec![0.0; inputs.len() * n];
        for (t, &input) in inputs.iter().enumerate() {
            let (done, rest) = cache.split_at_mut((t + 1) * h);
            self.cell(
                &l,
                &done[t * h..],
                input,
                &mut rest[..h],
                &mut logits[t * n..(t + 1) * n],
            );
        }
        Forward { logits, cache }
    }

    fn backward(&self, inputs: &[StepInput], fwd: &Forward, dlogits: &[f64], grad: &mut [f64]) {
        let (h, iw, n) = (self.hidden, self.input_width(), self.n);
        let l = self.layout();
        let p = &self.params;
        let mut dh_next = vec![0.0; h];
        let mut da = vec![0.0; h];
        for t in (0..inputs.len()).rev() {
            let ht = &fwd.cache[(t + 1) * h..(t + 2) * h];
            let hprev = &fwd.cache[t * h..(t + 1) * h];
            let dz = &dlogits[t * n..(t + 1) * n];
            let mut dh = dh_next.clone();
            for j in 0..n {
                if dz[j] == 0.0 {
                    continue;
                }
                grad[l.bo + j] += dz[j];
                for r in 0..h {
                    grad[l.wo + j * h + r] += dz[j] * ht[r];
                    dh[r] += p[l.wo + j * h + r] * dz[j];
                }
            }
            for r in 0..h {
                da[r] = dh[r] * (1.0 - ht[r] * ht[r]);
            }
            let a = slot(inputs[t].parent, n);
            let b = n + 1 + slot(inputs[t].sibling, n);
            for r in 0..h {
                grad[l.bh + r] += da[r];
                grad[l.wx + r * iw + a] += da[r];
                grad[l.wx + r * iw + b] += da[r];
                for c in 0..h {
                    grad[l.wh + r * h + c] += da[r] * hprev[c];
                }
            }
            for c in 0..h {
                dh_next[c] = (0..h).map(|r| p[l.wh + r * h + c] * da[r]).sum();
            }
        }
    }
}
