use crate::env::{ActionValue, Observation};

use super::{Policy, PolicyError};

/// Stand-in teacher with a fixed piecewise rule:
///
/// ```text
/// x4 > 0  or  x3 >= theta      -> decrease
/// x3 <= 1 + delta              -> increase
/// otherwise                    -> hold
/// ```
///
/// The decrease branch is checked first, so `x3 == theta` decreases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScriptedExpert {
    pub delta: f64,
    pub theta: f64,
    pub increase: f64,
    pub hold: f64,
    pub decrease: f64,
}

impl Default for ScriptedExpert {
    fn default() -> Self {
        Self {
            delta: 0.5,
            theta: 3.0,
            increase: 1.5,
            hold: 1.0,
            decrease: 0.8,
        }
    }
}

impl ScriptedExpert {
    pub fn action(&self, obs: &Observation) -> ActionValue {
        let a = if obs.x4 > 0.0 || obs.x3 >= self.theta {
            self.decrease
        } else if obs.x3 <= 1.0 + self.delta {
            self.increase
        } else {
            self.hold
        };
        ActionValue::clamped(a)
    }
}

impl Policy for ScriptedExpert {
    fn act(&mut self, obs: &Observation) -> Result<ActionValue, PolicyError> {
        Ok(self.action(obs))
    }
}
