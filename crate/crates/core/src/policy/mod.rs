//! Policies: closed-form symbolic policies, a scripted AIMD-style teacher, a
//! constant-action sender and a bridge to externally served policies.

mod builtin;
mod external;
mod mapping;
mod scripted;

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use builtin::{BuiltinExpr, SP1, SP2, SP3};
pub use external::{ExternalPolicy, ExternalSpec};
pub use mapping::{map_to_action, ActionMapping};
pub use scripted::ScriptedExpert;

use crate::env::{ActionValue, Observation, Units, ACTION_MAX, ACTION_MIN};
use crate::expr::{ExprError, ExprTree, TokenSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("action {0} outside [0.8, 1.5]")]
    Range(f64),
    #[error("policy endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("unknown policy `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A deterministic map from observations to actions.
pub trait Policy {
    fn act(&mut self, obs: &Observation) -> Result<ActionValue, PolicyError>;
}

/// `n(expr(x))` with `x1`, `x2` presented in `units`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicPolicy {
    pub expr: ExprTree,
    pub mapping: ActionMapping,
    pub units: Units,
}

impl SymbolicPolicy {
    pub fn new(expr: ExprTree, units: Units) -> Self {
        Self {
            expr,
            mapping: ActionMapping::default(),
            units,
        }
    }

    pub fn builtin(which: BuiltinExpr, units: Units) -> Self {
        Self::new(which.tree(), units)
    }

    /// Raw expression output before mapping.
    pub fn raw(&self, obs: &Observation) -> f64 {
        self.expr.evaluate(&obs.to_vars(self.units))
    }

    pub fn action(&self, obs: &Observation) -> ActionValue {
        self.mapping.map(self.raw(obs))
    }
}

impl Policy for SymbolicPolicy {
    fn act(&mut self, obs: &Observation) -> Result<ActionValue, PolicyError> {
        Ok(self.action(obs))
    }
}

/// Always returns the same action. Used for calibration runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantPolicy(pub ActionValue);

impl Policy for ConstantPolicy {
    fn act(&mut self, _obs: &Observation) -> Result<ActionValue, PolicyError> {
        Ok(self.0)
    }
}

/// Serializable description of a policy, resolvable into a live [`Policy`].
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyHandle {
    Symbolic(SymbolicPolicy),
    ScriptedExpert(ScriptedExpert),
    External(ExternalSpec),
    Constant(ActionValue),
}

impl PolicyHandle {
    /// Resolves a name: `sp1`, `sp2`, `sp3`, `scripted-expert`,
    /// `constant:<a>`, or an infix expression over `x1..x4`.
    pub fn from_name(name: &str, units: Units) -> Result<Self, PolicyError> {
        let name = name.trim();
        if let Some(b) = BuiltinExpr::from_name(name) {
            return Ok(Self::Symbolic(SymbolicPolicy::builtin(b, units)));
        }
        if name == "scripted-expert" {
            return Ok(Self::ScriptedExpert(ScriptedExpert::default()));
        }
        if let Some(a) = name.strip_prefix("constant:") {
            let a: f64 = a
                .parse()
                .map_err(|_| PolicyError::Unknown(name.to_string()))?;
            let a = ActionValue::new(a).map_err(|_| PolicyError::Range(a))?;
            return Ok(Self::Constant(a));
        }
        let expr = ExprTree::parse_infix(name, &TokenSet::regression())?;
        Ok(Self::Symbolic(SymbolicPolicy::new(expr, units)))
    }

    pub fn describe(&self) -> String {
        match self {
            PolicyHandle::Symbolic(p) => p.expr.to_infix(),
            PolicyHandle::ScriptedExpert(_) => "scripted-expert".into(),
            PolicyHandle::External(spec) => format!("external:{}", spec.command.join(" ")),
            PolicyHandle::Constant(a) => format!("constant:{}", a.get()),
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicPolicy> {
        match self {
            PolicyHandle::Symbolic(p) => Some(p),
            _ => None,
        }
    }

    /// Instantiates the policy. External handles spawn their process here.
    pub fn build(&self) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            PolicyHandle::Symbolic(p) => Box::new(p.clone()),
            PolicyHandle::ScriptedExpert(p) => Box::new(*p),
            PolicyHandle::External(spec) => Box::new(ExternalPolicy::spawn(spec)?),
            PolicyHandle::Constant(a) => Box::new(ConstantPolicy(*a)),
        })
    }
}

/// What an agent did in a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Action applied to the intersend time.
    pub executed: ActionValue,
    /// Action the underlying policy proposed for this state.
    pub proposed: ActionValue,
}

/// Per-flow decision maker driven by the simulator at every window tick.
pub trait Agent {
    fn decide(&mut self, flow: usize, obs: &Observation) -> Result<Decision, PolicyError>;
}

/// Every flow follows the same policy.
pub struct SharedPolicy {
    policy: Box<dyn Policy>,
}

impl SharedPolicy {
    pub fn new(policy: Box<dyn Policy>) -> Self {
        Self { policy }
    }

    pub fn from_handle(handle: &PolicyHandle) -> Result<Self, PolicyError> {
        Ok(Self::new(handle.build()?))
    }
}

impl Agent for SharedPolicy {
    fn decide(&mut self, _flow: usize, obs: &Observation) -> Result<Decision, PolicyError> {
        let a = self.policy.act(obs)?;
        Ok(Decision {
            executed: a,
            proposed: a,
        })
    }
}

/// One policy per flow.
pub struct PerFlowPolicies {
    policies: Vec<Box<dyn Policy>>,
}

impl PerFlowPolicies {
    pub fn new(policies: Vec<Box<dyn Policy>>) -> Self {
        Self { policies }
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }
}

impl Agent for PerFlowPolicies {
    fn decide(&mut self, flow: usize, obs: &Observation) -> Result<Decision, PolicyError> {
        let policy = self
            .policies
            .get_mut(flow)
            .ok_or_else(|| PolicyError::Unavailable(format!("no policy bound to flow {flow}")))?;
        let a = policy.act(obs)?;
        Ok(Decision {
            executed: a,
            proposed: a,
        })
    }
}

/// Executes a uniform random action with probability `epsilon`, the
/// expert's otherwise. The expert is queried every time so its proposal is
/// always available as a label.
pub struct EpsilonGreedy {
    expert: Box<dyn Policy>,
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl EpsilonGreedy {
    pub fn new(expert: Box<dyn Policy>, epsilon: f64, seed: u64) -> Self {
        debug_assert!((0.0..=1.0).contains(&epsilon));
        Self {
            expert,
            epsilon,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for EpsilonGreedy {
    fn decide(&mut self, _flow: usize, obs: &Observation) -> Result<Decision, PolicyError> {
        let proposed = self.expert.act(obs)?;
        // Both draws happen every step so the stream does not depend on ε.
        let explore = self.rng.random::<f64>() < self.epsilon;
        let random = self.rng.random_range(ACTION_MIN..=ACTION_MAX);
        let executed = if explore {
            ActionValue::clamped(random)
        } else {
            proposed
        };
        Ok(Decision { executed, proposed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_obs() -> Observation {
        Observation::new(1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn builtin_actions_at_unit_point() {
        // inputs already in the expression's units
        let obs = unit_obs();
        let a1 = SymbolicPolicy::builtin(BuiltinExpr::Sp1, Units::Seconds).action(&obs);
        let a2 = SymbolicPolicy::builtin(BuiltinExpr::Sp2, Units::Seconds).action(&obs);
        let a3 = SymbolicPolicy::builtin(BuiltinExpr::Sp3, Units::Seconds).action(&obs);
        assert!((a1.get() - 1.004_348_607_208_500_2).abs() < 1e-12);
        assert!((a2.get() - 1.222_439_140_387_182_2).abs() < 1e-12);
        assert_eq!(a1, a3);
    }

    #[test]
    fn millisecond_units_scale_times() {
        let p = SymbolicPolicy::builtin(BuiltinExpr::Sp1, Units::Milliseconds);
        let obs = Observation::new(1e-3, 1e-3, 1.0, 0.0).unwrap();
        assert!((p.raw(&obs) - 2f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn handles_resolve_by_name() {
        let u = Units::Milliseconds;
        assert!(matches!(
            PolicyHandle::from_name("sp1", u),
            Ok(PolicyHandle::Symbolic(_))
        ));
        assert!(matches!(
            PolicyHandle::from_name("scripted-expert", u),
            Ok(PolicyHandle::ScriptedExpert(_))
        ));
        assert!(matches!(
            PolicyHandle::from_name("constant:1.0", u),
            Ok(PolicyHandle::Constant(a)) if a.get() == 1.0
        ));
        let h = PolicyHandle::from_name("cos(x2)", u).unwrap();
        assert_eq!(h.describe(), "cos(x2)");
        assert!(PolicyHandle::from_name("constant:3", u).is_err());
        assert!(PolicyHandle::from_name("x9", u).is_err());
    }

    #[test]
    fn epsilon_zero_executes_expert() {
        let mut agent = EpsilonGreedy::new(Box::new(ScriptedExpert::default()), 0.0, 7);
        let mut expert = ScriptedExpert::default();
        for x3 in [1.0, 1.05, 1.5, 3.0, 10.0] {
            let obs = Observation::new(1e-4, 1e-4 * x3, x3, 0.0).unwrap();
            let d = agent.decide(0, &obs).unwrap();
            assert_eq!(d.executed, d.proposed);
            assert_eq!(d.proposed, expert.act(&obs).unwrap());
        }
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let mut agent = EpsilonGreedy::new(Box::new(ConstantPolicy(ActionValue::NEUTRAL)), 1.0, 11);
        let obs = unit_obs();
        let n = 5000;
        let mean = (0..n)
            .map(|_| agent.decide(0, &obs).unwrap().executed.get())
            .sum::<f64>()
            / n as f64;
        // uniform on [0.8, 1.5]: mean 1.15, sd of the mean 0.202/sqrt(5000) ≈ 0.0029
        assert!((mean - 1.15).abs() < 0.01, "mean {mean}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn symbolic_actions_stay_in_range(
            x1 in 1e-7f64..1.0, x2 in 1e-6f64..1.0, x3 in 1.0f64..100.0, x4 in 0.0f64..=1.0,
        ) {
            let obs = Observation::new(x1, x2, x3, x4).unwrap();
            for b in [BuiltinExpr::Sp1, BuiltinExpr::Sp2, BuiltinExpr::Sp3] {
                let a = SymbolicPolicy::builtin(b, Units::Milliseconds).action(&obs).get();
                prop_assert!((0.8..=1.5).contains(&a));
            }
        }

        #[test]
        fn sp1_and_sp2_ignore_losses(
            x1 in 1e-3f64..10.0, x2 in 1e-3f64..10.0, x3 in 1.0f64..50.0,
            x4 in 0.0f64..=1.0, x4b in 0.0f64..=1.0,
        ) {
            for b in [BuiltinExpr::Sp1, BuiltinExpr::Sp2] {
                let t = b.tree();
                let v = t.evaluate(&[x1, x2, x3, x4]);
                let w = t.evaluate(&[x1, x2, x3, x4b]);
                prop_assert_eq!(v.to_bits(), w.to_bits());
            }
        }
    }

    #[test]
    fn sp3_reacts_to_losses() {
        let t = BuiltinExpr::Sp3.tree();
        let a = t.evaluate(&[0.3, 0.5, 2.0, 0.0]);
        let b = t.evaluate(&[0.3, 0.5, 2.0, 0.5]);
        assert_ne!(a, b);
    }
}
