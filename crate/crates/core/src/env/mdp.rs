use serde::{Deserialize, Serialize};

use super::EnvError;

/// Lower end of the action interval.
pub const ACTION_MIN: f64 = 0.8;
/// Upper end of the action interval.
pub const ACTION_MAX: f64 = 1.5;

/// Time unit in which `x1` and `x2` are presented to expressions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[serde(rename = "s")]
    Seconds,
    #[default]
    #[serde(rename = "ms")]
    Milliseconds,
}

impl Units {
    /// Multiplier from seconds to this unit.
    pub fn per_second(self) -> f64 {
        match self {
            Units::Seconds => 1.0,
            Units::Milliseconds => 1e3,
        }
    }

    pub fn parse(s: &str) -> Option<Units> {
        match s {
            "s" => Some(Units::Seconds),
            "ms" => Some(Units::Milliseconds),
            _ => None,
        }
    }
}

/// What a sender sees at the end of a control window. Times are in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Current intersend time.
    pub x1: f64,
    /// Window-average RTT.
    pub x2: f64,
    /// `x2` over the minimum RTT observed so far.
    pub x3: f64,
    /// Losses over packets sent in the window.
    pub x4: f64,
}

impl Observation {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Result<Self, EnvError> {
        let obs = Self { x1, x2, x3, x4 };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let ok = [self.x1, self.x2, self.x3, self.x4]
            .iter()
            .all(|v| v.is_finite())
            && self.x1 > 0.0
            && self.x2 > 0.0
            && self.x3 >= 1.0
            && (0.0..=1.0).contains(&self.x4);
        if ok {
            Ok(())
        } else {
            Err(EnvError::InvalidObservation(*self))
        }
    }

    /// Expression inputs with times converted to `units`.
    pub fn to_vars(&self, units: Units) -> [f64; 4] {
        let k = units.per_second();
        [self.x1 * k, self.x2 * k, self.x3, self.x4]
    }

    pub fn from_vars(vars: [f64; 4], units: Units) -> Self {
        let k = units.per_second();
        Self {
            x1: vars[0] / k,
            x2: vars[1] / k,
            x3: vars[2],
            x4: vars[3],
        }
    }
}

/// Multiplicative rate change in `[0.8, 1.5]`; `a > 1` speeds the sender up.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ActionValue(f64);

impl ActionValue {
    pub const NEUTRAL: ActionValue = ActionValue(1.0);

    pub fn new(a: f64) -> Result<Self, EnvError> {
        if (ACTION_MIN..=ACTION_MAX).contains(&a) {
            Ok(Self(a))
        } else {
            Err(EnvError::ActionOutOfRange(a))
        }
    }

    /// Clamps into the action interval. NaN maps to the neutral action.
    pub fn clamped(a: f64) -> Self {
        if a.is_nan() {
            return Self::NEUTRAL;
        }
        Self(a.clamp(ACTION_MIN, ACTION_MAX))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ActionValue {
    type Error = EnvError;

    fn try_from(a: f64) -> Result<Self, Self::Error> {
        Self::new(a)
    }
}

impl From<ActionValue> for f64 {
    fn from(a: ActionValue) -> f64 {
        a.0
    }
}

/// Clamp range for the intersend time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersendBounds {
    pub min: f64,
    pub max: f64,
}

impl IntersendBounds {
    pub const DEFAULT_MAX: f64 = 0.1;
}

/// `x1 ← x1 / a`, clamped to `bounds`.
pub fn apply_action(x1: f64, a: ActionValue, bounds: IntersendBounds) -> f64 {
    debug_assert!(x1 > 0.0);
    (x1 / a.get()).clamp(bounds.min, bounds.max)
}

/// Per-flow counters accumulated over one control window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub sent: u64,
    pub acks: u64,
    pub losses: u64,
    pub rtt_sum: f64,
}

impl WindowStats {
    pub fn mean_rtt(&self) -> Option<f64> {
        (self.acks > 0).then(|| self.rtt_sum / self.acks as f64)
    }
}

/// Builds the observation for a finished window.
///
/// Without ACKs in the window the previous average RTT is carried forward.
/// `x2` is floored at `min_rtt` so rounding in the average cannot push the
/// ratio below one.
pub fn build_observation(
    stats: &WindowStats,
    intersend: f64,
    min_rtt: f64,
    previous_rtt: f64,
) -> Observation {
    debug_assert!(min_rtt > 0.0);
    let x2 = stats.mean_rtt().unwrap_or(previous_rtt).max(min_rtt);
    let x3 = (x2 / min_rtt).max(1.0);
    let x4 = (stats.losses as f64 / stats.sent.max(1) as f64).min(1.0);
    Observation {
        x1: intersend,
        x2,
        x3,
        x4,
    }
}

/// `(lo, hi)` normalization range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, EnvError> {
        if lo.is_finite() && hi.is_finite() && hi > lo {
            Ok(Self { lo, hi })
        } else {
            Err(EnvError::InvalidBounds { lo, hi })
        }
    }

    /// Min-max normalization clipped to `[0, 1]`.
    pub fn normalize(&self, v: f64) -> f64 {
        ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

/// Normalization bounds of the reward terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    /// ACKed packets per window.
    pub acks: Bounds,
    /// Average RTT in seconds.
    pub rtt: Bounds,
    /// Lost packets per window.
    pub losses: Bounds,
}

impl RewardSpec {
    /// Scenario-derived defaults: `A = (0, window / serialization)`,
    /// `R = (c, 10c)`, `L = (0, 50)`.
    pub fn for_scenario(window: f64, bottleneck_serialization: f64, min_rtt: f64) -> Self {
        Self {
            acks: Bounds {
                lo: 0.0,
                hi: window / bottleneck_serialization,
            },
            rtt: Bounds {
                lo: min_rtt,
                hi: 10.0 * min_rtt,
            },
            losses: Bounds { lo: 0.0, hi: 50.0 },
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for b in [self.acks, self.rtt, self.losses] {
            Bounds::new(b.lo, b.hi)?;
        }
        Ok(())
    }
}

/// `η(acks, A) − η(rtt, R) − η(losses, L)`, always in `[-2, 1]`.
pub fn reward(acks: f64, avg_rtt: f64, losses: f64, spec: &RewardSpec) -> f64 {
    spec.acks.normalize(acks) - spec.rtt.normalize(avg_rtt) - spec.losses.normalize(losses)
}
