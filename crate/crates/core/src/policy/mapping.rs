use serde::{Deserialize, Serialize};

use crate::env::{ActionValue, ACTION_MAX, ACTION_MIN};

/// Affine map from an expression's `[-1, 1]` output range onto the action
/// interval, clamping anything outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionMapping {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ActionMapping {
    fn default() -> Self {
        Self {
            lo: ACTION_MIN,
            hi: ACTION_MAX,
        }
    }
}

impl ActionMapping {
    pub fn map(&self, y: f64) -> ActionValue {
        ActionValue::clamped(self.map_raw(y))
    }

    /// Same as [`map`](Self::map) but without the `ActionValue` wrapper.
    pub fn map_raw(&self, y: f64) -> f64 {
        let y = if y.is_nan() { 0.0 } else { y.clamp(-1.0, 1.0) };
        self.lo + 0.5 * (self.hi - self.lo) * (y + 1.0)
    }

    /// Pre-image of an action inside `[lo, hi]`.
    pub fn inverse(&self, a: f64) -> f64 {
        2.0 * (a - self.lo) / (self.hi - self.lo) - 1.0
    }
}

/// Convenience for the default mapping.
pub fn map_to_action(y: f64) -> ActionValue {
    ActionMapping::default().map(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_interior() {
        assert_eq!(map_to_action(-1.0).get(), 0.8);
        assert_eq!(map_to_action(1.0).get(), 1.5);
        assert_eq!(map_to_action(-7.0).get(), 0.8);
        assert_eq!(map_to_action(3.0).get(), 1.5);
        // n(cos 2) = 0.8 + 0.35 * (1 + cos 2)
        let a = map_to_action(2f64.cos()).get();
        assert!((a - 1.004_348_607_208_500_2).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trips() {
        let m = ActionMapping::default();
        for a in [0.8, 1.0, 1.15, 1.5] {
            assert!((m.map_raw(m.inverse(a)) - a).abs() < 1e-15);
        }
        assert!((m.inverse(1.0) - (-0.428_571_428_571_428_5)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn monotone_and_bounded(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (na, nb) = (map_to_action(lo).get(), map_to_action(hi).get());
            prop_assert!(na <= nb);
            prop_assert!((0.8..=1.5).contains(&na) && (0.8..=1.5).contains(&nb));
        }
    }
}
