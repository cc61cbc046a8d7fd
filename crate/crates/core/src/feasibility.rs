//! Constraint predicates: the Grashof condition and the point-ordering rule.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::kinematics::BarLengths;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub grashof_ok: bool,
    pub sequence_ok: bool,
    pub grashof_violation: f64,
}

impl ConstraintReport {
    pub fn new(bars: &BarLengths, theta1_list: &[f64]) -> Self {
        Self {
            grashof_ok: grashof_satisfied(bars),
            sequence_ok: sequence_satisfied(theta1_list),
            grashof_violation: grashof_violation(bars),
        }
    }

    pub fn feasible(&self) -> bool {
        self.grashof_ok && self.sequence_ok
    }
}

/// Lengths sorted ascending: `[s, p, q, l]`.
pub(crate) fn sorted(bars: &BarLengths) -> [f64; 4] {
    let mut a = bars.to_array();
    a.sort_by(f64::total_cmp);
    a
}

/// Strict Grashof condition `s + l < p + q`, independent of link labels.
pub fn grashof_satisfied(bars: &BarLengths) -> bool {
    let [s, p, q, l] = sorted(bars);
    if !(s > 0.0) || !l.is_finite() {
        return false;
    }
    s + l < p + q
}

/// `max(0, s + l − p − q)`.
pub fn grashof_violation(bars: &BarLengths) -> f64 {
    let [s, p, q, l] = sorted(bars);
    (s + l - p - q).max(0.0)
}

/// Whether the crank angles are visited in one rotational direction within
/// a single revolution.
///
/// With `δᵢ = (θᵢ₊₁ − θᵢ) mod 2π` the list is ordered counter-clockwise when
/// `Σδᵢ < 2π`; clockwise order is the same test on the reversed list.
pub fn sequence_satisfied(theta1_list: &[f64]) -> bool {
    if theta1_list.len() < 2 {
        return true;
    }
    let ccw = |it: &mut dyn Iterator<Item = (f64, f64)>| -> bool {
        it.map(|(a, b)| (b - a).rem_euclid(TAU)).sum::<f64>() < TAU
    };
    let fwd = &mut theta1_list.windows(2).map(|w| (w[0], w[1]));
    if ccw(fwd) {
        return true;
    }
    let rev = &mut theta1_list.windows(2).rev().map(|w| (w[1], w[0]));
    ccw(rev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn grashof_examples() {
        assert!(grashof_satisfied(&BarLengths::new(40.061, 10.785, 24.47, 43.887)));
        assert!(!grashof_satisfied(&BarLengths::new(1.0, 1.0, 1.0, 1.0)));
        assert!(!grashof_satisfied(&BarLengths::new(3.0, 1.5, 1.2, 1.0)));
        assert!(!grashof_satisfied(&BarLengths::new(0.0, 1.5, 1.2, 1.0)));
        assert!(!grashof_satisfied(&BarLengths::new(-1.0, 1.5, 1.2, 1.0)));
    }

    #[test]
    fn violation_examples() {
        assert!((grashof_violation(&BarLengths::new(3.0, 1.5, 1.2, 1.0)) - 1.3).abs() < 1e-12);
        assert_eq!(grashof_violation(&BarLengths::new(4.0, 2.0, 3.0, 2.0)), 1.0);
        // exact boundary: zero violation, yet the strict predicate fails
        let boundary = BarLengths::new(2.0, 3.0, 4.0, 3.0);
        assert_eq!(grashof_violation(&boundary), 0.0);
        assert!(!grashof_satisfied(&boundary));
        assert_eq!(
            grashof_violation(&BarLengths::new(40.061, 10.785, 24.47, 43.887)),
            0.0
        );
    }

    #[test]
    fn sequence_examples() {
        assert!(sequence_satisfied(&[
            1.9659, 2.5047, 2.9448, 3.3791, 3.8469, 4.3841
        ]));
        assert!(sequence_satisfied(&[0.0, FRAC_PI_2, PI]));
        // clockwise order
        assert!(sequence_satisfied(&[
            4.6127, 3.8929, 3.36, 2.8914, 2.4015, 1.6726
        ]));
        // wrapping through zero
        assert!(sequence_satisfied(&[5.5, 6.0, 0.2, 1.0]));
        assert!(!sequence_satisfied(&[1.0, 3.0, 2.0, 4.0]));
        // any three distinct angles lie in cyclic order one way or the other
        assert!(sequence_satisfied(&[1.0, 3.0, 2.0]));
        assert!(sequence_satisfied(&[0.4]));
    }

    #[test]
    fn full_turn_is_not_ordered() {
        assert!(!sequence_satisfied(&[0.0, PI, TAU]));
        assert!(!sequence_satisfied(&[0.0, 2.0, 4.0, 6.0, 1.0]));
    }

    #[test]
    fn report_matches_predicates() {
        let r = ConstraintReport::new(&BarLengths::new(3.0, 1.5, 1.2, 1.0), &[0.0, 1.0]);
        assert!(!r.grashof_ok && r.sequence_ok && !r.feasible());
        assert!(r.grashof_violation > 0.0);
    }
}
