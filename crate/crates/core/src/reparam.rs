//! Time reparametrizations: strictly increasing piecewise-linear surjections
//! of the real line fixing 0. These are the clocks a shadowing orbit is
//! allowed to run on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the inverse round-trip `h^-1(h(t)) = t`.
pub const REPARAM_INV_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ReparamError {
    #[error("anchors must be strictly increasing in both coordinates at index {0}")]
    NotMonotone(usize),
    #[error("a reparametrization must fix 0: no (0, 0) anchor present")]
    ZeroNotFixed,
    #[error("tail slopes must be positive and finite, got left = {left}, right = {right}")]
    BadTailSlope { left: f64, right: f64 },
    #[error("anchor coordinates must be finite at index {0}")]
    NonFinite(usize),
}

/// Piecewise-linear strictly increasing map of the line with `h(0) = 0`.
///
/// Defined by finitely many anchors `(t, h(t))` (always containing `(0, 0)`)
/// and two positive tail slopes, so it is a bijection of the whole line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reparam {
    anchors: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
}

impl Reparam {
    pub fn identity() -> Self {
        Reparam {
            anchors: vec![(0.0, 0.0)],
            left_slope: 1.0,
            right_slope: 1.0,
        }
    }

    /// Validating constructor. `anchors` must be sorted, strictly increasing
    /// in both coordinates, and contain `(0.0, 0.0)` exactly.
    pub fn from_anchors(
        anchors: Vec<(f64, f64)>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self, ReparamError> {
        if !(left_slope.is_finite() && right_slope.is_finite())
            || left_slope <= 0.0
            || right_slope <= 0.0
        {
            return Err(ReparamError::BadTailSlope {
                left: left_slope,
                right: right_slope,
            });
        }
        for (i, &(t, v)) in anchors.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) {
                return Err(ReparamError::NonFinite(i));
            }
            if i > 0 {
                let (pt, pv) = anchors[i - 1];
                if t <= pt || v <= pv {
                    return Err(ReparamError::NotMonotone(i));
                }
            }
        }
        if !anchors.iter().any(|&(t, v)| t == 0.0 && v == 0.0) {
            return Err(ReparamError::ZeroNotFixed);
        }
        Ok(Reparam {
            anchors,
            left_slope,
            right_slope,
        })
    }

    /// Re-validate (used after deserialization).
    pub fn validate(&self) -> Result<(), ReparamError> {
        Self::from_anchors(self.anchors.clone(), self.left_slope, self.right_slope).map(|_| ())
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = &self.anchors;
        if t <= a[0].0 {
            return a[0].1 + self.left_slope * (t - a[0].0);
        }
        let last = a.len() - 1;
        if t >= a[last].0 {
            return a[last].1 + self.right_slope * (t - a[last].0);
        }
        // a[lo].0 <= t < a[lo + 1].0
        let lo = match a.binary_search_by(|&(at, _)| at.partial_cmp(&t).unwrap()) {
            Ok(i) => return a[i].1,
            Err(i) => i - 1,
        };
        let (t0, v0) = a[lo];
        let (t1, v1) = a[lo + 1];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Inverse map; well defined because the map is a strictly increasing
    /// bijection of the line.
    pub fn eval_inverse(&self, v: f64) -> f64 {
        let a = &self.anchors;
        if v <= a[0].1 {
            return a[0].0 + (v - a[0].1) / self.left_slope;
        }
        let last = a.len() - 1;
        if v >= a[last].1 {
            return a[last].0 + (v - a[last].1) / self.right_slope;
        }
        let lo = match a.binary_search_by(|&(_, av)| av.partial_cmp(&v).unwrap()) {
            Ok(i) => return a[i].0,
            Err(i) => i - 1,
        };
        let (t0, v0) = a[lo];
        let (t1, v1) = a[lo + 1];
        t0 + (t1 - t0) * (v - v0) / (v1 - v0)
    }

    /// The shifted clock `g(t) = h(t + c) - h(c)`; again fixes 0. Interior
    /// slopes are preserved (the segment containing `c` is split in two).
    pub fn shift(&self, c: f64) -> Reparam {
        let hc = self.eval(c);
        let mut anchors: Vec<(f64, f64)> = self
            .anchors
            .iter()
            .map(|&(t, v)| (t - c, v - hc))
            .collect();
        if !anchors.iter().any(|&(t, _)| t == 0.0) {
            // (0, 0) lies on the segment that contained c; inserting it keeps
            // the map pointwise identical.
            let pos = anchors.partition_point(|&(t, _)| t < 0.0);
            anchors.insert(pos, (0.0, 0.0));
        } else {
            // kill -0.0 / rounding residue on the pinned anchor
            for a in anchors.iter_mut() {
                if a.0 == 0.0 {
                    *a = (0.0, 0.0);
                }
            }
        }
        Reparam {
            anchors,
            left_slope: self.left_slope,
            right_slope: self.right_slope,
        }
    }

    /// Segment slopes from left tail to right tail.
    pub fn slopes(&self) -> Vec<f64> {
        let mut out = vec![self.left_slope];
        for w in self.anchors.windows(2) {
            out.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        out.push(self.right_slope);
        out
    }

    /// Drop interior anchors that lie exactly on the segment through their
    /// neighbours. Evaluation is unchanged.
    pub fn simplify(&self) -> Reparam {
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(self.anchors.len());
        for &(t, v) in &self.anchors {
            while kept.len() >= 2 {
                let (t0, v0) = kept[kept.len() - 2];
                let (t1, v1) = kept[kept.len() - 1];
                if t1 == 0.0 && v1 == 0.0 {
                    break; // never drop the pinned anchor
                }
                let collinear = ((v1 - v0) * (t - t0) - (v - v0) * (t1 - t0)).abs() <= 1e-15;
                if collinear {
                    kept.pop();
                } else {
                    break;
                }
            }
            kept.push((t, v));
        }
        Reparam {
            anchors: kept,
            left_slope: self.left_slope,
            right_slope: self.right_slope,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Reparam {
        Reparam::from_anchors(vec![(-1.0, -2.0), (0.0, 0.0), (2.0, 1.0)], 0.5, 3.0).unwrap()
    }

    #[test]
    fn identity_fixes_everything() {
        let h = Reparam::identity();
        for t in [-3.5, 0.0, 1.25] {
            assert_eq!(h.eval(t), t);
        }
    }

    #[test]
    fn rejects_non_monotone_anchors() {
        let err = Reparam::from_anchors(vec![(0.0, 0.0), (1.0, -0.5)], 1.0, 1.0).unwrap_err();
        assert_eq!(err, ReparamError::NotMonotone(1));
    }

    #[test]
    fn rejects_missing_zero_anchor() {
        let err = Reparam::from_anchors(vec![(1.0, 1.0), (2.0, 3.0)], 1.0, 1.0).unwrap_err();
        assert_eq!(err, ReparamError::ZeroNotFixed);
    }

    #[test]
    fn rejects_negative_tail_slope() {
        assert!(Reparam::from_anchors(vec![(0.0, 0.0)], -1.0, 1.0).is_err());
    }

    #[test]
    fn eval_interpolates_and_extends() {
        let h = sample();
        assert_eq!(h.eval(0.0), 0.0);
        assert_eq!(h.eval(-1.0), -2.0);
        assert_eq!(h.eval(1.0), 0.5);
        assert_eq!(h.eval(-3.0), -3.0); // left tail, slope 0.5
        assert_eq!(h.eval(4.0), 7.0); // right tail, slope 3
    }

    #[test]
    fn shift_pins_zero_and_keeps_slopes() {
        let h = sample();
        let c = 0.7;
        let g = h.shift(c);
        assert_eq!(g.eval(0.0), 0.0);
        for t in [-2.0, -0.3, 0.4, 5.0] {
            assert!((g.eval(t) - (h.eval(t + c) - h.eval(c))).abs() < 1e-12);
        }
        // interior slopes of g all occur among slopes of h
        let hs = h.slopes();
        for s in g.slopes() {
            assert!(
                hs.iter().any(|&x| (x - s).abs() < 1e-12),
                "slope {s} not found in {hs:?}"
            );
        }
    }

    #[test]
    fn simplify_preserves_evaluation() {
        let h = Reparam::from_anchors(
            vec![(-1.0, -1.0), (0.0, 0.0), (1.0, 2.0), (2.0, 4.0), (3.0, 6.0)],
            1.0,
            2.0,
        )
        .unwrap();
        let s = h.simplify();
        assert!(s.anchors().len() < h.anchors().len());
        for t in [-2.0, -0.5, 0.5, 1.5, 2.5, 3.5] {
            assert!((s.eval(t) - h.eval(t)).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        /// inverse round-trip across random strictly increasing anchor sets
        #[test]
        fn inverse_round_trips(
            steps in prop::collection::vec((0.01f64..2.0, 0.01f64..2.0), 1..12),
            zero_pos in 0usize..12,
            left in 0.1f64..4.0,
            right in 0.1f64..4.0,
            probes in prop::collection::vec(-20.0f64..20.0, 8),
        ) {
            // build anchors around a pinned (0,0) from positive increments
            let zero_pos = zero_pos.min(steps.len());
            let mut anchors = vec![(0.0, 0.0)];
            let mut t = 0.0;
            let mut v = 0.0;
            for &(dt, dv) in steps[zero_pos..].iter() {
                t += dt;
                v += dv;
                anchors.push((t, v));
            }
            let (mut t, mut v) = (0.0, 0.0);
            for &(dt, dv) in steps[..zero_pos].iter().rev() {
                t -= dt;
                v -= dv;
                anchors.insert(0, (t, v));
            }
            let h = Reparam::from_anchors(anchors, left, right).unwrap();
            for &p in &probes {
                let back = h.eval_inverse(h.eval(p));
                prop_assert!((back - p).abs() <= REPARAM_INV_TOL * (1.0 + p.abs()),
                    "round trip {p} -> {back}");
            }
            // strict monotonicity on probe pairs
            let mut sorted = probes.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in sorted.windows(2) {
                if w[1] - w[0] > 1e-9 {
                    prop_assert!(h.eval(w[1]) > h.eval(w[0]));
                }
            }
        }
    }
}
