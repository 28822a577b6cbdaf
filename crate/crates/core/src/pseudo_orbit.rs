//! Pseudo-orbits: finite windows of (point, duration) entries indexed by a
//! signed range containing 0, together with the piecewise trace they sweep
//! out under a flow.
//!
//! An entry `(x_i, t_i)` means "sit on the true orbit of `x_i` for time
//! `t_i`, then jump". Partial sums anchor entry `i` at absolute time `s_i`
//! with `s_0 = 0`, so the window covers `[s_a, s_{b+1})` for index range
//! `[a, b]`. Everything that quantifies over all time is resolved against
//! this window plus an explicit tail policy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{Flow, FlowError};
use crate::space::{Point, SpaceError};

/// Extra slack accepted when comparing jump defects against a declared delta.
pub const VALIDATION_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PseudoOrbitKind {
    /// Window of a conceptually two-sided pseudo-orbit; index range spans 0.
    BiInfinite,
    /// One-sided object starting at index 0.
    Forward,
    /// Finite chain from its first point to its last; index range starts at 0.
    Chain,
}

/// What the trace does outside the stored window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// Continue along the true orbit of the first/last entry.
    ExtendByOrbit,
    /// Refuse queries outside the window.
    Truncate,
}

#[derive(Debug, Error)]
pub enum PseudoOrbitError {
    #[error("a pseudo-orbit needs at least one entry")]
    EmptyWindow,
    #[error("index range [{low}, {high}] must contain 0")]
    BadIndexRange { low: i64, high: i64 },
    #[error("{kind:?} pseudo-orbits must start at index 0, got {low}")]
    BadStart { kind: PseudoOrbitKind, low: i64 },
    #[error("duration at index {index} is {value}; durations must be positive and finite")]
    BadDuration { index: i64, value: f64 },
    #[error("time {t} is outside the window [{lo}, {hi}) and the policy is truncate")]
    OutsideWindow { t: f64, lo: f64, hi: f64 },
    #[error("expected a {expected:?} pseudo-orbit")]
    WrongKind { expected: PseudoOrbitKind },
    #[error("chain endpoint is {dist:.3e} away from the target start (tolerance {tol:.3e})")]
    EndpointMismatch { dist: f64, tol: f64 },
    #[error("chain is not a loop: endpoints differ by {dist:.3e} (tolerance {tol:.3e})")]
    NotALoop { dist: f64, tol: f64 },
    #[error("entry {index} has duration {value:.6}, below the step bound {bound:.6}")]
    StepBelowBound { index: i64, value: f64, bound: f64 },
    #[error(
        "modulus bound unsatisfiable: blocks of {m} steps give defect bound {attained:.3e}, \
         need < {required:.3e}"
    )]
    ModulusBound { m: usize, attained: f64, required: f64 },
    #[error("window holds {have} entries forward of 0; need at least {need}")]
    WindowTooShort { have: i64, need: i64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Windowed pseudo-orbit. Immutable after construction; transforms return
/// new values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudoOrbit {
    kind: PseudoOrbitKind,
    policy: TailPolicy,
    index_low: i64,
    entries: Vec<(Point, f64)>,
    /// sums[k] = s_{index_low + k}, one extra slot for s_{b+1}.
    sums: Vec<f64>,
}

impl PseudoOrbit {
    pub fn new(
        kind: PseudoOrbitKind,
        policy: TailPolicy,
        index_low: i64,
        entries: Vec<(Point, f64)>,
    ) -> Result<Self, PseudoOrbitError> {
        if entries.is_empty() {
            return Err(PseudoOrbitError::EmptyWindow);
        }
        let index_high = index_low + entries.len() as i64 - 1;
        if index_low > 0 || index_high < 0 {
            return Err(PseudoOrbitError::BadIndexRange {
                low: index_low,
                high: index_high,
            });
        }
        if matches!(kind, PseudoOrbitKind::Forward | PseudoOrbitKind::Chain) && index_low != 0 {
            return Err(PseudoOrbitError::BadStart {
                kind,
                low: index_low,
            });
        }
        for (k, &(_, t)) in entries.iter().enumerate() {
            if !t.is_finite() || t <= 0.0 {
                return Err(PseudoOrbitError::BadDuration {
                    index: index_low + k as i64,
                    value: t,
                });
            }
        }
        let sums = partial_sums(index_low, &entries);
        Ok(PseudoOrbit {
            kind,
            policy,
            index_low,
            entries,
            sums,
        })
    }

    /// Two-sided window with default tail policy (extend by the true orbit).
    pub fn bi_infinite(index_low: i64, entries: Vec<(Point, f64)>) -> Result<Self, PseudoOrbitError> {
        Self::new(
            PseudoOrbitKind::BiInfinite,
            TailPolicy::ExtendByOrbit,
            index_low,
            entries,
        )
    }

    pub fn forward(entries: Vec<(Point, f64)>) -> Result<Self, PseudoOrbitError> {
        Self::new(PseudoOrbitKind::Forward, TailPolicy::ExtendByOrbit, 0, entries)
    }

    pub fn chain(entries: Vec<(Point, f64)>) -> Result<Self, PseudoOrbitError> {
        Self::new(PseudoOrbitKind::Chain, TailPolicy::Truncate, 0, entries)
    }

    pub fn kind(&self) -> PseudoOrbitKind {
        self.kind
    }

    pub fn policy(&self) -> TailPolicy {
        self.policy
    }

    pub fn with_policy(mut self, policy: TailPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction
    }

    /// Inclusive index range `[a, b]`.
    pub fn index_range(&self) -> (i64, i64) {
        (self.index_low, self.index_low + self.entries.len() as i64 - 1)
    }

    fn slot(&self, index: i64) -> usize {
        debug_assert!(
            index >= self.index_low
                && index < self.index_low + self.entries.len() as i64
        );
        (index - self.index_low) as usize
    }

    pub fn point(&self, index: i64) -> &Point {
        &self.entries[self.slot(index)].0
    }

    pub fn duration(&self, index: i64) -> f64 {
        self.entries[self.slot(index)].1
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, &Point, f64)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, (p, t))| (self.index_low + k as i64, p, *t))
    }

    /// Anchor time `s_i`; defined for `i` in `[a, b + 1]`.
    pub fn partial_sum(&self, index: i64) -> f64 {
        self.sums[(index - self.index_low) as usize]
    }

    /// Time span `[s_a, s_{b+1})` covered by the window.
    pub fn span(&self) -> (f64, f64) {
        (self.sums[0], *self.sums.last().unwrap())
    }

    /// The piecewise trace at absolute time `t`: follow the true orbit of the
    /// entry whose slab contains `t`. Outside the window the tail policy
    /// decides between extension and an error.
    pub fn trace(&self, flow: &dyn Flow, t: f64) -> Result<Point, PseudoOrbitError> {
        let (lo, hi) = self.span();
        let outside = t < lo || t >= hi;
        if outside && self.policy == TailPolicy::Truncate {
            return Err(PseudoOrbitError::OutsideWindow { t, lo, hi });
        }
        let k = if t < lo {
            0
        } else if t >= hi {
            self.entries.len() - 1
        } else {
            // sums[k] <= t < sums[k+1]
            self.sums.partition_point(|&s| s <= t).saturating_sub(1)
        };
        let anchor = self.sums[k];
        Ok(flow.evolve(&self.entries[k].0, t - anchor)?)
    }

    /// Entry slot whose slab contains `t`, clamped to the window. The trace
    /// is continuous on each slab and may jump between slabs.
    pub fn entry_slot_at(&self, t: f64) -> usize {
        let (lo, hi) = self.span();
        if t < lo {
            0
        } else if t >= hi {
            self.entries.len() - 1
        } else {
            self.sums.partition_point(|&s| s <= t).saturating_sub(1)
        }
    }

    /// Check the declared (delta, t_min[, t_max]) contract, reporting every
    /// violation. Duration bounds apply to all indices except the last, whose
    /// duration only shapes the trace.
    pub fn validate(
        &self,
        flow: &dyn Flow,
        delta: f64,
        t_min: f64,
        t_max: Option<f64>,
    ) -> Result<ValidationReport, PseudoOrbitError> {
        let (a, b) = self.index_range();
        let mut report = ValidationReport {
            ok: true,
            delta,
            t_min,
            t_max,
            max_defect: 0.0,
            jump_violations: Vec::new(),
            duration_violations: Vec::new(),
        };
        for i in a..=b {
            let t = self.duration(i);
            if i < b {
                let within = t >= t_min - VALIDATION_SLACK
                    && t_max.map_or(true, |hi| t <= hi + VALIDATION_SLACK);
                if !within {
                    report.ok = false;
                    report.duration_violations.push((i, t));
                }
                let reached = flow.evolve(self.point(i), t)?;
                let defect = flow.space().dist(&reached, self.point(i + 1));
                report.max_defect = report.max_defect.max(defect);
                if defect > delta + VALIDATION_SLACK {
                    report.ok = false;
                    report.jump_violations.push((i, defect));
                }
            }
        }
        Ok(report)
    }

    /// Split every entry into steps of length `a` plus one remainder in
    /// `[a, 2a)`. The trace is unchanged because the inserted points ride the
    /// true orbit of their source entry; jump defects survive verbatim at
    /// block boundaries. Entry 0 keeps index 0.
    pub fn refine_to_bounded_steps(
        &self,
        flow: &dyn Flow,
        a: f64,
    ) -> Result<PseudoOrbit, PseudoOrbitError> {
        assert!(a > 0.0 && a.is_finite(), "step bound must be positive");
        let (lo, hi) = self.index_range();
        for i in lo..=hi {
            if self.duration(i) < a - VALIDATION_SLACK {
                return Err(PseudoOrbitError::StepBelowBound {
                    index: i,
                    value: self.duration(i),
                    bound: a,
                });
            }
        }
        let mut blocks: Vec<Vec<(Point, f64)>> = Vec::with_capacity(self.entries.len());
        for i in lo..=hi {
            let t = self.duration(i);
            let mut m = ((t - a) / a).floor().max(0.0) as usize;
            let mut r = t - m as f64 * a;
            // floating point can push the remainder just past 2a
            if r >= 2.0 * a {
                m += 1;
                r = t - m as f64 * a;
            }
            let x = self.point(i);
            let mut block = Vec::with_capacity(m + 1);
            for j in 0..=m {
                let y = if j == 0 {
                    x.clone()
                } else {
                    flow.evolve(x, a * j as f64)?
                };
                let lambda = if j < m { a } else { r };
                block.push((y, lambda));
            }
            blocks.push(block);
        }
        let below_zero: usize = blocks[..(-lo) as usize].iter().map(Vec::len).sum();
        let entries: Vec<(Point, f64)> = blocks.into_iter().flatten().collect();
        PseudoOrbit::new(self.kind, self.policy, -(below_zero as i64), entries)
    }

    /// Merge blocks of `m` consecutive entries, keeping every m-th point and
    /// summing durations. Sound when the continuity modulus keeps the grown
    /// jump defect below `delta`: requires `m * lipschitz(2m * t_max) * beta
    /// < delta` for an input at declared defect `beta`.
    pub fn coarsen_steps(
        &self,
        flow: &dyn Flow,
        m: usize,
        beta: f64,
        delta: f64,
    ) -> Result<PseudoOrbit, PseudoOrbitError> {
        assert!(m >= 1);
        let t_max_in = self
            .entries
            .iter()
            .map(|&(_, t)| t)
            .fold(0.0_f64, f64::max);
        let attained = m as f64 * flow.lipschitz(m as f64 * t_max_in) * beta;
        if attained >= delta {
            return Err(PseudoOrbitError::ModulusBound {
                m,
                attained,
                required: delta,
            });
        }
        let (a, b) = self.index_range();
        let mi = m as i64;
        let a_out = -((-a).div_euclid(mi));
        let b_out = (b + 1).div_euclid(mi) - 1;
        if b_out < 0 {
            return Err(PseudoOrbitError::WindowTooShort {
                have: b + 1,
                need: mi,
            });
        }
        let mut entries = Vec::with_capacity((b_out - a_out + 1) as usize);
        for i in a_out..=b_out {
            let base = i * mi;
            let lambda: f64 = (0..mi).map(|j| self.duration(base + j)).sum();
            entries.push((self.point(base).clone(), lambda));
        }
        PseudoOrbit::new(self.kind, self.policy, a_out, entries)
    }

    /// Replace the point of entry 0, keeping its duration. Only the jumps
    /// into and out of index 0 change: into by at most `d(p, x_0)`, out of by
    /// at most `lipschitz(t_0) * d(p, x_0)`.
    pub fn splice_through_point(&self, p: Point) -> PseudoOrbit {
        let mut entries = self.entries.clone();
        let k = (-self.index_low) as usize;
        entries[k].0 = p;
        PseudoOrbit {
            kind: self.kind,
            policy: self.policy,
            index_low: self.index_low,
            sums: partial_sums(self.index_low, &entries),
            entries,
        }
    }

    /// Concatenate a finite chain in front of a forward pseudo-orbit whose
    /// start matches the chain's endpoint (within `tol`). The chain endpoint
    /// itself is dropped; the result starts at the chain's first point and
    /// carries the forward orbit shifted by the chain's total duration.
    pub fn prepend_chain(
        chain: &PseudoOrbit,
        forward: &PseudoOrbit,
        flow: &dyn Flow,
        tol: f64,
    ) -> Result<PseudoOrbit, PseudoOrbitError> {
        if chain.kind != PseudoOrbitKind::Chain {
            return Err(PseudoOrbitError::WrongKind {
                expected: PseudoOrbitKind::Chain,
            });
        }
        if forward.kind != PseudoOrbitKind::Forward {
            return Err(PseudoOrbitError::WrongKind {
                expected: PseudoOrbitKind::Forward,
            });
        }
        let (_, cb) = chain.index_range();
        let dist = flow
            .space()
            .dist(chain.point(cb), forward.point(0));
        if dist > tol {
            return Err(PseudoOrbitError::EndpointMismatch { dist, tol });
        }
        let mut entries: Vec<(Point, f64)> = Vec::with_capacity(cb as usize + forward.len());
        for i in 0..cb {
            entries.push((chain.point(i).clone(), chain.duration(i)));
        }
        entries.extend(forward.entries.iter().cloned());
        PseudoOrbit::new(PseudoOrbitKind::Forward, forward.policy, 0, entries)
    }

    /// Tile a closed chain (first point = last point within `tol`) over
    /// `periods` copies on each side of 0, yielding a two-sided window with a
    /// periodic trace.
    pub fn periodic_extension(
        chain: &PseudoOrbit,
        periods: usize,
        flow: &dyn Flow,
        tol: f64,
    ) -> Result<PseudoOrbit, PseudoOrbitError> {
        if chain.kind != PseudoOrbitKind::Chain {
            return Err(PseudoOrbitError::WrongKind {
                expected: PseudoOrbitKind::Chain,
            });
        }
        let (_, k) = chain.index_range();
        if k == 0 {
            return Err(PseudoOrbitError::WindowTooShort { have: 1, need: 2 });
        }
        let dist = flow.space().dist(chain.point(0), chain.point(k));
        if dist > tol {
            return Err(PseudoOrbitError::NotALoop { dist, tol });
        }
        assert!(periods >= 1);
        let cycle: Vec<(Point, f64)> = (0..k)
            .map(|i| (chain.point(i).clone(), chain.duration(i)))
            .collect();
        let reps = 2 * periods;
        let mut entries = Vec::with_capacity(cycle.len() * reps);
        for _ in 0..reps {
            entries.extend(cycle.iter().cloned());
        }
        PseudoOrbit::new(
            PseudoOrbitKind::BiInfinite,
            TailPolicy::ExtendByOrbit,
            -(periods as i64) * k,
            entries,
        )
    }
}

/// Anchor times from durations: `s_0 = 0`, forward accumulation above,
/// negated suffix sums below.
fn partial_sums(index_low: i64, entries: &[(Point, f64)]) -> Vec<f64> {
    let zero_slot = (-index_low) as usize;
    let mut sums = vec![0.0; entries.len() + 1];
    for k in zero_slot..entries.len() {
        sums[k + 1] = sums[k] + entries[k].1;
    }
    for k in (0..zero_slot).rev() {
        sums[k] = sums[k + 1] - entries[k].1;
    }
    sums
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub delta: f64,
    pub t_min: f64,
    pub t_max: Option<f64>,
    pub max_defect: f64,
    /// (index, defect) pairs exceeding delta.
    pub jump_violations: Vec<(i64, f64)>,
    /// (index, duration) pairs outside the [t_min, t_max] band.
    pub duration_violations: Vec<(i64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::circle::{RotationFlow, SinSquaredFlow};

    fn entry(theta: f64, t: f64) -> (Point, f64) {
        (Point::d1(theta), t)
    }

    #[test]
    fn partial_sums_match_signed_convention() {
        // durations (.., 2, 3 | 1, 4, ..) around index 0
        let p = PseudoOrbit::bi_infinite(
            -2,
            vec![entry(0.0, 2.0), entry(0.1, 3.0), entry(0.2, 1.0), entry(0.3, 4.0)],
        )
        .unwrap();
        assert_eq!(p.partial_sum(0), 0.0);
        assert_eq!(p.partial_sum(1), 1.0);
        assert_eq!(p.partial_sum(2), 5.0);
        assert_eq!(p.partial_sum(-1), -3.0);
        assert_eq!(p.partial_sum(-2), -5.0);
    }

    #[test]
    fn trace_follows_the_entry_containing_t() {
        let p = PseudoOrbit::forward(vec![
            entry(0.00, 1.0),
            entry(0.11, 1.0),
            entry(0.23, 1.0),
            entry(0.31, 1.0),
        ])
        .unwrap();
        let got = p.trace(&RotationFlow, 2.5).unwrap();
        let want = RotationFlow.evolve(&Point::d1(0.23), 0.5).unwrap();
        assert_eq!(got, want);
        // exact at the anchor itself
        assert_eq!(p.trace(&RotationFlow, 0.0).unwrap(), Point::d1(0.0));
    }

    #[test]
    fn trace_outside_window_honors_policy() {
        let entries = vec![entry(0.0, 1.0), entry(0.1, 1.0)];
        let ext = PseudoOrbit::forward(entries.clone()).unwrap();
        // beyond s_2 the last entry's orbit continues
        let got = ext.trace(&RotationFlow, 5.0).unwrap();
        let want = RotationFlow.evolve(&Point::d1(0.1), 4.0).unwrap();
        assert_eq!(got, want);
        let trunc = PseudoOrbit::forward(entries).unwrap().with_policy(TailPolicy::Truncate);
        assert!(matches!(
            trunc.trace(&RotationFlow, 5.0),
            Err(PseudoOrbitError::OutsideWindow { .. })
        ));
        assert!(matches!(
            trunc.trace(&RotationFlow, -0.1),
            Err(PseudoOrbitError::OutsideWindow { .. })
        ));
    }

    #[test]
    fn validate_reports_each_violation_once() {
        // perfect orbit except one corrupted jump into entry 1
        let x0 = Point::d1(0.2);
        let x1 = RotationFlow.evolve(&x0, 1.0).unwrap();
        let bad = Point::d1(x1.c(0) + 0.07);
        let x2 = RotationFlow.evolve(&bad, 1.0).unwrap();
        let p = PseudoOrbit::forward(vec![
            (x0, 1.0),
            (bad.clone(), 1.0),
            (x2, 1.0),
        ])
        .unwrap();
        let rep = p.validate(&RotationFlow, 0.05, 1.0, None).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.jump_violations.len(), 1);
        assert_eq!(rep.jump_violations[0].0, 0);
        assert!((rep.jump_violations[0].1 - 0.07).abs() < 1e-12);
        // widening delta past the defect clears the report
        let rep2 = p.validate(&RotationFlow, 0.08, 1.0, None).unwrap();
        assert!(rep2.ok, "{rep2:?}");
    }

    #[test]
    fn validate_flags_short_durations_and_jumps() {
        let p = PseudoOrbit::forward(vec![entry(0.0, 0.4), entry(0.9, 1.0), entry(0.4, 1.0)])
            .unwrap();
        let rep = p.validate(&RotationFlow, 0.05, 1.0, Some(2.0)).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.duration_violations, vec![(0, 0.4)]);
        // jump 0: phi_{0.4}(0.0) = 0.4 vs 0.9 -> defect 0.5
        // jump 1: phi_1(0.9) = 0.9 vs 0.4 -> defect 0.5
        assert_eq!(rep.jump_violations.len(), 2);
        assert!((rep.max_defect - 0.5).abs() < 1e-12);
    }

    #[test]
    fn refine_expands_three_and_a_half_steps() {
        let a = 0.4;
        let x0 = Point::d1(0.05);
        let p = PseudoOrbit::forward(vec![(x0.clone(), 3.5 * a), entry(0.62, 1.9 * a)]).unwrap();
        let fine = p.refine_to_bounded_steps(&RotationFlow, a).unwrap();
        // 3.5a splits into (a, a, 1.5a); 1.9a stays whole
        let durations: Vec<f64> = fine.entries().map(|(_, _, t)| t).collect();
        assert_eq!(durations.len(), 4);
        assert!((durations[0] - a).abs() < 1e-12);
        assert!((durations[1] - a).abs() < 1e-12);
        assert!((durations[2] - 1.5 * a).abs() < 1e-12);
        assert!((durations[3] - 1.9 * a).abs() < 1e-12);
        // inserted points ride the orbit of x0
        assert_eq!(fine.point(1), &RotationFlow.evolve(&x0, a).unwrap());
        assert_eq!(fine.point(2), &RotationFlow.evolve(&x0, 2.0 * a).unwrap());
        // trace unchanged on a sample grid (up to chart arithmetic noise)
        for k in 0..20 {
            let t = 0.1 * k as f64;
            let orig = p.trace(&RotationFlow, t).unwrap();
            let refined = fine.trace(&RotationFlow, t).unwrap();
            assert!(RotationFlow.space().dist(&orig, &refined) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn refine_keeps_entry_zero_at_index_zero() {
        let p = PseudoOrbit::bi_infinite(
            -2,
            vec![entry(0.9, 1.3), entry(0.1, 2.6), entry(0.3, 1.0), entry(0.5, 1.7)],
        )
        .unwrap();
        let fine = p.refine_to_bounded_steps(&RotationFlow, 0.5).unwrap();
        assert_eq!(fine.point(0), p.point(0));
        let rep = fine.validate(&RotationFlow, 0.5, 0.5, Some(1.0)).unwrap();
        assert!(rep.duration_violations.is_empty());
        // all duration in [a, 2a)
        for (_, _, t) in fine.entries() {
            assert!(t >= 0.5 - 1e-12 && t < 1.0);
        }
    }

    #[test]
    fn refine_rejects_short_entries() {
        let p = PseudoOrbit::forward(vec![entry(0.0, 0.3)]).unwrap();
        assert!(matches!(
            p.refine_to_bounded_steps(&RotationFlow, 0.4),
            Err(PseudoOrbitError::StepBelowBound { .. })
        ));
    }

    #[test]
    fn coarsen_merges_blocks_and_sums_durations() {
        let mut entries = Vec::new();
        let mut x = Point::d1(0.12);
        for k in 0..7 {
            let t = 1.0 + 0.1 * (k % 3) as f64;
            entries.push((x.clone(), t));
            x = RotationFlow.evolve(&x, t).unwrap();
        }
        let p = PseudoOrbit::forward(entries).unwrap();
        let coarse = p.coarsen_steps(&RotationFlow, 3, 0.0, 0.05).unwrap();
        assert_eq!(coarse.len(), 2);
        assert_eq!(coarse.point(0), p.point(0));
        assert_eq!(coarse.point(1), p.point(3));
        assert!((coarse.duration(0) - (p.duration(0) + p.duration(1) + p.duration(2))).abs() < 1e-12);
        let rep = coarse.validate(&RotationFlow, 1e-9, 3.0, Some(6.6)).unwrap();
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn coarsen_rejects_unsatisfiable_modulus() {
        let p = PseudoOrbit::forward(vec![entry(0.0, 1.0); 6]).unwrap();
        assert!(matches!(
            p.coarsen_steps(&SinSquaredFlow, 3, 0.1, 0.05),
            Err(PseudoOrbitError::ModulusBound { .. })
        ));
    }

    #[test]
    fn splice_changes_only_the_adjacent_defects() {
        let delta = 0.01;
        let mut entries = Vec::new();
        let mut x = Point::d1(0.3);
        for k in 0..5 {
            entries.push((x.clone(), 1.0));
            x = RotationFlow.evolve(&x, 1.0).unwrap();
            x = Point::d1((x.c(0) + if k % 2 == 0 { delta } else { -delta }).rem_euclid(1.0));
        }
        let p = PseudoOrbit::new(PseudoOrbitKind::BiInfinite, TailPolicy::ExtendByOrbit, -2, entries)
            .unwrap();
        let q = Point::d1((p.point(0).c(0) + 0.03).rem_euclid(1.0));
        let spliced = p.splice_through_point(q.clone());
        let gap = RotationFlow.space().dist(p.point(0), &q);
        let before = p.validate(&RotationFlow, delta, 1.0, None).unwrap();
        let after = spliced.validate(&RotationFlow, delta + gap + 1e-12, 1.0, None).unwrap();
        assert!(before.ok);
        assert!(after.ok, "{after:?}");
        for i in [-2i64, 1] {
            let d_before = RotationFlow
                .space()
                .dist(&RotationFlow.evolve(p.point(i), 1.0).unwrap(), p.point(i + 1));
            let d_after = RotationFlow
                .space()
                .dist(&RotationFlow.evolve(spliced.point(i), 1.0).unwrap(), spliced.point(i + 1));
            assert!((d_before - d_after).abs() < 1e-15, "defect moved at {i}");
        }
    }

    #[test]
    fn prepend_requires_matching_endpoint() {
        let chain = PseudoOrbit::chain(vec![entry(0.0, 1.0), entry(0.4, 1.0)]).unwrap();
        let fwd = PseudoOrbit::forward(vec![entry(0.9, 1.0), entry(0.95, 1.0)]).unwrap();
        assert!(matches!(
            PseudoOrbit::prepend_chain(&chain, &fwd, &RotationFlow, 1e-6),
            Err(PseudoOrbitError::EndpointMismatch { .. })
        ));
    }

    #[test]
    fn prepend_shifts_suffix_sums_exactly() {
        let chain = PseudoOrbit::chain(vec![
            entry(0.0, 1.2),
            entry(0.3, 1.7),
            entry(0.55, 1.0),
        ])
        .unwrap();
        let fwd = PseudoOrbit::forward(vec![
            entry(0.55, 1.1),
            entry(0.71, 1.3),
            entry(0.86, 1.0),
        ])
        .unwrap();
        let joined = PseudoOrbit::prepend_chain(&chain, &fwd, &RotationFlow, 1e-12).unwrap();
        assert_eq!(joined.len(), 5);
        assert_eq!(joined.point(0), chain.point(0));
        assert_eq!(joined.point(2), fwd.point(0));
        let m = 2i64; // prefix length
        for k in 0..=3i64 {
            let lhs = joined.partial_sum(m + k) - joined.partial_sum(m);
            let rhs = fwd.partial_sum(k);
            assert!((lhs - rhs).abs() < 1e-10, "suffix sum mismatch at {k}");
        }
    }

    #[test]
    fn single_point_chain_prepends_as_identity() {
        let chain = PseudoOrbit::chain(vec![entry(0.9, 1.0)]).unwrap();
        let fwd = PseudoOrbit::forward(vec![entry(0.9, 1.0), entry(0.95, 1.0)]).unwrap();
        let joined = PseudoOrbit::prepend_chain(&chain, &fwd, &RotationFlow, 1e-12).unwrap();
        assert_eq!(joined.len(), fwd.len());
        assert_eq!(joined.point(0), fwd.point(0));
    }

    #[test]
    fn periodic_extension_tiles_a_loop() {
        // (0.35, 1)-chain through the sin^2 stall: 0 -> 0.3 -> 0.65 -> 0
        let chain = PseudoOrbit::chain(vec![
            entry(0.0, 1.0),
            entry(0.3, 1.0),
            entry(0.65, 1.0),
            entry(0.0, 1.0),
        ])
        .unwrap();
        let per = PseudoOrbit::periodic_extension(&chain, 2, &SinSquaredFlow, 1e-12).unwrap();
        assert_eq!(per.index_range(), (-6, 5));
        let rep = per.validate(&SinSquaredFlow, 0.35, 1.0, None).unwrap();
        assert!(rep.ok, "{rep:?}");
        let period: f64 = 3.0;
        for k in 0..10 {
            let t = -2.5 + 0.5 * k as f64;
            let a = per.trace(&SinSquaredFlow, t).unwrap();
            let b = per.trace(&SinSquaredFlow, t + period).unwrap();
            assert!(SinSquaredFlow.space().dist(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn periodic_extension_rejects_open_chains() {
        let chain = PseudoOrbit::chain(vec![entry(0.0, 1.0), entry(0.3, 1.0)]).unwrap();
        assert!(matches!(
            PseudoOrbit::periodic_extension(&chain, 1, &SinSquaredFlow, 1e-9),
            Err(PseudoOrbitError::NotALoop { .. })
        ));
    }
}
