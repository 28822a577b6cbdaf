//! Discrete monotone matching between two sampled curves.
//!
//! Both curves are sampled on 0-anchored time lattices. A matching is a
//! monotone staircase of feasible cells (i, j), where cell feasibility means
//! the two samples are within the inflated tolerance. The staircase must pass
//! through the (0, 0)-time cell, which is what pins h(0) = 0. Reachability is
//! computed row by row over a sliding column band, so cost scales with the
//! corridor actually explored rather than the full table.

use crate::flow::{Flow, FlowError};
use crate::pseudo_orbit::{PseudoOrbit, PseudoOrbitError};
use crate::space::{Point, SpaceModel};

/// Relative tolerance for deduplicating appended endpoint times.
const TIME_DEDUP_FRAC: f64 = 1e-9;

/// Uniformly sampled curve with per-sample local speed estimates.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Finite-difference speed at each sample (max of adjacent gaps).
    pub speeds: Vec<f64>,
    /// Index with times[zero] == 0.0 exactly.
    pub zero: usize,
}

/// 0-anchored multiples of dt covering [lo, hi], endpoints appended when off
/// the lattice. Requires lo <= 0 <= hi so that 0.0 is always a sample.
pub fn lattice_times(lo: f64, hi: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0 && lo <= 0.0 && hi >= 0.0 && lo < hi);
    let k_lo = (lo / dt).ceil() as i64;
    let k_hi = (hi / dt).floor() as i64;
    let tol = TIME_DEDUP_FRAC * dt;
    let mut ts = Vec::with_capacity((k_hi - k_lo) as usize + 3);
    if lo < k_lo as f64 * dt - tol {
        ts.push(lo);
    }
    for k in k_lo..=k_hi {
        ts.push(k as f64 * dt);
    }
    if hi > k_hi as f64 * dt + tol {
        ts.push(hi);
    }
    ts
}

fn local_speeds(space: &dyn SpaceModel, times: &[f64], points: &[Point]) -> Vec<f64> {
    let n = times.len();
    let mut speeds = vec![0.0f64; n];
    for k in 0..n.saturating_sub(1) {
        let gap = times[k + 1] - times[k];
        if gap <= 0.0 {
            continue;
        }
        let v = space.dist(&points[k], &points[k + 1]) / gap;
        speeds[k] = speeds[k].max(v);
        speeds[k + 1] = speeds[k + 1].max(v);
    }
    speeds
}

fn zero_index(times: &[f64]) -> usize {
    let idx = times.partition_point(|&t| t < 0.0);
    debug_assert_eq!(times[idx], 0.0, "lattice must contain 0 exactly");
    idx
}

/// Sample the trace of a pseudo-orbit over its window.
///
/// Speeds are measured within trace slabs only: the finite difference across
/// a jump would read the defect as motion and blow up the matching slack. A
/// sample with no slab-mate gets a short flow probe instead.
pub fn trace_grid(
    flow: &dyn Flow,
    orbit: &PseudoOrbit,
    dt: f64,
) -> Result<SampleGrid, PseudoOrbitError> {
    let (lo, hi) = orbit.span();
    let times = lattice_times(lo, hi, dt);
    let n = times.len();
    let mut points = Vec::with_capacity(n);
    let mut slabs = Vec::with_capacity(n);
    for &t in &times {
        points.push(orbit.trace(flow, t)?);
        slabs.push(orbit.entry_slot_at(t));
    }
    let space = flow.space();
    let mut speeds = vec![0.0f64; n];
    for k in 0..n.saturating_sub(1) {
        let gap = times[k + 1] - times[k];
        if gap <= 0.0 || slabs[k] != slabs[k + 1] {
            continue;
        }
        let v = space.dist(&points[k], &points[k + 1]) / gap;
        speeds[k] = speeds[k].max(v);
        speeds[k + 1] = speeds[k + 1].max(v);
    }
    for k in 0..n {
        let alone = (k == 0 || slabs[k - 1] != slabs[k])
            && (k + 1 == n || slabs[k] != slabs[k + 1]);
        if alone {
            let h = (dt * 0.5).min(1e-2);
            let ahead = flow.evolve(&points[k], h)?;
            speeds[k] = space.dist(&points[k], &ahead) / h;
        }
    }
    let zero = zero_index(&times);
    Ok(SampleGrid {
        times,
        points,
        speeds,
        zero,
    })
}

/// Sample the orbit of a candidate point over [lo, hi], evolving
/// incrementally outward from time 0.
pub fn candidate_grid(
    flow: &dyn Flow,
    y: &Point,
    lo: f64,
    hi: f64,
    dt: f64,
) -> Result<SampleGrid, FlowError> {
    let times = lattice_times(lo, hi, dt);
    let zero = zero_index(&times);
    let mut points = vec![Point::new(vec![]); times.len()];
    points[zero] = y.clone();
    for k in zero + 1..times.len() {
        points[k] = flow.evolve(&points[k - 1], times[k] - times[k - 1])?;
    }
    for k in (0..zero).rev() {
        points[k] = flow.evolve(&points[k + 1], times[k] - times[k + 1])?;
    }
    let speeds = local_speeds(flow.space(), &times, &points);
    Ok(SampleGrid {
        times,
        points,
        speeds,
        zero,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MatchConfig {
    pub eps: f64,
    pub slack_factor: f64,
    pub dt: f64,
    /// Feasibility evaluations allowed before giving up.
    pub cell_budget: u64,
}

#[derive(Debug)]
pub enum MatchOutcome {
    /// Monotone pinned staircase, cells ascending by row then column.
    Matched(Vec<(usize, usize)>),
    NoPath {
        /// Rows the frontier survived before dying (diagnostics).
        rows_survived: usize,
    },
    BudgetExhausted,
}

const INF: f64 = f64::INFINITY;

/// One row of the minimax table: vals[j - lo] is the smallest achievable
/// bottleneck (max cell distance) over monotone prefixes ending at (row, j),
/// INF where the cell is infeasible or unreachable.
#[derive(Clone, Default)]
struct RowBand {
    lo: usize,
    vals: Vec<f64>,
}

impl RowBand {
    fn get(&self, j: usize) -> f64 {
        if j >= self.lo && j < self.lo + self.vals.len() {
            self.vals[j - self.lo]
        } else {
            INF
        }
    }

    fn hi(&self) -> usize {
        self.lo + self.vals.len() - 1
    }

    fn is_empty(&self) -> bool {
        !self.vals.iter().any(|v| v.is_finite())
    }

    fn best_col(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &v) in self.vals.iter().enumerate() {
            if v.is_finite() && best.map_or(true, |(_, bv)| v < bv) {
                best = Some((self.lo + k, v));
            }
        }
        best.map(|(j, _)| j)
    }

    fn trimmed(lo: usize, mut vals: Vec<f64>) -> Self {
        match vals.iter().position(|v| v.is_finite()) {
            None => RowBand {
                lo,
                vals: Vec::new(),
            },
            Some(first) => {
                let last = vals.iter().rposition(|v| v.is_finite()).unwrap();
                vals.truncate(last + 1);
                vals.drain(..first);
                RowBand {
                    lo: lo + first,
                    vals,
                }
            }
        }
    }
}

struct Matcher<'a> {
    space: &'a dyn SpaceModel,
    a: &'a SampleGrid,
    b: &'a SampleGrid,
    cfg: &'a MatchConfig,
    touched: u64,
}

impl<'a> Matcher<'a> {
    /// Distance at a cell, or INF past the inflated tolerance.
    fn admitted(&mut self, i: usize, j: usize) -> f64 {
        self.touched += 1;
        let speed = self.a.speeds[i].max(self.b.speeds[j]);
        let thresh = self.cfg.eps + self.cfg.slack_factor * speed * self.cfg.dt + 1e-12;
        let dist = self.space.dist(&self.a.points[i], &self.b.points[j]);
        if dist <= thresh {
            dist
        } else {
            INF
        }
    }

    fn over_budget(&self) -> bool {
        self.touched > self.cfg.cell_budget
    }

    /// One DP step: minimax values of row i from `prev` by down, diagonal,
    /// and within-row right slides.
    fn advance(&mut self, prev: &RowBand, i: usize) -> RowBand {
        let n_b = self.b.times.len();
        let start = prev.lo;
        let mandatory_hi = prev.hi() + 1;
        let mut vals: Vec<f64> = Vec::new();
        let mut j = start;
        loop {
            if j >= n_b {
                break;
            }
            let slid = if j > start { *vals.last().unwrap() } else { INF };
            let reach = prev.get(j).min(prev.get(j.wrapping_sub(1))).min(slid);
            if !reach.is_finite() && j > mandatory_hi {
                break;
            }
            let v = if reach.is_finite() {
                self.admitted(i, j).max(reach)
            } else {
                INF
            };
            vals.push(v);
            j += 1;
        }
        RowBand::trimmed(start, vals)
    }

    /// Run the DP over `rows`, returning the per-row bands, or the number of
    /// rows survived if the frontier dies.
    fn sweep(
        &mut self,
        first: RowBand,
        rows: std::ops::Range<usize>,
    ) -> Result<Vec<RowBand>, usize> {
        let mut bands = Vec::with_capacity(rows.len() + 1);
        if first.is_empty() {
            return Err(0);
        }
        bands.push(first);
        for i in rows {
            let next = self.advance(bands.last().unwrap(), i);
            if next.is_empty() {
                return Err(bands.len());
            }
            if self.over_budget() {
                return Err(usize::MAX);
            }
            bands.push(next);
        }
        Ok(bands)
    }
}

/// Walk a band stack downward from `(top_row, top_col)` to `bottom_row`,
/// emitting visited cells. Prefers the predecessor with the smallest
/// bottleneck, so the emitted staircase realizes the minimax value.
/// `bands[k]` holds row `bottom_row + k`.
fn backtrack(
    bands: &[RowBand],
    bottom_row: usize,
    top_col: usize,
    stop_col: Option<usize>,
) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    let mut k = bands.len() - 1;
    let mut j = top_col;
    loop {
        cells.push((bottom_row + k, j));
        if k == 0 {
            match stop_col {
                // slide left to the pinned column
                Some(stop) if j > stop => {
                    j -= 1;
                    continue;
                }
                _ => break,
            }
        }
        let down = bands[k - 1].get(j);
        let diag = bands[k - 1].get(j.wrapping_sub(1));
        let slide = bands[k].get(j.wrapping_sub(1));
        if down.is_finite() && down <= diag && down <= slide {
            k -= 1;
        } else if diag.is_finite() && diag <= slide {
            k -= 1;
            j -= 1;
        } else if slide.is_finite() {
            j -= 1;
        } else {
            unreachable!("band stack admits no predecessor at ({k}, {j})");
        }
    }
    cells.reverse();
    cells
}

/// Decide whether a monotone matching pinned at the (0,0)-time cell exists,
/// and return the staircase with the smallest bottleneck distance.
pub fn monotone_match(
    space: &dyn SpaceModel,
    a: &SampleGrid,
    b: &SampleGrid,
    cfg: &MatchConfig,
) -> MatchOutcome {
    let n_a = a.times.len();
    let n_b = b.times.len();
    let az = a.zero;
    let bz = b.zero;
    let mut m = Matcher {
        space,
        a,
        b,
        cfg,
        touched: 0,
    };

    // phase 1: reach the pin from row 0 start cells (columns at times <= 0)
    let mut start_vals = vec![INF; bz + 1];
    for (j, slot) in start_vals.iter_mut().enumerate() {
        *slot = m.admitted(0, j);
    }
    let first = RowBand::trimmed(0, start_vals);
    let up = match m.sweep(first, 1..az + 1) {
        Ok(bands) => bands,
        Err(usize::MAX) => return MatchOutcome::BudgetExhausted,
        Err(rows) => return MatchOutcome::NoPath {
            rows_survived: rows,
        },
    };
    let pin_val = up.last().unwrap().get(bz);
    if !pin_val.is_finite() {
        return MatchOutcome::NoPath { rows_survived: az };
    }

    // phase 2: from the pin, slides right then rows onward
    let mut run = vec![pin_val];
    let mut j = bz + 1;
    while j < n_b {
        let v = m.admitted(az, j);
        if !v.is_finite() {
            break;
        }
        run.push(v.max(*run.last().unwrap()));
        j += 1;
    }
    let restart = RowBand { lo: bz, vals: run };
    let down = match m.sweep(restart, az + 1..n_a) {
        Ok(bands) => bands,
        Err(usize::MAX) => return MatchOutcome::BudgetExhausted,
        Err(rows) => return MatchOutcome::NoPath {
            rows_survived: az + rows,
        },
    };

    // stitch the two staircases at the pin
    let end_col = down.last().unwrap().best_col().expect("nonempty final band");
    let mut path = backtrack(&up, 0, bz, None);
    let tail = backtrack(&down, az, end_col, Some(bz));
    path.extend(tail.into_iter().skip_while(|&(i, j)| i == az && j <= bz));
    MatchOutcome::Matched(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::circle::{Circle, RotationFlow};
    use crate::pseudo_orbit::PseudoOrbit;

    fn grid_of(times: Vec<f64>, coords: Vec<f64>) -> SampleGrid {
        let points: Vec<Point> = coords.into_iter().map(Point::d1).collect();
        let speeds = local_speeds(&Circle, &times, &points);
        let zero = zero_index(&times);
        SampleGrid {
            times,
            points,
            speeds,
            zero,
        }
    }

    fn cfg(eps: f64, dt: f64) -> MatchConfig {
        MatchConfig {
            eps,
            slack_factor: 1.5,
            dt,
            cell_budget: 1_000_000,
        }
    }

    #[test]
    fn lattice_includes_zero_and_endpoints() {
        let ts = lattice_times(-1.3, 2.05, 0.5);
        assert_eq!(ts[0], -1.3);
        assert!(ts.contains(&0.0));
        assert_eq!(*ts.last().unwrap(), 2.05);
        let exact = lattice_times(-1.0, 2.0, 0.5);
        assert_eq!(exact.len(), 7);
        assert_eq!(exact[0], -1.0);
        assert_eq!(*exact.last().unwrap(), 2.0);
    }

    #[test]
    fn identical_curves_match_on_the_diagonal() {
        let times: Vec<f64> = (0..10).map(|k| 0.25 * k as f64).collect();
        let coords: Vec<f64> = times.iter().map(|t| (0.1 + 0.3 * t) % 1.0).collect();
        let a = grid_of(times.clone(), coords.clone());
        let b = grid_of(times, coords);
        // with zero slack only the exact diagonal is feasible
        let strict = MatchConfig {
            slack_factor: 0.0,
            ..cfg(0.01, 0.25)
        };
        match monotone_match(&Circle, &a, &b, &strict) {
            MatchOutcome::Matched(path) => {
                let diagonal: Vec<(usize, usize)> = (0..10).map(|k| (k, k)).collect();
                assert_eq!(path, diagonal);
            }
            other => panic!("expected match, got {other:?}"),
        }
        assert!(matches!(
            monotone_match(&Circle, &a, &b, &cfg(0.01, 0.25)),
            MatchOutcome::Matched(_)
        ));
    }

    #[test]
    fn separated_curves_do_not_match() {
        let times: Vec<f64> = (0..8).map(|k| 0.25 * k as f64).collect();
        let a_coords: Vec<f64> = times.iter().map(|_| 0.1).collect();
        let b_coords: Vec<f64> = times.iter().map(|_| 0.6).collect();
        let a = grid_of(times.clone(), a_coords);
        let b = grid_of(times, b_coords);
        match monotone_match(&Circle, &a, &b, &cfg(0.05, 0.25)) {
            MatchOutcome::NoPath { rows_survived } => assert_eq!(rows_survived, 0),
            other => panic!("expected no path, got {other:?}"),
        }
    }

    #[test]
    fn pin_is_enforced_even_when_offset_matchings_exist() {
        // B equals A shifted by 0.3 in space; without the h(0)=0 pin the
        // offset diagonal would match
        let times: Vec<f64> = (0..12).map(|k| 0.25 * k as f64).collect();
        let a_coords: Vec<f64> = times.iter().map(|t| (0.4 * t) % 1.0).collect();
        let b_coords: Vec<f64> = times.iter().map(|t| (0.3 + 0.4 * t) % 1.0).collect();
        let a = grid_of(times.clone(), a_coords);
        let b = grid_of(times, b_coords);
        assert!(matches!(
            monotone_match(&Circle, &a, &b, &cfg(0.05, 0.25)),
            MatchOutcome::NoPath { .. }
        ));
    }

    #[test]
    fn time_dilation_is_absorbed() {
        // same loop traversed at different speeds: B needs 1.4x the time
        let a_times: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
        let a_coords: Vec<f64> = a_times.iter().map(|t| (0.2 * t) % 1.0).collect();
        let b_times: Vec<f64> = (0..=30).map(|k| 0.25 * k as f64).collect();
        let b_coords: Vec<f64> = b_times.iter().map(|t| (0.2 / 1.4 * t) % 1.0).collect();
        let a = grid_of(a_times, a_coords);
        let b = grid_of(b_times, b_coords);
        match monotone_match(&Circle, &a, &b, &cfg(0.05, 0.25)) {
            MatchOutcome::Matched(path) => {
                let (last_i, last_j) = *path.last().unwrap();
                assert_eq!(last_i, 20);
                assert!(last_j > 20, "matching should dilate time, got {last_j}");
            }
            other => panic!("expected match, got {other:?}"),
        }
    }

    #[test]
    fn path_is_monotone_and_contiguous() {
        let times: Vec<f64> = (-4..=8).map(|k| 0.5 * k as f64).collect();
        let coords: Vec<f64> = times.iter().map(|t| (0.15 * t).rem_euclid(1.0)).collect();
        let a = grid_of(times.clone(), coords.clone());
        let b = grid_of(times, coords);
        let MatchOutcome::Matched(path) = monotone_match(&Circle, &a, &b, &cfg(0.02, 0.5)) else {
            panic!("expected match");
        };
        assert_eq!(path[0].0, 0);
        assert_eq!(path.last().unwrap().0, a.times.len() - 1);
        assert!(path.contains(&(a.zero, b.zero)), "pin missing from {path:?}");
        for w in path.windows(2) {
            let (i0, j0) = w[0];
            let (i1, j1) = w[1];
            let step = (i1 - i0, j1 - j0);
            assert!(
                step == (0, 1) || step == (1, 0) || step == (1, 1),
                "illegal step {step:?}"
            );
        }
    }

    #[test]
    fn grids_agree_with_direct_evaluation() {
        let orbit = PseudoOrbit::bi_infinite(
            -2,
            vec![
                (Point::d1(0.8), 1.0),
                (Point::d1(0.9), 1.5),
                (Point::d1(0.15), 1.0),
                (Point::d1(0.4), 2.0),
            ],
        )
        .unwrap();
        let g = trace_grid(&RotationFlow, &orbit, 0.5).unwrap();
        assert_eq!(g.times[g.zero], 0.0);
        for (k, &t) in g.times.iter().enumerate() {
            let want = orbit.trace(&RotationFlow, t).unwrap();
            assert!(Circle.dist(&g.points[k], &want) < 1e-12);
        }
        let c = candidate_grid(&RotationFlow, &Point::d1(0.3), -2.0, 3.0, 0.5).unwrap();
        for (k, &t) in c.times.iter().enumerate() {
            let want = RotationFlow.evolve(&Point::d1(0.3), t).unwrap();
            assert!(Circle.dist(&c.points[k], &want) < 1e-9, "t = {t}");
        }
    }
}
