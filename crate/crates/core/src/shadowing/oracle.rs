//! Reference matcher used to audit the banded search.
//!
//! Answers only the existence question, with a full reachability table and
//! none of the frontier bookkeeping: two dense sweeps, one below the pin and
//! one above. Quadratic in grid size, so callers keep instances small.

use crate::flow::{Flow, FlowError};
use crate::space::{Point, SpaceModel};

use super::matching::{MatchConfig, SampleGrid};

fn feasible(space: &dyn SpaceModel, a: &SampleGrid, b: &SampleGrid, cfg: &MatchConfig, i: usize, j: usize) -> bool {
    let thresh = cfg.eps + cfg.slack_factor * a.speeds[i].max(b.speeds[j]) * cfg.dt + 1e-12;
    space.dist(&a.points[i], &b.points[j]) <= thresh
}

/// Does a monotone match of `a` against `b` exist, pinned through both zero
/// indices? Same feasibility rule as the banded matcher, independent search.
pub fn brute_force_match_exists(
    space: &dyn SpaceModel,
    a: &SampleGrid,
    b: &SampleGrid,
    cfg: &MatchConfig,
) -> bool {
    let n_a = a.times.len();
    let n_b = b.times.len();
    let az = a.zero;
    let bz = b.zero;

    // below the pin: rows 0..=az restricted to columns 0..=bz
    let mut reach = vec![false; bz + 1];
    for (j, slot) in reach.iter_mut().enumerate() {
        *slot = feasible(space, a, b, cfg, 0, j);
    }
    for i in 1..=az {
        let prev = reach.clone();
        for j in 0..=bz {
            let from_prev = prev[j] || (j > 0 && prev[j - 1]);
            let from_left = j > 0 && reach[j - 1];
            reach[j] = feasible(space, a, b, cfg, i, j) && (from_prev || from_left);
        }
    }
    if !reach[bz] {
        return false;
    }

    // above the pin: rows az..n_a restricted to columns bz..n_b
    let width = n_b - bz;
    let mut upper = vec![false; width];
    upper[0] = true;
    for k in 1..width {
        upper[k] = upper[k - 1] && feasible(space, a, b, cfg, az, bz + k);
    }
    for i in az + 1..n_a {
        let prev = upper.clone();
        for k in 0..width {
            let from_prev = prev[k] || (k > 0 && prev[k - 1]);
            let from_left = k > 0 && upper[k - 1];
            upper[k] = feasible(space, a, b, cfg, i, bz + k) && (from_prev || from_left);
        }
    }
    upper.iter().any(|&r| r)
}

/// Candidate samples rebuilt by evolving directly from `y` to each lattice
/// time, bypassing the incremental construction the search uses.
pub fn direct_candidate_points(
    flow: &dyn Flow,
    y: &Point,
    times: &[f64],
) -> Result<Vec<Point>, FlowError> {
    times.iter().map(|&t| flow.evolve(y, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::circle::{Circle, RotationFlow};
    use crate::pseudo_orbit::PseudoOrbit;
    use crate::shadowing::matching::{candidate_grid, monotone_match, trace_grid, MatchOutcome};
    use crate::space::{mix64, stream_rng};
    use rand::Rng;

    fn random_instance(seed: u64) -> (PseudoOrbit, Point, f64) {
        let mut rng = stream_rng(seed, 0x6f7261636c65);
        let n: usize = rng.random_range(2..8);
        let delta: f64 = rng.random_range(0.01..0.2);
        let mut entries = Vec::new();
        let mut x = Point::d1(rng.random_range(0.0..1.0));
        for _ in 0..n {
            entries.push((x.clone(), rng.random_range(0.5..1.5)));
            x = RotationFlow.evolve(&x, entries.last().unwrap().1).unwrap();
            let kick: f64 = rng.random_range(-1.0..1.0);
            x = Circle.project(&[x.c(0) + kick * delta]);
        }
        let y_off: f64 = rng.random_range(-1.5..1.5);
        let eps: f64 = rng.random_range(0.03..0.15);
        let y = Circle.project(&[entries[0].0.c(0) + y_off * eps]);
        (PseudoOrbit::forward(entries).unwrap(), y, eps)
    }

    #[test]
    fn banded_search_agrees_with_dense_table() {
        let mut matched = 0usize;
        for case in 0..120u64 {
            let (orbit, y, eps) = random_instance(mix64(7, case));
            // cycle the slack so the sample hits both outcomes
            let cfg = MatchConfig {
                eps,
                slack_factor: [0.0, 0.3, 1.5][case as usize % 3],
                dt: 0.25,
                cell_budget: u64::MAX,
            };
            let a = trace_grid(&RotationFlow, &orbit, cfg.dt).unwrap();
            let (lo, hi) = orbit.span();
            let b = candidate_grid(&RotationFlow, &y, 1.5 * lo, 1.5 * hi, cfg.dt).unwrap();
            let banded = matches!(
                monotone_match(&Circle, &a, &b, &cfg),
                MatchOutcome::Matched(_)
            );
            let dense = brute_force_match_exists(&Circle, &a, &b, &cfg);
            assert_eq!(banded, dense, "case {case}: banded {banded} dense {dense}");
            if banded {
                matched += 1;
            }
        }
        // the sample must exercise both answers or the test proves nothing
        assert!(matched > 10 && matched < 110, "matched {matched}/120");
    }

    #[test]
    fn incremental_candidate_grid_tracks_direct_evolution() {
        let (_, y, _) = random_instance(99);
        let b = candidate_grid(&RotationFlow, &y, -3.0, 4.0, 0.25).unwrap();
        let direct = direct_candidate_points(&RotationFlow, &y, &b.times).unwrap();
        for (p, q) in b.points.iter().zip(&direct) {
            assert!(Circle.dist(p, q) < 1e-9);
        }
    }
}
