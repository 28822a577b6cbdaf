//! Chain-recurrence structure over a box discretization.
//!
//! The chart is covered by axis-aligned cells of diameter rho. Transitions
//! are sampled per box and fattened by delta, giving an outer approximation
//! of the time-T chain relation. Chain recurrence, chain transitivity, and
//! the two-way chain relation are then graph questions. Nonwandering and
//! transitivity probes work on orbits directly and are inner approximations:
//! the two kinds of estimate bracket the truth from opposite sides.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::flow::{Flow, FlowError};
use crate::space::{stream_rng, Point, SpaceModel};
use rand::Rng;

#[derive(Debug, Error)]
pub enum RecurrenceError {
    #[error("point {coords:?} lies outside the covered chart")]
    OutsideCover { coords: Vec<f64> },
    #[error("chain horizon must be at least 1, got {0}")]
    BadHorizon(f64),
    #[error("cover cell diameter must be positive and finite, got {0}")]
    BadCell(f64),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Axis-aligned cells of diameter `rho` tiling the chart box.
#[derive(Debug, Clone)]
pub struct BoxCover {
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    rho: f64,
    dims: Vec<usize>,
}

impl BoxCover {
    pub fn new(space: &dyn SpaceModel, rho: f64) -> Result<Self, RecurrenceError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(RecurrenceError::BadCell(rho));
        }
        let bounds = space.chart_bounds();
        let periodic = space.periodic_axes();
        let dims = bounds
            .iter()
            .map(|(lo, hi)| (((hi - lo) / rho).ceil() as usize).max(1))
            .collect();
        Ok(BoxCover {
            bounds,
            periodic,
            rho,
            dims,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn axis_index(&self, axis: usize, x: f64) -> Option<usize> {
        let (lo, hi) = self.bounds[axis];
        let n = self.dims[axis];
        let u = if self.periodic[axis] {
            (x - lo).rem_euclid(hi - lo) / self.rho
        } else {
            if x < lo - 1e-12 || x > hi + 1e-12 {
                return None;
            }
            ((x - lo) / self.rho).max(0.0)
        };
        let mut k = u.floor() as usize;
        // boundary ties go to the smaller index
        if k > 0 && u == k as f64 {
            k -= 1;
        }
        Some(k.min(n - 1))
    }

    /// Index of the cell containing `p`; boundary ties resolve to the
    /// lexicographically smallest cell.
    pub fn box_of(&self, p: &Point) -> Result<usize, RecurrenceError> {
        let mut idx = 0usize;
        for axis in 0..self.bounds.len() {
            let k = self
                .axis_index(axis, p.c(axis))
                .ok_or_else(|| RecurrenceError::OutsideCover {
                    coords: p.coords().to_vec(),
                })?;
            idx = idx * self.dims[axis] + k;
        }
        Ok(idx)
    }

    fn axis_indices(&self, idx: usize) -> Vec<usize> {
        let mut rest = idx;
        let mut ks = vec![0usize; self.dims.len()];
        for axis in (0..self.dims.len()).rev() {
            ks[axis] = rest % self.dims[axis];
            rest /= self.dims[axis];
        }
        ks
    }

    /// Cell intervals, clipped to the chart.
    pub fn cell(&self, idx: usize) -> Vec<(f64, f64)> {
        self.axis_indices(idx)
            .iter()
            .enumerate()
            .map(|(axis, &k)| {
                let (lo, hi) = self.bounds[axis];
                let a = lo + k as f64 * self.rho;
                let b = (a + self.rho).min(hi);
                (a, b)
            })
            .collect()
    }

    pub fn center(&self, idx: usize) -> Point {
        let chart: Vec<f64> = self
            .cell(idx)
            .iter()
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Point::new(chart)
    }

    /// Distance from a chart point to a cell, combining per-axis gaps with
    /// wrap on periodic axes. Matches the flat metric the models use.
    pub fn dist_to_cell(&self, p: &Point, idx: usize) -> f64 {
        let cell = self.cell(idx);
        let mut sq = 0.0;
        for (axis, &(a, b)) in cell.iter().enumerate() {
            let x = p.c(axis);
            let gap_at = |x: f64| -> f64 {
                if x < a {
                    a - x
                } else if x > b {
                    x - b
                } else {
                    0.0
                }
            };
            let mut g = gap_at(x);
            if self.periodic[axis] {
                let period = self.bounds[axis].1 - self.bounds[axis].0;
                g = g.min(gap_at(x + period)).min(gap_at(x - period));
            }
            sq += g * g;
        }
        sq.sqrt()
    }

    /// Cells intersecting the axis-aligned box of half-width `r` around `p`,
    /// in ascending index order.
    fn cells_near(&self, p: &Point, r: f64) -> Vec<usize> {
        let mut ranges: Vec<Vec<usize>> = Vec::with_capacity(self.dims.len());
        for axis in 0..self.dims.len() {
            let n = self.dims[axis];
            let (lo, _) = self.bounds[axis];
            let k_lo = ((p.c(axis) - r - lo) / self.rho).floor() as i64;
            let k_hi = ((p.c(axis) + r - lo) / self.rho).floor() as i64;
            let mut ks: Vec<usize> = Vec::new();
            if self.periodic[axis] {
                for k in k_lo..=k_hi {
                    let w = k.rem_euclid(n as i64) as usize;
                    if !ks.contains(&w) {
                        ks.push(w);
                    }
                }
            } else {
                for k in k_lo.max(0)..=k_hi.min(n as i64 - 1) {
                    ks.push(k as usize);
                }
            }
            ks.sort_unstable();
            ranges.push(ks);
        }
        let mut out = vec![0usize];
        for (axis, ks) in ranges.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * ks.len());
            for &base in &out {
                for &k in ks {
                    next.push(base * self.dims[axis] + k);
                }
            }
            out = next;
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Deterministic per-cell sample: a stratified lattice with bounded
    /// jitter. Strata keep the worst-case gap near rho/n, which expanding
    /// flows need so their fattened images stay gap-free.
    pub fn cell_samples(&self, idx: usize, n: usize, seed: u64) -> Vec<Point> {
        let cell = self.cell(idx);
        let n = n.max(1);
        if n == 1 {
            return vec![self.center(idx)];
        }
        let dim = cell.len();
        let m = (n as f64).powf(1.0 / dim as f64).ceil() as usize;
        let mut rng = stream_rng(seed, idx as u64);
        let mut out = Vec::with_capacity(n);
        let mut grid = vec![0usize; dim];
        'fill: loop {
            let chart: Vec<f64> = cell
                .iter()
                .enumerate()
                .map(|(axis, &(a, b))| {
                    let w = (b - a) / m as f64;
                    let jitter: f64 = rng.random_range(-0.25..0.25);
                    a + (grid[axis] as f64 + 0.5 + jitter) * w
                })
                .collect();
            out.push(Point::new(chart));
            if out.len() == n {
                break;
            }
            for axis in 0..dim {
                grid[axis] += 1;
                if grid[axis] < m {
                    continue 'fill;
                }
                grid[axis] = 0;
            }
            break;
        }
        out
    }
}

/// Sampled, delta-fattened time-T transition relation between cover cells.
pub struct TransitionGraph {
    cover: BoxCover,
    t: f64,
    delta: f64,
    samples_per_box: usize,
    seed: u64,
    out: Vec<Vec<u32>>,
}

pub fn build_transition_graph(
    flow: &dyn Flow,
    cover: BoxCover,
    t: f64,
    delta: f64,
    samples_per_box: usize,
    seed: u64,
) -> Result<TransitionGraph, RecurrenceError> {
    if !(t >= 1.0) {
        return Err(RecurrenceError::BadHorizon(t));
    }
    let n = cover.len();
    let per_box: Vec<Result<Vec<u32>, RecurrenceError>> = (0..n)
        .into_par_iter()
        .map(|b| {
            let mut targets: Vec<u32> = Vec::new();
            for x in cover.cell_samples(b, samples_per_box, seed) {
                let z = flow.evolve(&x, t)?;
                for c in cover.cells_near(&z, delta + cover.rho()) {
                    if cover.dist_to_cell(&z, c) <= delta {
                        targets.push(c as u32);
                    }
                }
            }
            targets.sort_unstable();
            targets.dedup();
            Ok(targets)
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for r in per_box {
        out.push(r?);
    }
    Ok(TransitionGraph {
        cover,
        t,
        delta,
        samples_per_box,
        seed,
        out,
    })
}

impl TransitionGraph {
    pub fn cover(&self) -> &BoxCover {
        &self.cover
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn samples_per_box(&self) -> usize {
        self.samples_per_box
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out[from].binary_search(&(to as u32)).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(b, ts)| ts.iter().map(move |&c| (b, c as usize)))
    }

    /// Nodes reachable from `from` by paths of length at least one.
    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.out.len()];
        let mut stack: Vec<u32> = self.out[from].clone();
        while let Some(v) = stack.pop() {
            let v = v as usize;
            if v == to {
                return true;
            }
            if !seen[v] {
                seen[v] = true;
                stack.extend_from_slice(&self.out[v]);
            }
        }
        false
    }
}

/// Two-way chain relation at the graph's (delta, T): nonempty chains from
/// p's cell to q's cell and back.
pub fn chain_related(
    g: &TransitionGraph,
    p: &Point,
    q: &Point,
) -> Result<bool, RecurrenceError> {
    let bp = g.cover.box_of(p)?;
    let bq = g.cover.box_of(q)?;
    Ok(g.reaches(bp, bq) && g.reaches(bq, bp))
}

/// Component id per node, via two iterative depth-first passes.
pub fn strongly_connected_components(out: &[Vec<u32>]) -> Vec<usize> {
    let n = out.len();
    let mut rin = vec![Vec::new(); n];
    for (b, ts) in out.iter().enumerate() {
        for &c in ts {
            rin[c as usize].push(b as u32);
        }
    }
    // pass 1: finish order on the forward graph
    let mut finish: Vec<u32> = Vec::with_capacity(n);
    let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
    let mut stack: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if state[root as usize] != 0 {
            continue;
        }
        state[root as usize] = 1;
        stack.push((root, 0));
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            let vs = v as usize;
            if *i < out[vs].len() {
                let w = out[vs][*i] as usize;
                *i += 1;
                if state[w] == 0 {
                    state[w] = 1;
                    stack.push((w as u32, 0));
                }
            } else {
                state[vs] = 2;
                finish.push(v);
                stack.pop();
            }
        }
    }
    // pass 2: reverse graph in reverse finish order
    let mut comp = vec![usize::MAX; n];
    let mut next_comp = 0usize;
    let mut dfs: Vec<u32> = Vec::new();
    for &root in finish.iter().rev() {
        if comp[root as usize] != usize::MAX {
            continue;
        }
        comp[root as usize] = next_comp;
        dfs.push(root);
        while let Some(v) = dfs.pop() {
            for &w in &rin[v as usize] {
                if comp[w as usize] == usize::MAX {
                    comp[w as usize] = next_comp;
                    dfs.push(w);
                }
            }
        }
        next_comp += 1;
    }
    comp
}

/// Cells estimated chain recurrent: members of multi-cell components plus
/// self-looping cells. Grows with delta because edges do.
pub fn chain_recurrent_boxes(g: &TransitionGraph) -> Vec<usize> {
    let comp = strongly_connected_components(&g.out);
    let mut size = vec![0usize; g.out.len()];
    for &c in &comp {
        size[c] += 1;
    }
    (0..g.out.len())
        .filter(|&b| size[comp[b]] > 1 || g.has_edge(b, b))
        .collect()
}

/// True iff every cell sits in one strongly connected component that
/// actually cycles.
pub fn chain_transitive_check(g: &TransitionGraph) -> bool {
    let comp = strongly_connected_components(&g.out);
    let one = comp.iter().all(|&c| c == comp[0]);
    one && (g.out.len() > 1 || g.has_edge(0, 0))
}

/// Return-probe parameters for the nonwandering estimate.
#[derive(Debug, Clone, Copy)]
pub struct ReturnProbe {
    pub eps_nbhd: f64,
    pub t_max: f64,
    /// Return times are scanned on 1.0, 1.0 + step, ... up to t_max.
    pub t_step: f64,
    pub ball_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnLabel {
    pub point: Point,
    pub nonwandering: bool,
    pub return_time: Option<f64>,
}

/// Label each sample nonwandering when some neighbor returns to the
/// neighborhood at a probed time. Witnessed returns only: an inner
/// approximation of the nonwandering set.
pub fn nonwandering_estimate(
    flow: &dyn Flow,
    samples: &[Point],
    probe: &ReturnProbe,
) -> Result<Vec<ReturnLabel>, RecurrenceError> {
    let space = flow.space();
    let labels: Vec<Result<ReturnLabel, RecurrenceError>> = samples
        .par_iter()
        .enumerate()
        .map(|(si, p)| {
            let mut neighbors = vec![p.clone()];
            let mut rng = stream_rng(probe.seed, si as u64);
            for _ in 1..probe.ball_samples.max(1) {
                if let Ok(u) = space.sample_ball(p, probe.eps_nbhd, &mut rng) {
                    neighbors.push(u);
                }
            }
            for u in &neighbors {
                let mut z = flow.evolve(u, 1.0)?;
                let mut t = 1.0;
                loop {
                    if space.dist(&z, p) <= probe.eps_nbhd {
                        return Ok(ReturnLabel {
                            point: p.clone(),
                            nonwandering: true,
                            return_time: Some(t),
                        });
                    }
                    if t + probe.t_step > probe.t_max {
                        break;
                    }
                    z = flow.evolve(&z, probe.t_step)?;
                    t += probe.t_step;
                }
            }
            Ok(ReturnLabel {
                point: p.clone(),
                nonwandering: false,
                return_time: None,
            })
        })
        .collect();
    labels.into_iter().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub dense: bool,
    pub coverage: f64,
    pub visited: usize,
    pub targets: usize,
}

/// Does the forward orbit of `start` pass within eps_dense of every target
/// before the horizon?
pub fn transitivity_probe(
    flow: &dyn Flow,
    start: &Point,
    horizon: f64,
    eps_dense: f64,
    targets: &[Point],
) -> Result<CoverageReport, RecurrenceError> {
    let space = flow.space();
    let step = (eps_dense / (2.0 * flow.speed_bound().max(1e-6))).min(horizon.max(1e-6));
    let mut hit = vec![false; targets.len()];
    let mut remaining = targets.len();
    let mut z = start.clone();
    let mut t = 0.0;
    loop {
        for (k, q) in targets.iter().enumerate() {
            if !hit[k] && space.dist(&z, q) <= eps_dense {
                hit[k] = true;
                remaining -= 1;
            }
        }
        if remaining == 0 || t >= horizon {
            break;
        }
        let dt = step.min(horizon - t);
        z = flow.evolve(&z, dt)?;
        t += dt;
    }
    let visited = targets.len() - remaining;
    Ok(CoverageReport {
        dense: remaining == 0,
        coverage: if targets.is_empty() {
            1.0
        } else {
            visited as f64 / targets.len() as f64
        },
        visited,
        targets: targets.len(),
    })
}

/// Density of every sampled orbit against the sample set itself.
pub fn minimality_probe(
    flow: &dyn Flow,
    starts: &[Point],
    horizon: f64,
    eps_dense: f64,
) -> Result<bool, RecurrenceError> {
    for p in starts {
        if !transitivity_probe(flow, p, horizon, eps_dense, starts)?.dense {
            return Ok(false);
        }
    }
    Ok(true)
}
