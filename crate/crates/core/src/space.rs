//! Metric space models: the ambient compact spaces flows act on.
//!
//! A space model couples a metric with a bounded chart description. The chart
//! is what samplers, box covers and candidate grids enumerate; the metric is
//! what every shadowing quantity is measured in. The two may use different
//! scales (charts are never rescaled, metrics sometimes are), so conversions
//! go through [`SpaceModel::chart_radius`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Finite-precision slack accepted when asserting metric symmetry.
pub const METRIC_SYM_TOL: f64 = 1e-12;
/// Slack accepted on sampled triangle-inequality checks.
pub const TRIANGLE_SLACK: f64 = 1e-9;

/// Hard cap on chart dimension. Every model here fits, and the inline buffer
/// keeps points off the heap in the matcher's cell loops.
pub const MAX_DIM: usize = 4;

/// A point of a space, stored as chart coordinates.
///
/// Coordinates are model-specific; only the owning model can interpret them.
/// Unused trailing slots are always zero, so derived equality is exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    n: u8,
    xs: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point::from_coords(&coords)
    }

    /// Copies a chart slice; panics past [`MAX_DIM`] axes.
    pub fn from_coords(coords: &[f64]) -> Self {
        assert!(
            coords.len() <= MAX_DIM,
            "chart dimension {} exceeds the {MAX_DIM}-slot point buffer",
            coords.len()
        );
        let mut xs = [0.0; MAX_DIM];
        xs[..coords.len()].copy_from_slice(coords);
        Point {
            n: coords.len() as u8,
            xs,
        }
    }

    pub fn d1(x: f64) -> Self {
        Point {
            n: 1,
            xs: [x, 0.0, 0.0, 0.0],
        }
    }

    pub fn d2(x: f64, y: f64) -> Self {
        Point {
            n: 2,
            xs: [x, y, 0.0, 0.0],
        }
    }

    pub fn d3(x: f64, y: f64, z: f64) -> Self {
        Point {
            n: 3,
            xs: [x, y, z, 0.0],
        }
    }

    /// This point with one more trailing coordinate.
    pub fn extended(&self, v: f64) -> Self {
        let mut out = *self;
        assert!(
            out.n < MAX_DIM as u8,
            "chart dimension {MAX_DIM} exceeds the point buffer"
        );
        out.xs[out.n as usize] = v;
        out.n += 1;
        out
    }

    pub fn coords(&self) -> &[f64] {
        &self.xs[..self.n as usize]
    }

    pub fn dim(&self) -> usize {
        self.n as usize
    }

    /// Coordinate accessor; panics on out-of-range axis.
    pub fn c(&self, axis: usize) -> f64 {
        self.coords()[axis]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point::from_coords(&v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords().to_vec()
    }
}

#[derive(Debug, Error)]
pub enum SpaceError {
    /// The rejection sampler could not land inside the requested ball.
    #[error("sampler produced no point in the {radius}-ball after {attempts} attempts")]
    DegenerateBall { radius: f64, attempts: u32 },
    /// A sampled axiom check failed; carries a human-readable account.
    #[error("metric axiom violated: {0}")]
    AxiomViolation(String),
}

/// A compact metric space with a bounded chart.
///
/// `dist` must be a metric up to floating-point slack. `project` maps raw
/// chart coordinates to a canonical point of the space (wrapping periodic
/// axes, snapping into totally disconnected sets) and is how grids and noise
/// reach the space without knowing its shape.
pub trait SpaceModel: Send + Sync {
    fn name(&self) -> &str;

    /// Chart dimension (length of every `Point` of this space).
    fn chart_dim(&self) -> usize;

    fn dist(&self, p: &Point, q: &Point) -> f64;

    /// Diameter of the space in the metric.
    fn diameter(&self) -> f64;

    /// Inclusive chart bounds per axis.
    fn chart_bounds(&self) -> Vec<(f64, f64)>;

    /// Which chart axes wrap around (period = bound width).
    fn periodic_axes(&self) -> Vec<bool> {
        vec![false; self.chart_dim()]
    }

    /// Canonicalize arbitrary chart coordinates into the space.
    fn project(&self, chart: &[f64]) -> Point;

    /// Half-width, in chart units, of a box guaranteed to contain the
    /// metric ball of radius `r`. Identity unless the metric is rescaled
    /// against the chart.
    fn chart_radius(&self, r: f64) -> f64 {
        r
    }

    /// Quasi-uniform seeded sample of the space. Deterministic per seed.
    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        let bounds = self.chart_bounds();
        let offsets: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, 0x5eed_5a3e));
            (0..bounds.len()).map(|_| rng.random::<f64>()).collect()
        };
        (0..n)
            .map(|i| {
                let chart: Vec<f64> = bounds
                    .iter()
                    .enumerate()
                    .map(|(axis, &(lo, hi))| {
                        let u = (halton(i as u64 + 1, HALTON_BASES[axis % HALTON_BASES.len()])
                            + offsets[axis])
                            .fract();
                        lo + u * (hi - lo)
                    })
                    .collect();
                self.project(&chart)
            })
            .collect()
    }

    /// One point of the metric ball `B[center, radius]`, uniform-ish via
    /// rejection through `project`. The center itself is always admissible,
    /// so this fails only on NaN-poisoned inputs.
    fn sample_ball(
        &self,
        center: &Point,
        radius: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Point, SpaceError> {
        const ATTEMPTS: u32 = 64;
        let r_chart = self.chart_radius(radius);
        for _ in 0..ATTEMPTS {
            let chart: Vec<f64> = center
                .coords()
                .iter()
                .map(|&c| c + rng.random_range(-r_chart..=r_chart))
                .collect();
            let p = self.project(&chart);
            if self.dist(center, &p) <= radius {
                return Ok(p);
            }
        }
        // Degenerate neighborhoods (isolated points) still admit the center.
        let p = self.project(center.coords());
        if self.dist(center, &p) <= radius {
            return Ok(p);
        }
        Err(SpaceError::DegenerateBall {
            radius,
            attempts: ATTEMPTS,
        })
    }

    /// Deterministic lattice over the metric ball `B[center, radius]` at the
    /// given chart spacing, projected into the space, deduplicated, with the
    /// center first. This is the candidate set shadowing searches sweep.
    fn grid_ball(&self, center: &Point, radius: f64, spacing: f64) -> Vec<Point> {
        let r_chart = self.chart_radius(radius);
        let steps = (r_chart / spacing).floor() as i64;
        let dim = self.chart_dim();
        let mut out = vec![self.project(center.coords())];
        let mut idx = vec![-steps; dim];
        'outer: loop {
            let chart: Vec<f64> = (0..dim)
                .map(|axis| center.c(axis) + idx[axis] as f64 * spacing)
                .collect();
            let p = self.project(&chart);
            if self.dist(center, &p) <= radius && !out.iter().any(|q| points_close(q, &p)) {
                out.push(p);
            }
            for axis in 0..dim {
                idx[axis] += 1;
                if idx[axis] <= steps {
                    continue 'outer;
                }
                idx[axis] = -steps;
            }
            break;
        }
        out
    }
}

const HALTON_BASES: [u64; 4] = [2, 3, 5, 7];

fn points_close(a: &Point, b: &Point) -> bool {
    a.coords()
        .iter()
        .zip(b.coords())
        .all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// Van der Corput radical inverse of `i` in the given base.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// splitmix64-style mixer for deriving per-stream seeds.
pub fn mix64(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded RNG for a derived stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed, stream))
}

/// Summary of a sampled metric-axiom sweep.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub samples: usize,
    pub max_self_dist: f64,
    pub max_symmetry_defect: f64,
    pub max_triangle_defect: f64,
}

/// Sampled check of the metric axioms: identity, symmetry, triangle.
///
/// Exercises `sample` output pairwise plus random triples. Fails loudly with
/// the first violated axiom rather than collecting everything.
pub fn check_metric_axioms(
    space: &dyn SpaceModel,
    n: usize,
    seed: u64,
) -> Result<MetricReport, SpaceError> {
    let pts = space.sample(n.max(3), seed);
    let mut report = MetricReport {
        samples: pts.len(),
        max_self_dist: 0.0,
        max_symmetry_defect: 0.0,
        max_triangle_defect: 0.0,
    };
    for p in &pts {
        let d = space.dist(p, p);
        report.max_self_dist = report.max_self_dist.max(d);
        if d > METRIC_SYM_TOL {
            return Err(SpaceError::AxiomViolation(format!(
                "dist(p,p) = {d:.3e} for p = {:?}",
                p
            )));
        }
    }
    let mut rng = stream_rng(seed, 0xa10a);
    for _ in 0..pts.len() * 3 {
        let a = &pts[rng.random_range(0..pts.len())];
        let b = &pts[rng.random_range(0..pts.len())];
        let c = &pts[rng.random_range(0..pts.len())];
        let dab = space.dist(a, b);
        let dba = space.dist(b, a);
        let sym = (dab - dba).abs();
        report.max_symmetry_defect = report.max_symmetry_defect.max(sym);
        if sym > METRIC_SYM_TOL {
            return Err(SpaceError::AxiomViolation(format!(
                "symmetry defect {sym:.3e} between {:?} and {:?}",
                a, b
            )));
        }
        let tri = dab - (space.dist(a, c) + space.dist(c, b));
        report.max_triangle_defect = report.max_triangle_defect.max(tri);
        if tri > TRIANGLE_SLACK {
            return Err(SpaceError::AxiomViolation(format!(
                "triangle defect {tri:.3e} on ({:?}, {:?}, {:?})",
                a, b, c
            )));
        }
        if dab < 0.0 {
            return Err(SpaceError::AxiomViolation(format!(
                "negative distance {dab:.3e}"
            )));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct UnitInterval;

    impl SpaceModel for UnitInterval {
        fn name(&self) -> &str {
            "unit-interval"
        }
        fn chart_dim(&self) -> usize {
            1
        }
        fn dist(&self, p: &Point, q: &Point) -> f64 {
            (p.c(0) - q.c(0)).abs()
        }
        fn diameter(&self) -> f64 {
            1.0
        }
        fn chart_bounds(&self) -> Vec<(f64, f64)> {
            vec![(0.0, 1.0)]
        }
        fn project(&self, chart: &[f64]) -> Point {
            Point::d1(chart[0].clamp(0.0, 1.0))
        }
    }

    #[test]
    fn halton_is_low_discrepancy_prefix() {
        // first few base-2 radical inverses
        let got: Vec<f64> = (1..=4).map(|i| halton(i, 2)).collect();
        assert_eq!(got, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn sample_is_deterministic_per_seed() {
        let s = UnitInterval;
        assert_eq!(s.sample(16, 7), s.sample(16, 7));
        assert_ne!(s.sample(16, 7), s.sample(16, 8));
    }

    #[test]
    fn grid_ball_includes_center_and_respects_radius() {
        let s = UnitInterval;
        let grid = s.grid_ball(&Point::d1(0.5), 0.1, 0.02);
        assert_eq!(grid[0], Point::d1(0.5));
        assert!(grid.len() > 5);
        for p in &grid {
            assert!(s.dist(&Point::d1(0.5), p) <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn grid_ball_clamps_at_boundary() {
        let s = UnitInterval;
        let grid = s.grid_ball(&Point::d1(0.0), 0.1, 0.02);
        for p in &grid {
            assert!(p.c(0) >= 0.0);
        }
    }

    #[test]
    fn sample_ball_stays_in_ball() {
        let s = UnitInterval;
        let mut rng = stream_rng(3, 1);
        for _ in 0..100 {
            let p = s.sample_ball(&Point::d1(0.3), 0.05, &mut rng).unwrap();
            assert!(s.dist(&Point::d1(0.3), &p) <= 0.05);
        }
    }

    #[test]
    fn metric_axioms_pass_on_interval() {
        let rep = check_metric_axioms(&UnitInterval, 64, 1).unwrap();
        assert_eq!(rep.max_symmetry_defect, 0.0);
    }
}
