//! Geometric Lorenz template: an exact linear saddle passage glued to a
//! piecewise-linear return flight, plus the classical ODE for side-by-side
//! exploration.
//!
//! States are charts (entry-x, entry-y, time-since-section) over the branched
//! trapping region; distances are Euclidean between the embedded positions,
//! so the chart never leaks into the metric.

use thiserror::Error;

use crate::flow::{Flow, FlowError, FlowKind};
use crate::models::circle::check_horizon;
use crate::integrate::integrate_dp54;
use crate::pseudo_orbit::{PseudoOrbit, PseudoOrbitError};
use crate::space::{Point, SpaceModel};

/// Time-since-section cap on the invariant fiber that never returns.
/// Positions are origin-indistinguishable long before this.
const STALL_CAP: f64 = 40.0;
/// A residual return time above this counts as "stuck at the saddle" for the
/// adversarial generator, which then hops one wing out instead of waiting.
const STALL_ESCAPE: f64 = 26.0;
/// Depth limit for the stable-set preimage search.
const PLAN_DEPTH: usize = 21;

#[derive(Debug, Error)]
pub enum LorenzError {
    #[error("geometric structure violated: {0}")]
    BadParams(String),
    #[error("adversarial plan found no in-budget kick onto the stable set")]
    PlanFailed,
    #[error(transparent)]
    Orbit(#[from] PseudoOrbitError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Saddle eigenvalues and return-surgery coefficients of the template.
///
/// The section map on entry-x is sign(x) * (offset + slope * |x|^alpha) with
/// alpha = weak/expansion, so `slope * alpha > 1` makes it everywhere
/// expanding and `offset < 0` makes orbits switch wings near the cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    /// Unstable eigenvalue at the saddle.
    pub expansion: f64,
    /// Strong stable eigenvalue, transverse to the branched surface.
    pub strong_contraction: f64,
    /// Weak stable eigenvalue; alpha = weak/expansion must stay below 1.
    pub weak_contraction: f64,
    /// Section-map slope coefficient.
    pub slope: f64,
    /// Section-map offset; the one-sided limit of the map at the cut.
    pub offset: f64,
    /// Transverse squeeze applied by the return flight.
    pub squeeze: f64,
    /// Time spent outside the saddle cube per revolution.
    pub flight_time: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            expansion: 10.0,
            strong_contraction: 20.0,
            weak_contraction: 7.5,
            slope: 1.6,
            offset: -0.85,
            squeeze: 0.25,
            flight_time: 1.0,
        }
    }
}

impl LorenzParams {
    pub fn alpha(&self) -> f64 {
        self.weak_contraction / self.expansion
    }

    pub fn beta(&self) -> f64 {
        self.strong_contraction / self.expansion
    }

    fn validate(&self) -> Result<(), LorenzError> {
        let bad = |msg: &str| Err(LorenzError::BadParams(msg.into()));
        if !(self.weak_contraction > 0.0
            && self.expansion > self.weak_contraction
            && self.strong_contraction > self.expansion)
        {
            return bad("saddle needs strong > expansion > weak > 0");
        }
        if self.slope * self.alpha() <= 1.0 {
            return bad("section map must expand: slope * alpha > 1");
        }
        if !(-1.0 < self.offset && self.offset < 0.0) {
            return bad("cut image must land strictly inside the far half");
        }
        let edge = self.slope + self.offset;
        if !(0.0 < edge && edge <= 1.0) {
            return bad("edge image must stay inside the section");
        }
        if !(0.0 < self.squeeze && self.squeeze < 1.0) {
            return bad("flight squeeze must contract");
        }
        if self.flight_time < 1.0 {
            return bad("flight time below 1 breaks the duration floor of generated orbits");
        }
        Ok(())
    }
}

/// Branched trapping region of the template, embedded in R^3.
///
/// A chart state (x0, y0, s) means: last section crossing at (x0, y0), flown
/// for time s since. The embedding is the exact saddle flow inside the cube
/// |x|,|y| <= 1, z in [0,1] and a four-leg polyline flight outside it, glued
/// continuously at the exit faces and the section.
pub struct LorenzTemplate {
    p: LorenzParams,
}

impl LorenzTemplate {
    pub fn new(p: LorenzParams) -> Result<Self, LorenzError> {
        p.validate()?;
        Ok(LorenzTemplate { p })
    }

    pub fn params(&self) -> &LorenzParams {
        &self.p
    }

    /// Time from section entry at x0 to the cube exit face.
    pub fn passage_time(&self, x0: f64) -> f64 {
        if x0 == 0.0 {
            f64::INFINITY
        } else {
            -x0.abs().ln() / self.p.expansion
        }
    }

    /// Full revolution time from section entry back to the section.
    pub fn return_time(&self, x0: f64) -> f64 {
        self.passage_time(x0) + self.p.flight_time
    }

    /// One-dimensional section map on [-1, 1]; the cut x = 0 never returns.
    pub fn return_map(&self, x: f64) -> f64 {
        x.signum() * (self.p.offset + self.p.slope * x.abs().powf(self.p.alpha()))
    }

    /// The section map carried to [0, 1] by u = (x + 1) / 2.
    pub fn return_map_unit(&self, u: f64) -> f64 {
        (self.return_map(2.0 * u - 1.0) + 1.0) / 2.0
    }

    /// Images of the interval endpoints under the unit-coordinate section map.
    pub fn boundary_values(&self) -> (f64, f64) {
        (self.return_map_unit(0.0), self.return_map_unit(1.0))
    }

    /// The endpoints are not both fixed; the falsification mechanism needs
    /// this and every no-shadowing run asserts it first.
    pub fn boundary_condition_holds(&self) -> bool {
        let (f0, f1) = self.boundary_values();
        f0.abs() > 1e-9 || (f1 - 1.0).abs() > 1e-9
    }

    /// Where the saddle sits; orbits on the cut fiber converge to it.
    pub fn singularity(&self) -> Point {
        Point::d3(0.0, 0.0, STALL_CAP)
    }

    fn section_map(&self, x0: f64, y0: f64) -> (f64, f64) {
        (
            self.return_map(x0),
            self.p.squeeze * y0 * x0.abs().powf(self.p.beta()),
        )
    }

    fn normalize(&self, mut x0: f64, mut y0: f64, mut s: f64) -> (f64, f64, f64) {
        loop {
            if x0 == 0.0 {
                return (0.0, y0, s.min(STALL_CAP));
            }
            let tau = self.return_time(x0);
            if s < tau {
                return (x0, y0, s);
            }
            s -= tau;
            let (nx, ny) = self.section_map(x0, y0);
            x0 = nx;
            y0 = ny;
        }
    }

    /// Embedded position of a chart state.
    pub fn position(&self, q: &Point) -> [f64; 3] {
        let (x0, y0, s) = (q.c(0), q.c(1), q.c(2));
        let pass = self.passage_time(x0);
        if s <= pass {
            let l = &self.p;
            [
                x0 * (l.expansion * s).exp(),
                y0 * (-l.strong_contraction * s).exp(),
                (-l.weak_contraction * s).exp(),
            ]
        } else {
            let u = (s - pass) / self.p.flight_time;
            self.flight_position(
                x0.signum(),
                y0 * x0.abs().powf(self.p.beta()),
                x0.abs().powf(self.p.alpha()),
                u,
            )
        }
    }

    // Exit state (1, yh, zh) in wing-local coordinates, u in [0, 1) along the
    // flight. Waypoints keep every leg outside the open cube, and the last
    // leg touches down exactly at the section image of the entry point.
    fn flight_position(&self, side: f64, yh: f64, zh: f64, u: f64) -> [f64; 3] {
        let land = self.p.offset + self.p.slope * zh;
        let w = [
            [1.0, yh, zh],
            [1.9, 0.6 * yh, 0.2 + 0.6 * zh],
            [1.2, 0.3 * yh, 1.55 + 0.25 * zh],
            [land, self.p.squeeze * yh, 1.6],
            [land, self.p.squeeze * yh, 1.0],
        ];
        const CUT: [f64; 5] = [0.0, 0.30, 0.55, 0.80, 1.0];
        let mut leg = 3;
        for i in 0..4 {
            if u < CUT[i + 1] {
                leg = i;
                break;
            }
        }
        let lam = ((u - CUT[leg]) / (CUT[leg + 1] - CUT[leg])).clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64| a + lam * (b - a);
        [
            side * lerp(w[leg][0], w[leg + 1][0]),
            lerp(w[leg][1], w[leg + 1][1]),
            lerp(w[leg][2], w[leg + 1][2]),
        ]
    }

    fn push_preimages(&self, v: f64, out: &mut Vec<f64>) {
        let (a, b) = (self.p.slope, self.p.offset);
        let inv_alpha = 1.0 / self.p.alpha();
        if v > b && v <= a + b {
            out.push(((v - b) / a).powf(inv_alpha));
        }
        let w = -v;
        if w > b && w <= a + b {
            out.push(-((w - b) / a).powf(inv_alpha));
        }
    }

    /// Nearest point whose section-map orbit lands exactly on the cut, within
    /// `budget` of x; breadth-first over preimage depth so shallow targets win.
    fn nearest_stable_preimage(&self, x: f64, budget: f64) -> Option<f64> {
        let mut level = vec![0.0f64];
        let mut best = f64::INFINITY;
        let mut best_q = 0.0;
        for _ in 0..=PLAN_DEPTH {
            for &q in &level {
                let gap = (q - x).abs();
                if gap < best {
                    best = gap;
                    best_q = q;
                }
            }
            if best <= budget {
                return Some(best_q);
            }
            let mut next = Vec::with_capacity(level.len() * 2);
            for &v in &level {
                self.push_preimages(v, &mut next);
            }
            if next.is_empty() {
                return None;
            }
            level = next;
        }
        None
    }
}

impl SpaceModel for LorenzTemplate {
    fn name(&self) -> &str {
        "geometric-lorenz"
    }

    fn chart_dim(&self) -> usize {
        3
    }

    fn dist(&self, a: &Point, b: &Point) -> f64 {
        let p = self.position(a);
        let q = self.position(b);
        (p[0] - q[0]).hypot((p[1] - q[1]).hypot(p[2] - q[2]))
    }

    fn diameter(&self) -> f64 {
        // bounding box of the embedding: |x| <= 1.9, |y| <= 1, z in [0, 1.8]
        3.8f64.hypot(2.0f64.hypot(1.8))
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0), (-1.0, 1.0), (0.0, 3.0)]
    }

    fn project(&self, chart: &[f64]) -> Point {
        let x0 = chart[0].clamp(-1.0, 1.0);
        let y0 = chart[1].clamp(-1.0, 1.0);
        let s = chart[2].clamp(0.0, 500.0);
        let (x0, y0, s) = self.normalize(x0, y0, s);
        Point::d3(x0, y0, s)
    }

    fn chart_radius(&self, r: f64) -> f64 {
        // the embedding never contracts the entry-x axis, so a chart box of
        // the metric radius always covers the ball along the axis that the
        // candidate search cares about
        r
    }
}

/// Semiflow of the template; piecewise-assembled, forward time only.
pub struct GeometricLorenzFlow {
    tpl: LorenzTemplate,
}

impl GeometricLorenzFlow {
    pub fn new(p: LorenzParams) -> Result<Self, LorenzError> {
        Ok(GeometricLorenzFlow {
            tpl: LorenzTemplate::new(p)?,
        })
    }

    pub fn template(&self) -> &LorenzTemplate {
        &self.tpl
    }
}

/// Template with the default eigenvalues and surgery coefficients.
pub fn geometric_lorenz() -> GeometricLorenzFlow {
    GeometricLorenzFlow::new(LorenzParams::default()).expect("default parameters are structural")
}

impl Flow for GeometricLorenzFlow {
    fn name(&self) -> &str {
        "geometric-lorenz"
    }

    fn space(&self) -> &dyn SpaceModel {
        &self.tpl
    }

    fn kind(&self) -> FlowKind {
        FlowKind::Integrated
    }

    fn group_tolerance(&self) -> f64 {
        1e-6
    }

    fn time_horizon(&self) -> f64 {
        1e4
    }

    fn supports_negative_time(&self) -> bool {
        false
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        if t < 0.0 {
            return Err(FlowError::BackwardUndefined { t });
        }
        check_horizon(t, self.time_horizon())?;
        let (x0, y0, s) = self.tpl.normalize(x.c(0), x.c(1), x.c(2) + t);
        Ok(Point::d3(x0, y0, s))
    }

    fn lipschitz(&self, t_box: f64) -> f64 {
        (self.tpl.p.expansion * t_box).exp()
    }

    fn speed_bound(&self) -> f64 {
        let l = &self.tpl.p;
        let cube = l
            .expansion
            .hypot(l.strong_contraction.hypot(l.weak_contraction));
        // flight legs are at most 2.4 long over a 0.2 * flight_time slice
        cube.max(12.0 / l.flight_time)
    }
}

/// Forward pseudo-orbit that lands on the saddle's stable set with a single
/// in-budget kick at a section crossing, rides it through the deep stall, and
/// leaves along one wing. Any true orbit near the prefix must commit to a
/// wing on its own schedule, so the tail separates from every candidate; this
/// is the falsification input for the no-shadowing runs.
pub fn straddle_orbit(
    flow: &GeometricLorenzFlow,
    start: &Point,
    delta: f64,
    returns: usize,
) -> Result<PseudoOrbit, LorenzError> {
    let tpl = flow.template();
    let budget = 0.9 * delta;
    let mut entries: Vec<(Point, f64)> = Vec::new();
    let mut cur = tpl.project(start.coords());
    let mut kicked = false;
    let mut crossings = 0usize;

    while crossings < returns {
        let (x0, y0, s) = (cur.c(0), cur.c(1), cur.c(2));
        let remaining = tpl.return_time(x0) - s;
        if !remaining.is_finite() || remaining > STALL_ESCAPE {
            // stuck at the saddle: ride it a while, then hop one wing out by
            // a position-space kick of exactly the allowed size
            let ride = 3.0;
            let (_, ry, rs) = tpl.normalize(x0, y0, s + ride);
            entries.push((cur.clone(), ride));
            let hop = budget * (-tpl.p.expansion * rs).exp();
            cur = Point::d3(hop, ry, rs);
            crossings += 1;
            continue;
        }
        let mut d = remaining;
        let (mut fx, mut fy) = tpl.section_map(x0, y0);
        crossings += 1;
        // a mid-flight start can leave less than the duration floor; extend
        // through the next full revolution
        while d < 1.0 && fx != 0.0 {
            d += tpl.return_time(fx);
            let nn = tpl.section_map(fx, fy);
            fx = nn.0;
            fy = nn.1;
            crossings += 1;
        }
        entries.push((cur.clone(), d.max(1.0)));
        if d < 1.0 {
            // only reachable when the chain ran into the cut fiber
            let (nx, ny, ns) = tpl.normalize(x0, y0, s + 1.0);
            cur = Point::d3(nx, ny, ns);
            continue;
        }
        cur = if !kicked {
            match tpl.nearest_stable_preimage(fx, budget) {
                Some(q) => {
                    kicked = true;
                    Point::d3(q, fy, 0.0)
                }
                None => Point::d3(fx, fy, 0.0),
            }
        } else {
            Point::d3(fx, fy, 0.0)
        };
    }
    entries.push((cur, 1.5));
    if !kicked {
        return Err(LorenzError::PlanFailed);
    }
    Ok(PseudoOrbit::forward(entries)?)
}

/// Euclidean box holding the classical attractor with room for transients.
pub struct LorenzOdeSpace;

impl SpaceModel for LorenzOdeSpace {
    fn name(&self) -> &str {
        "lorenz-ode"
    }

    fn chart_dim(&self) -> usize {
        3
    }

    fn dist(&self, a: &Point, b: &Point) -> f64 {
        (a.c(0) - b.c(0)).hypot((a.c(1) - b.c(1)).hypot(a.c(2) - b.c(2)))
    }

    fn diameter(&self) -> f64 {
        50.0f64.hypot(60.0f64.hypot(70.0))
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-25.0, 25.0), (-30.0, 30.0), (-10.0, 60.0)]
    }

    fn project(&self, chart: &[f64]) -> Point {
        let b = self.chart_bounds();
        Point::d3(
            chart[0].clamp(b[0].0, b[0].1),
            chart[1].clamp(b[1].0, b[1].1),
            chart[2].clamp(b[2].0, b[2].1),
        )
    }
}

/// Classical ODE for exploration next to the template; no acceptance rests on
/// it. Forward time only, since backward integration leaves the box fast.
pub struct LorenzOdeFlow {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    tol: f64,
    space: LorenzOdeSpace,
}

impl LorenzOdeFlow {
    pub fn classic() -> Self {
        LorenzOdeFlow {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            tol: 1e-9,
            space: LorenzOdeSpace,
        }
    }

    fn field(&self, y: &[f64], dy: &mut [f64]) {
        dy[0] = self.sigma * (y[1] - y[0]);
        dy[1] = y[0] * (self.rho - y[2]) - y[1];
        dy[2] = y[0] * y[1] - self.beta * y[2];
    }
}

impl Flow for LorenzOdeFlow {
    fn name(&self) -> &str {
        "lorenz-ode"
    }

    fn space(&self) -> &dyn SpaceModel {
        &self.space
    }

    fn kind(&self) -> FlowKind {
        FlowKind::Integrated
    }

    fn group_tolerance(&self) -> f64 {
        1e-5
    }

    fn time_horizon(&self) -> f64 {
        50.0
    }

    fn supports_negative_time(&self) -> bool {
        false
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        if t < 0.0 {
            return Err(FlowError::BackwardUndefined { t });
        }
        check_horizon(t, self.time_horizon())?;
        let y = integrate_dp54(|y, dy| self.field(y, dy), x.coords(), t, self.tol)?;
        Ok(Point::new(y))
    }

    fn lipschitz(&self, t_box: f64) -> f64 {
        // empirical stretch over sampled pairs, padded by 1.5
        1.5 * (1.2 * t_box).exp()
    }

    fn speed_bound(&self) -> f64 {
        1400.0
    }
}
