//! Suspension flows over invertible maps: a base space with its map and a
//! roof function, the quotient space of fibers with the roof identification,
//! the exact flow that climbs fibers, and the quotient metric in which the
//! climb has unit speed.
//!
//! Also hosts the discrete shadowable-point estimator on the base map and the
//! correspondence check between base and suspension verdicts.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{Flow, FlowError, FlowKind};
use crate::shadowing::{
    estimate_shadowable_point, EstimateConfig, PointVerdict, ShadowError, TrialRecord,
};
use crate::space::{mix64, stream_rng, Point, SpaceModel};

/// Map inverse defect allowed at construction.
const INVERSE_TOL: f64 = 1e-12;
/// Slack on the declared roof bounds when sampling.
const ROOF_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SuspensionError {
    #[error("map inverse defect {defect:.3e} exceeds {INVERSE_TOL:.0e}")]
    InverseDefect { defect: f64 },
    #[error("roof bounds [{lo}, {hi}] are unusable")]
    BadRoofBounds { lo: f64, hi: f64 },
    #[error("roof value {value} escapes its declared bounds [{lo}, {hi}]")]
    RoofOutOfBounds { value: f64, lo: f64, hi: f64 },
    #[error("base space {0} has no usable diameter")]
    BadBase(String),
}

/// An invertible map of a metric space, the generator a suspension is built
/// over.
pub trait DiscreteMap: Send + Sync {
    fn name(&self) -> &str;
    fn apply(&self, x: &Point) -> Point;
    fn invert(&self, y: &Point) -> Point;

    /// Bound on metric expansion of one application, either direction.
    fn lipschitz(&self) -> f64 {
        1.0
    }

    /// True only when apply and invert are exactly the identity; lets metric
    /// and normalization loops skip the map entirely.
    fn is_identity(&self) -> bool {
        false
    }
}

/// The map that does nothing. Suspending it stacks every fiber onto itself.
pub struct IdentityMap;

impl DiscreteMap for IdentityMap {
    fn name(&self) -> &str {
        "identity"
    }

    fn apply(&self, x: &Point) -> Point {
        x.clone()
    }

    fn invert(&self, y: &Point) -> Point {
        y.clone()
    }

    fn is_identity(&self) -> bool {
        true
    }
}

/// View of a space with distances divided by a fixed scale, so the diameter
/// comes out as 1. Chart coordinates are untouched.
pub struct NormalizedSpace {
    inner: Arc<dyn SpaceModel>,
    scale: f64,
    name: String,
}

impl NormalizedSpace {
    pub fn new(inner: Arc<dyn SpaceModel>) -> Result<Self, SuspensionError> {
        let scale = inner.diameter();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(SuspensionError::BadBase(inner.name().to_string()));
        }
        let name = format!("{}/normalized", inner.name());
        Ok(Self { inner, scale, name })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn inner(&self) -> &dyn SpaceModel {
        self.inner.as_ref()
    }
}

impl SpaceModel for NormalizedSpace {
    fn name(&self) -> &str {
        &self.name
    }

    fn chart_dim(&self) -> usize {
        self.inner.chart_dim()
    }

    fn dist(&self, p: &Point, q: &Point) -> f64 {
        self.inner.dist(p, q) / self.scale
    }

    fn diameter(&self) -> f64 {
        1.0
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        self.inner.chart_bounds()
    }

    fn periodic_axes(&self) -> Vec<bool> {
        self.inner.periodic_axes()
    }

    fn project(&self, chart: &[f64]) -> Point {
        self.inner.project(chart)
    }

    fn chart_radius(&self, r: f64) -> f64 {
        self.inner.chart_radius(r * self.scale)
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        self.inner.sample(n, seed)
    }
}

/// Return-time function over the base.
#[derive(Clone)]
pub enum Roof {
    Unit,
    Graph {
        f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
        lo: f64,
        hi: f64,
    },
}

impl Roof {
    pub fn graph(
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
    ) -> Result<Self, SuspensionError> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return Err(SuspensionError::BadRoofBounds { lo, hi });
        }
        Ok(Roof::Graph { f: Arc::new(f), lo, hi })
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            Roof::Unit => 1.0,
            Roof::Graph { f, .. } => f(x),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Roof::Unit => (1.0, 1.0),
            Roof::Graph { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Roof::Unit)
    }
}

/// A space normalized to diameter 1, an invertible map on it, and a roof.
pub struct BaseSystem {
    name: String,
    space: Arc<NormalizedSpace>,
    map: Arc<dyn DiscreteMap>,
    roof: Roof,
}

impl BaseSystem {
    pub fn new(
        name: impl Into<String>,
        raw_space: Arc<dyn SpaceModel>,
        map: Arc<dyn DiscreteMap>,
        roof: Roof,
    ) -> Result<Self, SuspensionError> {
        let space = Arc::new(NormalizedSpace::new(raw_space)?);
        let sys = BaseSystem { name: name.into(), space, map, roof };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<(), SuspensionError> {
        let samples = self.space.sample(64, 0x5e1f);
        let (lo, hi) = self.roof.bounds();
        for x in &samples {
            let round = self.map.invert(&self.map.apply(x));
            let back = self.map.apply(&self.map.invert(x));
            let defect = self.space.dist(&round, x).max(self.space.dist(&back, x));
            if defect > INVERSE_TOL {
                return Err(SuspensionError::InverseDefect { defect });
            }
            let tau = self.roof.eval(x);
            if !(tau >= lo - ROOF_TOL && tau <= hi + ROOF_TOL) {
                return Err(SuspensionError::RoofOutOfBounds { value: tau, lo, hi });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The base space with the diameter-1 metric; all tolerances in this
    /// module are measured in it.
    pub fn space(&self) -> &NormalizedSpace {
        &self.space
    }

    pub fn map(&self) -> &dyn DiscreteMap {
        self.map.as_ref()
    }

    pub fn roof(&self) -> &Roof {
        &self.roof
    }

    pub fn roof_at(&self, x: &Point) -> f64 {
        self.roof.eval(x)
    }

    pub fn iterate(&self, x: &Point, n: i64) -> Point {
        let mut cur = x.clone();
        for _ in 0..n.abs() {
            cur = if n >= 0 { self.map.apply(&cur) } else { self.map.invert(&cur) };
        }
        cur
    }
}

/// Canonical fiber representative: 0 <= height < roof(base).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuspensionPoint {
    pub base: Point,
    pub height: f64,
}

impl SuspensionPoint {
    /// Flat chart form: base coordinates then height.
    pub fn to_point(&self) -> Point {
        self.base.extended(self.height)
    }

    pub fn from_point(p: &Point) -> Self {
        let c = p.coords();
        SuspensionPoint {
            base: Point::from_coords(&c[..c.len() - 1]),
            height: c[c.len() - 1],
        }
    }
}

/// Apply the roof identification until the height is canonical.
pub fn normalize(base: &BaseSystem, x: &Point, s: f64) -> SuspensionPoint {
    if base.map.is_identity() && base.roof.is_unit() {
        return SuspensionPoint {
            base: x.clone(),
            height: s - s.floor(),
        };
    }
    let (lo, _) = base.roof.bounds();
    let mut x = x.clone();
    let mut s = s;
    let budget = (s.abs() / lo).ceil() as usize + 2;
    for _ in 0..budget {
        if s < 0.0 {
            x = base.map.invert(&x);
            s += base.roof.eval(&x);
        } else {
            let tau = base.roof.eval(&x);
            if s < tau {
                break;
            }
            s -= tau;
            x = base.map.apply(&x);
        }
    }
    if s < 0.0 {
        s = 0.0;
    }
    let tau = base.roof.eval(&x);
    if s >= tau {
        x = base.map.apply(&x);
        s = 0.0;
    }
    SuspensionPoint { base: x, height: s }
}

/// The quotient of base x [0, roof] under (x, roof(x)) ~ (f(x), 0), carrying
/// the metric in which vertical motion has unit speed and a horizontal hop at
/// relative height s costs (1-s) d(x,y) + s d(f(x), f(y)).
///
/// The metric is computed in closed form on the unit-roof space; general
/// roofs are measured through the unit-roof reparametrization of each fiber.
pub struct SuspensionSpace {
    base: Arc<BaseSystem>,
    name: String,
    bounds: Vec<(f64, f64)>,
    periodic: Vec<bool>,
}

impl SuspensionSpace {
    pub fn new(base: Arc<BaseSystem>) -> Self {
        let name = format!("susp({})", base.name());
        let (_, hi) = base.roof.bounds();
        let mut bounds = base.space.chart_bounds();
        bounds.push((0.0, hi));
        let mut periodic = base.space.periodic_axes();
        periodic.push(false);
        Self { base, name, bounds, periodic }
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    fn unit_height(&self, p: &SuspensionPoint) -> f64 {
        if self.base.roof.is_unit() {
            p.height.clamp(0.0, 1.0)
        } else {
            (p.height / self.base.roof_at(&p.base)).clamp(0.0, 1.0)
        }
    }

    /// Unit-roof distance: minimum over the direct path, the path through
    /// the roof on either side, each with its best endpoint height.
    fn bw_unit(&self, x: &Point, s: f64, y: &Point, u: f64) -> f64 {
        let space = self.base.space();
        let map = self.base.map();
        let d = space.dist(x, y);
        if map.is_identity() {
            // every horizontal hop costs d, so only the vertical route varies
            let vert = (s - u).abs().min((1.0 - s) + u).min((1.0 - u) + s);
            return d + vert;
        }
        let fx = map.apply(x);
        let fy = map.apply(y);
        let df = space.dist(&fx, &fy);
        let horiz = |h: f64| (1.0 - h) * d + h * df;
        let direct = (s - u).abs() + horiz(s).min(horiz(u));
        let through = |s_from: f64, u_to: f64, a1: &Point, b: &Point| {
            // cross the roof above `a1`'s fiber, then run to (b, u_to)
            let d0 = space.dist(a1, b);
            let d1 = space.dist(&map.apply(a1), &map.apply(b));
            (1.0 - s_from) + u_to + d0.min((1.0 - u_to) * d0 + u_to * d1)
        };
        let over_x = through(s, u, &fx, y);
        let over_y = through(u, s, &fy, x);
        direct.min(over_x).min(over_y)
    }
}

impl SpaceModel for SuspensionSpace {
    fn name(&self) -> &str {
        &self.name
    }

    fn chart_dim(&self) -> usize {
        self.base.space.chart_dim() + 1
    }

    fn dist(&self, p: &Point, q: &Point) -> f64 {
        let a = SuspensionPoint::from_point(p);
        let b = SuspensionPoint::from_point(q);
        self.bw_unit(&a.base, self.unit_height(&a), &b.base, self.unit_height(&b))
    }

    fn diameter(&self) -> f64 {
        // direct path <= |s-u| + 1, roof path <= (1-s) + u + 1; averaging
        // the two bounds caps the minimum at 3/2
        1.5
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.clone()
    }

    fn periodic_axes(&self) -> Vec<bool> {
        self.periodic.clone()
    }

    fn project(&self, chart: &[f64]) -> Point {
        let n = chart.len() - 1;
        let base = self.base.space.project(&chart[..n]);
        normalize(&self.base, &base, chart[n]).to_point()
    }

    fn chart_radius(&self, r: f64) -> f64 {
        let (_, hi) = self.base.roof.bounds();
        self.base.space.chart_radius(r).max(r * hi)
    }
}

/// The flow that climbs fibers at unit chart speed, hopping through the roof
/// identification. Exact: no integrator is involved.
pub struct SuspensionFlow {
    space: SuspensionSpace,
    name: String,
}

impl SuspensionFlow {
    pub fn new(base: Arc<BaseSystem>) -> Self {
        let name = format!("susp-flow({})", base.name());
        Self { space: SuspensionSpace::new(base), name }
    }

    pub fn base(&self) -> &BaseSystem {
        self.space.base()
    }

    pub fn suspension_space(&self) -> &SuspensionSpace {
        &self.space
    }
}

impl Flow for SuspensionFlow {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &dyn SpaceModel {
        &self.space
    }

    fn kind(&self) -> FlowKind {
        FlowKind::SuspensionDerived
    }

    fn group_tolerance(&self) -> f64 {
        1e-9
    }

    fn time_horizon(&self) -> f64 {
        1e6
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        if !t.is_finite() || t.abs() > self.time_horizon() {
            return Err(FlowError::HorizonExceeded { t, horizon: self.time_horizon() });
        }
        let p = SuspensionPoint::from_point(x);
        Ok(normalize(self.base(), &p.base, p.height + t).to_point())
    }

    fn lipschitz(&self, t_box: f64) -> f64 {
        let l = self.base().map().lipschitz();
        if l <= 1.0 {
            1.0
        } else {
            let (lo, _) = self.base().roof().bounds();
            l.powf((t_box.abs() / lo).ceil() + 2.0)
        }
    }

    fn speed_bound(&self) -> f64 {
        let (lo, _) = self.base().roof().bounds();
        1.0 / lo
    }
}

/// Fiber reparametrization onto the unit-roof suspension: height becomes the
/// fraction of the roof already climbed.
pub fn conjugacy_to_unit_roof(base: &BaseSystem, x: &Point, t: f64) -> SuspensionPoint {
    let p = normalize(base, x, t);
    let tau = base.roof_at(&p.base);
    SuspensionPoint { base: p.base, height: (p.height / tau).clamp(0.0, 1.0) }
}

pub fn conjugacy_from_unit_roof(base: &BaseSystem, x: &Point, s: f64) -> SuspensionPoint {
    let tau = base.roof_at(x);
    normalize(base, x, s.clamp(0.0, 1.0) * tau)
}

/// Unit-roof time elapsed while the general-roof flow runs for `dt` from `p`.
/// Each fiber contributes its traversed fraction.
pub fn unit_elapsed(base: &BaseSystem, p: &SuspensionPoint, dt: f64) -> f64 {
    let mut x = p.base.clone();
    let mut s = p.height;
    let mut left = dt;
    let mut out = 0.0;
    let (lo, _) = base.roof.bounds();
    let budget = (dt.abs() / lo).ceil() as usize + 2;
    if dt >= 0.0 {
        for _ in 0..budget {
            let tau = base.roof_at(&x);
            if s + left < tau {
                return out + left / tau;
            }
            out += (tau - s) / tau;
            left -= tau - s;
            x = base.map().apply(&x);
            s = 0.0;
        }
    } else {
        left = -left;
        for _ in 0..budget {
            let tau = base.roof_at(&x);
            if left <= s {
                return out - left / tau;
            }
            out -= s / tau;
            left -= s;
            x = base.map().invert(&x);
            s = base.roof_at(&x);
        }
    }
    out
}

/// Knobs for the discrete-map shadowable estimator.
#[derive(Debug, Clone)]
pub struct DiscreteEstimateConfig {
    /// Trials per noise level; the first two drift along chart axis 0 in
    /// opposite directions, the rest perturb uniformly.
    pub trials: usize,
    /// Half-window in steps; by default scales with eps / delta so a drifting
    /// pseudo-orbit can outrun the tolerance when nothing blocks it.
    pub window: Option<usize>,
    /// Candidate lattice pitch, default eps / 5.
    pub grid_spacing: Option<f64>,
    pub seed: u64,
}

impl DiscreteEstimateConfig {
    pub fn new(seed: u64) -> Self {
        Self { trials: 6, window: None, grid_spacing: None, seed }
    }

    fn window_for(&self, eps: f64, delta: f64) -> usize {
        self.window
            .unwrap_or_else(|| ((2.5 * eps / delta).ceil() as usize).clamp(16, 4000))
    }

    fn spacing_for(&self, eps: f64) -> f64 {
        self.grid_spacing.unwrap_or(eps / 5.0)
    }
}

enum DiscreteKick {
    Uniform,
    Drift { sign: f64 },
}

/// Nearest admissible point to `center` kicked `sign`-ward along axis 0 by
/// most of `delta`, halving when projection would overshoot the defect bound.
fn kicked(space: &NormalizedSpace, center: &Point, delta: f64, sign: f64) -> Point {
    let mut amount = 0.9 * delta;
    for _ in 0..40 {
        let mut chart = center.coords().to_vec();
        chart[0] += sign * space.chart_radius(amount);
        let cand = space.project(&chart);
        if space.dist(center, &cand) <= delta {
            return cand;
        }
        amount *= 0.5;
    }
    center.clone()
}

fn perturbed(
    space: &NormalizedSpace,
    center: &Point,
    delta: f64,
    kick: &DiscreteKick,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Point {
    match kick {
        DiscreteKick::Uniform => space
            .sample_ball(center, delta, rng)
            .unwrap_or_else(|_| center.clone()),
        DiscreteKick::Drift { sign } => kicked(space, center, delta, *sign),
    }
}

/// delta-pseudo-orbit of the base map through `p`: indices -n..=n flattened,
/// every step defect d(f(q_i), q_{i+1}) <= delta.
fn discrete_pseudo_orbit(
    base: &BaseSystem,
    p: &Point,
    delta: f64,
    n: usize,
    kick: &DiscreteKick,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Point> {
    let space = base.space();
    let mut fwd = Vec::with_capacity(n);
    let mut cur = p.clone();
    for _ in 0..n {
        let next = perturbed(space, &base.map().apply(&cur), delta, kick, rng);
        fwd.push(next.clone());
        cur = next;
    }
    let mut back = Vec::with_capacity(n);
    let mut cur = p.clone();
    let back_kick = match kick {
        DiscreteKick::Uniform => DiscreteKick::Uniform,
        DiscreteKick::Drift { sign } => DiscreteKick::Drift { sign: -sign },
    };
    for _ in 0..n {
        let z = perturbed(space, &cur, delta, &back_kick, rng);
        let prev = base.map().invert(&z);
        back.push(prev.clone());
        cur = prev;
    }
    back.reverse();
    back.push(p.clone());
    back.extend(fwd);
    back
}

/// True when the exact orbit of `y` tracks the pseudo-orbit within eps at
/// every index.
fn orbit_tracks(base: &BaseSystem, y: &Point, orbit: &[Point], center: usize, eps: f64) -> bool {
    let space = base.space();
    if space.dist(y, &orbit[center]) > eps {
        return false;
    }
    let mut cur = y.clone();
    for q in &orbit[center + 1..] {
        cur = base.map().apply(&cur);
        if space.dist(&cur, q) > eps {
            return false;
        }
    }
    let mut cur = y.clone();
    for q in orbit[..center].iter().rev() {
        cur = base.map().invert(&cur);
        if space.dist(&cur, q) > eps {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretePointEstimate {
    pub point: Point,
    pub epsilon: f64,
    pub verdict: PointVerdict,
    /// Unshadowed pseudo-orbit at the smallest witnessed level.
    #[serde(skip)]
    pub witness: Option<Vec<Point>>,
    pub trials: Vec<TrialRecord>,
}

/// Discrete twin of the flow estimator: pseudo-orbits are index sequences,
/// shadowing is exact orbit comparison over a candidate lattice around `p`,
/// and no time reparametrization is involved.
pub fn discrete_shadowable_estimate(
    base: &BaseSystem,
    p: &Point,
    eps: f64,
    deltas: &[f64],
    cfg: &DiscreteEstimateConfig,
) -> Result<DiscretePointEstimate, ShadowError> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ShadowError::Schedule(
            "noise schedule must be nonempty and strictly decreasing".into(),
        ));
    }
    let space = base.space();
    let mut witness = None;
    let mut trials_log = Vec::new();
    for (li, &delta) in deltas.iter().enumerate() {
        let mut level_clean = true;
        for trial in 0..cfg.trials.max(1) {
            let kick = match trial {
                0 => DiscreteKick::Drift { sign: 1.0 },
                1 => DiscreteKick::Drift { sign: -1.0 },
                _ => DiscreteKick::Uniform,
            };
            let mut rng = stream_rng(mix64(cfg.seed, li as u64), trial as u64);
            let n = cfg.window_for(eps, delta);
            let orbit = discrete_pseudo_orbit(base, p, delta, n, &kick, &mut rng);
            let shadowed = space
                .grid_ball(p, eps, cfg.spacing_for(eps))
                .iter()
                .any(|y| orbit_tracks(base, y, &orbit, n, eps));
            trials_log.push(TrialRecord {
                delta,
                trial,
                strategy: match kick {
                    DiscreteKick::Uniform => "uniform".into(),
                    DiscreteKick::Drift { sign } if sign > 0.0 => "drift+".into(),
                    DiscreteKick::Drift { .. } => "drift-".into(),
                },
                outcome: if shadowed { "SHADOWED".into() } else { "WITNESS".into() },
            });
            if !shadowed {
                level_clean = false;
                witness = Some(orbit);
                break;
            }
        }
        if level_clean {
            return Ok(DiscretePointEstimate {
                point: p.clone(),
                epsilon: eps,
                verdict: PointVerdict::Pass { delta },
                witness: None,
                trials: trials_log,
            });
        }
    }
    Ok(DiscretePointEstimate {
        point: p.clone(),
        epsilon: eps,
        verdict: PointVerdict::Fail { delta: *deltas.last().unwrap() },
        witness,
        trials: trials_log,
    })
}

/// Settings shared by the two estimators in a correspondence run.
#[derive(Clone)]
pub struct CorrespondenceConfig {
    pub deltas: Vec<f64>,
    /// Heights assigned to samples round-robin.
    pub heights: Vec<f64>,
    pub continuous: EstimateConfig,
    pub discrete: DiscreteEstimateConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceEntry {
    pub base_point: Point,
    pub height: f64,
    pub suspension: String,
    pub discrete: String,
    pub agree: bool,
    /// Disagreement with neither side unknown.
    pub hard: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub epsilon: f64,
    pub entries: Vec<CorrespondenceEntry>,
    pub agree_count: usize,
    pub hard_disagreements: usize,
    pub agreement_fraction: f64,
}

/// Run the flow estimator on the suspension and the discrete estimator on
/// the base over the same samples and tolerance schedule, and tabulate how
/// the verdicts line up.
pub fn suspension_correspondence_check(
    flow: &SuspensionFlow,
    sample_count: usize,
    eps: f64,
    cfg: &CorrespondenceConfig,
    seed: u64,
) -> Result<CorrespondenceReport, ShadowError> {
    let base = flow.base();
    let samples = base.space().sample(sample_count, seed);
    let mut entries = Vec::with_capacity(samples.len());
    let mut agree_count = 0;
    let mut hard = 0;
    for (i, x) in samples.iter().enumerate() {
        let height = cfg.heights[i % cfg.heights.len()];
        let p = SuspensionPoint { base: x.clone(), height };
        let mut cont = cfg.continuous.clone();
        cont.seed = mix64(cfg.continuous.seed, i as u64);
        let susp = estimate_shadowable_point(flow, &p.to_point(), eps, &cfg.deltas, &cont)?;
        let mut disc_cfg = cfg.discrete.clone();
        disc_cfg.seed = mix64(cfg.discrete.seed, i as u64);
        let disc = discrete_shadowable_estimate(base, x, eps, &cfg.deltas, &disc_cfg)?;
        let agree = susp.verdict.tag() == disc.verdict.tag();
        let is_hard = !agree && susp.verdict.tag() != "UNKNOWN" && disc.verdict.tag() != "UNKNOWN";
        agree_count += agree as usize;
        hard += is_hard as usize;
        entries.push(CorrespondenceEntry {
            base_point: x.clone(),
            height,
            suspension: susp.verdict.tag().to_string(),
            discrete: disc.verdict.tag().to_string(),
            agree,
            hard: is_hard,
        });
    }
    let n = entries.len().max(1);
    Ok(CorrespondenceReport {
        epsilon: eps,
        entries,
        agree_count,
        hard_disagreements: hard,
        agreement_fraction: agree_count as f64 / n as f64,
    })
}
