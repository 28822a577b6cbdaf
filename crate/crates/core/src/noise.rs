//! Seeded generation of noisy pseudo-orbits around a base point.
//!
//! Forward steps evolve the current point and perturb the result inside a
//! delta-ball. Backward steps pick the perturbed preimage first and pull it
//! back through the flow, so the jump defect is exactly the perturbation and
//! never amplified by backward evolution.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::flow::Flow;
use crate::pseudo_orbit::{PseudoOrbit, PseudoOrbitError, PseudoOrbitKind, TailPolicy};
use crate::space::{stream_rng, Point, SpaceError};

/// Margin keeping raw kicks strictly inside the delta-ball.
const KICK_MARGIN: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum DurationLaw {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DurationLaw {
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            DurationLaw::Fixed { value } => value,
            DurationLaw::Uniform { lo, hi } => rng.random_range(lo..hi),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DurationLaw::Fixed { value } => (value, value),
            DurationLaw::Uniform { lo, hi } => (lo, hi),
        }
    }
}

/// Where the perturbation is applied relative to time order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpSide {
    Forward,
    Backward,
}

pub struct JumpCtx<'a> {
    pub flow: &'a dyn Flow,
    /// Point being perturbed: the evolved state going forward, the jump
    /// target going backward.
    pub reached: &'a Point,
    pub delta: f64,
    pub step_index: i64,
    pub side: JumpSide,
}

/// Chooses the perturbed point for one jump. Implementations must keep the
/// output within `delta` of `ctx.reached`.
pub trait NoiseStrategy: Send + Sync {
    fn name(&self) -> String;
    fn jump(&self, ctx: &JumpCtx, rng: &mut ChaCha8Rng) -> Result<Point, SpaceError>;
}

/// Uniform perturbation in the metric ball.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformBall;

impl NoiseStrategy for UniformBall {
    fn name(&self) -> String {
        "uniform-ball".into()
    }

    fn jump(&self, ctx: &JumpCtx, rng: &mut ChaCha8Rng) -> Result<Point, SpaceError> {
        ctx.flow
            .space()
            .sample_ball(ctx.reached, ctx.delta * KICK_MARGIN, rng)
    }
}

/// Deterministic full-strength kick along one chart axis. Backward steps
/// kick the opposite way so the trace drifts consistently in forward time.
/// When projection lands the kicked point outside the ball (gaps, snapping)
/// the kick is halved until it fits.
#[derive(Clone, Copy, Debug)]
pub struct AxisDrift {
    pub axis: usize,
    pub sign: f64,
}

impl AxisDrift {
    pub fn positive(axis: usize) -> Self {
        AxisDrift { axis, sign: 1.0 }
    }

    pub fn negative(axis: usize) -> Self {
        AxisDrift { axis, sign: -1.0 }
    }
}

impl NoiseStrategy for AxisDrift {
    fn name(&self) -> String {
        let dir = if self.sign >= 0.0 { "+" } else { "-" };
        format!("axis-drift({}{})", dir, self.axis)
    }

    fn jump(&self, ctx: &JumpCtx, rng: &mut ChaCha8Rng) -> Result<Point, SpaceError> {
        let _ = rng;
        let space = ctx.flow.space();
        let sign = match ctx.side {
            JumpSide::Forward => self.sign,
            JumpSide::Backward => -self.sign,
        };
        let mut kick = ctx.delta * KICK_MARGIN;
        for _ in 0..60 {
            let mut coords = ctx.reached.coords().to_vec();
            coords[self.axis] += sign * space.chart_radius(kick);
            let candidate = space.project(&coords);
            if space.dist(&candidate, ctx.reached) <= ctx.delta {
                return Ok(candidate);
            }
            kick *= 0.5;
        }
        Ok(ctx.reached.clone())
    }
}

#[derive(Clone)]
pub struct GenSpec {
    pub delta: f64,
    pub duration: DurationLaw,
    pub n_forward: usize,
    pub n_backward: usize,
    pub strategy: Arc<dyn NoiseStrategy>,
    pub policy: TailPolicy,
}

impl GenSpec {
    pub fn bi_infinite(delta: f64, duration: DurationLaw, n: usize) -> Self {
        GenSpec {
            delta,
            duration,
            n_forward: n,
            n_backward: n,
            strategy: Arc::new(UniformBall),
            policy: TailPolicy::ExtendByOrbit,
        }
    }

    pub fn forward(delta: f64, duration: DurationLaw, n: usize) -> Self {
        GenSpec {
            delta,
            duration,
            n_forward: n,
            n_backward: 0,
            strategy: Arc::new(UniformBall),
            policy: TailPolicy::ExtendByOrbit,
        }
    }

    pub fn with_strategy(mut self, strategy: Arc<dyn NoiseStrategy>) -> Self {
        self.strategy = strategy;
        self
    }
}

/// Build a noisy pseudo-orbit through `p` (entry 0 is `p` exactly, after
/// projection). Deterministic in `(spec, seed)`.
pub fn generate_noisy(
    flow: &dyn Flow,
    p: &Point,
    spec: &GenSpec,
    seed: u64,
) -> Result<PseudoOrbit, PseudoOrbitError> {
    assert!(spec.delta > 0.0, "noise level must be positive");
    let space = flow.space();
    let mut rng = stream_rng(seed, 0x6f72626974);
    let x0 = space.project(p.coords());

    let mut entries: Vec<(Point, f64)> = Vec::with_capacity(spec.n_forward + spec.n_backward + 1);

    // backward half, built from index -1 downwards then reversed
    let mut upper = x0.clone();
    let mut backward: Vec<(Point, f64)> = Vec::with_capacity(spec.n_backward);
    for k in 0..spec.n_backward {
        let i = -(k as i64) - 1;
        let t = spec.duration.draw(&mut rng);
        let ctx = JumpCtx {
            flow,
            reached: &upper,
            delta: spec.delta,
            step_index: i,
            side: JumpSide::Backward,
        };
        let w = spec.strategy.jump(&ctx, &mut rng)?;
        let x = flow.evolve(&w, -t)?;
        backward.push((x.clone(), t));
        upper = x;
    }
    entries.extend(backward.into_iter().rev());

    entries.push((x0.clone(), spec.duration.draw(&mut rng)));

    let mut current = x0;
    for k in 0..spec.n_forward {
        let t = entries.last().unwrap().1;
        let reached = flow.evolve(&current, t)?;
        let ctx = JumpCtx {
            flow,
            reached: &reached,
            delta: spec.delta,
            step_index: k as i64,
            side: JumpSide::Forward,
        };
        let next = spec.strategy.jump(&ctx, &mut rng)?;
        entries.push((next.clone(), spec.duration.draw(&mut rng)));
        current = next;
    }

    let kind = if spec.n_backward > 0 {
        PseudoOrbitKind::BiInfinite
    } else {
        PseudoOrbitKind::Forward
    };
    PseudoOrbit::new(kind, spec.policy, -(spec.n_backward as i64), entries)
}
