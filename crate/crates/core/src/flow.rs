//! Flows: one-parameter groups of homeomorphisms evaluated pointwise.
//!
//! Everything downstream treats a flow as a black box `evolve(x, t)` plus a
//! few numeric promises: a tolerance on the group law, a Lipschitz bound in
//! space over compact time boxes, and a speed bound in time. Analytic models
//! keep the promises exactly; integrated and piecewise models keep them up to
//! documented tolerances.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::space::{stream_rng, Point, SpaceModel};
use rand::Rng;

/// How `evolve` is computed; controls which exactness claims apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// Closed-form trajectories; `evolve(x, 0) == x` bitwise.
    Analytic,
    /// Numerically integrated or piecewise-assembled trajectories.
    Integrated,
    /// Built from a base homeomorphism and a roof function.
    SuspensionDerived,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("time {t} exceeds the model horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },
    /// Semiflow models reject negative time.
    #[error("negative time {t} is outside this model's time domain")]
    BackwardUndefined { t: f64 },
}

pub trait Flow: Send + Sync {
    fn name(&self) -> &str;

    fn space(&self) -> &dyn SpaceModel;

    fn kind(&self) -> FlowKind;

    /// Accepted defect in the group law `evolve(evolve(x,s),t) = evolve(x,s+t)`.
    fn group_tolerance(&self) -> f64;

    /// Largest |t| the model will evaluate.
    fn time_horizon(&self) -> f64;

    /// Whether negative times are defined (piecewise models may be semiflows).
    fn supports_negative_time(&self) -> bool {
        true
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError>;

    /// Bound L with `d(evolve(x,t), evolve(y,t)) <= L d(x,y)` for |t| <= t_box.
    fn lipschitz(&self, t_box: f64) -> f64;

    /// Bound on the metric speed of trajectories, `d(evolve(x,s), evolve(x,t))
    /// <= speed_bound * |s - t|` over the horizon.
    fn speed_bound(&self) -> f64;
}

/// Shared handle for a registered flow.
pub type FlowSystem = Arc<dyn Flow>;

/// Group-law defect `d(evolve(evolve(x,s),t), evolve(x,s+t))`.
pub fn group_defect(flow: &dyn Flow, x: &Point, s: f64, t: f64) -> Result<f64, FlowError> {
    let two_step = flow.evolve(&flow.evolve(x, s)?, t)?;
    let one_step = flow.evolve(x, s + t)?;
    Ok(flow.space().dist(&two_step, &one_step))
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub samples: usize,
    pub max_group_defect: f64,
    pub max_identity_defect: f64,
}

#[derive(Debug, Error)]
#[error("flow axiom violated on {flow}: {detail}")]
pub struct FlowAxiomError {
    pub flow: String,
    pub detail: String,
}

/// Sampled check of the flow axioms: identity at t = 0 and the group law on
/// random (x, s, t) with |s|, |t| <= t_box (times drawn from [0, t_box] for
/// semiflows).
pub fn check_flow_axioms(
    flow: &dyn Flow,
    n: usize,
    t_box: f64,
    seed: u64,
) -> Result<FlowReport, FlowAxiomError> {
    let fail = |detail: String| FlowAxiomError {
        flow: flow.name().to_string(),
        detail,
    };
    let pts = flow.space().sample(n.max(4), seed);
    let mut rng = stream_rng(seed, 0xf10a);
    let mut report = FlowReport {
        samples: pts.len(),
        max_group_defect: 0.0,
        max_identity_defect: 0.0,
    };
    let tol = flow.group_tolerance();
    for x in &pts {
        let y = flow
            .evolve(x, 0.0)
            .map_err(|e| fail(format!("evolve(x,0) failed: {e}")))?;
        let d = flow.space().dist(x, &y);
        report.max_identity_defect = report.max_identity_defect.max(d);
        match flow.kind() {
            FlowKind::Analytic if d != 0.0 => {
                return Err(fail(format!("evolve(x,0) moved an analytic flow by {d:.3e}")));
            }
            _ if d > tol => {
                return Err(fail(format!("identity defect {d:.3e} > tolerance {tol:.3e}")));
            }
            _ => {}
        }
        let (s, t) = if flow.supports_negative_time() {
            (
                rng.random_range(-t_box..=t_box),
                rng.random_range(-t_box..=t_box),
            )
        } else {
            (rng.random_range(0.0..=t_box), rng.random_range(0.0..=t_box))
        };
        let defect = group_defect(flow, x, s, t)
            .map_err(|e| fail(format!("group law evaluation failed: {e}")))?;
        report.max_group_defect = report.max_group_defect.max(defect);
        if defect > tol {
            return Err(fail(format!(
                "group defect {defect:.3e} > tolerance {tol:.3e} at s = {s:.3}, t = {t:.3}"
            )));
        }
    }
    Ok(report)
}
