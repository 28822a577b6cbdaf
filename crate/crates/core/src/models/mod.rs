//! Model gallery: concrete spaces, flows and base systems with known
//! shadowing behaviour, plus the registry the CLI exposes.

pub mod cantor;
pub mod circle;
pub mod discrete;
pub mod lorenz;
pub mod torus;

pub use cantor::CantorInterval;
pub use circle::{Circle, NorthSouthFlow, RotationFlow, SinSquaredFlow};
pub use lorenz::{geometric_lorenz, GeometricLorenzFlow, LorenzOdeFlow, LorenzParams};
pub use torus::{LinearTorusFlow, Torus2};

use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::flow::{check_flow_axioms, Flow, FlowAxiomError};
use crate::space::{check_metric_axioms, SpaceError, SpaceModel};
use crate::suspension::{BaseSystem, SuspensionError, SuspensionFlow};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("no model named {0}")]
    Unknown(String),
    #[error("model {0} is not a flow")]
    NotAFlow(String),
    #[error("model {0} is not a discrete base")]
    NotABase(String),
    #[error("model {name} failed registration: {detail}")]
    Rejected { name: String, detail: String },
}

enum Registered {
    Flow(Arc<dyn Flow>),
    Base(Arc<BaseSystem>),
}

/// One gallery entry: the live object plus the metadata `models list` prints.
pub struct ModelEntry {
    name: &'static str,
    claim: &'static str,
    params: Value,
    item: Registered,
}

impl ModelEntry {
    pub fn name(&self) -> &str {
        self.name
    }

    pub fn claim(&self) -> &str {
        self.claim
    }

    pub fn params(&self) -> &Value {
        &self.params
    }

    pub fn space_name(&self) -> String {
        match &self.item {
            Registered::Flow(f) => f.space().name().to_string(),
            Registered::Base(b) => b.space().name().to_string(),
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match &self.item {
            Registered::Flow(f) => match f.kind() {
                crate::flow::FlowKind::Analytic => "analytic",
                crate::flow::FlowKind::Integrated => "integrated",
                crate::flow::FlowKind::SuspensionDerived => "suspension-derived",
            },
            Registered::Base(_) => "discrete-base",
        }
    }

    pub fn as_flow(&self) -> Option<Arc<dyn Flow>> {
        match &self.item {
            Registered::Flow(f) => Some(Arc::clone(f)),
            Registered::Base(_) => None,
        }
    }

    pub fn as_base(&self) -> Option<Arc<BaseSystem>> {
        match &self.item {
            Registered::Base(b) => Some(Arc::clone(b)),
            Registered::Flow(_) => None,
        }
    }
}

/// The fixed gallery. Construction re-checks every entry against the metric
/// and flow axiom suites, so a registry in hand means a vetted gallery.
pub struct ModelRegistry {
    entries: Vec<ModelEntry>,
}

const AXIOM_SEED: u64 = 0x5eed_0001;

fn register_flow(
    entries: &mut Vec<ModelEntry>,
    name: &'static str,
    claim: &'static str,
    params: Value,
    flow: Arc<dyn Flow>,
    samples: usize,
    t_box: f64,
) -> Result<(), RegistryError> {
    let reject = |detail: String| RegistryError::Rejected {
        name: name.into(),
        detail,
    };
    check_metric_axioms(flow.space(), samples.max(16), AXIOM_SEED)
        .map_err(|e: SpaceError| reject(e.to_string()))?;
    check_flow_axioms(flow.as_ref(), samples, t_box, AXIOM_SEED ^ 1)
        .map_err(|e: FlowAxiomError| reject(e.to_string()))?;
    entries.push(ModelEntry {
        name,
        claim,
        params,
        item: Registered::Flow(flow),
    });
    Ok(())
}

fn register_base(
    entries: &mut Vec<ModelEntry>,
    name: &'static str,
    claim: &'static str,
    params: Value,
    base: Result<BaseSystem, SuspensionError>,
) -> Result<(), RegistryError> {
    let reject = |detail: String| RegistryError::Rejected {
        name: name.into(),
        detail,
    };
    let base = base.map_err(|e| reject(e.to_string()))?;
    check_metric_axioms(base.space(), 40, AXIOM_SEED ^ 2).map_err(|e| reject(e.to_string()))?;
    entries.push(ModelEntry {
        name,
        claim,
        params,
        item: Registered::Base(Arc::new(base)),
    });
    Ok(())
}

impl ModelRegistry {
    pub fn standard() -> Result<Self, RegistryError> {
        let mut entries = Vec::new();
        register_flow(
            &mut entries,
            "rotation",
            "unit-speed circle rotation; isometric and minimal, every sampled point passes the shadowing estimate",
            json!({"speed": 1.0}),
            Arc::new(RotationFlow),
            40,
            4.0,
        )?;
        register_flow(
            &mut entries,
            "sin-squared",
            "one parabolic rest point; chain transitive but not transitive, and no sampled point passes the estimate",
            json!({}),
            Arc::new(SinSquaredFlow),
            40,
            4.0,
        )?;
        register_flow(
            &mut entries,
            "north-south",
            "two hyperbolic rest points; not chain transitive, sampled points pass at coarse resolution",
            json!({}),
            Arc::new(NorthSouthFlow),
            40,
            4.0,
        )?;
        register_flow(
            &mut entries,
            "product-rotation",
            "product of two unit rotations; isometric yet not minimal, and some sampled points fail the estimate",
            json!({"velocity": [1.0, 1.0]}),
            Arc::new(LinearTorusFlow::product_rotation()),
            40,
            4.0,
        )?;
        register_flow(
            &mut entries,
            "torus-irrational",
            "linear torus flow with golden-ratio slope; transitive, minimal and chain transitive",
            json!({"velocity": [1.0, 0.618_033_988_749_894_9]}),
            Arc::new(LinearTorusFlow::golden()),
            40,
            4.0,
        )?;
        register_flow(
            &mut entries,
            "geometric-lorenz",
            "branched template with an expanding section map whose endpoint images miss the fixed points; adversarial orbits defeat every candidate grid",
            json!({
                "expansion": 10.0, "strong_contraction": 20.0, "weak_contraction": 7.5,
                "slope": 1.6, "offset": -0.85, "squeeze": 0.25, "flight_time": 1.0
            }),
            Arc::new(geometric_lorenz()),
            24,
            0.35,
        )?;
        register_flow(
            &mut entries,
            "lorenz-ode",
            "classical equations kept for exploration beside the template; nothing is asserted on them",
            json!({"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0}),
            Arc::new(LorenzOdeFlow::classic()),
            6,
            0.5,
        )?;
        register_base(
            &mut entries,
            "cantor-identity",
            "identity on the level-6 dust glued to an interval; estimates pass on the dust away from the gluing point and drift to failure on the interval",
            json!({"level": 6}),
            discrete::cantor_interval_identity(6),
        )?;
        register_base(
            &mut entries,
            "two-point-swap",
            "period-two base; its suspension is a circle of circumference two",
            json!({}),
            discrete::two_point_swap(),
        )?;
        Ok(ModelRegistry { entries })
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Result<&ModelEntry, RegistryError> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| RegistryError::Unknown(name.into()))
    }

    pub fn flow(&self, name: &str) -> Result<Arc<dyn Flow>, RegistryError> {
        self.get(name)?
            .as_flow()
            .ok_or_else(|| RegistryError::NotAFlow(name.into()))
    }

    pub fn base(&self, name: &str) -> Result<Arc<BaseSystem>, RegistryError> {
        self.get(name)?
            .as_base()
            .ok_or_else(|| RegistryError::NotABase(name.into()))
    }

    /// Suspension semiflow over a registered base.
    pub fn suspension_flow(&self, base_name: &str) -> Result<Arc<SuspensionFlow>, RegistryError> {
        Ok(Arc::new(SuspensionFlow::new(self.base(base_name)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_registry_vets_every_entry() {
        let reg = ModelRegistry::standard().unwrap();
        assert_eq!(reg.entries().len(), 9);
        assert!(reg.flow("rotation").is_ok());
        assert!(reg.base("cantor-identity").is_ok());
        assert!(matches!(
            reg.flow("cantor-identity"),
            Err(RegistryError::NotAFlow(_))
        ));
        assert!(matches!(reg.get("nope"), Err(RegistryError::Unknown(_))));
        let susp = reg.suspension_flow("two-point-swap").unwrap();
        assert_eq!(susp.space().name(), "susp(two-point-swap)");
    }

    #[test]
    fn gallery_metadata_is_printable() {
        let reg = ModelRegistry::standard().unwrap();
        for e in reg.entries() {
            assert!(!e.claim().is_empty());
            assert!(!e.space_name().is_empty());
            assert!(serde_json::to_string(e.params()).is_ok());
            assert!(!e.kind_label().is_empty());
        }
    }
}
