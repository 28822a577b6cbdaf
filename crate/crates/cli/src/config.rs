//! One TOML file drives one run.
//!
//! Parsing is strict: unknown keys are rejected so a typoed knob cannot
//! silently fall back to a default. Defaults are materialized at parse time,
//! which makes `canonical_toml` a fixed point: emitting, reparsing and
//! emitting again reproduces the same bytes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shadowlab_core::models::ModelRegistry;
use shadowlab_core::noise::{AxisDrift, NoiseStrategy};
use shadowlab_core::shadowing::SearchConfig;
use shadowlab_core::space::SpaceModel;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: String) -> Result<T, ConfigError> {
    Err(ConfigError(msg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Verify,
    EstimatePoint,
    EstimateSet,
    Recurrence,
    SuspensionCheck,
    LorenzFalsify,
}

impl Operation {
    pub fn label(&self) -> &'static str {
        match self {
            Operation::Verify => "verify",
            Operation::EstimatePoint => "estimate-point",
            Operation::EstimateSet => "estimate-set",
            Operation::Recurrence => "recurrence",
            Operation::SuspensionCheck => "suspension-check",
            Operation::LorenzFalsify => "lorenz-falsify",
        }
    }

    fn runs_the_estimator(&self) -> bool {
        matches!(
            self,
            Operation::EstimatePoint
                | Operation::EstimateSet
                | Operation::Recurrence
                | Operation::SuspensionCheck
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedules {
    /// Shadowing tolerances, strictly increasing.
    pub epsilon: Vec<f64>,
    /// Noise levels, strictly decreasing: estimates descend from coarse
    /// noise to fine, and a refutation must survive the whole ladder.
    pub delta: Vec<f64>,
    /// Duration floors for generated pseudo-orbits, each at least 1.
    pub t: Vec<f64>,
}

impl Default for Schedules {
    fn default() -> Self {
        Schedules {
            epsilon: Vec::new(),
            delta: Vec::new(),
            t: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Samples {
    /// Points drawn from the model space.
    pub count: usize,
    /// Uniform-noise trials per level in the estimators.
    pub trials: usize,
    /// Entries per side for generated and uniform-trial pseudo-orbits.
    pub orbit_len: usize,
    /// Entries per side for drift trials.
    pub adversarial_len: usize,
    /// Chart axes that get a pair of drifting refuter trials.
    pub drift_axes: Vec<usize>,
    /// Section returns per straddle witness.
    pub returns: usize,
    /// Sample points per cover box when building the transition graph.
    pub per_box: usize,
    /// Start points for the density probe.
    pub probe_starts: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples {
            count: 12,
            trials: 4,
            orbit_len: 6,
            adversarial_len: 60,
            drift_axes: Vec::new(),
            returns: 30,
            per_box: 12,
            probe_starts: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    /// Matching grid step; omitted means a fifth of the tolerance in play.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Candidate lattice pitch; same omission rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Box cover edge for the transition graph.
    pub rho: f64,
    /// Forward horizon for the density probe.
    pub horizon: f64,
    /// Evolution time per transition-graph edge.
    pub graph_t: f64,
    /// How close the probed orbit must come to every target.
    pub eps_dense: f64,
    /// Cover edge for probe targets; omitted reuses `rho`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_rho: Option<f64>,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            dt: None,
            spacing: None,
            rho: 0.25,
            horizon: 200.0,
            graph_t: 1.0,
            eps_dense: 0.05,
            target_rho: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Suspension {
    /// Fiber heights assigned to samples round-robin.
    pub heights: Vec<f64>,
}

impl Default for Suspension {
    fn default() -> Self {
        Suspension {
            heights: vec![0.25, 0.5, 0.75],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub operation: Operation,
    pub seed: u64,
    /// Artifact directory, created on demand.
    pub output: String,
    #[serde(default)]
    pub schedules: Schedules,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub suspension: Suspension,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config does not parse: {e}")))
    }

    /// Fixed-point serialization: parsing the result and serializing again
    /// yields identical bytes.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain data")
    }

    pub fn validate(&self, reg: &ModelRegistry) -> Result<(), ConfigError> {
        let entry = reg.get(&self.model).map_err(|_| {
            ConfigError(format!(
                "unknown model {:?}; `shadowlab models list` prints the gallery",
                self.model
            ))
        })?;
        if self.output.trim().is_empty() {
            return bad("output directory must be nonempty".into());
        }

        ascending("schedules.epsilon", &self.schedules.epsilon)?;
        descending("schedules.delta", &self.schedules.delta)?;
        ascending("schedules.t", &self.schedules.t)?;
        if let Some(&t) = self.schedules.t.iter().find(|&&t| t < 1.0) {
            return bad(format!(
                "schedules.t holds {t}; duration floors below 1 break the pseudo-orbit contract"
            ));
        }

        if self.samples.count == 0 {
            return bad("samples.count must be at least 1".into());
        }
        if self.samples.orbit_len == 0 {
            return bad("samples.orbit_len must be at least 1".into());
        }
        if self.operation.runs_the_estimator()
            && self.samples.trials == 0
            && self.samples.drift_axes.is_empty()
        {
            return bad(
                "samples.trials is 0 and samples.drift_axes is empty; no trial would run".into(),
            );
        }
        if !self.samples.drift_axes.is_empty() && self.samples.adversarial_len == 0 {
            return bad("samples.adversarial_len must be at least 1 when drift axes are set".into());
        }

        for (name, v) in [
            ("resolution.dt", self.resolution.dt),
            ("resolution.spacing", self.resolution.spacing),
            ("resolution.target_rho", self.resolution.target_rho),
        ] {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return bad(format!("{name} must be positive, got {x}"));
                }
            }
        }
        if !(self.resolution.rho > 0.0) {
            return bad(format!(
                "resolution.rho must be positive, got {}",
                self.resolution.rho
            ));
        }
        if !(self.resolution.horizon > 0.0) {
            return bad(format!(
                "resolution.horizon must be positive, got {}",
                self.resolution.horizon
            ));
        }
        if !(self.resolution.graph_t >= 1.0) {
            return bad(format!(
                "resolution.graph_t must be at least 1, got {}",
                self.resolution.graph_t
            ));
        }
        if !(self.resolution.eps_dense > 0.0) {
            return bad(format!(
                "resolution.eps_dense must be positive, got {}",
                self.resolution.eps_dense
            ));
        }

        let estimator_dim = match entry.as_flow() {
            Some(flow) => flow.space().chart_dim(),
            // the flow-side estimator acts on the suspension, one axis up
            None => entry.as_base().map(|b| b.space().chart_dim() + 1).unwrap_or(1),
        };
        if let Some(&a) = self.samples.drift_axes.iter().find(|&&a| a >= estimator_dim) {
            return bad(format!(
                "samples.drift_axes names axis {a}, but {} has only {estimator_dim} chart axes",
                self.model
            ));
        }

        match self.operation {
            Operation::Verify | Operation::EstimateSet | Operation::Recurrence => {
                if entry.as_flow().is_none() {
                    return bad(format!(
                        "operation {} needs a flow model; {:?} is a discrete base",
                        self.operation.label(),
                        self.model
                    ));
                }
            }
            Operation::EstimatePoint => {}
            Operation::SuspensionCheck => {
                if entry.as_base().is_none() {
                    return bad(format!(
                        "suspension-check needs a discrete base model; {:?} is a flow",
                        self.model
                    ));
                }
                if self.suspension.heights.is_empty() {
                    return bad("suspension.heights must be nonempty".into());
                }
                if let Some(&h) = self
                    .suspension
                    .heights
                    .iter()
                    .find(|&&h| !(0.0..1.0).contains(&h))
                {
                    return bad(format!(
                        "suspension.heights holds {h}; fiber heights live in [0, 1)"
                    ));
                }
            }
            Operation::LorenzFalsify => {
                if self.model != "geometric-lorenz" {
                    return bad(format!(
                        "lorenz-falsify runs on the geometric-lorenz template only, not {:?}",
                        self.model
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn resolved_dt(&self, eps: f64) -> f64 {
        self.resolution.dt.unwrap_or(eps / 5.0)
    }

    pub fn resolved_spacing(&self, eps: f64) -> f64 {
        self.resolution.spacing.unwrap_or(eps / 5.0)
    }

    pub fn search(&self, eps: f64, first_hit: bool) -> SearchConfig {
        let mut s = SearchConfig::new(eps).with_first_hit(first_hit);
        if let Some(dt) = self.resolution.dt {
            s = s.with_dt(dt);
        }
        if let Some(sp) = self.resolution.spacing {
            s = s.with_spacing(sp);
        }
        s
    }

    /// Refuter pair per configured axis, negative drift first: on bounded
    /// charts the downward drift tends to refute in fewer entries.
    pub fn drift_strategies(&self) -> Vec<Arc<dyn NoiseStrategy>> {
        let mut out: Vec<Arc<dyn NoiseStrategy>> = Vec::new();
        for &a in &self.samples.drift_axes {
            out.push(Arc::new(AxisDrift::negative(a)));
            out.push(Arc::new(AxisDrift::positive(a)));
        }
        out
    }
}

fn ascending(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return bad(format!("{name} must be a nonempty schedule"));
    }
    if let Some(&x) = v.iter().find(|&&x| !(x > 0.0)) {
        return bad(format!("{name} must be strictly positive throughout, got {x}"));
    }
    if let Some(w) = v.windows(2).find(|w| w[1] <= w[0]) {
        return bad(format!(
            "{name} must be strictly increasing; {} does not follow {}",
            w[1], w[0]
        ));
    }
    Ok(())
}

fn descending(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return bad(format!("{name} must be a nonempty schedule"));
    }
    if let Some(&x) = v.iter().find(|&&x| !(x > 0.0)) {
        return bad(format!("{name} must be strictly positive throughout, got {x}"));
    }
    if let Some(w) = v.windows(2).find(|w| w[1] >= w[0]) {
        return bad(format!(
            "{name} must be strictly decreasing (finest level last); {} does not follow {}",
            w[1], w[0]
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> ModelRegistry {
        ModelRegistry::standard().unwrap()
    }

    fn minimal(operation: &str, model: &str) -> String {
        format!(
            "model = \"{model}\"\noperation = \"{operation}\"\nseed = 7\noutput = \"out\"\n\n\
             [schedules]\nepsilon = [0.1]\ndelta = [0.05]\n"
        )
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let cfg = ExperimentConfig::from_toml(&minimal("estimate-point", "rotation")).unwrap();
        let once = cfg.canonical_toml();
        let twice = ExperimentConfig::from_toml(&once).unwrap().canonical_toml();
        assert_eq!(once, twice);
        let thrice = ExperimentConfig::from_toml(&twice).unwrap().canonical_toml();
        assert_eq!(twice, thrice);
    }

    #[test]
    fn defaults_are_materialized() {
        let cfg = ExperimentConfig::from_toml(&minimal("verify", "rotation")).unwrap();
        assert_eq!(cfg.schedules.t, vec![1.0]);
        assert_eq!(cfg.samples.count, 12);
        assert_eq!(cfg.resolution.rho, 0.25);
        let text = cfg.canonical_toml();
        assert!(text.contains("per_box"), "defaults missing from {text}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = minimal("verify", "rotation") + "grid = 3\n";
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn schedule_direction_errors_name_the_field() {
        let mut cfg = ExperimentConfig::from_toml(&minimal("verify", "rotation")).unwrap();
        cfg.schedules.epsilon = vec![0.2, 0.1];
        let msg = cfg.validate(&registry()).unwrap_err().to_string();
        assert!(msg.contains("schedules.epsilon"), "{msg}");

        cfg.schedules.epsilon = vec![0.1];
        cfg.schedules.delta = vec![0.01, 0.05];
        let msg = cfg.validate(&registry()).unwrap_err().to_string();
        assert!(msg.contains("schedules.delta"), "{msg}");

        cfg.schedules.delta = vec![-0.05];
        let msg = cfg.validate(&registry()).unwrap_err().to_string();
        assert!(msg.contains("strictly positive"), "{msg}");
    }

    #[test]
    fn operation_model_mismatches_are_pointed_out() {
        let cfg = ExperimentConfig::from_toml(&minimal("verify", "cantor-identity")).unwrap();
        let msg = cfg.validate(&registry()).unwrap_err().to_string();
        assert!(msg.contains("discrete base"), "{msg}");

        let cfg = ExperimentConfig::from_toml(&minimal("suspension-check", "rotation")).unwrap();
        assert!(cfg.validate(&registry()).is_err());

        let cfg = ExperimentConfig::from_toml(&minimal("lorenz-falsify", "rotation")).unwrap();
        let msg = cfg.validate(&registry()).unwrap_err().to_string();
        assert!(msg.contains("geometric-lorenz"), "{msg}");
    }

    #[test]
    fn missing_seed_fails_to_parse() {
        let text = "model = \"rotation\"\noperation = \"verify\"\noutput = \"out\"\n";
        let err = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn drift_axis_out_of_range_is_rejected() {
        let mut cfg = ExperimentConfig::from_toml(&minimal("estimate-point", "rotation")).unwrap();
        cfg.samples.drift_axes = vec![1];
        let msg = cfg.validate(&registry()).unwrap_err().to_string();
        assert!(msg.contains("axis 1"), "{msg}");
    }
}
