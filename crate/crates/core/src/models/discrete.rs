//! Discrete base systems fed to the suspension construction.

use std::sync::Arc;

use crate::models::cantor::CantorInterval;
use crate::space::{Point, SpaceModel};
use crate::suspension::{BaseSystem, DiscreteMap, IdentityMap, Roof, SuspensionError};

/// Two points at unit distance.
pub struct TwoPoints;

impl SpaceModel for TwoPoints {
    fn name(&self) -> &str {
        "two-points"
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
        Point::d1(if chart[0] < 0.5 { 0.0 } else { 1.0 })
    }
}

/// Exchanges the two points; its suspension is a circle of circumference 2.
pub struct SwapMap;

impl DiscreteMap for SwapMap {
    fn name(&self) -> &str {
        "swap"
    }

    fn apply(&self, x: &Point) -> Point {
        Point::d1(1.0 - x.c(0))
    }

    fn invert(&self, y: &Point) -> Point {
        Point::d1(1.0 - y.c(0))
    }
}

/// Period-two base whose suspension exercises nontrivial gluing.
pub fn two_point_swap() -> Result<BaseSystem, SuspensionError> {
    BaseSystem::new(
        "two-point-swap",
        Arc::new(TwoPoints),
        Arc::new(SwapMap),
        Roof::Unit,
    )
}

/// Identity on C_n union [1, 2] under a unit roof. Every shadowing estimate
/// on it comes down to whether small kicks can march through the gaps.
pub fn cantor_interval_identity(level: u32) -> Result<BaseSystem, SuspensionError> {
    BaseSystem::new(
        "cantor-identity",
        Arc::new(CantorInterval::new(level)),
        Arc::new(IdentityMap),
        Roof::Unit,
    )
}
