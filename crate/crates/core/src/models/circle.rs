//! The circle, parametrized by [0, 1) with arc-length metric, and three flows
//! on it: rigid rotation, the sin^2 stall flow, and a north-south flow.

use crate::flow::{Flow, FlowError, FlowKind};
use crate::space::{Point, SpaceModel};

/// Group-law slack for the closed-form circle flows.
const CIRCLE_GROUP_TOL: f64 = 1e-9;
/// Below this angle the stall flows are numerically stationary.
const ANGLE_FLOOR: f64 = 1e-300;

/// Unit-period circle: chart [0, 1), distance `min(|a-b|, 1-|a-b|)`.
#[derive(Debug, Clone, Copy)]
pub struct Circle;

impl SpaceModel for Circle {
    fn name(&self) -> &str {
        "circle"
    }

    fn chart_dim(&self) -> usize {
        1
    }

    fn dist(&self, p: &Point, q: &Point) -> f64 {
        let d = (p.c(0) - q.c(0)).rem_euclid(1.0);
        d.min(1.0 - d)
    }

    fn diameter(&self) -> f64 {
        0.5
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0)]
    }

    fn periodic_axes(&self) -> Vec<bool> {
        vec![true]
    }

    fn project(&self, chart: &[f64]) -> Point {
        Point::d1(chart[0].rem_euclid(1.0))
    }
}

/// Rigid rotation at unit angular speed. Has the shadowing property: the
/// positive control of the gallery.
pub struct RotationFlow;

impl Flow for RotationFlow {
    fn name(&self) -> &str {
        "rotation"
    }

    fn space(&self) -> &dyn SpaceModel {
        &Circle
    }

    fn kind(&self) -> FlowKind {
        FlowKind::Analytic
    }

    fn group_tolerance(&self) -> f64 {
        CIRCLE_GROUP_TOL
    }

    fn time_horizon(&self) -> f64 {
        1e6
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        check_horizon(t, self.time_horizon())?;
        Ok(Point::d1((x.c(0) + t).rem_euclid(1.0)))
    }

    fn lipschitz(&self, _t_box: f64) -> f64 {
        1.0
    }

    fn speed_bound(&self) -> f64 {
        1.0
    }
}

/// Flow of `theta' = sin^2(pi theta)`: a single stalling fixed point at 0,
/// every other orbit creeps forward and never crosses it. Chain transitive
/// but not transitive, and no point is shadowable.
///
/// Closed form: `cot(pi theta(t)) = cot(pi theta_0) - pi t`.
pub struct SinSquaredFlow;

impl Flow for SinSquaredFlow {
    fn name(&self) -> &str {
        "sin-squared"
    }

    fn space(&self) -> &dyn SpaceModel {
        &Circle
    }

    fn kind(&self) -> FlowKind {
        FlowKind::Analytic
    }

    fn group_tolerance(&self) -> f64 {
        CIRCLE_GROUP_TOL
    }

    fn time_horizon(&self) -> f64 {
        1e9
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        check_horizon(t, self.time_horizon())?;
        let theta = x.c(0).rem_euclid(1.0);
        if t == 0.0 || theta <= ANGLE_FLOOR || 1.0 - theta <= ANGLE_FLOOR {
            return Ok(Point::d1(theta));
        }
        let (s, c) = (std::f64::consts::PI * theta).sin_cos();
        let cot = c / s - std::f64::consts::PI * t;
        // acot with range (0, pi), so the angle stays inside (0, 1)
        Ok(Point::d1(f64::atan2(1.0, cot) / std::f64::consts::PI))
    }

    fn lipschitz(&self, t_box: f64) -> f64 {
        // |d/dtheta sin^2(pi theta)| <= pi
        (std::f64::consts::PI * t_box).exp()
    }

    fn speed_bound(&self) -> f64 {
        1.0
    }
}

/// Flow of `theta' = sin(2 pi theta) / (2 pi)`: source at 0, sink at 1/2.
///
/// Closed form: `tan(pi theta(t)) = tan(pi theta_0) e^t`.
pub struct NorthSouthFlow;

impl Flow for NorthSouthFlow {
    fn name(&self) -> &str {
        "north-south"
    }

    fn space(&self) -> &dyn SpaceModel {
        &Circle
    }

    fn kind(&self) -> FlowKind {
        FlowKind::Analytic
    }

    fn group_tolerance(&self) -> f64 {
        CIRCLE_GROUP_TOL
    }

    fn time_horizon(&self) -> f64 {
        // tan(pi theta) e^t must stay inside f64 range
        600.0
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        check_horizon(t, self.time_horizon())?;
        let theta = x.c(0).rem_euclid(1.0);
        if t == 0.0 || theta <= ANGLE_FLOOR || 1.0 - theta <= ANGLE_FLOOR || theta == 0.5 {
            return Ok(Point::d1(theta));
        }
        let tan = (std::f64::consts::PI * theta).tan() * t.exp();
        let base = tan.atan() / std::f64::consts::PI;
        let out = if theta < 0.5 { base } else { base + 1.0 };
        Ok(Point::d1(out.rem_euclid(1.0)))
    }

    fn lipschitz(&self, t_box: f64) -> f64 {
        // |d/dtheta sin(2 pi theta)/(2 pi)| <= 1
        t_box.exp()
    }

    fn speed_bound(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI)
    }
}

pub(crate) fn check_horizon(t: f64, horizon: f64) -> Result<(), FlowError> {
    if !t.is_finite() || t.abs() > horizon {
        Err(FlowError::HorizonExceeded { t, horizon })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{check_flow_axioms, group_defect};
    use crate::space::check_metric_axioms;

    #[test]
    fn circle_metric_wraps() {
        let c = Circle;
        assert!((c.dist(&Point::d1(0.1), &Point::d1(0.9)) - 0.2).abs() < 1e-15);
        assert_eq!(c.dist(&Point::d1(0.0), &Point::d1(0.5)), 0.5);
        check_metric_axioms(&c, 128, 5).unwrap();
    }

    #[test]
    fn rotation_satisfies_flow_axioms() {
        check_flow_axioms(&RotationFlow, 200, 4.0, 11).unwrap();
    }

    #[test]
    fn rotation_is_periodic_with_period_one() {
        let x = Point::d1(0.37);
        let y = RotationFlow.evolve(&x, 1.0).unwrap();
        assert!(Circle.dist(&x, &y) < 1e-12);
    }

    #[test]
    fn sin_squared_fixed_point_is_exact() {
        let y = SinSquaredFlow.evolve(&Point::d1(0.0), 123.0).unwrap();
        assert_eq!(y.c(0), 0.0);
    }

    #[test]
    fn sin_squared_matches_cotangent_solution() {
        // from theta = 1/2 (cot = 0), after t the cot is -pi t
        let y = SinSquaredFlow.evolve(&Point::d1(0.5), 1.0).unwrap();
        let expect = f64::atan2(1.0, -std::f64::consts::PI) / std::f64::consts::PI;
        assert!((y.c(0) - expect).abs() < 1e-14);
        // strictly increasing, never reaches 1
        let far = SinSquaredFlow.evolve(&Point::d1(0.5), 1e6).unwrap();
        assert!(far.c(0) > y.c(0) && far.c(0) < 1.0);
    }

    #[test]
    fn sin_squared_satisfies_flow_axioms() {
        check_flow_axioms(&SinSquaredFlow, 200, 4.0, 12).unwrap();
    }

    #[test]
    fn sin_squared_group_law_near_stall() {
        let x = Point::d1(1.0 - 1e-9);
        let d = group_defect(&SinSquaredFlow, &x, 2.0, -1.5).unwrap();
        assert!(d <= CIRCLE_GROUP_TOL, "defect {d:.3e}");
    }

    #[test]
    fn north_south_limits() {
        let ns = NorthSouthFlow;
        // source at 0 repels, sink at 1/2 attracts from both sides
        let a = ns.evolve(&Point::d1(0.01), 10.0).unwrap();
        assert!((a.c(0) - 0.5).abs() < 1e-3);
        let b = ns.evolve(&Point::d1(0.99), 10.0).unwrap();
        assert!((b.c(0) - 0.5).abs() < 1e-3);
        // fixed points stay put
        assert_eq!(ns.evolve(&Point::d1(0.5), 7.0).unwrap().c(0), 0.5);
        assert_eq!(ns.evolve(&Point::d1(0.0), 7.0).unwrap().c(0), 0.0);
    }

    #[test]
    fn north_south_satisfies_flow_axioms() {
        check_flow_axioms(&NorthSouthFlow, 200, 4.0, 13).unwrap();
    }

    #[test]
    fn horizon_is_enforced() {
        assert!(matches!(
            RotationFlow.evolve(&Point::d1(0.0), 2e6),
            Err(FlowError::HorizonExceeded { .. })
        ));
    }
}
