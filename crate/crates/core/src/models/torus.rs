//! The flat two-torus and linear flows on it.

use crate::flow::{Flow, FlowError, FlowKind};
use crate::models::circle::check_horizon;
use crate::space::{Point, SpaceModel};

/// Unit-period torus [0,1)^2, flat metric with per-axis wraparound.
#[derive(Debug, Clone, Copy)]
pub struct Torus2;

impl Torus2 {
    fn axis_gap(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    }
}

impl SpaceModel for Torus2 {
    fn name(&self) -> &str {
        "torus2"
    }

    fn chart_dim(&self) -> usize {
        2
    }

    fn dist(&self, p: &Point, q: &Point) -> f64 {
        let dx = Self::axis_gap(p.c(0), q.c(0));
        let dy = Self::axis_gap(p.c(1), q.c(1));
        dx.hypot(dy)
    }

    fn diameter(&self) -> f64 {
        0.5f64.hypot(0.5)
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0), (0.0, 1.0)]
    }

    fn periodic_axes(&self) -> Vec<bool> {
        vec![true, true]
    }

    fn project(&self, chart: &[f64]) -> Point {
        Point::d2(chart[0].rem_euclid(1.0), chart[1].rem_euclid(1.0))
    }
}

/// Straight-line flow (x, y) + t (vx, vy) on the torus. An isometry for any
/// velocity; minimal exactly when vy/vx is irrational.
pub struct LinearTorusFlow {
    name: String,
    velocity: (f64, f64),
}

impl LinearTorusFlow {
    pub fn new(name: impl Into<String>, velocity: (f64, f64)) -> Self {
        Self { name: name.into(), velocity }
    }

    /// Diagonal unit flow: the product of two unit rotations. Every orbit is
    /// a closed circle, so the flow is isometric but nowhere minimal.
    pub fn product_rotation() -> Self {
        Self::new("product-rotation", (1.0, 1.0))
    }

    /// Slope 1/phi = (sqrt 5 - 1)/2, an irrational winding: minimal and
    /// transitive.
    pub fn golden() -> Self {
        Self::new("torus-irrational", (1.0, (5.0f64.sqrt() - 1.0) / 2.0))
    }

    pub fn velocity(&self) -> (f64, f64) {
        self.velocity
    }
}

impl Flow for LinearTorusFlow {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &dyn SpaceModel {
        &Torus2
    }

    fn kind(&self) -> FlowKind {
        FlowKind::Analytic
    }

    fn group_tolerance(&self) -> f64 {
        1e-9
    }

    fn time_horizon(&self) -> f64 {
        1e6
    }

    fn evolve(&self, x: &Point, t: f64) -> Result<Point, FlowError> {
        check_horizon(t, self.time_horizon())?;
        Ok(Point::d2(
            (x.c(0) + self.velocity.0 * t).rem_euclid(1.0),
            (x.c(1) + self.velocity.1 * t).rem_euclid(1.0),
        ))
    }

    fn lipschitz(&self, _t_box: f64) -> f64 {
        1.0
    }

    fn speed_bound(&self) -> f64 {
        self.velocity.0.hypot(self.velocity.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::check_flow_axioms;
    use crate::space::check_metric_axioms;

    #[test]
    fn torus_metric_wraps_both_axes() {
        let t = Torus2;
        let d = t.dist(&Point::d2(0.05, 0.95), &Point::d2(0.95, 0.05));
        assert!((d - 0.1f64.hypot(0.1)).abs() < 1e-15);
        check_metric_axioms(&t, 128, 7).unwrap();
    }

    #[test]
    fn linear_flows_satisfy_flow_axioms() {
        check_flow_axioms(&LinearTorusFlow::product_rotation(), 150, 4.0, 21).unwrap();
        check_flow_axioms(&LinearTorusFlow::golden(), 150, 4.0, 22).unwrap();
    }

    #[test]
    fn product_rotation_orbits_close_at_time_one() {
        let f = LinearTorusFlow::product_rotation();
        let x = Point::d2(0.3, 0.8);
        assert!(Torus2.dist(&x, &f.evolve(&x, 1.0).unwrap()) < 1e-12);
    }

    #[test]
    fn golden_orbit_does_not_close_early() {
        let f = LinearTorusFlow::golden();
        let x = Point::d2(0.0, 0.0);
        for k in 1..=30 {
            let y = f.evolve(&x, k as f64).unwrap();
            assert!(Torus2.dist(&x, &y) > 1e-3, "closed after {k} turns");
        }
    }

    #[test]
    fn linear_flow_is_isometric() {
        let f = LinearTorusFlow::golden();
        let (p, q) = (Point::d2(0.1, 0.2), Point::d2(0.7, 0.9));
        let d0 = Torus2.dist(&p, &q);
        for t in [0.5, 3.7, -12.0] {
            let d = Torus2.dist(&f.evolve(&p, t).unwrap(), &f.evolve(&q, t).unwrap());
            assert!((d - d0).abs() < 1e-12);
        }
    }
}
