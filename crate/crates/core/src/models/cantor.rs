//! A middle-thirds Cantor approximation glued to an interval: C_n union [1,2]
//! on the real line. The classic base space whose identity map has shadowable
//! points everywhere except the gluing point.

use crate::space::{stream_rng, Point, SpaceModel};
use rand::Rng;

/// C_n union [1,2] with the metric inherited from the line. C_n is the
/// level-n stage of the middle-thirds construction: 2^n closed intervals of
/// width 3^-n, adjacent gaps of width at least 3^-n.
#[derive(Debug, Clone, Copy)]
pub struct CantorInterval {
    level: u32,
}

impl CantorInterval {
    pub fn new(level: u32) -> Self {
        assert!(level >= 1 && level <= 30, "unusable refinement level {level}");
        Self { level }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Width of the level-n intervals (and a lower bound on gap widths).
    pub fn interval_width(&self) -> f64 {
        3.0f64.powi(-(self.level as i32))
    }

    /// Nearest point of C_n to `x`, for x in [0, 1]. Descends the ternary
    /// construction, snapping out of each middle third as it goes.
    fn snap_to_cantor(&self, x: f64) -> f64 {
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut x = x.clamp(0.0, 1.0);
        for _ in 0..self.level {
            let w = (b - a) / 3.0;
            let (left_hi, right_lo) = (a + w, b - w);
            if x <= left_hi {
                b = left_hi;
            } else if x >= right_lo {
                a = right_lo;
            } else if x - left_hi <= right_lo - x {
                x = left_hi;
                b = left_hi;
            } else {
                x = right_lo;
                a = right_lo;
            }
        }
        x.clamp(a, b)
    }

    /// True when `x` lies in the space up to `tol` of slack at each gap edge.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        if x >= 1.0 - tol && x <= 2.0 + tol {
            return true;
        }
        if x < -tol || x > 1.0 + tol {
            return false;
        }
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..self.level {
            let w = (b - a) / 3.0;
            if x <= a + w + tol {
                b = a + w;
            } else if x >= b - w - tol {
                a = b - w;
            } else {
                return false;
            }
        }
        true
    }
}

impl Default for CantorInterval {
    fn default() -> Self {
        Self::new(6)
    }
}

impl SpaceModel for CantorInterval {
    fn name(&self) -> &str {
        "cantor-interval"
    }

    fn chart_dim(&self) -> usize {
        1
    }

    fn dist(&self, p: &Point, q: &Point) -> f64 {
        (p.c(0) - q.c(0)).abs()
    }

    fn diameter(&self) -> f64 {
        2.0
    }

    fn chart_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 2.0)]
    }

    fn project(&self, chart: &[f64]) -> Point {
        let x = chart[0].clamp(0.0, 2.0);
        if x >= 1.0 {
            Point::d1(x)
        } else {
            Point::d1(self.snap_to_cantor(x))
        }
    }

    /// Half ternary-digit points of C_n, half uniform on [1,2].
    fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64 + 1);
                if i % 2 == 0 {
                    let mut x = 0.0f64;
                    let mut w = 1.0f64;
                    for _ in 0..self.level {
                        w /= 3.0;
                        if rng.random::<bool>() {
                            x += 2.0 * w;
                        }
                    }
                    Point::d1(x + rng.random::<f64>() * w)
                } else {
                    Point::d1(1.0 + rng.random::<f64>())
                }
            })
            .collect()
    }
}
