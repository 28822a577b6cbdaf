//! Adaptive Dormand-Prince 5(4) integration for models without closed-form
//! trajectories. One tolerance knob; step underflow is an error, never a
//! silent clamp.

use crate::flow::FlowError;

/// Dormand-Prince 5(4) with PI-free step control.
///
/// `tol` is used for both absolute and relative local error per step.
/// Integrates from `t = 0` to `t = t_end` (either sign) and returns the final
/// state.
pub fn integrate_dp54<F>(f: F, y0: &[f64], t_end: f64, tol: f64) -> Result<Vec<f64>, FlowError>
where
    F: Fn(&[f64], &mut [f64]),
{
    const MIN_STEP_FRACTION: f64 = 1e-12;
    let n = y0.len();
    let mut y = y0.to_vec();
    if t_end == 0.0 {
        return Ok(y);
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0_f64;
    let mut h = (span / 16.0).min(0.25).max(span * 1e-6);
    let mut k = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut y4 = vec![0.0; n];

    // Butcher tableau, Dormand-Prince 5(4).
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    f(&y, &mut k[0]);
    while t < span {
        h = h.min(span - t);
        if h < span * MIN_STEP_FRACTION {
            return Err(FlowError::IntegrationFailure {
                t: dir * t,
                reason: format!("step size underflow (h = {h:.3e})"),
            });
        }
        for stage in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                y_stage[i] = y[i] + dir * h * acc;
            }
            f(&y_stage, &mut k[stage + 1]);
        }
        let mut err = 0.0_f64;
        for i in 0..n {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                s5 += B5[j] * kj[i];
                s4 += B4[j] * kj[i];
            }
            y5[i] = y[i] + dir * h * s5;
            y4[i] = y[i] + dir * h * s4;
            let scale = tol + tol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / scale).abs());
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            let (head, tail) = k.split_at_mut(6);
            head[0].copy_from_slice(&tail[0]); // FSAL
            if !y.iter().all(|v| v.is_finite()) {
                return Err(FlowError::IntegrationFailure {
                    t: dir * t,
                    reason: "state became non-finite".into(),
                });
            }
        } else {
            f(&y, &mut k[0]);
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let y = integrate_dp54(|y, dy| dy[0] = -y[0], &[1.0], 2.0, 1e-10).unwrap();
        assert!((y[0] - (-2.0_f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_round_trip() {
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let y = integrate_dp54(f, &[1.0, 0.0], std::f64::consts::TAU, 1e-10).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-7);
        assert!(y[1].abs() < 1e-7);
    }

    #[test]
    fn negative_time_runs_backwards() {
        let y = integrate_dp54(|y, dy| dy[0] = -y[0], &[1.0], -1.0, 1e-10).unwrap();
        assert!((y[0] - 1.0_f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn blowup_reports_failure() {
        // y' = y^2 from y(0) = 1 blows up at t = 1
        let res = integrate_dp54(|y, dy| dy[0] = y[0] * y[0], &[1.0], 2.0, 1e-8);
        assert!(res.is_err());
    }
}
