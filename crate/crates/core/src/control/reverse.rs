//! Line-of-sight reversing controller.
//!
//! The vehicle backs toward the pending trajectory waypoint: the desired
//! heading points from the waypoint toward the vehicle, so with the
//! stern on the line a negative surge speed closes the range. Heading is
//! a proportional torque on the wrapped error. Surge is a PI loop on the
//! speed error whose integrator only runs while the measured speed is
//! inside a band around the setpoint, is reset on band entry, and is
//! zeroed outside: far from the setpoint the proportional term does the
//! work and the integrator cannot wind up.
//!
//! Inside the minimum acceptable distance the speed setpoint is replaced
//! by a kill signal: surge thrust is cut (not braked to zero speed) and
//! the vehicle coasts while heading control stays active.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::ControlOutput;
use crate::model::{wrap_angle, VehicleParams, VehicleState};
use crate::trajectory::TrajectorySample;
use crate::SimError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReverseGains {
    /// Heading proportional gain (N m / rad).
    pub k_psi: f64,
    /// Surge proportional gain (N s / m).
    pub k_pu: f64,
    /// Surge integral gain (N / m).
    pub k_iu: f64,
    /// Lower edge of the integrator band, as a fraction of `|u_los|`.
    pub alpha_min: f64,
    /// Upper edge of the integrator band.
    pub alpha_max: f64,
    /// Minimum acceptable distance to the waypoint (m); closer than this
    /// the speed setpoint becomes a kill signal.
    pub r_min: f64,
    /// Reversing speed limit (m/s, positive number).
    pub u_rev_max: f64,
}

impl Default for ReverseGains {
    fn default() -> Self {
        ReverseGains {
            k_psi: 400.0,
            k_pu: 300.0,
            k_iu: 60.0,
            alpha_min: 0.5,
            alpha_max: 1.5,
            r_min: 2.0,
            u_rev_max: 1.0,
        }
    }
}

impl ReverseGains {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.k_psi > 0.0
            && self.k_pu > 0.0
            && self.k_iu >= 0.0
            && self.alpha_min >= 0.0
            && self.alpha_max > self.alpha_min
            && self.r_min > 0.0
            && self.u_rev_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::Config { reason: "reversing gains out of range".into() })
        }
    }
}

/// Range to the waypoint and its excess over the minimum acceptable
/// distance.
pub fn los_distance(pos: Vector2<f64>, wp: Vector2<f64>, r_min: f64) -> (f64, f64) {
    let r_t = (pos - wp).norm();
    (r_t, r_t - r_min)
}

/// Desired heading: from the waypoint toward the vehicle while outside
/// the minimum distance, the waypoint's own heading once inside.
pub fn los_heading(pos: Vector2<f64>, wp: Vector2<f64>, psi_d_next: f64, l: f64) -> f64 {
    if l >= 0.0 {
        (pos.y - wp.y).atan2(pos.x - wp.x)
    } else {
        psi_d_next
    }
}

/// Speed setpoint from remaining distance over remaining time, clamped
/// sternward. `None` is the kill signal. A degenerate zero time window
/// falls back to the speed limit.
pub fn los_speed(l: f64, t: f64, t_next: f64, u_rev_max: f64) -> Option<f64> {
    if l < 0.0 {
        return None;
    }
    if t == t_next {
        return Some(-u_rev_max);
    }
    Some((l / (t - t_next)).clamp(-u_rev_max, 0.0))
}

/// Heading torque on the wrapped error.
pub fn heading_p(psi: f64, psi_los: f64, k_psi: f64) -> f64 {
    -k_psi * wrap_angle(psi - psi_los)
}

/// Conditional integrator state for the surge PI loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct AntiWindup {
    pub integral: f64,
    inside: bool,
}

impl AntiWindup {
    /// Advances the integrator: active only while `|u|` is inside the
    /// band `[alpha_min |u_los|, alpha_max |u_los|]`, reset to zero on
    /// band entry, and held at zero outside.
    pub fn update(&mut self, u: f64, u_los: f64, dt: f64, g: &ReverseGains) {
        let lo = g.alpha_min * u_los.abs();
        let hi = g.alpha_max * u_los.abs();
        let inside = u.abs() >= lo && u.abs() <= hi;
        if inside {
            if !self.inside {
                self.integral = 0.0;
            }
            self.integral += (u - u_los) * dt;
        } else {
            self.integral = 0.0;
        }
        self.inside = inside;
    }
}

/// Surge PI force, given the current integrator value.
pub fn surge_pi(u: f64, u_los: f64, integral: f64, g: &ReverseGains) -> f64 {
    -g.k_pu * (u - u_los) - g.k_iu * integral
}

#[derive(Debug, Clone)]
pub struct ReverseController {
    pub gains: ReverseGains,
    aw: AntiWindup,
}

impl ReverseController {
    pub fn new(gains: ReverseGains) -> Result<Self, SimError> {
        gains.validate()?;
        Ok(ReverseController { gains, aw: AntiWindup::default() })
    }

    pub fn reset(&mut self) {
        self.aw = AntiWindup::default();
    }

    /// Integrator value, exposed for tests.
    pub fn integral(&self) -> f64 {
        self.aw.integral
    }

    pub fn compute(
        &mut self,
        _p: &VehicleParams,
        state: &VehicleState,
        sample: &TrajectorySample,
        dt: f64,
    ) -> ControlOutput {
        let g = self.gains.clone();
        let wp = sample.eta_d_next.xy();
        let (_r_t, l) = los_distance(state.eta.xy(), wp, g.r_min);
        let psi_los = los_heading(state.eta.xy(), wp, sample.eta_d_next.z, l);
        let n = heading_p(state.psi(), psi_los, g.k_psi);
        match los_speed(l, state.t, sample.t_next, g.u_rev_max) {
            Some(u_los) => {
                self.aw.update(state.nu.x, u_los, dt, &g);
                let x = surge_pi(state.nu.x, u_los, self.aw.integral, &g);
                ControlOutput { tau: Vector3::new(x, 0.0, n), kill: false }
            }
            None => {
                self.aw = AntiWindup::default();
                ControlOutput { tau: Vector3::new(0.0, 0.0, n), kill: true }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{step, ModelKind};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn los_distance_example() {
        let (r_t, l) = los_distance(Vector2::new(10.0, 0.0), Vector2::zeros(), 2.0);
        assert_eq!((r_t, l), (10.0, 8.0));
    }

    #[test]
    fn los_heading_switches_inside_minimum_distance() {
        let pos = Vector2::new(10.0, 0.0);
        let wp = Vector2::zeros();
        // outside: points from waypoint toward the vehicle (due north)
        assert_eq!(los_heading(pos, wp, 1.0, 8.0), 0.0);
        // inside: adopts the waypoint heading
        assert_eq!(los_heading(pos, wp, 1.0, -0.5), 1.0);
    }

    #[test]
    fn los_speed_cases() {
        // 8 m remaining with 10 s on the clock: slow stern approach
        assert_relative_eq!(los_speed(8.0, 0.0, 10.0, 1.0).unwrap(), -0.8);
        // short window clamps to the limit
        assert_relative_eq!(los_speed(8.0, 9.9, 10.0, 1.0).unwrap(), -1.0);
        // degenerate window falls back to the limit
        assert_relative_eq!(los_speed(8.0, 10.0, 10.0, 1.0).unwrap(), -1.0);
        // inside minimum distance: kill
        assert!(los_speed(-0.1, 0.0, 10.0, 1.0).is_none());
    }

    #[test]
    fn heading_p_example() {
        let n = heading_p(FRAC_PI_2, 0.0, 400.0);
        assert_relative_eq!(n, -400.0 * FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn antiwindup_band_semantics() {
        let g = ReverseGains::default();
        let mut aw = AntiWindup::default();
        // far below the band: integrator pinned at zero
        aw.update(-0.1, -0.8, 0.1, &g);
        assert_eq!(aw.integral, 0.0);
        // entering the band resets then accumulates
        aw.update(-0.6, -0.8, 0.1, &g);
        assert_relative_eq!(aw.integral, 0.02, max_relative = 1e-12);
        aw.update(-0.6, -0.8, 0.1, &g);
        assert_relative_eq!(aw.integral, 0.04, max_relative = 1e-12);
        // overspeed past the band zeroes it again
        aw.update(-1.3, -0.8, 0.1, &g);
        assert_eq!(aw.integral, 0.0);
        // re-entry starts from zero, not the stale sum
        aw.update(-1.1, -0.8, 0.1, &g);
        assert_relative_eq!(aw.integral, -0.03, max_relative = 1e-12);
    }

    #[test]
    fn kill_cuts_surge_keeps_heading() {
        let p = VehicleParams::default();
        let mut c = ReverseController::new(ReverseGains::default()).unwrap();
        let st = VehicleState::new(
            0.0,
            Vector3::new(1.0, 0.0, FRAC_PI_2),
            Vector3::new(-0.3, 0.0, 0.0),
        );
        let sample = TrajectorySample {
            t: 0.0,
            eta_d: Vector3::zeros(),
            etad_dot: Vector3::zeros(),
            etad_ddot: Vector3::zeros(),
            t_next: 0.1,
            eta_d_next: Vector3::new(0.0, 0.0, 0.3),
        };
        let out = c.compute(&p, &st, &sample, 0.1);
        assert!(out.kill);
        assert_eq!(out.tau.x, 0.0);
        // heading error psi - psi_d_next = pi/2 - 0.3
        assert_relative_eq!(out.tau.z, -400.0 * (FRAC_PI_2 - 0.3), max_relative = 1e-12);
        assert_eq!(c.integral(), 0.0);
    }

    /// Surge-only closed loop on the reversing model: a -0.8 m/s setpoint
    /// step settles with small error, and the banded integrator
    /// overshoots no more than an always-on one.
    #[test]
    fn antiwindup_bounds_overshoot() {
        let p = VehicleParams::default();
        let g = ReverseGains::default();
        let u_los = -0.8;
        let dt = 0.1;

        let run = |always_on: bool| -> (f64, f64) {
            let mut st = VehicleState::new(0.0, Vector3::zeros(), Vector3::zeros());
            let mut aw = AntiWindup::default();
            let mut plain_integral = 0.0;
            let mut peak: f64 = 0.0;
            for _ in 0..600 {
                let integral = if always_on {
                    plain_integral += (st.nu.x - u_los) * dt;
                    plain_integral
                } else {
                    aw.update(st.nu.x, u_los, dt, &g);
                    aw.integral
                };
                let x = surge_pi(st.nu.x, u_los, integral, &g);
                st = step(&p, ModelKind::Reversing, &st, &Vector3::new(x, 0.0, 0.0), dt).unwrap();
                peak = peak.max(st.nu.x.abs());
            }
            (st.nu.x, peak)
        };

        let (u_banded, peak_banded) = run(false);
        let (u_plain, peak_plain) = run(true);
        assert!((u_banded - u_los).abs() < 0.02, "steady error {}", (u_banded - u_los).abs());
        assert!((u_plain - u_los).abs() < 0.02);
        let overshoot_banded = (peak_banded - u_los.abs()).max(0.0);
        let overshoot_plain = (peak_plain - u_los.abs()).max(0.0);
        assert!(
            overshoot_banded <= overshoot_plain + 1e-12,
            "banded {overshoot_banded} vs plain {overshoot_plain}"
        );
    }
}
