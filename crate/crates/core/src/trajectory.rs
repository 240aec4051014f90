//! Reference trajectory construction and sampling.
//!
//! A reference is declared as a list of segments: station holds and
//! straight-line transits with trapezoidal speed profiles. Segments chain
//! positionally, so each starts exactly where the previous one ends and
//! the built trajectory is continuous in position by construction. The
//! desired heading during a transit is the direction of motion; holds pin
//! the heading explicitly, and heading may therefore jump at a segment
//! boundary (the vehicle is expected to re-orient during the hold).
//!
//! The built [`Reference`] is immutable and sampled on the fixed control
//! grid. Lookups use floor semantics: a query at `t` returns the sample
//! with `t_k <= t < t_{k+1}`, mirroring a zero-order hold. Each sample
//! also exposes the following grid point, which the reversing controller
//! uses as its line-of-sight waypoint.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Declarative segment description, as written in the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentSpec {
    /// Hold the position reached so far with a fixed heading.
    Hold {
        /// Hold length (s).
        duration: f64,
        /// Desired heading (rad, NED).
        psi: f64,
    },
    /// Straight-line run to a waypoint with a trapezoidal speed profile.
    Transit {
        /// Target position `[x, y]` (m, NED).
        to: [f64; 2],
        /// Cruise speed (m/s).
        speed: f64,
        /// Ramp acceleration (m/s^2).
        accel: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    /// Start position `[x, y]` (m, NED).
    pub start: [f64; 2],
    pub segments: Vec<SegmentSpec>,
}

impl Default for TrajectoryConfig {
    /// The five-segment reference task: hold facing east, transit 80 m
    /// east at 1 m/s, hold facing west, transit back, hold facing west.
    fn default() -> Self {
        use std::f64::consts::FRAC_PI_2;
        TrajectoryConfig {
            start: [0.0, 0.0],
            segments: vec![
                SegmentSpec::Hold { duration: 30.0, psi: FRAC_PI_2 },
                SegmentSpec::Transit { to: [0.0, 80.0], speed: 1.0, accel: 0.05 },
                SegmentSpec::Hold { duration: 30.0, psi: -FRAC_PI_2 },
                SegmentSpec::Transit { to: [0.0, 0.0], speed: 1.0, accel: 0.05 },
                SegmentSpec::Hold { duration: 30.0, psi: -FRAC_PI_2 },
            ],
        }
    }
}

/// One grid point of the built reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub t: f64,
    /// Desired pose `[x_d, y_d, psi_d]`.
    pub eta_d: Vector3<f64>,
    /// Desired pose rate.
    pub etad_dot: Vector3<f64>,
    /// Desired pose acceleration.
    pub etad_ddot: Vector3<f64>,
}

/// Result of a reference lookup: the current grid point plus the next
/// one, which line-of-sight guidance treats as the pending waypoint.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub t: f64,
    pub eta_d: Vector3<f64>,
    pub etad_dot: Vector3<f64>,
    pub etad_ddot: Vector3<f64>,
    pub t_next: f64,
    pub eta_d_next: Vector3<f64>,
}

/// Time window of one declared segment within the built reference.
#[derive(Debug, Clone, Copy)]
pub struct SegmentWindow {
    pub t0: f64,
    pub t1: f64,
    pub is_hold: bool,
}

/// Compiled segment geometry used during evaluation.
#[derive(Debug, Clone)]
enum Profile {
    Hold { pos: Vector2<f64>, psi: f64 },
    Transit {
        from: Vector2<f64>,
        dir: Vector2<f64>,
        dist: f64,
        psi: f64,
        cruise: f64,
        accel: f64,
        ramp: f64,
        total: f64,
    },
}

impl Profile {
    /// Closed-form (position, speed, acceleration) along the path at
    /// local time `s` from segment start.
    fn eval(&self, s: f64) -> (Vector2<f64>, Vector2<f64>, Vector2<f64>, f64) {
        match self {
            Profile::Hold { pos, psi } => (*pos, Vector2::zeros(), Vector2::zeros(), *psi),
            Profile::Transit { from, dir, dist, psi, cruise, accel, ramp, total } => {
                let (d, v, a) = if s <= 0.0 {
                    (0.0, 0.0, 0.0)
                } else if s < *ramp {
                    (0.5 * accel * s * s, accel * s, *accel)
                } else if s < total - ramp {
                    (0.5 * accel * ramp * ramp + cruise * (s - ramp), *cruise, 0.0)
                } else if s < *total {
                    let rem = total - s;
                    (dist - 0.5 * accel * rem * rem, accel * rem, -*accel)
                } else {
                    (*dist, 0.0, 0.0)
                };
                (from + d * dir, v * dir, a * dir, *psi)
            }
        }
    }
}

/// Immutable sampled reference trajectory.
#[derive(Debug, Clone)]
pub struct Reference {
    dt: f64,
    points: Vec<RefPoint>,
    windows: Vec<SegmentWindow>,
}

impl Reference {
    /// Compiles the declared segments and samples them on the `dt` grid.
    pub fn build(cfg: &TrajectoryConfig, dt: f64) -> Result<Reference, SimError> {
        let fail = |reason: String| Err(SimError::TrajectoryBuild { reason });
        if cfg.segments.is_empty() {
            return fail("segment list is empty".into());
        }
        if !(dt > 0.0) {
            return fail(format!("non-positive sample interval {dt}"));
        }

        let mut cursor = Vector2::new(cfg.start[0], cfg.start[1]);
        let mut profiles = Vec::new();
        let mut windows = Vec::new();
        let mut t0 = 0.0;
        for (i, seg) in cfg.segments.iter().enumerate() {
            let (profile, duration, is_hold) = match *seg {
                SegmentSpec::Hold { duration, psi } => {
                    if !(duration > 0.0) {
                        return fail(format!("segment {i}: non-positive hold duration"));
                    }
                    (Profile::Hold { pos: cursor, psi: crate::model::wrap_angle(psi) }, duration, true)
                }
                SegmentSpec::Transit { to, speed, accel } => {
                    if !(speed > 0.0 && accel > 0.0) {
                        return fail(format!("segment {i}: speed and accel must be positive"));
                    }
                    let target = Vector2::new(to[0], to[1]);
                    let delta = target - cursor;
                    let dist = delta.norm();
                    if dist <= 1e-9 {
                        return fail(format!("segment {i}: transit target equals segment start"));
                    }
                    let dir = delta / dist;
                    let psi = dir.y.atan2(dir.x);
                    // trapezoid when the cruise speed is reachable within
                    // the distance, triangular ramp otherwise
                    let (cruise, ramp, total) = if dist >= speed * speed / accel {
                        (speed, speed / accel, dist / speed + speed / accel)
                    } else {
                        let peak = (dist * accel).sqrt();
                        (peak, peak / accel, 2.0 * peak / accel)
                    };
                    let from = cursor;
                    cursor = target;
                    (
                        Profile::Transit { from, dir, dist, psi, cruise, accel, ramp, total },
                        total,
                        false,
                    )
                }
            };
            windows.push(SegmentWindow { t0, t1: t0 + duration, is_hold });
            profiles.push((t0, profile));
            t0 += duration;
        }
        let t_final = t0;

        let n = (t_final / dt).round() as usize;
        let mut points = Vec::with_capacity(n + 1);
        let mut seg_idx = 0;
        for k in 0..=n {
            let t = k as f64 * dt;
            while seg_idx + 1 < profiles.len() && t >= windows[seg_idx].t1 - 1e-9 {
                seg_idx += 1;
            }
            let (seg_t0, profile) = &profiles[seg_idx];
            let (p, v, a, psi) = profile.eval(t - seg_t0);
            points.push(RefPoint {
                t,
                eta_d: Vector3::new(p.x, p.y, psi),
                etad_dot: Vector3::new(v.x, v.y, 0.0),
                etad_ddot: Vector3::new(a.x, a.y, 0.0),
            });
        }
        Ok(Reference { dt, points, windows })
    }

    /// Floor-semantics lookup: the grid point with `t_k <= t < t_{k+1}`,
    /// clamped to the trajectory span.
    pub fn sample(&self, t: f64) -> TrajectorySample {
        let raw = ((t / self.dt) + 1e-9).floor();
        let k = (raw.max(0.0) as usize).min(self.points.len() - 1);
        let next = (k + 1).min(self.points.len() - 1);
        let p = &self.points[k];
        let q = &self.points[next];
        TrajectorySample {
            t: p.t,
            eta_d: p.eta_d,
            etad_dot: p.etad_dot,
            etad_ddot: p.etad_ddot,
            t_next: q.t,
            eta_d_next: q.eta_d,
        }
    }

    pub fn duration(&self) -> f64 {
        self.points.last().map(|p| p.t).unwrap_or(0.0)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> &[RefPoint] {
        &self.points
    }

    /// Segment time windows in declaration order.
    pub fn windows(&self) -> &[SegmentWindow] {
        &self.windows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn reference() -> Reference {
        Reference::build(&TrajectoryConfig::default(), 0.1).unwrap()
    }

    #[test]
    fn default_durations() {
        let r = reference();
        // 80 m at 1 m/s with 0.05 m/s^2 ramps: 80/1 + 1/0.05 = 100 s
        let w = r.windows();
        assert_eq!(w.len(), 5);
        assert_relative_eq!(w[1].t1 - w[1].t0, 100.0, max_relative = 1e-12);
        assert_relative_eq!(r.duration(), 290.0, max_relative = 1e-12);
        assert_eq!(r.points().len(), 2901);
    }

    #[test]
    fn headings_follow_motion_and_holds() {
        let r = reference();
        assert_eq!(r.sample(10.0).eta_d.z, FRAC_PI_2); // hold 1 faces east
        assert_eq!(r.sample(80.0).eta_d.z, FRAC_PI_2); // eastbound transit
        assert_eq!(r.sample(140.0).eta_d.z, -FRAC_PI_2); // hold 3 faces west
        assert_eq!(r.sample(200.0).eta_d.z, -FRAC_PI_2); // westbound transit
        assert_eq!(r.sample(285.0).eta_d.z, -FRAC_PI_2); // final hold
    }

    #[test]
    fn hold_derivatives_vanish() {
        let r = reference();
        for t in [0.0, 15.0, 29.9, 131.0, 289.9] {
            let s = r.sample(t);
            assert_eq!(s.etad_dot, Vector3::zeros());
            assert_eq!(s.etad_ddot, Vector3::zeros());
        }
    }

    #[test]
    fn floor_semantics_and_next_waypoint() {
        let r = reference();
        let s = r.sample(0.749);
        assert_relative_eq!(s.t, 0.7, max_relative = 1e-12);
        assert_relative_eq!(s.t_next, 0.8, max_relative = 1e-12);
        // exact grid point stays put
        assert_relative_eq!(r.sample(0.7).t, 0.7, max_relative = 1e-12);
        // clamping at both ends
        assert_eq!(r.sample(1e9).t, 290.0);
        assert_eq!(r.sample(1e9).t_next, 290.0);
        assert_eq!(r.sample(-5.0).t, 0.0);
    }

    #[test]
    fn speed_and_accel_bounded() {
        let r = reference();
        for p in r.points() {
            assert!(p.etad_dot.xy().norm() <= 1.0 + 1e-12);
            assert!(p.etad_ddot.xy().norm() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn velocity_consistent_with_position_differences() {
        // ramp phase boundaries land on the grid, so trapezoidal
        // integration of the speed profile reproduces positions exactly
        let r = reference();
        let pts = r.points();
        for k in 0..pts.len() - 1 {
            let seg = pts[k + 1].eta_d.xy() - pts[k].eta_d.xy();
            let trap = 0.05 * (pts[k].etad_dot.xy() + pts[k + 1].etad_dot.xy());
            assert!((seg - trap).norm() < 1e-6, "at k={k}");
        }
    }

    #[test]
    fn position_continuity() {
        let r = reference();
        let pts = r.points();
        for k in 0..pts.len() - 1 {
            let jump = (pts[k + 1].eta_d.xy() - pts[k].eta_d.xy()).norm();
            assert!(jump <= 0.1 + 1e-9, "position jump {jump} at k={k}");
        }
    }

    #[test]
    fn eastbound_profile_shape() {
        let r = reference();
        // cruise plateau of the eastbound leg
        let s = r.sample(80.0);
        assert_relative_eq!(s.etad_dot.y, 1.0, max_relative = 1e-12);
        assert_eq!(s.etad_dot.x, 0.0);
        // ramp-up midpoint: t = 40 s is 10 s into the leg
        let s = r.sample(40.0);
        assert_relative_eq!(s.etad_dot.y, 0.5, max_relative = 1e-12);
        assert_relative_eq!(s.etad_ddot.y, 0.05, max_relative = 1e-12);
        // end of leg reaches the waypoint at rest
        let s = r.sample(130.0);
        assert_relative_eq!(s.eta_d.y, 80.0, max_relative = 1e-12);
        assert_eq!(s.etad_dot, Vector3::zeros());
    }

    #[test]
    fn triangle_profile_when_leg_is_short() {
        let cfg = TrajectoryConfig {
            start: [0.0, 0.0],
            segments: vec![SegmentSpec::Transit { to: [5.0, 0.0], speed: 1.0, accel: 0.05 }],
        };
        let r = Reference::build(&cfg, 0.1).unwrap();
        // peak speed sqrt(d a) = 0.5 m/s, duration 2 sqrt(d/a) = 20 s
        assert_relative_eq!(r.duration(), 20.0, max_relative = 1e-12);
        let peak: f64 = r.points().iter().map(|p| p.etad_dot.norm()).fold(0.0, f64::max);
        assert_relative_eq!(peak, 0.5, max_relative = 1e-9);
        assert_relative_eq!(r.points().last().unwrap().eta_d.x, 5.0, max_relative = 1e-9);
    }

    #[test]
    fn rejects_bad_segments() {
        let empty = TrajectoryConfig { start: [0.0, 0.0], segments: vec![] };
        assert!(Reference::build(&empty, 0.1).is_err());
        let zero_leg = TrajectoryConfig {
            start: [1.0, 2.0],
            segments: vec![SegmentSpec::Transit { to: [1.0, 2.0], speed: 1.0, accel: 0.05 }],
        };
        assert!(Reference::build(&zero_leg, 0.1).is_err());
        let bad_hold = TrajectoryConfig {
            start: [0.0, 0.0],
            segments: vec![SegmentSpec::Hold { duration: 0.0, psi: 0.0 }],
        };
        assert!(Reference::build(&bad_hold, 0.1).is_err());
    }
}
