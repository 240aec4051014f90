//! Behavior controllers: transiting, station-keeping, reversing.
//!
//! Each controller consumes the vessel state and a reference sample and
//! produces a body wrench request. Controllers carry small internal
//! memories (finite-difference histories, anti-windup state); the
//! supervisor clones those memories when it forecasts a candidate, so a
//! rollout never perturbs the live instance.

pub mod reverse;
pub mod stationkeep;
pub mod transit;

use nalgebra::Vector3;

use crate::model::{VehicleParams, VehicleState};
use crate::trajectory::TrajectorySample;

/// Wrench request handed to allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// `[X, Y, N]` body wrench (N, N, N m). Underactuated controllers
    /// leave Y at zero.
    pub tau: Vector3<f64>,
    /// Raised by the reversing controller inside the minimum acceptable
    /// distance: surge thrust is cut rather than braked, while heading
    /// control stays active.
    pub kill: bool,
}

impl ControlOutput {
    pub fn wrench(x: f64, y: f64, n: f64) -> Self {
        ControlOutput { tau: Vector3::new(x, y, n), kill: false }
    }
}

/// A behavior controller instance with its internal memory. Cloning
/// yields an independent copy, which is exactly what rollouts need.
#[derive(Debug, Clone)]
pub enum Behavior {
    Transit(transit::TransitController),
    StationKeep(stationkeep::StationKeepController),
    Reverse(reverse::ReverseController),
}

impl Behavior {
    pub fn compute(
        &mut self,
        p: &VehicleParams,
        state: &VehicleState,
        sample: &TrajectorySample,
        dt: f64,
    ) -> ControlOutput {
        match self {
            Behavior::Transit(c) => c.compute(p, state, sample, dt),
            Behavior::StationKeep(c) => c.compute(p, state, sample, dt),
            Behavior::Reverse(c) => c.compute(p, state, sample, dt),
        }
    }

    /// Clears finite-difference and integrator memory.
    pub fn reset(&mut self) {
        match self {
            Behavior::Transit(c) => c.reset(),
            Behavior::StationKeep(c) => c.reset(),
            Behavior::Reverse(c) => c.reset(),
        }
    }
}
