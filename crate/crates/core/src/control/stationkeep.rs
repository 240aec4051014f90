//! Fully actuated MIMO backstepping controller for station-keeping.
//!
//! Pose setpoint regulation through a virtual reference: the desired
//! pose rate is bent toward the setpoint by `lambda`, converted to a
//! body-frame velocity reference, and the wrench combines reduced-model
//! feedforward along that reference with PD-type feedback on the
//! tracking surface and the pose error. The reference acceleration is a
//! backward finite difference, zero on the first step after reset, so a
//! setpoint jump produces one bounded feedforward spike that allocation
//! clamps.
//!
//! The two feedback terms enter negatively through the transposed
//! kinematic map; with everything expressed in the body frame the law is
//! exactly zero at the setpoint at rest.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::ControlOutput;
use crate::model::{rotation3, wrap_angle, ModelKind, VehicleParams, VehicleState};
use crate::trajectory::TrajectorySample;
use crate::SimError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StationKeepGains {
    /// Virtual reference slope diagonal (1/s).
    pub lambda: [f64; 3],
    /// Pose error gain diagonal.
    pub k_p: [f64; 3],
    /// Tracking surface gain diagonal.
    pub k_d: [f64; 3],
}

impl Default for StationKeepGains {
    fn default() -> Self {
        StationKeepGains {
            lambda: [0.2, 0.2, 0.2],
            k_p: [80.0, 80.0, 150.0],
            k_d: [200.0, 200.0, 300.0],
        }
    }
}

impl StationKeepGains {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.lambda.iter().all(|&x| x > 0.0)
            && self.k_p.iter().all(|&x| x > 0.0)
            && self.k_d.iter().all(|&x| x > 0.0);
        if ok {
            Ok(())
        } else {
            Err(SimError::Config { reason: "station-keeping gains must be positive".into() })
        }
    }
}

/// Pose error with wrapped heading component.
pub fn pose_error(eta: &Vector3<f64>, eta_d: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        eta.x - eta_d.x,
        eta.y - eta_d.y,
        wrap_angle(eta.z - eta_d.z),
    )
}

#[derive(Debug, Clone)]
pub struct StationKeepController {
    pub gains: StationKeepGains,
    prev_nu_r: Option<Vector3<f64>>,
}

impl StationKeepController {
    pub fn new(gains: StationKeepGains) -> Result<Self, SimError> {
        gains.validate()?;
        Ok(StationKeepController { gains, prev_nu_r: None })
    }

    pub fn reset(&mut self) {
        self.prev_nu_r = None;
    }

    pub fn compute(
        &mut self,
        p: &VehicleParams,
        state: &VehicleState,
        sample: &TrajectorySample,
        dt: f64,
    ) -> ControlOutput {
        let g = &self.gains;
        let eta_t = pose_error(&state.eta, &sample.eta_d);
        // setpoint regulation: desired pose rate is zero, the virtual
        // reference bends toward the setpoint
        let etar_dot = Vector3::new(
            -g.lambda[0] * eta_t.x,
            -g.lambda[1] * eta_t.y,
            -g.lambda[2] * eta_t.z,
        );
        let j = rotation3(state.psi());
        let nu_r = j.transpose() * etar_dot;
        let nudot_r = match self.prev_nu_r {
            Some(prev) => (nu_r - prev) / dt,
            None => Vector3::zeros(),
        };
        self.prev_nu_r = Some(nu_r);

        let s = j * state.nu - etar_dot;
        let fb = Vector3::new(
            g.k_d[0] * s.x + g.k_p[0] * eta_t.x,
            g.k_d[1] * s.y + g.k_p[1] * eta_t.y,
            g.k_d[2] * s.z + g.k_p[2] * eta_t.z,
        );
        let tau = p.mass_matrix(ModelKind::StationKeeping) * nudot_r
            + p.coriolis_matrix(ModelKind::StationKeeping, &state.nu) * nu_r
            + p.damping_matrix(ModelKind::StationKeeping, &state.nu) * nu_r
            - j.transpose() * fb;
        ControlOutput { tau, kill: false }
    }
}
