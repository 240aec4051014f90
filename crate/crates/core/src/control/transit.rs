//! Underactuated backstepping controller for transiting.
//!
//! The position error is stabilized to a small neighborhood of the
//! target rather than to the point itself: the design constant `delta`
//! (with a strictly positive surge component) keeps the ball matrix
//! invertible, which is what lets a surge-and-yaw-only vehicle track a
//! planar position reference. The first backstepping stage shapes a
//! virtual planar velocity, the second treats surge force and yaw rate
//! as the control pair through the ball matrix, and a final yaw stage
//! backsteps the virtual yaw rate through a torque law with a
//! finite-difference feedforward of the virtual rate's derivative.
//!
//! The yaw torque is clamped; surge saturation is left to allocation,
//! which already attenuates surge in favor of yaw authority.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::ControlOutput;
use crate::model::{rotation2, VehicleParams, VehicleState};
use crate::trajectory::TrajectorySample;
use crate::SimError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitGains {
    /// Position error gain diagonal.
    pub k_e: [f64; 2],
    /// Velocity error gain diagonal.
    pub k_phi: [f64; 2],
    /// Yaw backstepping gain.
    pub k_z2: f64,
    /// Neighborhood vector `[delta_1, delta_2]` (m/s scale); `delta_1`
    /// must be strictly positive, `delta_2` may be zero. The steady
    /// position offset scales with `m delta / k_e`, so `k_e` of the order
    /// of the effective inertias keeps the vehicle within about `|delta|`
    /// of the reference. A zero `delta_2` removes the standing sway bias
    /// and with it the slow commanded orbit the law otherwise exhibits at
    /// rest, which keeps forecasts of this controller quiet during holds.
    pub delta: [f64; 2],
    /// Yaw torque clamp (N m). Unset falls back to the vehicle `n_max`.
    pub n_clamp: Option<f64>,
}

impl Default for TransitGains {
    fn default() -> Self {
        TransitGains {
            k_e: [300.0, 300.0],
            k_phi: [5.0, 5.0],
            k_z2: 100.0,
            delta: [0.25, 0.0],
            n_clamp: None,
        }
    }
}

impl TransitGains {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.delta[0] > 0.0) {
            return Err(SimError::SingularNeighborhood { delta1: self.delta[0] });
        }
        let positive = self.k_e.iter().all(|&k| k > 0.0)
            && self.k_phi.iter().all(|&k| k >= 0.0)
            && self.k_z2 > 0.0
            && self.delta[1] >= 0.0
            && self.n_clamp.map_or(true, |n| n > 0.0);
        if !positive {
            return Err(SimError::Config {
                reason: "transit gains must be positive (k_phi non-negative)".into(),
            });
        }
        Ok(())
    }
}

/// Position error rotated into the body frame.
pub fn position_error(psi: f64, pos: Vector2<f64>, pd: Vector2<f64>) -> Vector2<f64> {
    rotation2(psi).transpose() * (pos - pd)
}

/// Ball matrix pairing the surge-force and yaw-rate controls. Invertible
/// whenever `delta_1 > 0`.
pub fn ball_matrix(p: &VehicleParams, delta: [f64; 2]) -> Matrix2<f64> {
    Matrix2::new(1.0, p.m_v() * delta[1], 0.0, p.m_u() * delta[0])
}

/// Stabilizing function: the surge force / virtual yaw rate pair.
///
/// Written elementwise since every gain matrix is diagonal. The damping
/// entries `d1`, `d2` are the positive reduced-model values, and the
/// feedforward block cancels reference motion while the `k_e`-weighted
/// terms shape the position loop.
pub fn stabilizer(
    p: &VehicleParams,
    gains: &TransitGains,
    state: &VehicleState,
    pd: Vector2<f64>,
    pd_dot: Vector2<f64>,
    pd_ddot: Vector2<f64>,
) -> Vector2<f64> {
    let r_t = rotation2(state.psi()).transpose();
    let pt = r_t * (state.eta.xy() - pd);
    let (m1, m2) = (p.m_u(), p.m_v());
    let u = state.nu.x;
    let d1 = -(p.X_uu * u.abs() + p.X_u);
    let d2 = -p.Y_v;
    let (k1, k2) = (gains.k_e[0], gains.k_e[1]);
    let (kp1, kp2) = (gains.k_phi[0], gains.k_phi[1]);
    let (dl1, dl2) = (gains.delta[0], gains.delta[1]);

    let vd = r_t * pd_dot;
    let ad = r_t * pd_ddot;
    let z1 = Vector2::new(
        state.nu.x - vd.x + k1 / m1 * pt.x,
        state.nu.y - vd.y + k2 / m2 * pt.y,
    );
    let phi = Vector2::new(z1.x - dl1, z1.y - dl2);
    let h = Vector2::new(
        -d1 * vd.x + k1 * d1 / m1 * pt.x - m1 * ad.x + k1 * z1.x - k1 * k1 / m1 * pt.x,
        -d2 * vd.y + k2 * d2 / m2 * pt.y - m2 * ad.y + k2 * z1.y - k2 * k2 / m2 * pt.y,
    );
    let bracket = Vector2::new(
        h.x - d1 * dl1 + pt.x + kp1 * phi.x / m1,
        h.y - d2 * dl2 + pt.y + kp2 * phi.y / m2,
    );
    let b = ball_matrix(p, gains.delta);
    // b is upper triangular with unit (0,0): invert in closed form
    let inv = Matrix2::new(
        1.0,
        -b[(0, 1)] / (m1 * dl1),
        0.0,
        1.0 / (m1 * dl1),
    );
    -(inv * bracket)
}

#[derive(Debug, Clone)]
pub struct TransitController {
    pub gains: TransitGains,
    /// Virtual yaw rate from the previous step, for the backward
    /// finite-difference feedforward. `None` right after reset.
    prev_alpha2: Option<f64>,
}

impl TransitController {
    pub fn new(gains: TransitGains) -> Result<Self, SimError> {
        gains.validate()?;
        Ok(TransitController { gains, prev_alpha2: None })
    }

    pub fn reset(&mut self) {
        self.prev_alpha2 = None;
    }

    pub fn compute(
        &mut self,
        p: &VehicleParams,
        state: &VehicleState,
        sample: &TrajectorySample,
        dt: f64,
    ) -> ControlOutput {
        let alpha = stabilizer(
            p,
            &self.gains,
            state,
            sample.eta_d.xy(),
            sample.etad_dot.xy(),
            sample.etad_ddot.xy(),
        );
        let alpha2_dot = match self.prev_alpha2 {
            Some(prev) => (alpha.y - prev) / dt,
            None => 0.0,
        };
        self.prev_alpha2 = Some(alpha.y);

        // recompute the stage errors for the yaw law
        let r_t = rotation2(state.psi()).transpose();
        let pt = r_t * (state.eta.xy() - sample.eta_d.xy());
        let vd = r_t * sample.etad_dot.xy();
        let (m1, m2) = (p.m_u(), p.m_v());
        let z1 = Vector2::new(
            state.nu.x - vd.x + self.gains.k_e[0] / m1 * pt.x,
            state.nu.y - vd.y + self.gains.k_e[1] / m2 * pt.y,
        );
        let phi = Vector2::new(z1.x - self.gains.delta[0], z1.y - self.gains.delta[1]);
        let z2 = state.nu.z - alpha.y;

        let bb = Vector2::new(m2 * self.gains.delta[1], m1 * self.gains.delta[0]);
        let cross = phi.x * bb.x + phi.y * bb.y;
        let n_raw = -cross - p.N_r * alpha.y + p.m_r() * alpha2_dot - self.gains.k_z2 * z2;
        let n_clamp = self.gains.n_clamp.unwrap_or(p.n_max);
        ControlOutput::wrench(alpha.x, 0.0, n_raw.clamp(-n_clamp, n_clamp))
    }
}
