//! Control allocation for the stern azimuthing thruster pair.
//!
//! Two schemes are provided, matching how the behavior controllers were
//! derived:
//!
//! * Underactuated: the transiting and reversing controllers command only
//!   surge force and yaw moment. The surge request is first attenuated by
//!   `X' = X exp(-beta |N|)` so yaw authority wins when both compete, then
//!   the pair `[X', N]` maps through the inverse of the fixed differential
//!   layout matrix to the two thrust magnitudes at zero azimuth.
//!
//! * Overactuated: the station-keeping controller commands a full planar
//!   wrench. Per-thruster force components come from the weighted
//!   pseudoinverse of the extended thrust configuration matrix, and each
//!   force vector is then folded into the +-45 degree azimuth envelope:
//!   requests within +-45 degrees are taken directly, requests within 45
//!   degrees of dead astern are realized by reversing the propeller, and
//!   anything in the two remaining dead sectors is dropped to zero.
//!
//! Both schemes expose the forward map, so the harness can compute the
//! wrench actually delivered to the plant after attenuation, saturation,
//! and sector logic.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::model::{Thruster, VehicleParams};
use crate::SimError;

/// Which allocation scheme a controller's wrench goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationPath {
    Underactuated,
    Overactuated,
}

/// One thruster setpoint: signed thrust (N, negative = reversed
/// propeller) and azimuth angle (rad, zero ahead, positive to starboard).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub thrust: f64,
    pub azimuth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AllocatorConfig {
    /// Surge attenuation constant (1/(N m)). Unset picks `ln 2 / n_max`,
    /// which halves the surge request at the reference yaw torque.
    pub beta: Option<f64>,
    /// Diagonal of the pseudoinverse weight matrix, one entry per force
    /// component `[f_x1, f_y1, f_x2, ...]`. Empty means identity.
    pub weights: Vec<f64>,
}

/// Surge request attenuated by yaw demand.
pub fn surge_attenuation(x: f64, n: f64, beta: f64) -> f64 {
    x * (-beta * n.abs()).exp()
}

/// Extended thrust configuration matrix: columns `[1, 0, -ly]` and
/// `[0, 1, lx]` per thruster, mapping stacked force components to the
/// body wrench.
pub fn extended_thrust_matrix(thrusters: &[Thruster]) -> DMatrix<f64> {
    let r = thrusters.len();
    let mut t = DMatrix::zeros(3, 2 * r);
    for (i, th) in thrusters.iter().enumerate() {
        t[(0, 2 * i)] = 1.0;
        t[(2, 2 * i)] = -th.ly;
        t[(1, 2 * i + 1)] = 1.0;
        t[(2, 2 * i + 1)] = th.lx;
    }
    t
}

/// Weighted pseudoinverse `W^-1 T' (T W^-1 T')^-1` of the configuration
/// matrix. Minimizes `f' W f` subject to `T f = tau`.
pub fn weighted_pseudoinverse(t: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>, SimError> {
    let w_inv = w.clone().try_inverse().ok_or(SimError::AllocationSingular)?;
    let gram = t * &w_inv * t.transpose();
    let gram_inv = gram.try_inverse().ok_or(SimError::AllocationSingular)?;
    Ok(w_inv * t.transpose() * gram_inv)
}

/// Folds a requested force vector into the azimuth envelope. Returns
/// signed thrust and azimuth; requests in the dead sectors produce zero.
pub fn azimuth_logic(fx: f64, fy: f64) -> (f64, f64) {
    let mag = fx.hypot(fy);
    if mag == 0.0 {
        return (0.0, 0.0);
    }
    let ang = fy.atan2(fx);
    let eps = 1e-12;
    if ang.abs() <= FRAC_PI_4 + eps {
        (mag, ang)
    } else if ang >= 3.0 * FRAC_PI_4 - eps {
        (-mag, ang - PI)
    } else if ang <= -3.0 * FRAC_PI_4 + eps {
        (-mag, ang + PI)
    } else {
        (0.0, 0.0)
    }
}

/// Precomputed allocation maps for a fixed thruster layout.
#[derive(Debug, Clone)]
pub struct Allocator {
    t_max: f64,
    beta: f64,
    thrusters: Vec<Thruster>,
    t_mat: DMatrix<f64>,
    pinv: DMatrix<f64>,
    /// Differential forward map `[[1, 1], [a, -b]]` over (port, stbd)
    /// thrusts, with `a`, `b` the lateral offset magnitudes.
    diff: Matrix2<f64>,
    diff_inv: Matrix2<f64>,
    port_idx: usize,
    stbd_idx: usize,
}

impl Allocator {
    pub fn new(params: &VehicleParams, cfg: &AllocatorConfig) -> Result<Self, SimError> {
        let thrusters = params.thrusters.clone();
        let r = thrusters.len();

        // differential layout needs one thruster per side
        if r != 2 {
            return Err(SimError::DegenerateGeometry {
                reason: format!("differential allocation expects 2 thrusters, got {r}"),
            });
        }
        let port_idx = if thrusters[0].ly < 0.0 { 0 } else { 1 };
        let stbd_idx = 1 - port_idx;
        let a = -thrusters[port_idx].ly;
        let b = thrusters[stbd_idx].ly;
        if !(a > 0.0 && b > 0.0) {
            return Err(SimError::DegenerateGeometry {
                reason: "thrusters must sit on opposite sides of the centerline with ly != 0".into(),
            });
        }
        let diff = Matrix2::new(1.0, 1.0, a, -b);
        let diff_inv = diff.try_inverse().ok_or(SimError::DegenerateGeometry {
            reason: "differential layout matrix is singular".into(),
        })?;

        let t_mat = extended_thrust_matrix(&thrusters);
        let w = if cfg.weights.is_empty() {
            DMatrix::identity(2 * r, 2 * r)
        } else {
            if cfg.weights.len() != 2 * r {
                return Err(SimError::Config {
                    reason: format!("allocation.weights must have {} entries", 2 * r),
                });
            }
            if cfg.weights.iter().any(|&x| x <= 0.0) {
                return Err(SimError::Config {
                    reason: "allocation.weights entries must be positive".into(),
                });
            }
            DMatrix::from_diagonal(&DVector::from_vec(cfg.weights.clone()))
        };
        let pinv = weighted_pseudoinverse(&t_mat, &w)?;

        Ok(Allocator {
            t_max: params.t_max,
            beta: cfg.beta.unwrap_or(2f64.ln() / params.n_max),
            thrusters,
            t_mat,
            pinv,
            diff,
            diff_inv,
            port_idx,
            stbd_idx,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn thrust_matrix(&self) -> &DMatrix<f64> {
        &self.t_mat
    }

    /// Surge/yaw wrench to two fixed-azimuth thrusts. Saturation scales
    /// both thrusts by a common factor so the achieved `N : X'` ratio is
    /// preserved.
    pub fn allocate_underactuated(&self, tau: &Vector3<f64>) -> Vec<ActuatorCommand> {
        let x_att = surge_attenuation(tau.x, tau.z, self.beta);
        let pair = self.diff_inv * Vector2::new(x_att, tau.z);
        let peak = pair.x.abs().max(pair.y.abs());
        let scale = if peak > self.t_max { self.t_max / peak } else { 1.0 };
        let mut cmds = vec![ActuatorCommand { thrust: 0.0, azimuth: 0.0 }; 2];
        cmds[self.port_idx].thrust = pair.x * scale;
        cmds[self.stbd_idx].thrust = pair.y * scale;
        cmds
    }

    /// Full wrench through the weighted pseudoinverse, sector logic, and
    /// per-thruster clamp.
    pub fn allocate_overactuated(&self, tau: &Vector3<f64>) -> Vec<ActuatorCommand> {
        let f = &self.pinv * tau;
        (0..self.thrusters.len())
            .map(|i| {
                let (thrust, azimuth) = azimuth_logic(f[2 * i], f[2 * i + 1]);
                ActuatorCommand {
                    thrust: thrust.clamp(-self.t_max, self.t_max),
                    azimuth,
                }
            })
            .collect()
    }

    pub fn allocate(&self, tau: &Vector3<f64>, path: AllocationPath) -> Vec<ActuatorCommand> {
        match path {
            AllocationPath::Underactuated => self.allocate_underactuated(tau),
            AllocationPath::Overactuated => self.allocate_overactuated(tau),
        }
    }

    /// Wrench actually delivered by a command set, through the extended
    /// configuration matrix.
    pub fn achieved_wrench(&self, cmds: &[ActuatorCommand]) -> Vector3<f64> {
        let mut f = DVector::zeros(2 * self.thrusters.len());
        for (i, c) in cmds.iter().enumerate() {
            f[2 * i] = c.thrust * c.azimuth.cos();
            f[2 * i + 1] = c.thrust * c.azimuth.sin();
        }
        let tau = &self.t_mat * f;
        Vector3::new(tau[0], tau[1], tau[2])
    }

    /// Differential forward map, exposed for round-trip checks.
    pub fn differential_forward(&self, port: f64, stbd: f64) -> Vector2<f64> {
        self.diff * Vector2::new(port, stbd)
    }
}
