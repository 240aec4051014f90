//! Planar 3-DOF vessel model and its reduced-order variants.
//!
//! The rigid-body dynamics are the standard marine form
//!
//! ```text
//!     M nu_dot + C(nu) nu + D(nu) nu = tau
//!     eta_dot = J(psi) nu
//! ```
//!
//! with pose `eta = [x, y, psi]` in NED coordinates (x north, y east, psi
//! from north toward east) and body velocity `nu = [u, v, r]` (surge, sway,
//! yaw rate). Hydrodynamic coefficients use SNAME sign conventions: added
//! mass and drag coefficients are non-positive, so the effective inertias
//! `m - X_du` etc. and the damping matrix entries come out positive.
//!
//! Four matrix variants are provided. `General` is the full plant model;
//! the other three are the reduced models each behavior controller was
//! derived from, and are also what the supervisor rolls out internally.

use nalgebra::{Matrix2, Matrix3, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::SimError;

/// Wraps an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Planar rotation from body to NED axes.
pub fn rotation2(psi: f64) -> Matrix2<f64> {
    let (s, c) = psi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Kinematic transform `J(psi)` taking body velocity to NED pose rate.
pub fn rotation3(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Which matrix variant of the vessel model to evaluate.
///
/// The plant always runs `General`; the reduced kinds exist for the
/// controllers and for supervisor rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    General,
    Transiting,
    StationKeeping,
    Reversing,
}

/// Stern thruster mounting point relative to the center of gravity,
/// in body coordinates (m). `ly` is signed: negative to port.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thruster {
    pub lx: f64,
    pub ly: f64,
}

/// Vessel mass, hydrodynamic, and actuator parameters.
///
/// Defaults describe a 4.9 m, ~180 kg-class catamaran workboat. They are
/// plausible round numbers for that hull class, not identified values, and
/// every entry can be overridden from the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
#[allow(non_snake_case)]
pub struct VehicleParams {
    /// Vessel mass (kg).
    pub m: f64,
    /// Yaw moment of inertia about the z axis (kg m^2).
    pub I_z: f64,
    /// Added mass in surge (kg, non-positive).
    pub X_du: f64,
    /// Added mass in sway (kg, non-positive).
    pub Y_dv: f64,
    /// Sway-yaw added mass coupling (kg m, non-positive).
    pub Y_dr: f64,
    /// Yaw-sway added mass coupling (kg m, non-positive).
    pub N_dv: f64,
    /// Added yaw inertia (kg m^2, non-positive).
    pub N_dr: f64,
    /// Linear surge drag (kg/s, non-positive).
    pub X_u: f64,
    /// Quadratic surge drag (kg/m, non-positive).
    pub X_uu: f64,
    /// Linear sway drag (kg/s, non-positive).
    pub Y_v: f64,
    /// Sway drag due to yaw rate (kg m/s, non-positive).
    pub Y_r: f64,
    /// Yaw drag due to sway (kg m/s, non-positive).
    pub N_v: f64,
    /// Linear yaw drag (kg m^2/s, non-positive).
    pub N_r: f64,
    /// Linear surge drag when reversing (kg/s, non-positive). Hulls drag
    /// more going astern, so |X_u_rev| >= |X_u| is typical.
    pub X_u_rev: f64,
    /// Stern thruster mounting points.
    pub thrusters: Vec<Thruster>,
    /// Per-thruster thrust limit (N).
    pub t_max: f64,
    /// Reference yaw torque scale (N m), used for clamping and for the
    /// surge attenuation constant in allocation.
    pub n_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            m: 180.0,
            I_z: 250.0,
            X_du: -25.0,
            Y_dv: -120.0,
            Y_dr: -15.0,
            N_dv: -15.0,
            N_dr: -80.0,
            X_u: -50.0,
            X_uu: -40.0,
            Y_v: -200.0,
            Y_r: -20.0,
            N_v: -25.0,
            N_r: -150.0,
            X_u_rev: -60.0,
            thrusters: vec![
                Thruster { lx: -1.5, ly: -1.0 },
                Thruster { lx: -1.5, ly: 1.0 },
            ],
            t_max: 250.0,
            n_max: 500.0,
        }
    }
}

impl VehicleParams {
    /// Effective surge inertia `m - X_du`.
    pub fn m_u(&self) -> f64 {
        self.m - self.X_du
    }

    /// Effective sway inertia `m - Y_dv`.
    pub fn m_v(&self) -> f64 {
        self.m - self.Y_dv
    }

    /// Effective yaw inertia `I_z - N_dr`.
    pub fn m_r(&self) -> f64 {
        self.I_z - self.N_dr
    }

    /// Rejects physically inconsistent parameter sets.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: &str| Err(SimError::Config { reason: reason.to_string() });
        if !(self.m > 0.0 && self.I_z > 0.0) {
            return bad("mass and yaw inertia must be positive");
        }
        if !(self.m_u() > 0.0 && self.m_v() > 0.0 && self.m_r() > 0.0) {
            return bad("effective inertias m - X_du, m - Y_dv, I_z - N_dr must be positive");
        }
        let drags = [
            self.X_du, self.Y_dv, self.Y_dr, self.N_dv, self.N_dr, self.X_u, self.X_uu,
            self.Y_v, self.Y_r, self.N_v, self.N_r, self.X_u_rev,
        ];
        if drags.iter().any(|c| *c > 0.0) {
            return bad("added mass and drag coefficients must be non-positive (SNAME)");
        }
        if self.thrusters.is_empty() {
            return bad("at least one thruster is required");
        }
        if !(self.t_max > 0.0 && self.n_max > 0.0) {
            return bad("t_max and n_max must be positive");
        }
        Ok(())
    }

    /// Inertia matrix for the given model variant.
    pub fn mass_matrix(&self, kind: ModelKind) -> Matrix3<f64> {
        match kind {
            ModelKind::General => Matrix3::new(
                self.m_u(), 0.0, 0.0,
                0.0, self.m_v(), -self.Y_dr,
                0.0, -self.N_dv, self.m_r(),
            ),
            _ => Matrix3::from_diagonal(&Vector3::new(self.m_u(), self.m_v(), self.m_r())),
        }
    }

    /// Coriolis-centripetal matrix for the given model variant.
    ///
    /// `General` and `StationKeeping` are skew-symmetric. `Transiting`
    /// keeps only the top-right coupling entries and is deliberately not
    /// skew-symmetric; `Reversing` drops the matrix entirely.
    pub fn coriolis_matrix(&self, kind: ModelKind, nu: &Vector3<f64>) -> Matrix3<f64> {
        let (u, v, r) = (nu.x, nu.y, nu.z);
        match kind {
            ModelKind::General => {
                let c13 = -self.m_v() * v + 0.5 * (self.Y_dr + self.N_dv) * r;
                let c23 = self.m_u() * u;
                Matrix3::new(
                    0.0, 0.0, c13,
                    0.0, 0.0, c23,
                    -c13, -c23, 0.0,
                )
            }
            ModelKind::Transiting => Matrix3::new(
                0.0, 0.0, -self.m_v() * v,
                0.0, 0.0, self.m_u() * u,
                0.0, 0.0, 0.0,
            ),
            ModelKind::StationKeeping => {
                let c13 = -self.m_v() * v;
                let c23 = self.m_u() * u;
                Matrix3::new(
                    0.0, 0.0, c13,
                    0.0, 0.0, c23,
                    -c13, -c23, 0.0,
                )
            }
            ModelKind::Reversing => Matrix3::zeros(),
        }
    }

    /// Hydrodynamic damping matrix for the given model variant.
    ///
    /// Entries are the negated SNAME coefficients, so the matrix is
    /// dissipative: `nu' D(nu) nu >= 0` in the operating envelope.
    pub fn damping_matrix(&self, kind: ModelKind, nu: &Vector3<f64>) -> Matrix3<f64> {
        let u = nu.x;
        let surge = -(self.X_uu * u.abs() + self.X_u);
        match kind {
            ModelKind::General => Matrix3::new(
                surge, 0.0, 0.0,
                0.0, -self.Y_v, -self.Y_r,
                0.0, -self.N_v, -self.N_r,
            ),
            ModelKind::Transiting => Matrix3::from_diagonal(&Vector3::new(
                surge, -self.Y_v, -self.N_r,
            )),
            ModelKind::StationKeeping => Matrix3::from_diagonal(&Vector3::new(
                -self.X_u, -self.Y_v, -self.N_r,
            )),
            ModelKind::Reversing => Matrix3::from_diagonal(&Vector3::new(
                -self.X_u_rev, -self.Y_v, -self.N_r,
            )),
        }
    }
}

/// Full vessel state: simulation time, pose, body velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub t: f64,
    /// `[x, y, psi]` (m, m, rad), psi wrapped to `(-pi, pi]`.
    pub eta: Vector3<f64>,
    /// `[u, v, r]` (m/s, m/s, rad/s).
    pub nu: Vector3<f64>,
}

impl VehicleState {
    pub fn new(t: f64, eta: Vector3<f64>, nu: Vector3<f64>) -> Self {
        VehicleState { t, eta, nu }
    }

    pub fn psi(&self) -> f64 {
        self.eta.z
    }

    /// Packs pose and velocity into one integration vector.
    fn pack(&self) -> Vector6<f64> {
        Vector6::new(self.eta.x, self.eta.y, self.eta.z, self.nu.x, self.nu.y, self.nu.z)
    }
}

/// State derivative `[eta_dot, nu_dot]` under the applied body wrench.
pub fn dynamics(
    p: &VehicleParams,
    kind: ModelKind,
    xs: &Vector6<f64>,
    tau: &Vector3<f64>,
) -> Vector6<f64> {
    let psi = xs[2];
    let nu = Vector3::new(xs[3], xs[4], xs[5]);
    let eta_dot = rotation3(psi) * nu;
    let rhs = tau
        - p.coriolis_matrix(kind, &nu) * nu
        - p.damping_matrix(kind, &nu) * nu;
    let nu_dot = p
        .mass_matrix(kind)
        .lu()
        .solve(&rhs)
        .expect("mass matrix invertible for validated params");
    Vector6::new(eta_dot.x, eta_dot.y, eta_dot.z, nu_dot.x, nu_dot.y, nu_dot.z)
}

/// One fixed-step RK4 update of the vessel state under a zero-order-hold
/// wrench. The heading is re-wrapped after the step, not inside the
/// stages, so stage arithmetic stays smooth across +-pi.
pub fn step(
    p: &VehicleParams,
    kind: ModelKind,
    state: &VehicleState,
    tau: &Vector3<f64>,
    dt: f64,
) -> Result<VehicleState, SimError> {
    let xs = state.pack();
    let k1 = dynamics(p, kind, &xs, tau);
    let k2 = dynamics(p, kind, &(xs + 0.5 * dt * k1), tau);
    let k3 = dynamics(p, kind, &(xs + 0.5 * dt * k2), tau);
    let k4 = dynamics(p, kind, &(xs + dt * k3), tau);
    let next = xs + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if next.iter().any(|x| !x.is_finite()) {
        return Err(SimError::IntegrationBlowup {
            t: state.t,
            tau_x: tau.x,
            tau_y: tau.y,
            tau_n: tau.z,
        });
    }
    Ok(VehicleState {
        t: state.t + dt,
        eta: Vector3::new(next[0], next[1], wrap_angle(next[2])),
        nu: Vector3::new(next[3], next[4], next[5]),
    })
}

/// Environmental disturbance model, applied as an additive body wrench on
/// the plant only. Rollout models never see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceMode {
    None,
    Constant,
    GaussMarkov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DisturbanceConfig {
    pub mode: DisturbanceMode,
    /// Constant bias wrench `[X_d, Y_d, N_d]` (N, N, N m).
    pub bias: [f64; 3],
    /// Correlation time of the Gauss-Markov component (s).
    pub correlation_time: f64,
    /// Stationary standard deviation of the Gauss-Markov component per
    /// axis (N, N, N m).
    pub sigma: [f64; 3],
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        DisturbanceConfig {
            mode: DisturbanceMode::GaussMarkov,
            bias: [2.0, 2.0, 0.5],
            correlation_time: 10.0,
            sigma: [0.5, 0.5, 0.1],
        }
    }
}

/// Seeded disturbance process. The Gauss-Markov component uses the exact
/// discretization of `b_dot = -b/T + w`, so the trace is independent of
/// how often it is resampled only if `dt` is fixed; the harness always
/// advances it at the plant rate.
#[derive(Debug, Clone)]
pub struct Disturbance {
    cfg: DisturbanceConfig,
    gm: Vector3<f64>,
    rng: ChaCha8Rng,
}

impl Disturbance {
    pub fn new(cfg: DisturbanceConfig, seed: u64) -> Self {
        Disturbance {
            cfg,
            gm: Vector3::zeros(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Advances the process by `dt` and returns the wrench for the step.
    pub fn sample(&mut self, dt: f64) -> Vector3<f64> {
        let bias = Vector3::from(self.cfg.bias);
        match self.cfg.mode {
            DisturbanceMode::None => Vector3::zeros(),
            DisturbanceMode::Constant => bias,
            DisturbanceMode::GaussMarkov => {
                let phi = (-dt / self.cfg.correlation_time).exp();
                let scale = (1.0 - phi * phi).sqrt();
                for i in 0..3 {
                    let n: f64 = StandardNormal.sample(&mut self.rng);
                    self.gm[i] = phi * self.gm[i] + self.cfg.sigma[i] * scale * n;
                }
                bias + self.gm
            }
        }
    }
}
