//! Performance-based supervisory switching between behavior candidates.
//!
//! Every control step each candidate produces its live wrench (so its
//! internal memory stays warm) and a forecast cost: a fixed-horizon
//! rollout from the current vessel state using a clone of the
//! candidate's controller, the candidate's own reduced model, and the
//! candidate's allocation path, with no disturbance. The forecast is
//! blended with an exponentially forgotten record of the candidate's
//! past forecasts into a performance signal, and the supervisor keeps
//! the incumbent unless a challenger undercuts it by the hysteresis
//! margin. A diverging rollout forecasts infinite cost; if every
//! candidate is infinite the supervisor reports failure rather than
//! guessing.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::allocation::{AllocationPath, Allocator};
use crate::control::stationkeep::pose_error;
use crate::control::{Behavior, ControlOutput};
use crate::model::{step, ModelKind, VehicleParams, VehicleState};
use crate::trajectory::Reference;
use crate::SimError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SupervisorConfig {
    /// Rollout horizon in control steps.
    pub horizon: usize,
    /// Number of past forecasts retained per candidate.
    pub window: usize,
    /// Weight on the current forecast.
    pub alpha: f64,
    /// Weight on the forgotten history sum.
    pub beta: f64,
    /// Forgetting factor applied per step of age.
    pub forgetting: f64,
    /// Hysteresis margin: a challenger must beat the incumbent by this
    /// relative factor to take over.
    pub hysteresis: f64,
    /// Diagonal error weights `[x, y, psi]` in the rollout cost.
    pub p_weights: [f64; 3],
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        SupervisorConfig {
            horizon: 50,
            window: 100,
            alpha: 1.0,
            beta: 1.0,
            forgetting: 0.95,
            hysteresis: 0.2,
            p_weights: [1.0, 1.0, 10.0],
        }
    }
}

impl SupervisorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.horizon >= 1
            && self.window >= 1
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.beta > 0.0
            && self.forgetting > 0.0
            && self.forgetting <= 1.0
            && self.hysteresis >= 0.0
            && self.p_weights.iter().all(|&w| w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(SimError::Config { reason: "supervisor settings out of range".into() })
        }
    }
}

/// A switchable controller with the model and allocation path it
/// forecasts itself through.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: &'static str,
    pub behavior: Behavior,
    pub model: ModelKind,
    pub path: AllocationPath,
}

/// Forecast cost of one candidate over the rollout horizon: the sum of
/// weighted squared pose errors along the predicted trajectory.
/// Divergence anywhere in the rollout forecasts infinity.
pub fn forecast_cost(
    p: &VehicleParams,
    alloc: &Allocator,
    candidate: &Candidate,
    start: &VehicleState,
    traj: &Reference,
    dt: f64,
    cfg: &SupervisorConfig,
) -> f64 {
    let mut behavior = candidate.behavior.clone();
    let mut st = *start;
    let mut cost = 0.0;
    let [wx, wy, wpsi] = cfg.p_weights;
    for _ in 0..cfg.horizon {
        let s = traj.sample(st.t);
        let out = behavior.compute(p, &st, &s, dt);
        let cmds = alloc.allocate(&out.tau, candidate.path);
        let tau = alloc.achieved_wrench(&cmds);
        st = match step(p, candidate.model, &st, &tau, dt) {
            Ok(next) => next,
            Err(_) => return f64::INFINITY,
        };
        let e = pose_error(&st.eta, &traj.sample(st.t).eta_d);
        cost += 0.5 * (wx * e.x * e.x + wy * e.y * e.y + wpsi * e.z * e.z);
    }
    if cost.is_finite() {
        cost
    } else {
        f64::INFINITY
    }
}

/// Performance signal: the current forecast plus the forgotten sum of
/// past forecasts, most recent first in `history`.
pub fn performance_signal(v_now: f64, history: &VecDeque<f64>, cfg: &SupervisorConfig) -> f64 {
    let now = if cfg.alpha == 0.0 { 0.0 } else { cfg.alpha * v_now };
    if cfg.beta == 0.0 {
        return now;
    }
    let mut acc = 0.0;
    let mut w = cfg.forgetting;
    for &v in history {
        acc += w * v;
        w *= cfg.forgetting;
    }
    now + cfg.beta * acc
}

/// Hysteresis switching rule. The incumbent stays whenever it attains
/// the minimum; otherwise the lowest-indexed minimizer takes over only
/// if it undercuts the incumbent by the relative margin `h`. With no
/// incumbent the lowest-indexed minimizer is chosen outright. All
/// signals infinite is a failure.
pub fn select(
    sigma_prev: Option<usize>,
    mu: &[f64],
    h: f64,
    t: f64,
) -> Result<usize, SimError> {
    let best = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(SimError::SupervisorFailure { t });
    }
    let challenger = mu
        .iter()
        .position(|&m| m == best)
        .expect("a finite minimum is attained");
    match sigma_prev {
        None => Ok(challenger),
        Some(prev) => {
            if mu[prev] == best {
                Ok(prev)
            } else if (1.0 + h) * best <= mu[prev] {
                Ok(challenger)
            } else {
                Ok(prev)
            }
        }
    }
}

/// Per-step supervision result.
#[derive(Debug, Clone)]
pub struct SuperviseOutcome {
    /// Index of the candidate in charge this step.
    pub sigma: usize,
    /// The live output of the candidate in charge.
    pub output: ControlOutput,
    /// Forecast cost per candidate.
    pub v: Vec<f64>,
    /// Performance signal per candidate.
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Supervisor {
    cfg: SupervisorConfig,
    candidates: Vec<Candidate>,
    histories: Vec<VecDeque<f64>>,
    sigma: Option<usize>,
}

impl Supervisor {
    pub fn new(cfg: SupervisorConfig, candidates: Vec<Candidate>) -> Result<Self, SimError> {
        cfg.validate()?;
        if candidates.is_empty() {
            return Err(SimError::Config { reason: "supervisor needs at least one candidate".into() });
        }
        let histories = vec![VecDeque::new(); candidates.len()];
        Ok(Supervisor { cfg, candidates, histories, sigma: None })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn sigma(&self) -> Option<usize> {
        self.sigma
    }

    /// One supervision step: every candidate computes its live output
    /// and a fresh forecast, signals are formed from the history as it
    /// stood before this step, histories are updated, and the switching
    /// rule picks who drives.
    pub fn supervise_step(
        &mut self,
        p: &VehicleParams,
        alloc: &Allocator,
        state: &VehicleState,
        traj: &Reference,
        dt: f64,
    ) -> Result<SuperviseOutcome, SimError> {
        let sample = traj.sample(state.t);
        let n = self.candidates.len();
        let mut outputs = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        for i in 0..n {
            let out = self.candidates[i].behavior.compute(p, state, &sample, dt);
            let vi = forecast_cost(p, alloc, &self.candidates[i], state, traj, dt, &self.cfg);
            mu.push(performance_signal(vi, &self.histories[i], &self.cfg));
            self.histories[i].push_front(vi);
            self.histories[i].truncate(self.cfg.window);
            v.push(vi);
            outputs.push(out);
        }
        let sigma = select(self.sigma, &mu, self.cfg.hysteresis, state.t)?;
        self.sigma = Some(sigma);
        Ok(SuperviseOutcome { sigma, output: outputs[sigma], v, mu })
    }
}
