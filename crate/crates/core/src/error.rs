use thiserror::Error;

/// Failure modes surfaced by the simulation stack.
#[derive(Debug, Error)]
pub enum SimError {
    /// The integrator produced a non-finite state. Carries the simulation
    /// time and the wrench that was being applied so the offending
    /// controller output can be identified from logs.
    #[error("integration blow-up at t = {t:.2} s under wrench [{tau_x:.3}, {tau_y:.3}, {tau_n:.3}]")]
    IntegrationBlowup { t: f64, tau_x: f64, tau_y: f64, tau_n: f64 },

    /// Transit neighborhood vector must have a strictly positive surge
    /// component; the ball matrix is singular otherwise.
    #[error("transit neighborhood delta has non-positive surge component {delta1}")]
    SingularNeighborhood { delta1: f64 },

    /// Thruster geometry cannot support the requested allocation scheme.
    #[error("degenerate thruster geometry: {reason}")]
    DegenerateGeometry { reason: String },

    /// The extended-thrust configuration matrix lost rank, so the weighted
    /// pseudoinverse does not exist.
    #[error("thrust configuration matrix is rank deficient")]
    AllocationSingular,

    /// Every candidate rollout diverged; the supervisor has no finite
    /// performance signal to select on.
    #[error("supervisor failure: all candidate rollouts diverged at t = {t:.2} s")]
    SupervisorFailure { t: f64 },

    /// Reference trajectory construction rejected the segment list.
    #[error("trajectory build error: {reason}")]
    TrajectoryBuild { reason: String },

    /// Configuration file could not be read or failed validation.
    #[error("config error: {reason}")]
    Config { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
