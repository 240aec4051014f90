//! Simulation stack for a twin-azimuthing-thruster unmanned surface vehicle.
//!
//! The crate provides a 3-DOF planar vessel model with several reduced-order
//! variants, three behavior controllers (transiting, station-keeping,
//! reversing), two control-allocation schemes for the stern thruster pair,
//! and a performance-based supervisory switching controller that selects
//! among the behaviors at run time from short rollout forecasts.
//!
//! Frames follow the NED marine convention: `x` north, `y` east, heading
//! `psi` measured from north toward east, body axes surge/sway/yaw.

pub mod allocation;
pub mod config;
pub mod control;
pub mod experiment;
pub mod model;
pub mod supervisor;
pub mod trajectory;

mod error;

pub use error::SimError;
