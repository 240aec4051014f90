//! Aggregate run configuration, loaded from TOML.
//!
//! Every section falls back to its built-in default, so a config file
//! only needs the entries it wants to change and the empty document is
//! a complete, valid configuration. A content hash over the canonical
//! serialization is stamped into run artifacts so output files can be
//! traced back to the exact settings that produced them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::{Allocator, AllocatorConfig};
use crate::control::reverse::ReverseGains;
use crate::control::stationkeep::StationKeepGains;
use crate::control::transit::TransitGains;
use crate::model::{DisturbanceConfig, VehicleParams};
use crate::supervisor::SupervisorConfig;
use crate::trajectory::{Reference, TrajectoryConfig};
use crate::SimError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Control and integration step (s).
    pub dt: f64,
    /// Starting pose `[x, y, psi]` (m, m, rad). Unset starts exactly on
    /// the reference at time zero.
    pub initial_pose: Option<[f64; 3]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { dt: 0.1, initial_pose: None }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub vehicle: VehicleParams,
    pub transit: TransitGains,
    pub stationkeep: StationKeepGains,
    pub reverse: ReverseGains,
    pub allocation: AllocatorConfig,
    pub supervisor: SupervisorConfig,
    pub disturbance: DisturbanceConfig,
    pub trajectory: TrajectoryConfig,
    pub run: RunConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, SimError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = toml::from_str(&text).map_err(|e| SimError::Config {
            reason: format!("{}: {e}", path.display()),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-checks every section, including the derived objects that
    /// only exist at run time (allocator geometry, reference build).
    pub fn validate(&self) -> Result<(), SimError> {
        self.vehicle.validate()?;
        self.transit.validate()?;
        self.stationkeep.validate()?;
        self.reverse.validate()?;
        self.supervisor.validate()?;
        Allocator::new(&self.vehicle, &self.allocation)?;
        if !(self.run.dt > 0.0 && self.run.dt.is_finite()) {
            return Err(SimError::Config { reason: "run.dt must be positive".into() });
        }
        Reference::build(&self.trajectory, self.run.dt)?;
        if let Some(pose) = self.run.initial_pose {
            if pose.iter().any(|x| !x.is_finite()) {
                return Err(SimError::Config { reason: "run.initial_pose must be finite".into() });
            }
        }
        let d = &self.disturbance;
        if !(d.correlation_time > 0.0) || d.sigma.iter().any(|&s| s < 0.0) {
            return Err(SimError::Config {
                reason: "disturbance needs positive correlation time and non-negative sigma".into(),
            });
        }
        Ok(())
    }

    /// Content hash over the canonical serialization, for provenance
    /// stamping. Two configs hash equal exactly when every effective
    /// setting is equal.
    pub fn content_hash(&self) -> String {
        let canon = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_config() {
        let cfg: Config = toml::from_str("").unwrap();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.content_hash(), Config::default().content_hash());
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let cfg: Config = toml::from_str(
            "[transit]\nk_e = [120.0, 120.0]\n\n[run]\ndt = 0.05\n",
        )
        .unwrap();
        assert_eq!(cfg.transit.k_e, [120.0, 120.0]);
        assert_eq!(cfg.transit.k_z2, TransitGains::default().k_z2);
        assert_eq!(cfg.run.dt, 0.05);
        assert_eq!(cfg.vehicle.m, VehicleParams::default().m);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn hash_tracks_effective_settings() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.content_hash(), b.content_hash());
        b.supervisor.hysteresis = 0.3;
        assert_ne!(a.content_hash(), b.content_hash());
        let hex = a.content_hash();
        assert_eq!(hex.len(), 64);
        assert!(hex.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn bad_sections_are_rejected() {
        let cfg: Config = toml::from_str("[run]\ndt = 0.0\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg: Config = toml::from_str("[transit]\ndelta = [0.0, 0.5]\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg: Config = toml::from_str("[disturbance]\ncorrelation_time = -1.0\n").unwrap();
        assert!(cfg.validate().is_err());
        assert!(toml::from_str::<Config>("[vehicle]\nm = \"heavy\"\n").is_err());
    }

    /// The shipped full-schema file must stay in lockstep with the
    /// built-in defaults.
    #[test]
    fn shipped_default_file_matches_builtin_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.toml");
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.content_hash(), Config::default().content_hash());
    }

    #[test]
    fn load_reports_path_on_parse_error() {
        let dir = std::env::temp_dir().join("usvsim-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("broken.toml");
        std::fs::write(&path, "[run\n").unwrap();
        match Config::load(&path) {
            Err(SimError::Config { reason }) => assert!(reason.contains("broken.toml")),
            other => panic!("expected config error, got {other:?}"),
        }
        let good = dir.join("good.toml");
        std::fs::write(&good, "[supervisor]\nhysteresis = 0.25\n").unwrap();
        let cfg = Config::load(&good).unwrap();
        assert_eq!(cfg.supervisor.hysteresis, 0.25);
    }
}
