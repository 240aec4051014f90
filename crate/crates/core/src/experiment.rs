//! Closed-loop experiment harness, metrics, and run artifacts.
//!
//! The plant is always the general model driven by the achieved wrench
//! plus the seeded disturbance; candidate controllers and their
//! forecasts never see the disturbance. Supervision runs even in the
//! single-controller modes (with a one-candidate set), so every mode
//! produces the same telemetry and the switched mode differs from the
//! pure ones only in its candidate set.
//!
//! A run is recorded as one row per control step plus a closing row for
//! the final state; the closing row repeats the last step's command
//! telemetry, since no new command is computed at the final instant.
//! Tracking quality is summarized by two trapezoidal integrals over the
//! run: squared planar position error (m^2 s) and squared heading error
//! in degrees (deg^2 s).

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use crate::allocation::{ActuatorCommand, AllocationPath, Allocator};
use crate::config::Config;
use crate::control::reverse::ReverseController;
use crate::control::stationkeep::StationKeepController;
use crate::control::transit::TransitController;
use crate::control::Behavior;
use crate::model::{step, wrap_angle, Disturbance, ModelKind, VehicleState};
use crate::supervisor::{Candidate, Supervisor};
use crate::trajectory::Reference;
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Supervised switching over all three behavior controllers.
    Pbssc,
    TransitOnly,
    StationKeepOnly,
    ReverseOnly,
}

impl RunMode {
    pub fn label(self) -> &'static str {
        match self {
            RunMode::Pbssc => "pbssc",
            RunMode::TransitOnly => "transit_only",
            RunMode::StationKeepOnly => "stationkeep_only",
            RunMode::ReverseOnly => "reverse_only",
        }
    }

    /// All modes, the switched one first.
    pub fn all() -> [RunMode; 4] {
        [RunMode::Pbssc, RunMode::TransitOnly, RunMode::StationKeepOnly, RunMode::ReverseOnly]
    }
}

/// Candidate set for a mode, with gains taken from the config. The
/// switched mode carries all three candidates in a fixed order.
pub fn candidates_for(cfg: &Config, mode: RunMode) -> Result<Vec<Candidate>, SimError> {
    let transit = || -> Result<Candidate, SimError> {
        Ok(Candidate {
            label: "transit",
            behavior: Behavior::Transit(TransitController::new(cfg.transit.clone())?),
            model: ModelKind::Transiting,
            path: AllocationPath::Underactuated,
        })
    };
    let stationkeep = || -> Result<Candidate, SimError> {
        Ok(Candidate {
            label: "stationkeep",
            behavior: Behavior::StationKeep(StationKeepController::new(cfg.stationkeep.clone())?),
            model: ModelKind::StationKeeping,
            path: AllocationPath::Overactuated,
        })
    };
    let reverse = || -> Result<Candidate, SimError> {
        Ok(Candidate {
            label: "reverse",
            behavior: Behavior::Reverse(ReverseController::new(cfg.reverse.clone())?),
            model: ModelKind::Reversing,
            path: AllocationPath::Underactuated,
        })
    };
    match mode {
        RunMode::Pbssc => Ok(vec![transit()?, stationkeep()?, reverse()?]),
        RunMode::TransitOnly => Ok(vec![transit()?]),
        RunMode::StationKeepOnly => Ok(vec![stationkeep()?]),
        RunMode::ReverseOnly => Ok(vec![reverse()?]),
    }
}

/// One recorded control step.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub t: f64,
    /// Plant pose `[x, y, psi]`.
    pub eta: [f64; 3],
    /// Plant velocity `[u, v, r]`.
    pub nu: [f64; 3],
    /// Reference pose at `t`.
    pub eta_d: [f64; 3],
    /// Candidate in charge.
    pub sigma: usize,
    pub kill: bool,
    /// Achieved body wrench `[X, Y, N]` before disturbance.
    pub tau: [f64; 3],
    pub commands: Vec<ActuatorCommand>,
    /// Forecast cost per candidate.
    pub v: Vec<f64>,
    /// Performance signal per candidate.
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Metrics {
    /// Integral of squared planar position error (m^2 s).
    pub pi_r: f64,
    /// Integral of squared heading error (deg^2 s).
    pub pi_psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub version: String,
    pub config_hash: String,
    pub mode: String,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub metrics: Metrics,
    /// Number of in-charge changes over the run.
    pub switches: usize,
    pub rows: Vec<Row>,
}

/// Trapezoidal tracking metrics over recorded rows.
pub fn metrics_from_rows(rows: &[Row], dt: f64) -> Metrics {
    let sq = |row: &Row| -> (f64, f64) {
        let ex = row.eta[0] - row.eta_d[0];
        let ey = row.eta[1] - row.eta_d[1];
        let epsi_deg = wrap_angle(row.eta[2] - row.eta_d[2]).to_degrees();
        (ex * ex + ey * ey, epsi_deg * epsi_deg)
    };
    let mut pi_r = 0.0;
    let mut pi_psi = 0.0;
    for pair in rows.windows(2) {
        let (r0, p0) = sq(&pair[0]);
        let (r1, p1) = sq(&pair[1]);
        pi_r += 0.5 * dt * (r0 + r1);
        pi_psi += 0.5 * dt * (p0 + p1);
    }
    Metrics { pi_r, pi_psi }
}

/// Runs one closed-loop experiment. The supervisor's live outputs drive
/// the general plant; a supervision failure (every candidate forecasting
/// divergence) degrades to a zero command for that step rather than
/// aborting the run.
pub fn run_experiment(cfg: &Config, mode: RunMode, seed: u64) -> Result<RunRecord, SimError> {
    cfg.validate()?;
    let p = &cfg.vehicle;
    let dt = cfg.run.dt;
    let alloc = Allocator::new(p, &cfg.allocation)?;
    let traj = Reference::build(&cfg.trajectory, dt)?;
    let mut sup = Supervisor::new(cfg.supervisor.clone(), candidates_for(cfg, mode)?)?;
    let n_candidates = sup.candidates().len();
    let labels: Vec<String> = sup.candidates().iter().map(|c| c.label.to_string()).collect();
    let mut disturbance = Disturbance::new(cfg.disturbance.clone(), seed);

    let eta0 = cfg
        .run
        .initial_pose
        .map(Vector3::from)
        .unwrap_or_else(|| traj.sample(0.0).eta_d);
    let mut st = VehicleState::new(0.0, eta0, Vector3::zeros());

    let steps = (traj.duration() / dt).round() as usize;
    let mut rows: Vec<Row> = Vec::with_capacity(steps + 1);
    let mut switches = 0usize;
    let mut prev_sigma: Option<usize> = None;

    for _ in 0..steps {
        let (sigma, output, v, mu) = match sup.supervise_step(p, &alloc, &st, &traj, dt) {
            Ok(o) => (o.sigma, o.output, o.v, o.mu),
            Err(SimError::SupervisorFailure { .. }) => {
                let sigma = sup.sigma().unwrap_or(0);
                let zero = crate::control::ControlOutput::wrench(0.0, 0.0, 0.0);
                (sigma, zero, vec![f64::INFINITY; n_candidates], vec![f64::INFINITY; n_candidates])
            }
            Err(e) => return Err(e),
        };
        if let Some(ps) = prev_sigma {
            if ps != sigma {
                switches += 1;
            }
        }
        prev_sigma = Some(sigma);

        let path = sup.candidates()[sigma].path;
        let commands = alloc.allocate(&output.tau, path);
        let tau = alloc.achieved_wrench(&commands);
        let sample = traj.sample(st.t);
        rows.push(Row {
            t: st.t,
            eta: [st.eta.x, st.eta.y, st.eta.z],
            nu: [st.nu.x, st.nu.y, st.nu.z],
            eta_d: [sample.eta_d.x, sample.eta_d.y, sample.eta_d.z],
            sigma,
            kill: output.kill,
            tau: [tau.x, tau.y, tau.z],
            commands,
            v,
            mu,
        });

        let w = disturbance.sample(dt);
        st = step(p, ModelKind::General, &st, &(tau + w), dt)?;
    }

    let last = rows.last().expect("at least one step").clone();
    let sample = traj.sample(st.t);
    rows.push(Row {
        t: st.t,
        eta: [st.eta.x, st.eta.y, st.eta.z],
        nu: [st.nu.x, st.nu.y, st.nu.z],
        eta_d: [sample.eta_d.x, sample.eta_d.y, sample.eta_d.z],
        ..last
    });

    let metrics = metrics_from_rows(&rows, dt);
    Ok(RunRecord {
        meta: RunMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.content_hash(),
            mode: mode.label().to_string(),
            seed,
            dt,
            duration: traj.duration(),
            candidates: labels,
        },
        metrics,
        switches,
        rows,
    })
}

/// Writes bytes atomically: a temp file in the destination directory is
/// renamed into place, so readers never observe a half-written file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SimError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f.write_all(bytes)?;
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV column header for a record's candidate set.
pub fn csv_header(record: &RunRecord) -> String {
    let mut cols: Vec<String> = [
        "t", "x", "y", "psi", "u", "v", "r", "x_d", "y_d", "psi_d", "sigma", "kill", "tau_x",
        "tau_y", "tau_n",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let thrusters = record.rows.first().map_or(0, |r| r.commands.len());
    for i in 0..thrusters {
        cols.push(format!("thrust_{i}"));
        cols.push(format!("azimuth_{i}"));
    }
    for label in &record.meta.candidates {
        cols.push(format!("v_{label}"));
    }
    for label in &record.meta.candidates {
        cols.push(format!("mu_{label}"));
    }
    cols.join(",")
}

/// Serializes a run to CSV. Floats use the shortest exact decimal form,
/// so rewriting the same record reproduces the same bytes.
pub fn write_csv(record: &RunRecord, path: &Path) -> Result<(), SimError> {
    let mut out = String::new();
    out.push_str(&csv_header(record));
    out.push('\n');
    for row in &record.rows {
        let mut fields: Vec<String> = vec![
            format!("{}", row.t),
            format!("{}", row.eta[0]),
            format!("{}", row.eta[1]),
            format!("{}", row.eta[2]),
            format!("{}", row.nu[0]),
            format!("{}", row.nu[1]),
            format!("{}", row.nu[2]),
            format!("{}", row.eta_d[0]),
            format!("{}", row.eta_d[1]),
            format!("{}", row.eta_d[2]),
            format!("{}", row.sigma),
            format!("{}", row.kill as u8),
            format!("{}", row.tau[0]),
            format!("{}", row.tau[1]),
            format!("{}", row.tau[2]),
        ];
        for c in &row.commands {
            fields.push(format!("{}", c.thrust));
            fields.push(format!("{}", c.azimuth));
        }
        for x in &row.v {
            fields.push(format!("{}", x));
        }
        for x in &row.mu {
            fields.push(format!("{}", x));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Serializes the full record, metadata included, as JSON.
pub fn write_json(record: &RunRecord, path: &Path) -> Result<(), SimError> {
    let bytes = serde_json::to_vec(record).expect("record serializes");
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub modes: Vec<String>,
    /// Metrics per mode (outer) and seed (inner), modes ordered as in
    /// `modes` with the switched mode first.
    pub table: Vec<Vec<Metrics>>,
    pub averages: Vec<Metrics>,
    pub switches: Vec<Vec<usize>>,
    pub elapsed_s: f64,
}

impl CompareReport {
    /// Seeds on which the switched mode beats every pure mode on the
    /// heading metric.
    pub fn heading_wins(&self) -> usize {
        (0..self.seeds.len())
            .filter(|&s| {
                (1..self.modes.len()).all(|m| self.table[0][s].pi_psi < self.table[m][s].pi_psi)
            })
            .count()
    }

    /// The headline ordering: the switched mode has the best average
    /// heading metric, stays within 10% of the best pure position
    /// metric, and wins the heading comparison on at least four of
    /// every five seeds.
    pub fn ordering_holds(&self) -> bool {
        let avg = &self.averages;
        let psi_best = (1..self.modes.len()).all(|m| avg[0].pi_psi < avg[m].pi_psi);
        let min_r = (1..self.modes.len()).map(|m| avg[m].pi_r).fold(f64::INFINITY, f64::min);
        let r_close = avg[0].pi_r <= 1.1 * min_r;
        let wins_needed = (4 * self.seeds.len()).div_ceil(5);
        psi_best && r_close && self.heading_wins() >= wins_needed
    }

    /// Plain text summary table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<18}{:>8}{:>14}{:>16}{:>10}\n",
            "mode", "seed", "pi_r (m^2 s)", "pi_psi (deg^2 s)", "switches"
        ));
        for (m, mode) in self.modes.iter().enumerate() {
            for (s, seed) in self.seeds.iter().enumerate() {
                out.push_str(&format!(
                    "{:<18}{:>8}{:>14.3}{:>16.1}{:>10}\n",
                    mode, seed, self.table[m][s].pi_r, self.table[m][s].pi_psi, self.switches[m][s]
                ));
            }
            out.push_str(&format!(
                "{:<18}{:>8}{:>14.3}{:>16.1}\n",
                mode, "avg", self.averages[m].pi_r, self.averages[m].pi_psi
            ));
        }
        out.push_str(&format!(
            "heading wins {}/{} | ordering {} | {:.1} s\n",
            self.heading_wins(),
            self.seeds.len(),
            if self.ordering_holds() { "holds" } else { "violated" },
            self.elapsed_s
        ));
        out
    }
}

/// Runs every mode over every seed and tabulates the tracking metrics.
pub fn compare(cfg: &Config, seeds: &[u64]) -> Result<CompareReport, SimError> {
    if seeds.is_empty() {
        return Err(SimError::Config { reason: "compare needs at least one seed".into() });
    }
    let started = Instant::now();
    let modes = RunMode::all();
    let mut table = Vec::with_capacity(modes.len());
    let mut switches = Vec::with_capacity(modes.len());
    let mut averages = Vec::with_capacity(modes.len());
    for mode in modes {
        let mut per_seed = Vec::with_capacity(seeds.len());
        let mut per_seed_switches = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let record = run_experiment(cfg, mode, seed)?;
            per_seed.push(record.metrics);
            per_seed_switches.push(record.switches);
        }
        let n = seeds.len() as f64;
        averages.push(Metrics {
            pi_r: per_seed.iter().map(|m| m.pi_r).sum::<f64>() / n,
            pi_psi: per_seed.iter().map(|m| m.pi_psi).sum::<f64>() / n,
        });
        table.push(per_seed);
        switches.push(per_seed_switches);
    }
    Ok(CompareReport {
        seeds: seeds.to_vec(),
        modes: modes.iter().map(|m| m.label().to_string()).collect(),
        table,
        averages,
        switches,
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}
