//! Experiment configuration, read from TOML. Physical and agent parameters
//! keep their table symbols as keys (`L`, `rho`, `E`, `Kp`, `W_e`, ...).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use flexlink_core::beam::BeamParams;
use flexlink_core::closed_loop::LoopConfig;
use flexlink_core::control::{PdeGains, PidGains};
use flexlink_core::trajectory::{Schedule, Waypoint};
use flexlink_core::ModelOptions;
use flexlink_learn::SacConfig;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Pde,
    Pid,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pde => "pde",
            Self::Pid => "pid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Cpt,
    Drl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    /// Controllers run by `simulate`, in output order.
    pub run: Vec<ControllerKind>,
    pub pid: PidGains,
    pub pde: PdeGains,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self { run: vec![ControllerKind::Pde, ControllerKind::Pid], pid: PidGains::BASELINE, pde: PdeGains::BASELINE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub kind: PlannerKind,
    pub checkpoint: Option<PathBuf>,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self { kind: PlannerKind::Cpt, checkpoint: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub start_deg: f64,
    pub legs: Vec<Waypoint>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { start_deg: 0.0, legs: Schedule::canonical_legs() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintySection {
    /// Relative changes of the controller's model, in percent.
    pub grid_percent: Vec<f64>,
    /// Which of `E, I, m, L, M` the perturbation scales (jointly).
    pub params: Vec<String>,
    pub max_percent: f64,
}

impl Default for UncertaintySection {
    fn default() -> Self {
        Self {
            grid_percent: vec![-40.0, -20.0, 0.0, 20.0, 40.0],
            params: ["E", "I", "m", "L", "M"].map(String::from).to_vec(),
            max_percent: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub steps_deg: Vec<f64>,
    pub start_deg: f64,
    /// Run length (s).
    pub horizon: f64,
    /// Allowed relative excess of V over the certified envelope.
    pub slack: f64,
    pub terminal_tolerance: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self { steps_deg: vec![15.0, 30.0, 60.0], start_deg: 0.0, horizon: 10.0, slack: 0.01, terminal_tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub suite_seed: u64,
    pub pairs: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { suite_seed: 7, pairs: flexlink_learn::eval::SUITE_SIZE }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Also write SVG line charts next to the CSV files.
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub beam: BeamParams,
    /// Plant used by the controller studies (`simulate`, `uncertainty`,
    /// `lyapunov`); the planner uses `sac.n_modes`.
    pub model: ModelOptions,
    #[serde(rename = "loop")]
    pub control_loop: LoopConfig,
    pub controller: ControllerSection,
    pub planner: PlannerSection,
    pub schedule: ScheduleSection,
    pub sac: SacConfig,
    pub uncertainty: UncertaintySection,
    pub lyapunov: LyapunovSection,
    pub compare: CompareSection,
    pub output: OutputSection,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            beam: BeamParams::table_i(),
            // the fed-back root curvature needs more modes than the plant
            // dynamics do; five keeps its truncation bias small
            model: ModelOptions { n_modes: 5, ..Default::default() },
            control_loop: LoopConfig::default(),
            controller: ControllerSection::default(),
            planner: PlannerSection::default(),
            schedule: ScheduleSection::default(),
            sac: SacConfig::default(),
            uncertainty: UncertaintySection::default(),
            lyapunov: LyapunovSection::default(),
            compare: CompareSection::default(),
            output: OutputSection::default(),
            seed: 0,
        }
    }
}

pub const PERTURBABLE: [&str; 5] = ["E", "I", "m", "L", "M"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn schedule(&self) -> Result<Schedule, HarnessError> {
        Schedule::new(self.schedule.start_deg.to_radians(), &self.schedule.legs).map_err(|e| HarnessError::Validation(format!("schedule: {e}")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let v = |m: String| Err(HarnessError::Validation(m));
        if let Err(e) = self.beam.validate() {
            return v(format!("beam: {e}"));
        }
        if self.model.n_modes == 0 || self.model.n_modes > flexlink_core::MAX_MODES {
            return v(format!("model.n_modes must be 1..={} (got {})", flexlink_core::MAX_MODES, self.model.n_modes));
        }
        let l = &self.control_loop;
        if !(l.control_dt > 0.0 && l.control_dt.is_finite()) || l.substeps == 0 || !(l.torque_limit > 0.0) {
            return v("loop: control_dt, substeps and torque_limit must be positive".into());
        }
        if let Err(e) = self.controller.pid.validate() {
            return v(format!("controller.pid: {e}"));
        }
        let g = &self.controller.pde;
        for (name, x) in [("Kp", g.kp), ("Kd", g.kd), ("alpha", g.alpha)] {
            if !(x.is_finite() && x >= 0.0) {
                return v(format!("controller.pde.{name} = {x} must be finite and non-negative"));
            }
        }
        self.schedule()?;
        if let Err(e) = self.sac.validate() {
            return v(format!("sac: {e}"));
        }
        let u = &self.uncertainty;
        for &p in &u.grid_percent {
            if !(p.is_finite() && p.abs() <= u.max_percent && p > -100.0) {
                return v(format!("uncertainty grid value {p}% outside ±{}%", u.max_percent));
            }
        }
        for name in &u.params {
            if !PERTURBABLE.contains(&name.as_str()) {
                return v(format!("uncertainty parameter `{name}` is not one of {PERTURBABLE:?}"));
            }
        }
        let ly = &self.lyapunov;
        if !(ly.horizon > 0.0 && ly.slack >= 0.0 && ly.terminal_tolerance > 0.0) {
            return v("lyapunov: horizon and terminal_tolerance must be positive, slack non-negative".into());
        }
        if let Some(p) = &self.planner.checkpoint {
            if !p.exists() {
                return v(format!("planner.checkpoint {} does not exist", p.display()));
            }
        }
        if self.compare.pairs == 0 {
            return v("compare.pairs must be at least 1".into());
        }
        Ok(())
    }

    /// Controller's model with the selected parameters scaled by `1 + percent/100`.
    pub fn perturbed_model(&self, percent: f64) -> BeamParams {
        let f = 1.0 + percent / 100.0;
        let mut p = self.beam;
        for name in &self.uncertainty.params {
            match name.as_str() {
                "E" => p.youngs_modulus *= f,
                "I" => p.area_moment *= f,
                "m" => p.link_mass *= f,
                "L" => p.length *= f,
                "M" => p.payload_mass *= f,
                _ => {}
            }
        }
        p
    }
}
