use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::MonitorSpec;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::Grid;
use crate::timestepper::StepperConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    TaylorGreen,
    RandomBandlimited,
    ShearLayer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauKind {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "random_symmetric")]
    RandomSymmetric,
    #[serde(rename = "from_Du")]
    FromDu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub kind: InitialKind,
    #[serde(default)]
    pub seed: u64,
    /// Velocity scale: RMS speed for random data, peak speed otherwise.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Integer wavenumber shell `[kmin, kmax]` of the random data.
    #[serde(default = "default_band")]
    pub band: [usize; 2],
    #[serde(default = "default_tau_kind")]
    pub tau_kind: TauKind,
    /// Stress scale; defaults to `amplitude`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_amplitude: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_band() -> [usize; 2] {
    [1, 8]
}
fn default_tau_kind() -> TauKind {
    TauKind::Zero
}

impl InitialCondition {
    pub fn tau_scale(&self) -> f64 {
        self.tau_amplitude.unwrap_or(self.amplitude)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_r_list")]
    pub r_list: Vec<f64>,
    #[serde(default = "default_s_list")]
    pub s_list: Vec<f64>,
    #[serde(default = "default_pq_list")]
    pub pq_list: Vec<[f64; 2]>,
    /// A ledger row is written every `cadence` steps, and at the end.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

fn default_r_list() -> Vec<f64> {
    MonitorSpec::default().r_list
}
fn default_s_list() -> Vec<f64> {
    MonitorSpec::default().sobolev_s
}
fn default_pq_list() -> Vec<[f64; 2]> {
    MonitorSpec::default().pq_pairs
}
fn default_cadence() -> usize {
    1
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            r_list: default_r_list(),
            s_list: default_s_list(),
            pq_list: default_pq_list(),
            cadence: default_cadence(),
        }
    }
}

impl DiagnosticsConfig {
    pub fn monitor_spec(&self) -> MonitorSpec {
        MonitorSpec {
            r_list: self.r_list.clone(),
            sobolev_s: self.s_list.clone(),
            pq_pairs: self.pq_list.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Used when no directory is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Steps between snapshots; 0 disables them.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Steps between checkpoints; 0 disables them.
    #[serde(default)]
    pub checkpoint_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub initial_condition: InitialCondition,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Unit parameters with random band-limited data and zero
    /// stress on `[0, 2 pi)^2`.
    pub fn example(n: usize, alpha: f64, dt: f64, t_end: f64) -> Self {
        RunConfig {
            grid: GridConfig { n, length: two_pi() },
            params: ModelParams::normalized(alpha),
            stepper: StepperConfig::new(dt, t_end),
            initial_condition: InitialCondition {
                kind: InitialKind::RandomBandlimited,
                seed: 42,
                amplitude: 1.0,
                band: default_band(),
                tau_kind: TauKind::Zero,
                tau_amplitude: None,
            },
            diagnostics: DiagnosticsConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical form: every field present, fixed key order, pretty-printed.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return Err(Error::config(format!("grid length must be positive, got {}", self.grid.length)));
        }
        Grid::new(self.grid.n, self.grid.length)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.build_grid()?;
        self.params.validate()?;
        self.stepper.validate()?;
        if self.stepper.t_start != 0.0 {
            return Err(Error::config("runs start at t = 0; t_start must be 0"));
        }
        self.diagnostics.monitor_spec().validate()?;
        if self.diagnostics.cadence == 0 {
            return Err(Error::config("diagnostics cadence must be >= 1"));
        }
        let ic = &self.initial_condition;
        let [kmin, kmax] = ic.band;
        if kmin < 1 || kmin > kmax {
            return Err(Error::config(format!("band [{kmin}, {kmax}] needs 1 <= kmin <= kmax")));
        }
        let radius = grid.dealias_radius();
        let reach = match ic.kind {
            InitialKind::TaylorGreen => 1,
            _ => kmax,
        };
        if reach > radius {
            return Err(Error::config(format!(
                "initial data reaches wavenumber {reach}, beyond the dealias radius {radius} at n = {}",
                self.grid.n
            )));
        }
        let finite = |v: f64| v.is_finite() && v >= 0.0;
        if !finite(ic.amplitude) || !finite(ic.tau_scale()) {
            return Err(Error::config("amplitudes must be finite and >= 0"));
        }
        Ok(())
    }
}
