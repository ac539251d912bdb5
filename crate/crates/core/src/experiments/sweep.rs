use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::Tracker;
use crate::error::{Error, Result};
use crate::io::{format_value, run_to_dir, simulate, RunConfig, RunOutcome};
use crate::model::State;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Alpha,
    GammaU,
    Eta,
    B,
    Resolution,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::GammaU => "gamma_u",
            SweepAxis::Eta => "eta",
            SweepAxis::B => "b",
            SweepAxis::Resolution => "resolution",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [SweepAxis::Alpha, SweepAxis::GammaU, SweepAxis::Eta, SweepAxis::B, SweepAxis::Resolution];
        all.into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown sweep axis `{s}`; expected alpha, gamma_u, eta, b or resolution")))
    }
}

pub fn default_metrics() -> Vec<String> {
    ["u_L2", "tau_L2", "grad_tau_L2", "omega_Linf", "tau_Linf", "Gamma_L2", "G_L2"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub t_end: f64,
    /// Ledger columns reported at the end and at their peak.
    #[serde(default = "default_metrics")]
    pub summary_metrics: Vec<String>,
}

impl SweepSpec {
    pub fn new(base: RunConfig, axis: SweepAxis, values: Vec<f64>) -> Self {
        let t_end = base.stepper.t_end;
        SweepSpec { base, axis, values, t_end, summary_metrics: default_metrics() }
    }

    /// Configuration of one sweep point.
    pub fn point(&self, value: f64) -> Result<RunConfig> {
        let mut cfg = self.base.clone();
        cfg.stepper.t_end = self.t_end;
        match self.axis {
            SweepAxis::Alpha => {
                if !(value >= 0.0) {
                    return Err(Error::config(format!("alpha = {value} must be >= 0")));
                }
                cfg.params.alpha = value;
            }
            SweepAxis::GammaU => {
                if !(value > 1.0) {
                    return Err(Error::config(format!("gamma_u = {value} must exceed 1")));
                }
                cfg.params.gamma_u = value;
            }
            SweepAxis::Eta => cfg.params.eta = value,
            SweepAxis::B => cfg.params.b = value,
            SweepAxis::Resolution => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::config(format!("resolution {value} is not a positive integer")));
                }
                cfg.grid.n = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep needs at least one value"));
        }
        for &v in &self.values {
            self.point(v)?;
        }
        let grid = self.base.build_grid()?;
        let tracker = Tracker::new(&State::zeros(&grid), &self.base.params, &self.base.diagnostics.monitor_spec())?;
        let record = tracker.record(0, &State::zeros(&grid))?;
        for m in &self.summary_metrics {
            if record.get(m).is_none() {
                return Err(Error::config(format!("unknown summary metric `{m}`")));
            }
        }
        Ok(())
    }

    pub fn dir_name(&self, value: f64) -> String {
        format!("{}={}", self.axis, value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// `ok`, `blowup`, `nonfinite` or `error`.
    pub status: String,
    pub message: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub terminal: Vec<f64>,
    pub peak: Vec<f64>,
    /// Every `int_*` column at the end of the run.
    pub accumulators: Vec<(String, f64)>,
    pub wall_seconds: f64,
}

impl SweepRow {
    fn from_outcome(value: f64, out: &RunOutcome, metrics: &[String]) -> Self {
        let last = out.records.last().expect("initial row is always present");
        let column = |m: &String| out.records.iter().map(|r| r.get(m).unwrap_or(f64::NAN)).collect::<Vec<_>>();
        SweepRow {
            value,
            status: out.status.as_str().to_string(),
            message: None,
            steps: out.steps,
            final_time: out.final_state.time,
            terminal: metrics.iter().map(|m| last.get(m).unwrap_or(f64::NAN)).collect(),
            peak: metrics.iter().map(|m| column(m).into_iter().fold(f64::NAN, f64::max)).collect(),
            accumulators: last.accumulators.clone(),
            wall_seconds: out.wall_seconds,
        }
    }

    fn failed(value: f64, err: &Error, metrics: &[String]) -> Self {
        SweepRow {
            value,
            status: "error".to_string(),
            message: Some(err.to_string()),
            steps: 0,
            final_time: f64::NAN,
            terminal: vec![f64::NAN; metrics.len()],
            peak: vec![f64::NAN; metrics.len()],
            accumulators: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    /// Row equality ignoring wall time.
    pub fn same_result(&self, other: &SweepRow) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.value.to_bits() == other.value.to_bits()
            && self.status == other.status
            && self.message == other.message
            && self.steps == other.steps
            && self.final_time.to_bits() == other.final_time.to_bits()
            && bits(&self.terminal) == bits(&other.terminal)
            && bits(&self.peak) == bits(&other.peak)
            && self.accumulators.len() == other.accumulators.len()
            && self
                .accumulators
                .iter()
                .zip(&other.accumulators)
                .all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
    }
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub metrics: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Summary CSV without wall times, so identical sweeps give identical files.
    pub fn to_csv(&self) -> String {
        let acc_names: Vec<String> = self
            .rows
            .iter()
            .find(|r| !r.accumulators.is_empty())
            .map(|r| r.accumulators.iter().map(|a| a.0.clone()).collect())
            .unwrap_or_default();
        let mut header = vec![self.axis.name().to_string(), "status".into(), "steps".into(), "final_time".into()];
        header.extend(self.metrics.iter().map(|m| format!("{m}_final")));
        header.extend(self.metrics.iter().map(|m| format!("{m}_peak")));
        header.extend(acc_names.iter().cloned());
        let mut text = header.join(",") + "\n";
        for r in &self.rows {
            let mut cells = vec![format_value(r.value), r.status.clone(), r.steps.to_string(), format_value(r.final_time)];
            cells.extend(r.terminal.iter().chain(&r.peak).map(|v| format_value(*v)));
            for name in &acc_names {
                let v = r.accumulators.iter().find(|a| &a.0 == name).map_or(f64::NAN, |a| a.1);
                cells.push(format_value(v));
            }
            text += &(cells.join(",") + "\n");
        }
        text
    }

    pub fn timings_csv(&self) -> String {
        let mut text = format!("{},wall_seconds\n", self.axis);
        for r in &self.rows {
            text += &format!("{},{:.3}\n", format_value(r.value), r.wall_seconds);
        }
        text
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let summary = out.join("summary.csv");
        fs::write(&summary, self.to_csv()).map_err(|e| Error::io(&summary, e))?;
        let timings = out.join("timings.csv");
        fs::write(&timings, self.timings_csv()).map_err(|e| Error::io(&timings, e))
    }
}

/// Runs every sweep point; per-run ledgers go to `<out>/<axis>=<value>/`
/// when `out` is given. A failing point becomes an `error` row. The parallel
/// mode gives the same table as the sequential one.
pub fn run_sweep(spec: &SweepSpec, out: Option<&Path>, parallel: bool) -> Result<SweepTable> {
    spec.validate()?;
    let one = |&value: &f64| -> SweepRow {
        let result = spec.point(value).and_then(|cfg| match out {
            Some(dir) => run_to_dir(&cfg, &dir.join(spec.dir_name(value))),
            None => simulate(&cfg),
        });
        match result {
            Ok(o) => SweepRow::from_outcome(value, &o, &spec.summary_metrics),
            Err(e) => {
                log::warn!("sweep point {}={value} failed: {e}", spec.axis);
                SweepRow::failed(value, &e, &spec.summary_metrics)
            }
        }
    };
    let rows = if parallel {
        spec.values.par_iter().map(one).collect()
    } else {
        spec.values.iter().map(one).collect()
    };
    let table = SweepTable { axis: spec.axis, metrics: spec.summary_metrics.clone(), rows };
    if let Some(dir) = out {
        table.write(dir)?;
    }
    Ok(table)
}
