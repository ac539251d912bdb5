use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::diagnostics::{DiagnosticsRecord, Tracker};
use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::Grid;
use crate::timestepper::{integrate_from, StepStatus, StepperConfig};

use super::config::RunConfig;
use super::initial::make_initial;
use super::output::{read_checkpoint, write_checkpoint, write_snapshot, CheckpointMeta, LedgerWriter, LEDGER_FILE};

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: StepStatus,
    /// Global index of the last step taken.
    pub steps: usize,
    pub final_state: State,
    /// Ledger rows produced by this invocation, in order.
    pub records: Vec<DiagnosticsRecord>,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'a str,
    steps: usize,
    time: f64,
    ledger_rows: usize,
}

struct Start {
    state: State,
    step: usize,
    tracker: Tracker,
    ledger: Option<LedgerWriter>,
}

/// Runs a configuration in memory; every ledger row, starting with the
/// initial one, is returned.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let state = make_initial(cfg)?;
    simulate_from(cfg, state)
}

/// Like [`simulate`] but from a given initial state.
pub fn simulate_from(cfg: &RunConfig, state: State) -> Result<RunOutcome> {
    cfg.validate()?;
    let tracker = Tracker::new(&state, &cfg.params, &cfg.diagnostics.monitor_spec())?;
    let first = tracker.record(0, &state)?;
    let mut outcome = drive(cfg, Start { state, step: 0, tracker, ledger: None }, None)?;
    outcome.records.insert(0, first);
    Ok(outcome)
}

/// Fresh run writing `config.json`, `ledger.csv`, snapshots, checkpoints and
/// `summary.json` under `out`.
pub fn run_to_dir(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let state = make_initial(cfg)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cfg.save(&out.join(CONFIG_FILE))?;
    let tracker = Tracker::new(&state, &cfg.params, &cfg.diagnostics.monitor_spec())?;
    let first = tracker.record(0, &state)?;
    let mut ledger = LedgerWriter::create(&out.join(LEDGER_FILE), &first)?;
    ledger.write(&first)?;
    if cfg.output.snapshot_every > 0 {
        snapshot(out, 0, &state, cfg)?;
    }
    let mut outcome = drive(cfg, Start { state, step: 0, tracker, ledger: Some(ledger) }, Some(out))?;
    outcome.records.insert(0, first);
    Ok(outcome)
}

/// Continues the run in `out` from its last checkpoint. Only `t_end` and the
/// output settings may differ from the saved configuration.
pub fn resume_in_dir(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let saved = RunConfig::load(&out.join(CONFIG_FILE))?;
    let comparable = |c: &RunConfig| {
        let mut c = c.clone();
        c.stepper.t_end = 0.0;
        c.output = Default::default();
        c
    };
    if comparable(&saved) != comparable(cfg) {
        return Err(Error::config(format!(
            "configuration differs from {} beyond t_end and output settings",
            out.join(CONFIG_FILE).display()
        )));
    }
    cfg.save(&out.join(CONFIG_FILE))?;
    let grid: Arc<Grid> = cfg.build_grid()?;
    let (state, meta) = read_checkpoint(out, &grid)?;
    let tracker = Tracker::resume(&cfg.params, &cfg.diagnostics.monitor_spec(), meta.tracker)?;
    // a final off-cadence row is dropped unless there is nothing left to run
    let done = meta.step >= cfg.stepper.step_count(cfg.stepper.t_start);
    let keep = if done { meta.ledger_rows } else { meta.cadence_rows };
    let ledger = LedgerWriter::reopen(&out.join(LEDGER_FILE), keep)?;
    info!("resuming at step {} (t = {})", meta.step, state.time);
    drive(cfg, Start { state, step: meta.step, tracker, ledger: Some(ledger) }, Some(out))
}

fn snapshot(out: &Path, step: usize, state: &State, cfg: &RunConfig) -> Result<()> {
    let dir = out.join("snapshots");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_snapshot(&dir.join(format!("snap_{step:08}.bin")), state, &cfg.params)
}

fn drive(cfg: &RunConfig, start: Start, out: Option<&Path>) -> Result<RunOutcome> {
    let clock = Instant::now();
    let Start { state, step, mut tracker, mut ledger } = start;
    // the tracker has to see every step
    let stepper = StepperConfig { cadence: 1, ..cfg.stepper };
    let total = stepper.step_count(stepper.t_start);
    let every = |k: usize, n: usize| n > 0 && k % n == 0;
    let mut records = Vec::new();
    let mut last_step = step;
    // rows a longer continuation would also have written
    let mut cadence_rows = ledger.as_ref().map_or(0, LedgerWriter::rows);
    let end = integrate_from(&state, step, &cfg.params, &stepper, |k, r| {
        last_step = k;
        if r.status == StepStatus::Nonfinite {
            return Ok(());
        }
        tracker.advance(r)?;
        let on_cadence = every(k, cfg.diagnostics.cadence);
        if k == total || r.status != StepStatus::Ok || on_cadence {
            let rec = tracker.record(k, &r.state)?;
            if let Some(w) = ledger.as_mut() {
                w.write(&rec)?;
                if on_cadence {
                    cadence_rows = w.rows();
                }
            }
            records.push(rec);
        }
        if let Some(out) = out {
            if every(k, cfg.output.snapshot_every) {
                snapshot(out, k, &r.state, cfg)?;
            }
            if every(k, cfg.output.checkpoint_every) && r.status == StepStatus::Ok {
                let meta = CheckpointMeta {
                    step: k,
                    ledger_rows: ledger.as_ref().map_or(0, LedgerWriter::rows),
                    cadence_rows,
                    tracker: tracker.saved().clone(),
                };
                write_checkpoint(out, &r.state, &cfg.params, &meta)?;
            }
        }
        Ok(())
    })?;
    if let Some(out) = out {
        let summary = Summary {
            status: end.status.as_str(),
            steps: last_step,
            time: end.state.time,
            ledger_rows: ledger.as_ref().map_or(0, LedgerWriter::rows),
        };
        let path = out.join(SUMMARY_FILE);
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Json { path: path.clone(), source: e })?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(RunOutcome {
        status: end.status,
        steps: last_step,
        final_state: end.state,
        records,
        wall_seconds: clock.elapsed().as_secs_f64(),
    })
}
