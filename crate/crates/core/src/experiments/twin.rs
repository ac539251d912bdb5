use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{format_value, make_initial, RunConfig};
use crate::model::{SpectralState, State};
use crate::spectral::ops::derivative;
use crate::spectral::random::{bandlimited_spectrum, rng, solenoidal_spectra};
use crate::spectral::{lp_norm, ScalarField, Spectrum, SymTensorField, VectorField};
use crate::timestepper::{StepStatus, Stepper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwinSpec {
    /// `sqrt(|V0|^2 + |W0|^2)` of the initial difference.
    pub perturbation_size: f64,
    pub perturbation_seed: u64,
    /// Time between rows of the difference ledger.
    pub norm_cadence: f64,
}

impl TwinSpec {
    pub fn validate(&self, u0_l2: f64) -> Result<()> {
        let d = self.perturbation_size;
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::config(format!("perturbation size {d} must be finite and >= 0")));
        }
        if d > 1e-2 * u0_l2 {
            return Err(Error::config(format!("perturbation size {d} exceeds 1e-2 |u0|_2 = {:e}", 1e-2 * u0_l2)));
        }
        if !(self.norm_cadence > 0.0) {
            return Err(Error::config("norm_cadence must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwinRow {
    pub time: f64,
    /// `|u - u~|_2`.
    pub v_l2: f64,
    /// `|tau - tau~|_2`.
    pub w_l2: f64,
    /// `exp` of the time integral of the Gronwall rate.
    pub gronwall_factor: f64,
    /// `(|V|^2 + |W|^2) / (delta^2 factor)`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct TwinReport {
    pub status: StepStatus,
    pub delta: f64,
    pub rows: Vec<TwinRow>,
}

impl TwinReport {
    pub fn terminal(&self) -> &TwinRow {
        self.rows.last().expect("the initial row is always present")
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut text = "time,V_L2,W_L2,gronwall_factor,ratio\n".to_string();
        for r in &self.rows {
            let cells = [r.time, r.v_l2, r.w_l2, r.gronwall_factor, r.ratio].map(format_value);
            text += &(cells.join(",") + "\n");
        }
        text
    }
}

/// Band-limited perturbation with `|V0|^2 = |W0|^2 = delta^2 / 2`.
pub fn perturbation(base: &State, cfg: &RunConfig, delta: f64, seed: u64) -> Result<State> {
    let grid = base.grid().clone();
    let [kmin, kmax] = cfg.initial_condition.band.map(|k| k as f64);
    let mut stream = rng(seed);
    let v = VectorField::from_spectra(&solenoidal_spectra(&grid, &mut stream, kmin, kmax));
    let mut next = || bandlimited_spectrum(&grid, &mut stream, kmin, kmax).to_field();
    let (a, b, c) = (next(), next(), next());
    let w = SymTensorField::new(a, b, c);
    let half = delta / 2f64.sqrt();
    let sv = half / lp_norm(&v, 2.0)?;
    let sw = half / lp_norm(&w, 2.0)?;
    let s = |f: &ScalarField, k: f64| f.map(|x| x * k);
    Ok(State::new(
        base.time,
        VectorField::new(s(&v.components[0], sv), s(&v.components[1], sv)),
        SymTensorField::new(s(&w.xx, sw), s(&w.xy, sw), s(&w.yy, sw)),
    ))
}

fn add(a: &State, b: &State) -> State {
    let sum = |x: &ScalarField, y: &ScalarField| x.zip_map(y, |p, q| p + q);
    State::new(
        a.time,
        VectorField::new(sum(&a.u.components[0], &b.u.components[0]), sum(&a.u.components[1], &b.u.components[1])),
        SymTensorField::new(sum(&a.tau.xx, &b.tau.xx), sum(&a.tau.xy, &b.tau.xy), sum(&a.tau.yy, &b.tau.yy)),
    )
}

fn difference(a: &State, b: &State) -> Result<(f64, f64)> {
    let d = |x: &ScalarField, y: &ScalarField| x.zip_map(y, |p, q| p - q);
    let v = VectorField::new(d(&a.u.components[0], &b.u.components[0]), d(&a.u.components[1], &b.u.components[1]));
    let w = SymTensorField::new(d(&a.tau.xx, &b.tau.xx), d(&a.tau.xy, &b.tau.xy), d(&a.tau.yy, &b.tau.yy));
    Ok((lp_norm(&v, 2.0)?, lp_norm(&w, 2.0)?))
}

/// Sup over the grid of the Euclidean norm of all first derivatives of the
/// given components; `weights` counts repeated tensor entries.
fn gradient_sup(spectra: &[&Spectrum], weights: &[f64]) -> f64 {
    let grid = spectra[0].grid();
    let mut acc = vec![0.0; grid.len()];
    for (s, w) in spectra.iter().zip(weights) {
        for axis in 0..2 {
            let d = derivative(s, axis).to_field();
            for (a, v) in acc.iter_mut().zip(d.values()) {
                *a += w * v * v;
            }
        }
    }
    acc.into_iter().fold(0.0, f64::max).sqrt()
}

/// `|grad u~|_inf + |grad tau~|_inf + |tau|_inf^2 + |tau~|_inf^2`.
fn gronwall_rate(base: &State, twin: &State) -> f64 {
    let t = SpectralState::from_state_raw(twin);
    let gu = gradient_sup(&[&t.u[0], &t.u[1]], &[1.0, 1.0]);
    let gt = gradient_sup(&[&t.tau[0], &t.tau[1], &t.tau[2]], &[1.0, 2.0, 1.0]);
    gu + gt + base.tau.frobenius().max_abs().powi(2) + twin.tau.frobenius().max_abs().powi(2)
}

/// Runs the base data and a perturbed copy in lockstep and records the
/// difference norms against the measured Gronwall factor. Writes `twin.csv`
/// under `out` when given.
pub fn run_twin(spec: &TwinSpec, cfg: &RunConfig, out: Option<&Path>) -> Result<TwinReport> {
    let base0 = make_initial(cfg)?;
    spec.validate(lp_norm(&base0.u, 2.0)?)?;
    let delta = spec.perturbation_size;
    let twin0 = if delta == 0.0 {
        base0.clone()
    } else {
        add(&base0, &perturbation(&base0, cfg, delta, spec.perturbation_seed)?)
    };
    let stepper_cfg = cfg.stepper;
    let total = stepper_cfg.step_count(stepper_cfg.t_start);
    let mut base_stepper = Stepper::new(base0.grid(), &cfg.params)
        .with_limits(stepper_cfg.cfl_target, stepper_cfg.blowup_threshold);
    let mut twin_stepper = Stepper::new(base0.grid(), &cfg.params)
        .with_limits(stepper_cfg.cfl_target, stepper_cfg.blowup_threshold);

    let row = |time: f64, base: &State, twin: &State, integral: f64| -> Result<TwinRow> {
        let (v_l2, w_l2) = difference(base, twin)?;
        let gronwall_factor = integral.exp();
        let num = v_l2 * v_l2 + w_l2 * w_l2;
        let ratio = if num == 0.0 { 0.0 } else { num / (delta * delta * gronwall_factor) };
        Ok(TwinRow { time, v_l2, w_l2, gronwall_factor, ratio })
    };

    let (mut base, mut twin) = (base0, twin0);
    let mut integral = 0.0;
    let mut rate = gronwall_rate(&base, &twin);
    let mut rows = vec![row(base.time, &base, &twin, integral)?];
    let mut next_row = stepper_cfg.t_start + spec.norm_cadence;
    let mut status = StepStatus::Ok;
    for k in 1..=total {
        let h = stepper_cfg.step_length(k, total);
        let time = stepper_cfg.time_at(k, total);
        let a = base_stepper.step(&base, h);
        let b = twin_stepper.step(&twin, h);
        status = if a.status != StepStatus::Ok { a.status } else { b.status };
        base = a.state;
        twin = b.state;
        base.time = time;
        twin.time = time;
        if status == StepStatus::Nonfinite {
            break;
        }
        let now = gronwall_rate(&base, &twin);
        integral += 0.5 * h * (rate + now);
        rate = now;
        if k == total || status != StepStatus::Ok || time >= next_row - 1e-9 * stepper_cfg.dt {
            rows.push(row(time, &base, &twin, integral)?);
            while next_row <= time + 1e-9 * stepper_cfg.dt {
                next_row += spec.norm_cadence;
            }
        }
        if status != StepStatus::Ok {
            break;
        }
    }
    let report = TwinReport { status, delta, rows };
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("twin.csv");
        fs::write(&path, report.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}
