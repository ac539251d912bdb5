//! Lawson integrating-factor RK4. Every linear decay rate is applied through
//! its exact per-mode exponential; advection, coupling, corotation and the
//! `Du` forcing are explicit.
//!
//! Each step also returns the time integral of the dissipation
//! `D = (nu/kappa) |Lambda^{gamma_u} u|^2 + (beta |tau|^2 + mu |Lambda^alpha tau|^2)/gamma_f`
//! over the step. It is carried as an extra quadratic unknown through the same
//! scheme, so it is fourth-order and exact when the explicit terms vanish.

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{explicit_terms, linear_rates, ModelParams, SpectralState, State};
use crate::spectral::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Origin of the uniform time grid `t_start + k dt`.
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_cfl")]
    pub cfl_target: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Threshold on `|omega|_inf` above which a run is reported as blow-up.
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// The observer sees every `cadence`-th step, and always the last one.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_max_steps() -> usize {
    10_000_000
}
fn default_blowup() -> f64 {
    1e8
}
fn default_cadence() -> usize {
    1
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        StepperConfig {
            dt,
            t_end,
            t_start: 0.0,
            cfl_target: default_cfl(),
            max_steps: default_max_steps(),
            blowup_threshold: default_blowup(),
            cadence: default_cadence(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_start.is_finite() && self.t_end >= self.t_start && self.t_end.is_finite()) {
            return Err(Error::config(format!(
                "need t_start <= t_end, got {} and {}",
                self.t_start, self.t_end
            )));
        }
        if !(self.cfl_target > 0.0 && self.cfl_target < 1.0) {
            return Err(Error::config("cfl_target must lie in (0, 1)"));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::config("blowup_threshold must be positive"));
        }
        if self.cadence == 0 {
            return Err(Error::config("cadence must be >= 1"));
        }
        if self.step_count(self.t_start) > self.max_steps {
            return Err(Error::config(format!(
                "t_end/dt needs {} steps, more than max_steps = {}",
                self.step_count(self.t_start),
                self.max_steps
            )));
        }
        Ok(())
    }

    /// Steps needed to go from `t0` to `t_end`; a final partial step counts.
    pub fn step_count(&self, t0: f64) -> usize {
        let remaining = (self.t_end - t0) / self.dt;
        if remaining <= 1e-9 {
            0
        } else {
            (remaining - 1e-9).ceil() as usize
        }
    }

    /// Time after global step `index` of a run with `total` steps. Interior
    /// times depend only on the index so restarted runs see the same values.
    pub fn time_at(&self, index: usize, total: usize) -> f64 {
        if index >= total {
            self.t_end
        } else {
            self.t_start + index as f64 * self.dt
        }
    }

    /// Length of global step `index` (1-based).
    pub fn step_length(&self, index: usize, total: usize) -> f64 {
        if index < total {
            return self.dt;
        }
        let rest = self.t_end - self.time_at(index - 1, total);
        if (rest - self.dt).abs() <= 1e-9 * self.dt {
            self.dt
        } else {
            rest
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ok,
    Blowup,
    Nonfinite,
}

impl StepStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepStatus::Ok => "ok",
            StepStatus::Blowup => "blowup",
            StepStatus::Nonfinite => "nonfinite",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub state: State,
    pub accepted_dt: f64,
    /// `dt |u|_inf / dx` at the start of the step.
    pub cfl_observed: f64,
    pub status: StepStatus,
    /// Integral of the dissipation over the step.
    pub dissipation: f64,
    /// `|omega|_inf` of the returned state.
    pub vorticity_max: f64,
}

/// Exponential factors for one step size.
struct Factors {
    h: f64,
    u_full: Vec<f64>,
    u_half: Vec<f64>,
    t_full: Vec<f64>,
    t_half: Vec<f64>,
    /// `(1 - E_h^2)/2` and `1 - E_h` per mode, velocity then stress.
    u_sq: Vec<f64>,
    u_lin: Vec<f64>,
    t_sq: Vec<f64>,
    t_lin: Vec<f64>,
}

impl Factors {
    fn new(rates_u: &[f64], rates_t: &[f64], h: f64) -> Self {
        let exp = |r: &[f64], s: f64| r.iter().map(|l| (-l * s).exp()).collect::<Vec<_>>();
        let one_minus = |r: &[f64], s: f64, c: f64| {
            r.iter().map(|l| -(-l * s).exp_m1() * c).collect::<Vec<_>>()
        };
        Factors {
            h,
            u_full: exp(rates_u, h),
            u_half: exp(rates_u, 0.5 * h),
            t_full: exp(rates_t, h),
            t_half: exp(rates_t, 0.5 * h),
            u_sq: one_minus(rates_u, 2.0 * h, 0.5),
            u_lin: one_minus(rates_u, h, 1.0),
            t_sq: one_minus(rates_t, 2.0 * h, 0.5),
            t_lin: one_minus(rates_t, h, 1.0),
        }
    }
}

/// Reusable stepping context for one grid and parameter set.
pub struct Stepper {
    grid: Arc<Grid>,
    params: ModelParams,
    rates_u: Vec<f64>,
    rates_t: Vec<f64>,
    factors: Option<Factors>,
    cfl_target: f64,
    blowup_threshold: f64,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, params: &ModelParams) -> Self {
        let (rates_u, rates_t) = linear_rates(grid, params);
        Stepper {
            grid: grid.clone(),
            params: *params,
            rates_u,
            rates_t,
            factors: None,
            cfl_target: default_cfl(),
            blowup_threshold: default_blowup(),
        }
    }

    pub fn with_limits(mut self, cfl_target: f64, blowup_threshold: f64) -> Self {
        self.cfl_target = cfl_target;
        self.blowup_threshold = blowup_threshold;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn factors(&mut self, h: f64) -> &Factors {
        if self.factors.as_ref().map(|f| f.h) != Some(h) {
            self.factors = Some(Factors::new(&self.rates_u, &self.rates_t, h));
        }
        self.factors.as_ref().expect("just set")
    }

    /// Advances a spectral state by `h`; returns the new state and the
    /// dissipation integral over the step.
    pub fn advance_spectral(&mut self, y: &SpectralState, h: f64) -> (SpectralState, f64) {
        let params = self.params;
        let area = self.grid.area();
        let (wu, wt) = params.energy_weights();
        let weights = [wu, wu, wt, 2.0 * wt, wt];
        self.factors(h);
        let f = self.factors.as_ref().expect("factors prepared");

        let k1 = explicit_terms(y, &params);
        let mut y2 = y.clone();
        y2.axpy(0.5 * h, &k1);
        y2.scale_modes(&f.u_half, &f.t_half);
        let k2 = explicit_terms(&y2, &params);

        let mut y3 = y.scaled_modes(&f.u_half, &f.t_half);
        y3.axpy(0.5 * h, &k2);
        let k3 = explicit_terms(&y3, &params);

        let mut y4 = y.scaled_modes(&f.u_full, &f.t_full);
        y4.axpy(h, &k3.scaled_modes(&f.u_half, &f.t_half));
        let k4 = explicit_terms(&y4, &params);

        let mut next = y.scaled_modes(&f.u_full, &f.t_full);
        next.axpy(h / 6.0, &k1.scaled_modes(&f.u_full, &f.t_full));
        let mut mid = k2.clone();
        mid.axpy(1.0, &k3);
        next.axpy(h / 3.0, &mid.scaled_modes(&f.u_half, &f.t_half));
        next.axpy(h / 6.0, &k4);

        // Dissipation: q' = w A lambda |y|^2 with |y|^2 forced by
        // s = 2 Re(conj(y) N); propagating (|y|^2, q) exactly gives the sum below.
        let source = |a: &Complex64, b: &Complex64| 2.0 * (a.conj() * b).re;
        let mut q = 0.0;
        let (c0, c1, c2, c3) = (comps(y), comps(&k1), comps(&y2), comps(&k2));
        let (c4, c5) = (comps(&y3), comps(&k3));
        for comp in 0..5 {
            let (sq, lin) = if comp < 2 { (&f.u_sq, &f.u_lin) } else { (&f.t_sq, &f.t_lin) };
            let mut acc = 0.0;
            for m in 0..self.grid.len() {
                if lin[m] == 0.0 {
                    continue;
                }
                let e = c0[comp][m].norm_sqr();
                let s1 = source(&c0[comp][m], &c1[comp][m]);
                let s2 = source(&c2[comp][m], &c3[comp][m]);
                let s3 = source(&c4[comp][m], &c5[comp][m]);
                acc += e * sq[m] + h / 6.0 * (s1 * sq[m] + (s2 + s3) * lin[m]);
            }
            q += weights[comp] * area * acc;
        }
        (next, q)
    }

    /// One step of size `dt` from a physical state.
    pub fn step(&mut self, state: &State, dt: f64) -> StepResult {
        let cfl = dt * state.u.magnitude().max_abs() / self.grid.dx();
        if cfl > self.cfl_target {
            warn!("CFL number {cfl:.3} exceeds target {:.3} at t = {}", self.cfl_target, state.time);
        }
        let y = SpectralState::from_state(state);
        let (next, dissipation) = self.advance_spectral(&y, dt);
        let new_state = next.to_state(state.time + dt);
        let mut status = StepStatus::Ok;
        let mut vorticity_max = f64::NAN;
        if !new_state.is_finite() || !dissipation.is_finite() {
            status = StepStatus::Nonfinite;
        } else {
            vorticity_max = next.vorticity().to_field().max_abs();
            if !vorticity_max.is_finite() {
                status = StepStatus::Nonfinite;
            } else if vorticity_max > self.blowup_threshold {
                status = StepStatus::Blowup;
            }
        }
        StepResult {
            state: new_state,
            accepted_dt: dt,
            cfl_observed: cfl,
            status,
            dissipation,
            vorticity_max,
        }
    }
}

/// Single step with default limits.
pub fn step(state: &State, params: &ModelParams, dt: f64) -> StepResult {
    Stepper::new(state.grid(), params).step(state, dt)
}

/// Steps from `state0`, which must sit at global step `first_step` of the
/// grid `cfg.t_start + k dt`, to `cfg.t_end`. The observer receives the global
/// step index and the step result at the configured cadence; returning an
/// error aborts the run. Stops early on blow-up or a non-finite state,
/// returning that step's result.
pub fn integrate_from(
    state0: &State,
    first_step: usize,
    params: &ModelParams,
    cfg: &StepperConfig,
    mut observer: impl FnMut(usize, &StepResult) -> Result<()>,
) -> Result<StepResult> {
    cfg.validate()?;
    state0.ensure_finite()?;
    let total = cfg.step_count(cfg.t_start);
    if first_step > total || (state0.time - cfg.time_at(first_step, total)).abs() > 1e-9 * cfg.dt {
        return Err(Error::config(format!(
            "state time {} is not step {first_step} of the configured run",
            state0.time
        )));
    }
    let mut stepper =
        Stepper::new(state0.grid(), params).with_limits(cfg.cfl_target, cfg.blowup_threshold);
    let mut current = StepResult {
        state: state0.clone(),
        accepted_dt: 0.0,
        cfl_observed: 0.0,
        status: StepStatus::Ok,
        dissipation: 0.0,
        vorticity_max: state0.vorticity().max_abs(),
    };
    for index in first_step + 1..=total {
        let mut next = stepper.step(&current.state, cfg.step_length(index, total));
        next.state.time = cfg.time_at(index, total);
        let stop = next.status != StepStatus::Ok;
        if index == total || stop || index % cfg.cadence == 0 {
            observer(index, &next)?;
        }
        current = next;
        if stop {
            warn!("run stopped at t = {}: {}", current.state.time, current.status.as_str());
            break;
        }
    }
    Ok(current)
}

/// Steps from `state0` to `cfg.t_end`, taking the grid origin from the state.
pub fn integrate(
    state0: &State,
    params: &ModelParams,
    cfg: &StepperConfig,
    observer: impl FnMut(usize, &StepResult) -> Result<()>,
) -> Result<StepResult> {
    let cfg = StepperConfig { t_start: state0.time, ..*cfg };
    integrate_from(state0, 0, params, &cfg, observer)
}

fn comps(s: &SpectralState) -> Vec<&[Complex64]> {
    s.components().map(|c| c.coeffs()).collect()
}
