//! Right-hand sides of the velocity/stress system, its vorticity form, and the
//! pressure functional, all driven by one parameter record.
//!
//! Conventions: `(grad u)_ij = d_j u_i`, `Du = (grad u + grad u^T)/2`,
//! `Omega = (grad u - grad u^T)/2` so `Omega_12 = -omega/2` with
//! `omega = d1 u2 - d2 u1`. The stress equation is
//!
//! ```text
//! d_t tau + (u.grad) tau + beta tau + eta (tau Omega - Omega tau)
//!     - b (Du tau + tau Du) + mu Lambda^{2 alpha} tau = gamma_f Du
//! ```
//!
//! With `eta = 1` this is the same as carrying `-Q(grad u, tau)` on the left
//! with `Q = Omega tau - tau Omega + b (Du tau + tau Du)`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ops::{
    biot_savart_spectral, curl, curl_div, derivative, divergence_defect, lambda_power,
    leray_in_place, tensor_divergence,
};
use crate::spectral::{Grid, ScalarField, SkewTensorField, Spectrum, SymTensorField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Velocity viscosity.
    pub nu: f64,
    /// Exponent of the velocity dissipation `nu Lambda^{2 gamma_u}`.
    pub gamma_u: f64,
    /// Stress diffusion coefficient.
    pub mu: f64,
    /// Stress dissipation exponent; `alpha = 0` means no stress dissipation.
    pub alpha: f64,
    /// Linear damping of the stress.
    pub beta: f64,
    /// Coupling coefficient in front of `div tau`.
    pub kappa: f64,
    /// Coefficient of the `Du` forcing of the stress.
    pub gamma_f: f64,
    /// Corotation coefficient.
    pub eta: f64,
    /// Bilinear-form parameter in `[-1, 1]`.
    pub b: f64,
}

impl ModelParams {
    /// `nu = mu = eta = kappa = gamma_f = 1`, `beta = b = 0`, `gamma_u = 1`.
    pub fn normalized(alpha: f64) -> Self {
        ModelParams {
            nu: 1.0,
            gamma_u: 1.0,
            mu: 1.0,
            alpha,
            beta: 0.0,
            kappa: 1.0,
            gamma_f: 1.0,
            eta: 1.0,
            b: 0.0,
        }
    }

    /// Fractional velocity dissipation `Lambda^{2 gamma}` and no stress
    /// dissipation.
    pub fn fractional_velocity(gamma: f64) -> Self {
        ModelParams { gamma_u: gamma, mu: 0.0, alpha: 0.0, ..Self::normalized(0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.nu, self.gamma_u, self.mu, self.alpha, self.beta, self.kappa, self.gamma_f,
            self.eta, self.b,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("model parameters must be finite"));
        }
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::config(msg)) };
        check(self.nu >= 0.0, "nu must be >= 0")?;
        check(self.gamma_u >= 1.0, "gamma_u must be >= 1")?;
        check(self.mu >= 0.0, "mu must be >= 0")?;
        check(self.alpha >= 0.0, "alpha must be >= 0")?;
        check(self.beta >= 0.0, "beta must be >= 0")?;
        check(self.kappa > 0.0, "kappa must be > 0")?;
        check(self.gamma_f > 0.0, "gamma_f must be > 0")?;
        check((-1.0..=1.0).contains(&self.b), "b must lie in [-1, 1]")
    }

    /// Weight `c` in the combined quantity `omega - c R_{gamma_u} tau`: it is
    /// `kappa / nu`, so that `nu Lambda^{2 gamma_u}` applied to the correction
    /// cancels `kappa curl div tau`. Without viscosity it falls back to `kappa`.
    pub fn combined_weight(&self) -> f64 {
        if self.nu > 0.0 {
            self.kappa / self.nu
        } else {
            self.kappa
        }
    }

    /// Weights `(1/kappa, 1/gamma_f)` of the kinetic and elastic parts of the
    /// energy. A zero coefficient decouples that part; it is then weighted by 1.
    pub fn energy_weights(&self) -> (f64, f64) {
        let inv = |c: f64| if c > 0.0 { 1.0 / c } else { 1.0 };
        (inv(self.kappa), inv(self.gamma_f))
    }

    /// Per-mode linear decay rate of the velocity.
    pub fn velocity_rate(&self, modulus: f64) -> f64 {
        if modulus == 0.0 {
            0.0
        } else {
            self.nu * modulus.powf(2.0 * self.gamma_u)
        }
    }

    /// Per-mode linear decay rate of the stress.
    pub fn stress_rate(&self, modulus: f64) -> f64 {
        let diffusion = if self.alpha == 0.0 || modulus == 0.0 {
            0.0
        } else {
            self.mu * modulus.powf(2.0 * self.alpha)
        };
        self.beta + diffusion
    }
}

/// The evolved pair `(u, tau)` at one time, in physical space.
#[derive(Clone, Debug)]
pub struct State {
    pub time: f64,
    pub u: VectorField,
    pub tau: SymTensorField,
}

impl State {
    pub fn new(time: f64, u: VectorField, tau: SymTensorField) -> Self {
        State { time, u, tau }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        State::new(0.0, VectorField::zeros(grid), SymTensorField::zeros(grid))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        self.u.ensure_finite("u")?;
        self.tau.ensure_finite("tau")
    }

    pub fn vorticity(&self) -> ScalarField {
        curl(&self.u.spectra()).to_field()
    }

    pub fn is_finite(&self) -> bool {
        self.ensure_finite().is_ok()
    }
}

/// Spectral coefficients of a state; the working representation of the solver.
#[derive(Clone, Debug)]
pub struct SpectralState {
    pub u: [Spectrum; 2],
    pub tau: [Spectrum; 3],
}

impl SpectralState {
    /// Transforms, applies the dealiasing mask, and Leray-projects `u`.
    pub fn from_state(state: &State) -> Self {
        let mut u = state.u.spectra().map(Spectrum::dealiased);
        leray_in_place(&mut u);
        let tau = state.tau.spectra().map(Spectrum::dealiased);
        SpectralState { u, tau }
    }

    /// Transforms without masking or projection.
    pub fn from_state_raw(state: &State) -> Self {
        SpectralState { u: state.u.spectra(), tau: state.tau.spectra() }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralState {
            u: [Spectrum::zeros(grid), Spectrum::zeros(grid)],
            tau: [Spectrum::zeros(grid), Spectrum::zeros(grid), Spectrum::zeros(grid)],
        }
    }

    pub fn to_state(&self, time: f64) -> State {
        State::new(time, VectorField::from_spectra(&self.u), SymTensorField::from_spectra(&self.tau))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u[0].grid()
    }

    pub fn components(&self) -> impl Iterator<Item = &Spectrum> {
        self.u.iter().chain(self.tau.iter())
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut Spectrum> {
        self.u.iter_mut().chain(self.tau.iter_mut())
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralState) {
        for (s, o) in self.components_mut().zip(other.components()) {
            s.axpy(a, o);
        }
    }

    /// Multiplies velocity modes by `fu[k]` and stress modes by `ft[k]`.
    pub fn scale_modes(&mut self, fu: &[f64], ft: &[f64]) {
        for s in self.u.iter_mut() {
            s.coeffs_mut().iter_mut().zip(fu).for_each(|(c, f)| *c *= f);
        }
        for s in self.tau.iter_mut() {
            s.coeffs_mut().iter_mut().zip(ft).for_each(|(c, f)| *c *= f);
        }
    }

    pub fn scaled_modes(&self, fu: &[f64], ft: &[f64]) -> SpectralState {
        let mut out = self.clone();
        out.scale_modes(fu, ft);
        out
    }

    pub fn vorticity(&self) -> Spectrum {
        curl(&self.u)
    }

    pub fn is_finite(&self) -> bool {
        self.components().all(|s| s.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    pub fn divergence_defect(&self) -> f64 {
        divergence_defect(&self.u)
    }
}

/// Physical-space velocity, stress and their gradients.
pub(crate) struct Kinematics {
    pub u: [Vec<f64>; 2],
    /// `grad_u[i][j] = d_j u_i`
    pub grad_u: [[Vec<f64>; 2]; 2],
    pub tau: [Vec<f64>; 3],
    /// `grad_tau[c][j] = d_j tau_c` for `c` in `(11, 12, 22)`
    pub grad_tau: [[Vec<f64>; 2]; 3],
}

fn phys(s: &Spectrum) -> Vec<f64> {
    s.to_field().into_values()
}

fn forward(grid: &Arc<Grid>, values: Vec<f64>) -> Spectrum {
    ScalarField::from_values(grid, values).expect("grid-sized buffer").spectrum()
}

/// Inverse transforms, two spectra per complex transform.
fn synthesize_all(spectra: &[Spectrum]) -> Vec<Vec<f64>> {
    let pairs: Vec<Vec<Vec<f64>>> = spectra
        .par_chunks(2)
        .map(|c| match c {
            [a, b] => {
                let (x, y) = Spectrum::to_field_pair(a, b);
                vec![x.into_values(), y.into_values()]
            }
            [a] => vec![phys(a)],
            _ => unreachable!(),
        })
        .collect();
    pairs.into_iter().flatten().collect()
}

/// Forward transforms of real fields, two per complex transform, dealiased.
fn analyze_all(grid: &Arc<Grid>, fields: Vec<Vec<f64>>) -> Vec<Spectrum> {
    let fields: Vec<ScalarField> = fields
        .into_iter()
        .map(|v| ScalarField::from_values(grid, v).expect("grid-sized buffer"))
        .collect();
    let pairs: Vec<Vec<Spectrum>> = fields
        .par_chunks(2)
        .map(|c| match c {
            [a, b] => {
                let (x, y) = ScalarField::spectrum_pair(a, b);
                vec![x.dealiased(), y.dealiased()]
            }
            [a] => vec![a.spectrum().dealiased()],
            _ => unreachable!(),
        })
        .collect();
    pairs.into_iter().flatten().collect()
}

impl Kinematics {
    pub fn new(state: &SpectralState) -> Self {
        let mut spectra = Vec::with_capacity(15);
        for s in state.components() {
            spectra.push(s.clone());
            spectra.push(derivative(s, 0));
            spectra.push(derivative(s, 1));
        }
        let out = synthesize_all(&spectra);
        let mut it = out.into_iter();
        let mut next = || it.next().expect("one buffer per job");
        let mut triple = || (next(), [next(), next()]);
        let (u1, gu1) = triple();
        let (u2, gu2) = triple();
        let (t0, gt0) = triple();
        let (t1, gt1) = triple();
        let (t2, gt2) = triple();
        Kinematics {
            u: [u1, u2],
            grad_u: [gu1, gu2],
            tau: [t0, t1, t2],
            grad_tau: [gt0, gt1, gt2],
        }
    }

    fn advect(&self, grad: &[Vec<f64>; 2]) -> Vec<f64> {
        let [u1, u2] = &self.u;
        (0..u1.len()).map(|x| u1[x] * grad[0][x] + u2[x] * grad[1][x]).collect()
    }

    /// `(u.grad) u_i`
    pub fn advect_u(&self, i: usize) -> Vec<f64> {
        self.advect(&self.grad_u[i])
    }

    /// `(u.grad) tau_c`
    pub fn advect_tau(&self, c: usize) -> Vec<f64> {
        self.advect(&self.grad_tau[c])
    }

    pub fn strain_at(&self, x: usize) -> [f64; 3] {
        let g = &self.grad_u;
        [g[0][0][x], 0.5 * (g[0][1][x] + g[1][0][x]), g[1][1][x]]
    }

    /// `Omega_12 = (d2 u1 - d1 u2) / 2`
    pub fn rotation_at(&self, x: usize) -> f64 {
        0.5 * (self.grad_u[0][1][x] - self.grad_u[1][0][x])
    }

    pub fn tau_at(&self, x: usize) -> [f64; 3] {
        [self.tau[0][x], self.tau[1][x], self.tau[2][x]]
    }
}

/// `tau Omega - Omega tau` for `tau = (a, b, c)` and `Omega_12 = w`.
pub fn corotation_pointwise(tau: [f64; 3], w: f64) -> [f64; 3] {
    let [a, b, c] = tau;
    [-2.0 * b * w, w * (a - c), 2.0 * b * w]
}

/// `D tau + tau D` for symmetric `D = (d11, d12, d22)`.
pub fn stretching_pointwise(d: [f64; 3], tau: [f64; 3]) -> [f64; 3] {
    let [d11, d12, d22] = d;
    let [a, b, c] = tau;
    [
        2.0 * (d11 * a + d12 * b),
        d11 * b + d12 * c + a * d12 + b * d22,
        2.0 * (d12 * b + d22 * c),
    ]
}

/// `Du` in spectral space.
pub fn strain_spectral(u: &[Spectrum; 2]) -> [Spectrum; 3] {
    let d11 = derivative(&u[0], 0);
    let d22 = derivative(&u[1], 1);
    let d12 = derivative(&u[0], 1).add(&derivative(&u[1], 0)).scaled(0.5);
    [d11, d12, d22]
}

/// Separately dealiased pieces of the explicit terms, for diagnostics.
pub struct TermBreakdown {
    /// `(u.grad) u`, dealiased, not projected.
    pub advect_u: [Spectrum; 2],
    /// `(u.grad) tau`
    pub advect_tau: [Spectrum; 3],
    /// `tau Omega - Omega tau`
    pub corotation: [Spectrum; 3],
    /// `Du tau + tau Du`
    pub stretching: [Spectrum; 3],
    /// `Du`
    pub strain: [Spectrum; 3],
}

pub fn term_breakdown(state: &SpectralState) -> TermBreakdown {
    let grid = state.grid().clone();
    let kin = Kinematics::new(state);
    let n = grid.len();
    let mut corot = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stretch = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for x in 0..n {
        let t = kin.tau_at(x);
        let c = corotation_pointwise(t, kin.rotation_at(x));
        let s = stretching_pointwise(kin.strain_at(x), t);
        for m in 0..3 {
            corot[m][x] = c[m];
            stretch[m][x] = s[m];
        }
    }
    let [c0, c1, c2] = corot;
    let [s0, s1, s2] = stretch;
    let fields = vec![
        kin.advect_u(0),
        kin.advect_u(1),
        kin.advect_tau(0),
        kin.advect_tau(1),
        kin.advect_tau(2),
        c0,
        c1,
        c2,
        s0,
        s1,
        s2,
    ];
    let mut it = analyze_all(&grid, fields).into_iter();
    let mut next = || it.next().expect("one spectrum per field");
    TermBreakdown {
        advect_u: [next(), next()],
        advect_tau: [next(), next(), next()],
        corotation: [next(), next(), next()],
        stretching: [next(), next(), next()],
        strain: strain_spectral(&state.u),
    }
}

/// All terms except the linear dissipation `nu Lambda^{2 gamma_u} u` and
/// `(beta + mu Lambda^{2 alpha}) tau`: advection, coupling, corotation,
/// the b-term and the `Du` forcing. Products are dealiased and the velocity
/// part is Leray-projected.
pub fn explicit_terms(state: &SpectralState, params: &ModelParams) -> SpectralState {
    let grid = state.grid().clone();
    let kin = Kinematics::new(state);
    let n = grid.len();

    let mut nu_terms = [kin.advect_u(0), kin.advect_u(1)];
    for v in nu_terms.iter_mut() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let mut nt = [kin.advect_tau(0), kin.advect_tau(1), kin.advect_tau(2)];
    for v in nt.iter_mut() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    if params.eta != 0.0 || params.b != 0.0 {
        for x in 0..n {
            let t = kin.tau_at(x);
            let c = corotation_pointwise(t, kin.rotation_at(x));
            let s = if params.b != 0.0 {
                stretching_pointwise(kin.strain_at(x), t)
            } else {
                [0.0; 3]
            };
            for m in 0..3 {
                nt[m][x] += -params.eta * c[m] + params.b * s[m];
            }
        }
    }
    let [a, b] = nu_terms;
    let [c0, c1, c2] = nt;
    let mut spectra = analyze_all(&grid, vec![a, b, c0, c1, c2]);
    let tau_nl: Vec<Spectrum> = spectra.split_off(2);
    let mut u: [Spectrum; 2] = spectra.try_into().expect("two velocity components");
    let div_tau = tensor_divergence(&state.tau);
    for (ui, di) in u.iter_mut().zip(&div_tau) {
        ui.axpy(params.kappa, di);
    }
    leray_in_place(&mut u);

    let strain = strain_spectral(&state.u);
    let mut tau: [Spectrum; 3] = tau_nl.try_into().expect("three stress components");
    for (ti, si) in tau.iter_mut().zip(&strain) {
        ti.axpy(params.gamma_f, si);
    }
    SpectralState { u, tau }
}

/// Per-mode linear decay rates `(velocity, stress)`.
pub fn linear_rates(grid: &Grid, params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let ru = grid.moduli().iter().map(|&m| params.velocity_rate(m)).collect();
    let rt = grid.moduli().iter().map(|&m| params.stress_rate(m)).collect();
    (ru, rt)
}

/// Full time derivative in spectral space: explicit terms minus linear decay.
pub fn rhs_spectral(state: &SpectralState, params: &ModelParams) -> SpectralState {
    let mut out = explicit_terms(state, params);
    let (ru, rt) = linear_rates(state.grid(), params);
    let decay = state.scaled_modes(&ru, &rt);
    out.axpy(-1.0, &decay);
    out
}

fn checked_spectral(state: &State) -> Result<SpectralState> {
    state.ensure_finite()?;
    Ok(SpectralState::from_state(state))
}

fn ensure_finite_output(s: &SpectralState, what: &str) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { field: what.to_string(), index: 0 })
    }
}

/// `P[-(u.grad) u - nu Lambda^{2 gamma_u} u + kappa div tau]`.
pub fn rhs_velocity(state: &State, params: &ModelParams) -> Result<VectorField> {
    let rhs = rhs_spectral(&checked_spectral(state)?, params);
    ensure_finite_output(&rhs, "rhs_velocity")?;
    Ok(VectorField::from_spectra(&rhs.u))
}

/// `-(u.grad) tau - beta tau - eta (tau Omega - Omega tau) + b (Du tau + tau Du)
///  + gamma_f Du - mu Lambda^{2 alpha} tau`.
pub fn rhs_stress(state: &State, params: &ModelParams) -> Result<SymTensorField> {
    let rhs = rhs_spectral(&checked_spectral(state)?, params);
    ensure_finite_output(&rhs, "rhs_stress")?;
    Ok(SymTensorField::from_spectra(&rhs.tau))
}

/// Vorticity tendency computed directly from `omega`:
/// `-(u.grad) omega - nu Lambda^{2 gamma_u} omega + kappa curl div tau`.
pub fn rhs_vorticity_spectral(state: &SpectralState, params: &ModelParams) -> Spectrum {
    let grid = state.grid().clone();
    let omega = curl(&state.u);
    let u = [phys(&state.u[0]), phys(&state.u[1])];
    let gw = [phys(&derivative(&omega, 0)), phys(&derivative(&omega, 1))];
    let adv: Vec<f64> = (0..grid.len()).map(|x| u[0][x] * gw[0][x] + u[1][x] * gw[1][x]).collect();
    let mut out = forward(&grid, adv).dealiased().scaled(-1.0);
    let diss = lambda_power(&omega, 2.0 * params.gamma_u);
    out.axpy(-params.nu, &diss);
    out.axpy(params.kappa, &curl_div(&state.tau));
    out
}

pub fn rhs_vorticity(state: &State, params: &ModelParams) -> Result<ScalarField> {
    let s = checked_spectral(state)?;
    Ok(rhs_vorticity_spectral(&s, params).to_field())
}

/// Pressure from `pi_hat = k_i k_j (kappa tau_ij - (u u)_ij)_hat / |k|^2`,
/// zero mode set to 0.
pub fn pressure_spectral(state: &SpectralState, params: &ModelParams) -> Spectrum {
    let grid = state.grid().clone();
    let u = [phys(&state.u[0]), phys(&state.u[1])];
    let prod = |i: usize, j: usize| -> Spectrum {
        let v: Vec<f64> = u[i].iter().zip(&u[j]).map(|(a, b)| a * b).collect();
        forward(&grid, v).dealiased()
    };
    let uu = [prod(0, 0), prod(0, 1), prod(1, 1)];
    let t = &state.tau;
    Spectrum::from_fn(&grid, |i| {
        let [k1, k2] = grid.derivative_wavevector(i);
        let q = k1 * k1 + k2 * k2;
        if q == 0.0 {
            return Complex64::default();
        }
        let f = |c: usize| t[c].coeffs()[i] * params.kappa - uu[c].coeffs()[i];
        (k1 * k1 * f(0) + 2.0 * k1 * k2 * f(1) + k2 * k2 * f(2)) / q
    })
}

pub fn compute_pressure(state: &State, params: &ModelParams) -> Result<ScalarField> {
    let s = checked_spectral(state)?;
    Ok(pressure_spectral(&s, params).to_field())
}

/// `(Du, Omega)` from spectral gradients.
pub fn strain_and_rotation(u: &VectorField) -> (SymTensorField, SkewTensorField) {
    let s = u.spectra();
    let du = strain_spectral(&s);
    let w12 = derivative(&s[0], 1).sub(&derivative(&s[1], 0)).scaled(0.5);
    (SymTensorField::from_spectra(&du), SkewTensorField::new(w12.to_field()))
}

/// Pointwise `Q = Omega tau - tau Omega + b (Du tau + tau Du)`.
pub fn bilinear_q(
    du: &SymTensorField,
    omega: &SkewTensorField,
    tau: &SymTensorField,
    b: f64,
) -> Result<SymTensorField> {
    if !(-1.0..=1.0).contains(&b) {
        return Err(Error::config(format!("b = {b} outside [-1, 1]")));
    }
    let grid = tau.grid();
    let n = grid.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for x in 0..n {
        let t = [tau.xx.values()[x], tau.xy.values()[x], tau.yy.values()[x]];
        let d = [du.xx.values()[x], du.xy.values()[x], du.yy.values()[x]];
        let c = corotation_pointwise(t, omega.omega12.values()[x]);
        let s = stretching_pointwise(d, t);
        for m in 0..3 {
            out[m][x] = -c[m] + b * s[m];
        }
    }
    let [a, bb, c] = out;
    Ok(SymTensorField::new(
        ScalarField::from_values(grid, a)?,
        ScalarField::from_values(grid, bb)?,
        ScalarField::from_values(grid, c)?,
    ))
}

/// Velocity from a vorticity spectrum (mean-free, divergence-free).
pub fn velocity_from_vorticity(omega: &Spectrum) -> [Spectrum; 2] {
    biot_savart_spectral(omega)
}

#[cfg(test)]
mod tests;
