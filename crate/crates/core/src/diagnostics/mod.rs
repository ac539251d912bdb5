//! Computable ledgers for a run: the weighted energy balance, the two
//! cancellation identities, the combined quantities `Gamma` and `G` with the
//! residual of their transport equation, the commutator `[R, u.grad]`, the
//! positivity inequality for `Lambda^s`, and running time integrals of the
//! monitored norms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    corotation_pointwise, rhs_spectral, strain_spectral, term_breakdown, ModelParams,
    SpectralState, State,
};
use crate::spectral::norms::{lp_of_values, sobolev_of_spectra};
use crate::spectral::ops::{
    curl, derivative, gradient, lambda_power, riesz_spectral, tensor_divergence,
};
use crate::spectral::{
    lp_norm, sobolev_norm, Grid, ScalarField, SkewTensorField, SobolevKind, Spectrum,
    SymTensorField, VectorField,
};
use crate::timestepper::StepResult;

mod monitors;

pub use monitors::{plateau, plateau_of_running_max, PlateauReport};

/// Weighted energy `(|u|^2 / kappa + |tau|^2 / gamma_f) / 2`.
pub fn energy(state: &State, params: &ModelParams) -> f64 {
    let (wu, wt) = params.energy_weights();
    let da = state.grid().cell_area();
    let sq = |f: &ScalarField| f.values().iter().map(|v| v * v).sum::<f64>() * da;
    let ku = sq(&state.u.components[0]) + sq(&state.u.components[1]);
    let kt = sq(&state.tau.xx) + 2.0 * sq(&state.tau.xy) + sq(&state.tau.yy);
    0.5 * (wu * ku + wt * kt)
}

/// Running energy budget: `current + dissipated - initial` should vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub initial_energy: f64,
    pub dissipation_integral: f64,
    pub current_energy: f64,
}

impl EnergyLedger {
    pub fn new(initial_energy: f64) -> Self {
        EnergyLedger { initial_energy, dissipation_integral: 0.0, current_energy: initial_energy }
    }

    pub fn residual(&self) -> f64 {
        self.current_energy + self.dissipation_integral - self.initial_energy
    }

    /// `|residual| / initial_energy`, or `|residual|` for zero initial energy.
    pub fn defect(&self) -> f64 {
        if self.initial_energy > 0.0 {
            self.residual().abs() / self.initial_energy
        } else {
            self.residual().abs()
        }
    }

    pub fn update(&mut self, current_energy: f64, dissipation_increment: f64) {
        self.current_energy = current_energy;
        self.dissipation_integral += dissipation_increment;
    }
}

/// Largest relative balance defect over a history of ledger snapshots.
pub fn energy_balance(history: &[EnergyLedger]) -> f64 {
    history.iter().map(EnergyLedger::defect).fold(0.0, f64::max)
}

fn quadrature(grid: &Grid, values: impl Iterator<Item = f64>) -> f64 {
    values.sum::<f64>() * grid.cell_area()
}

fn l2(f: &ScalarField) -> f64 {
    quadrature(f.grid(), f.values().iter().map(|v| v * v)).sqrt()
}

fn tensor_l2(t: &SymTensorField) -> f64 {
    (l2(&t.xx).powi(2) + 2.0 * l2(&t.xy).powi(2) + l2(&t.yy).powi(2)).sqrt()
}

/// `int (div tau).u + int Du : tau`, normalized by `|u|_2 |tau|_2`.
pub fn cancellation_duality(u: &VectorField, tau: &SymTensorField) -> f64 {
    let nu = (l2(&u.components[0]).powi(2) + l2(&u.components[1]).powi(2)).sqrt();
    let nt = tensor_l2(tau);
    if nu == 0.0 || nt == 0.0 {
        return 0.0;
    }
    let us = u.spectra();
    let ts = tau.spectra();
    let div = VectorField::from_spectra(&tensor_divergence(&ts));
    let du = SymTensorField::from_spectra(&strain_spectral(&us));
    let grid = u.grid();
    let (d, uu) = (&div.components, &u.components);
    let sum = quadrature(
        grid,
        (0..grid.len()).map(|x| {
            d[0].values()[x] * uu[0].values()[x]
                + d[1].values()[x] * uu[1].values()[x]
                + du.xx.values()[x] * tau.xx.values()[x]
                + 2.0 * du.xy.values()[x] * tau.xy.values()[x]
                + du.yy.values()[x] * tau.yy.values()[x]
        }),
    );
    sum / (nu * nt)
}

/// `int (tau Omega - Omega tau) : |tau|^{r-2} tau`, normalized by
/// `|Omega|_2 |tau|_{2(r-1)}^{r-1}`.
pub fn cancellation_corotation(tau: &SymTensorField, omega: &SkewTensorField, r: f64) -> Result<f64> {
    if !(r >= 2.0 && r.is_finite()) {
        return Err(Error::config(format!("corotation cancellation needs r >= 2, got {r}")));
    }
    let grid = tau.grid();
    let mag = tau.frobenius();
    let w = omega.omega12.values();
    let sum = quadrature(
        grid,
        (0..grid.len()).map(|x| {
            let t = [tau.xx.values()[x], tau.xy.values()[x], tau.yy.values()[x]];
            let c = corotation_pointwise(t, w[x]);
            let weight = mag.values()[x].powf(r - 2.0);
            weight * (c[0] * t[0] + 2.0 * c[1] * t[1] + c[2] * t[2])
        }),
    );
    // |Omega|_F^2 = 2 w^2
    let nw = (2.0f64).sqrt() * l2(&omega.omega12);
    let nt = lp_of_values(mag.values(), 2.0 * (r - 1.0), grid.cell_area())?.powf(r - 1.0);
    if nw == 0.0 || nt == 0.0 {
        return Ok(0.0);
    }
    Ok(sum / (nw * nt))
}

/// `omega - c Lambda^{-2 gamma} curl div tau` with `c = kappa / nu`.
pub fn combined_spectral(state: &SpectralState, params: &ModelParams, gamma: f64) -> Spectrum {
    let mut g = curl(&state.u);
    g.axpy(-params.combined_weight(), &riesz_spectral(&state.tau, gamma));
    g
}

/// `Gamma = omega - c R tau`.
pub fn compute_gamma(state: &State, params: &ModelParams) -> Result<ScalarField> {
    state.ensure_finite()?;
    Ok(combined_spectral(&SpectralState::from_state_raw(state), params, 1.0).to_field())
}

/// `G = omega - c R_gamma tau`, `gamma >= 1`.
pub fn compute_g(state: &State, params: &ModelParams, gamma: f64) -> Result<ScalarField> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::config(format!("G needs gamma >= 1, got {gamma}")));
    }
    state.ensure_finite()?;
    Ok(combined_spectral(&SpectralState::from_state_raw(state), params, gamma).to_field())
}

/// Which singular operator a commutator uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Riesz {
    /// `R = (-Delta)^{-1} curl div`
    R,
    /// `R_gamma = Lambda^{-2 gamma} curl div`
    Gamma(f64),
}

impl Riesz {
    fn exponent(self) -> f64 {
        match self {
            Riesz::R => 1.0,
            Riesz::Gamma(g) => g,
        }
    }
}

fn advect_masked(grid: &Arc<Grid>, u: &[Vec<f64>; 2], f: &Spectrum) -> Spectrum {
    let g = gradient(f);
    let (a, b) = Spectrum::to_field_pair(&g[0], &g[1]);
    let values: Vec<f64> = (0..grid.len())
        .map(|x| u[0][x] * a.values()[x] + u[1][x] * b.values()[x])
        .collect();
    ScalarField::from_values(grid, values).expect("grid-sized buffer").spectrum().dealiased()
}

/// `R (u.grad tau) - u.grad (R tau)`, every product dealiased.
pub fn commutator_spectral(u: &[Spectrum; 2], tau: &[Spectrum; 3], which: Riesz) -> Spectrum {
    let grid = u[0].grid().clone();
    let (a, b) = Spectrum::to_field_pair(&u[0], &u[1]);
    let uv = [a.into_values(), b.into_values()];
    let adv: [Spectrum; 3] = std::array::from_fn(|c| advect_masked(&grid, &uv, &tau[c]));
    let r_adv = riesz_spectral(&adv, which.exponent());
    let r_tau = riesz_spectral(tau, which.exponent());
    r_adv.sub(&advect_masked(&grid, &uv, &r_tau))
}

pub fn commutator_r(u: &VectorField, tau: &SymTensorField, which: Riesz) -> ScalarField {
    commutator_spectral(&u.spectra(), &tau.spectra(), which).to_field()
}

/// `|[R, u.grad] tau|_{H^{(r-2)/(2r)}} / (|grad u|_2 |tau|_r + |u|_2 |tau|_2)`.
/// The constant of the estimate is measured here, never assumed.
pub fn commutator_estimate_ratio(u: &VectorField, tau: &SymTensorField, r: f64) -> Result<f64> {
    let c = commutator_r(u, tau, Riesz::R);
    let lhs = sobolev_norm(&c, (r - 2.0) / (2.0 * r), SobolevKind::Inhomogeneous)?;
    let us = u.spectra();
    let grad: Vec<(f64, Spectrum)> =
        us.iter().flat_map(|s| [(1.0, derivative(s, 0)), (1.0, derivative(s, 1))]).collect();
    let grad_refs: Vec<(f64, &Spectrum)> = grad.iter().map(|(w, s)| (*w, s)).collect();
    let grad_u = sobolev_of_spectra(&grad_refs, 0.0, SobolevKind::Homogeneous);
    let rhs = grad_u * lp_norm(tau, r)? + lp_norm(u, 2.0)? * lp_norm(tau, 2.0)?;
    if rhs == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs / rhs)
}

/// Which terms enter the right side of the combined-quantity equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualVariant {
    Full,
    /// Drops the commutator; the residual must then become large.
    WithoutCommutator,
}

/// Residual of the transport equation for `X = omega - c R_{gamma_u} tau`:
///
/// ```text
/// d_t X + u.grad X + nu Lambda^{2 gamma_u} X
///   = c ( R_g(beta tau + eta (tau Omega - Omega tau) - b (Du tau + tau Du)
///          + mu Lambda^{2 alpha} tau - gamma_f Du) + [R_g, u.grad] tau )
/// ```
///
/// `d_t X` comes from the model right-hand sides; the right side is assembled
/// independently. Returns `|lhs - rhs|_2 / |rhs|_2` (0 when both vanish).
pub fn gamma_equation_residual(state: &State, params: &ModelParams) -> Result<f64> {
    gamma_equation_residual_variant(state, params, ResidualVariant::Full)
}

pub fn gamma_equation_residual_variant(
    state: &State,
    params: &ModelParams,
    variant: ResidualVariant,
) -> Result<f64> {
    if !(params.nu > 0.0) {
        return Err(Error::config("combined-quantity equation needs nu > 0"));
    }
    state.ensure_finite()?;
    let s = SpectralState::from_state(state);
    let grid = s.grid().clone();
    let g = params.gamma_u;
    let c = params.combined_weight();

    let rhs = rhs_spectral(&s, params);
    let mut lhs = curl(&rhs.u);
    lhs.axpy(-c, &riesz_spectral(&rhs.tau, g));
    let x = combined_spectral(&s, params, g);
    let (a, b) = Spectrum::to_field_pair(&s.u[0], &s.u[1]);
    let uv = [a.into_values(), b.into_values()];
    lhs.axpy(1.0, &advect_masked(&grid, &uv, &x));
    lhs.axpy(params.nu, &lambda_power(&x, 2.0 * g));

    let terms = term_breakdown(&s);
    let source: [Spectrum; 3] = std::array::from_fn(|m| {
        let mut v = s.tau[m].scaled(params.beta);
        v.axpy(params.eta, &terms.corotation[m]);
        v.axpy(-params.b, &terms.stretching[m]);
        if params.alpha > 0.0 {
            v.axpy(params.mu, &lambda_power(&s.tau[m], 2.0 * params.alpha));
        }
        v.axpy(-params.gamma_f, &terms.strain[m]);
        v
    });
    let mut right = riesz_spectral(&source, g);
    if variant == ResidualVariant::Full {
        right.axpy(1.0, &commutator_spectral(&s.u, &s.tau, Riesz::Gamma(g)));
    }
    let right = right.scaled(c);
    let diff = lhs.sub(&right).power().sqrt();
    let scale = right.power().sqrt();
    if scale == 0.0 {
        return Ok(diff);
    }
    Ok(diff / scale)
}

/// Both sides of `int |h|^{p-2} h Lambda^s h >= (2/p) int (Lambda^{s/2} |h|^{p/2})^2`.
pub fn positivity_check(h: &ScalarField, p: f64, s: f64) -> Result<(f64, f64)> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::config(format!("positivity check needs p >= 2, got {p}")));
    }
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::config(format!("positivity check needs 0 <= s <= 2, got {s}")));
    }
    h.ensure_finite("h")?;
    let grid = h.grid();
    let ls = lambda_power(&h.spectrum(), s).to_field();
    let lhs = quadrature(
        grid,
        h.values().iter().zip(ls.values()).map(|(v, l)| v.abs().powf(p - 2.0) * v * l),
    );
    let g = h.map(|v| v.abs().powf(0.5 * p)).spectrum();
    let rhs = 2.0 / p * sobolev_of_spectra(&[(1.0, &g)], 0.5 * s, SobolevKind::Homogeneous).powi(2);
    Ok((lhs, rhs))
}

/// Which norms and time integrals a run records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSpec {
    /// Exponents `r` for `|tau|_r`, `|omega|_r`, the corotation cancellation
    /// and, for `r > 2`, the integral of `|omega|_r^{2r/(r-2)}`.
    #[serde(default = "default_r_list")]
    pub r_list: Vec<f64>,
    /// Sobolev indices for `|u|_{H^s}` and `|tau|_{H^s}`.
    #[serde(default = "default_sobolev")]
    pub sobolev_s: Vec<f64>,
    /// `(p, q)` for the integrals of `|grad u|_p^q` and `|grad Gamma|_p^q`.
    #[serde(default = "default_pq")]
    pub pq_pairs: Vec<[f64; 2]>,
}

fn default_r_list() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_sobolev() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_pq() -> Vec<[f64; 2]> {
    vec![[4.0, 3.0]]
}

impl Default for MonitorSpec {
    fn default() -> Self {
        MonitorSpec { r_list: default_r_list(), sobolev_s: default_sobolev(), pq_pairs: default_pq() }
    }
}

impl MonitorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r_list.iter().any(|&r| !(r >= 2.0 && r.is_finite())) {
            return Err(Error::config("every r must be finite and >= 2"));
        }
        if self.sobolev_s.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::config("Sobolev indices must be finite and >= 0"));
        }
        if self.pq_pairs.iter().flatten().any(|&v| !(v > 2.0 && v.is_finite())) {
            return Err(Error::config("p and q must be finite and > 2"));
        }
        Ok(())
    }

    /// Names of the running integrals, in ledger order.
    pub fn accumulator_names(&self) -> Vec<String> {
        let mut names = vec!["int_dissipation".to_string()];
        names.extend(self.integrand_names().into_iter().map(|n| format!("int_{n}")));
        names
    }

    fn integrand_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for &r in self.r_list.iter().filter(|&&r| r > 2.0) {
            names.push(format!("omega_L{r}_pow{}", fmt_num(2.0 * r / (r - 2.0))));
        }
        names.push("grad_Gamma_L2_sq".to_string());
        for [p, q] in &self.pq_pairs {
            names.push(format!("grad_u_L{p}_pow{q}"));
        }
        for [p, q] in &self.pq_pairs {
            names.push(format!("grad_Gamma_L{p}_pow{q}"));
        }
        names.push("lambda_gamma_G_L2_sq".to_string());
        names
    }
}

fn fmt_num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}

/// One ledger row.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub norms: Vec<(String, f64)>,
    pub residuals: Vec<(String, f64)>,
    pub accumulators: Vec<(String, f64)>,
}

impl DiagnosticsRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.norms
            .iter()
            .chain(&self.residuals)
            .chain(&self.accumulators)
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn columns(&self) -> Vec<&str> {
        self.norms
            .iter()
            .chain(&self.residuals)
            .chain(&self.accumulators)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.norms
            .iter()
            .chain(&self.residuals)
            .chain(&self.accumulators)
            .map(|(_, v)| *v)
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

fn spectral_l2(s: &[&Spectrum], symbol: impl Fn(usize) -> f64) -> f64 {
    let grid = s[0].grid();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let w = symbol(i);
        if w != 0.0 {
            acc += w * s.iter().map(|x| x.coeffs()[i].norm_sqr()).sum::<f64>();
        }
    }
    (acc * grid.area()).sqrt()
}

fn gradient_magnitude(f: &Spectrum) -> ScalarField {
    let g = gradient(f);
    let (a, b) = Spectrum::to_field_pair(&g[0], &g[1]);
    a.zip_map(&b, |x, y| x.hypot(y))
}

fn velocity_gradient_magnitude(u: &[Spectrum; 2]) -> ScalarField {
    let (a, b) = Spectrum::to_field_pair(&derivative(&u[0], 0), &derivative(&u[0], 1));
    let (c, d) = Spectrum::to_field_pair(&derivative(&u[1], 0), &derivative(&u[1], 1));
    let ab = a.zip_map(&b, |x, y| x * x + y * y);
    let cd = c.zip_map(&d, |x, y| x * x + y * y);
    ab.zip_map(&cd, |x, y| (x + y).sqrt())
}

/// Integrands of the running integrals at one state.
pub fn monitor_integrands(state: &State, params: &ModelParams, spec: &MonitorSpec) -> Result<Vec<f64>> {
    let s = SpectralState::from_state_raw(state);
    let grid = s.grid().clone();
    let da = grid.cell_area();
    let mut out = Vec::new();
    let omega = curl(&s.u).to_field();
    for &r in spec.r_list.iter().filter(|&&r| r > 2.0) {
        out.push(lp_of_values(omega.values(), r, da)?.powf(2.0 * r / (r - 2.0)));
    }
    let gamma = combined_spectral(&s, params, 1.0);
    let moduli = grid.moduli().to_vec();
    out.push(spectral_l2(&[&gamma], |i| moduli[i] * moduli[i]).powi(2));
    let grad_u = velocity_gradient_magnitude(&s.u);
    for [p, q] in &spec.pq_pairs {
        out.push(lp_of_values(grad_u.values(), *p, da)?.powf(*q));
    }
    let grad_gamma = gradient_magnitude(&gamma);
    for [p, q] in &spec.pq_pairs {
        out.push(lp_of_values(grad_gamma.values(), *p, da)?.powf(*q));
    }
    let g = combined_spectral(&s, params, params.gamma_u);
    let gu = params.gamma_u;
    out.push(spectral_l2(&[&g], |i| if moduli[i] > 0.0 { moduli[i].powf(2.0 * gu) } else { 0.0 }).powi(2));
    Ok(out)
}

/// Norm columns of a ledger row.
pub fn state_norms(state: &State, params: &ModelParams, spec: &MonitorSpec) -> Result<Vec<(String, f64)>> {
    let s = SpectralState::from_state_raw(state);
    let grid = s.grid().clone();
    let moduli = grid.moduli().to_vec();
    let sq = |i: usize| moduli[i] * moduli[i];
    let one = |_: usize| 1.0;
    let [t0, t1, t2] = &s.tau;
    let tau_l2 = |symbol: &dyn Fn(usize) -> f64| {
        let a = spectral_l2(&[t0, t2], symbol);
        let b = spectral_l2(&[t1], symbol);
        (a * a + 2.0 * b * b).sqrt()
    };
    let alpha = params.alpha;
    let omega_s = curl(&s.u);
    let omega = omega_s.to_field();
    let gamma = combined_spectral(&s, params, 1.0);
    let g = combined_spectral(&s, params, params.gamma_u);
    let mut v = vec![
        ("energy".to_string(), energy(state, params)),
        ("u_L2".to_string(), spectral_l2(&[&s.u[0], &s.u[1]], one)),
        ("tau_L2".to_string(), tau_l2(&one)),
        ("grad_u_L2".to_string(), spectral_l2(&[&s.u[0], &s.u[1]], sq)),
        (
            "lambda_alpha_tau_L2".to_string(),
            tau_l2(&|i| if alpha == 0.0 { 1.0 } else { moduli[i].powf(2.0 * alpha) }),
        ),
        ("omega_L2".to_string(), spectral_l2(&[&omega_s], one)),
        ("omega_Linf".to_string(), omega.max_abs()),
        ("grad_tau_L2".to_string(), tau_l2(&sq)),
        ("Gamma_L2".to_string(), spectral_l2(&[&gamma], one)),
        ("grad_Gamma_L2".to_string(), spectral_l2(&[&gamma], sq)),
        ("G_L2".to_string(), spectral_l2(&[&g], one)),
    ];
    // the L2 norms are already in the fixed block
    for &r in spec.r_list.iter().filter(|&&r| r != 2.0) {
        v.push((format!("tau_L{r}"), lp_norm(&state.tau, r)?));
        v.push((format!("omega_L{r}"), lp_of_values(omega.values(), r, grid.cell_area())?));
    }
    v.push(("tau_Linf".to_string(), state.tau.frobenius().max_abs()));
    for &sv in &spec.sobolev_s {
        v.push((format!("u_H{sv}"), sobolev_norm(&state.u, sv, SobolevKind::Inhomogeneous)?));
        v.push((format!("tau_H{sv}"), sobolev_norm(&state.tau, sv, SobolevKind::Inhomogeneous)?));
    }
    v.push(("div_u_max".to_string(), crate::spectral::ops::divergence(&s.u).to_field().max_abs()));
    Ok(v)
}

/// Identity residuals of a ledger row.
pub fn state_residuals(state: &State, params: &ModelParams, spec: &MonitorSpec) -> Result<Vec<(String, f64)>> {
    let s = SpectralState::from_state_raw(state);
    let w12 = derivative(&s.u[0], 1).sub(&derivative(&s.u[1], 0)).scaled(0.5).to_field();
    let omega = SkewTensorField::new(w12);
    let mut v = vec![("cancel_duality".to_string(), cancellation_duality(&state.u, &state.tau))];
    for &r in &spec.r_list {
        v.push((format!("cancel_corotation_r{r}"), cancellation_corotation(&state.tau, &omega, r)?));
    }
    if params.nu > 0.0 {
        v.push(("gamma_residual".to_string(), gamma_equation_residual(state, params)?));
    }
    Ok(v)
}

/// Saved part of a [`Tracker`], enough to resume a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerState {
    pub energy: EnergyLedger,
    pub accumulators: Vec<f64>,
    pub prev_time: f64,
    pub prev_integrands: Vec<f64>,
}

/// Owns the energy ledger and the running integrals of one run. Call
/// [`Tracker::advance`] after every step and [`Tracker::record`] whenever a
/// row is wanted. Integrals use the trapezoid rule per step, except the
/// dissipation which comes from the stepper.
pub struct Tracker {
    params: ModelParams,
    spec: MonitorSpec,
    saved: TrackerState,
}

impl Tracker {
    pub fn new(initial: &State, params: &ModelParams, spec: &MonitorSpec) -> Result<Self> {
        spec.validate()?;
        let integrands = monitor_integrands(initial, params, spec)?;
        Ok(Tracker {
            params: *params,
            spec: spec.clone(),
            saved: TrackerState {
                energy: EnergyLedger::new(energy(initial, params)),
                accumulators: vec![0.0; integrands.len() + 1],
                prev_time: initial.time,
                prev_integrands: integrands,
            },
        })
    }

    pub fn resume(params: &ModelParams, spec: &MonitorSpec, saved: TrackerState) -> Result<Self> {
        spec.validate()?;
        if saved.accumulators.len() != spec.accumulator_names().len() {
            return Err(Error::config("saved tracker does not match the monitor set"));
        }
        Ok(Tracker { params: *params, spec: spec.clone(), saved })
    }

    pub fn saved(&self) -> &TrackerState {
        &self.saved
    }

    pub fn energy(&self) -> &EnergyLedger {
        &self.saved.energy
    }

    pub fn advance(&mut self, result: &StepResult) -> Result<()> {
        let st = &mut self.saved;
        st.energy.update(energy(&result.state, &self.params), result.dissipation);
        st.accumulators[0] += result.dissipation;
        let now = monitor_integrands(&result.state, &self.params, &self.spec)?;
        let h = result.state.time - st.prev_time;
        for (k, (a, b)) in st.prev_integrands.iter().zip(&now).enumerate() {
            st.accumulators[k + 1] += 0.5 * h * (a + b);
        }
        st.prev_integrands = now;
        st.prev_time = result.state.time;
        Ok(())
    }

    pub fn record(&self, step: usize, state: &State) -> Result<DiagnosticsRecord> {
        let norms = state_norms(state, &self.params, &self.spec)?;
        let mut residuals = vec![("energy_defect".to_string(), self.saved.energy.defect())];
        residuals.extend(state_residuals(state, &self.params, &self.spec)?);
        let accumulators = self
            .spec
            .accumulator_names()
            .into_iter()
            .zip(self.saved.accumulators.iter().copied())
            .collect();
        Ok(DiagnosticsRecord { step, time: state.time, norms, residuals, accumulators })
    }
}
