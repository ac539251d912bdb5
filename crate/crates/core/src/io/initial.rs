use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Result;
use crate::model::{strain_and_rotation, State};
use crate::spectral::random::{bandlimited_spectrum, rng, solenoidal_spectra};
use crate::spectral::{Grid, ScalarField, Spectrum, SymTensorField, VectorField};

use super::config::{InitialKind, RunConfig, TauKind};

fn rms(fields: &[&ScalarField]) -> f64 {
    let n = fields[0].values().len() as f64;
    let sum: f64 = fields.iter().map(|f| f.values().iter().map(|v| v * v).sum::<f64>()).sum();
    (sum / n).sqrt()
}

fn scale(f: &ScalarField, a: f64) -> ScalarField {
    f.map(|v| v * a)
}

/// Keeps the modes with `kmin <= |j| <= kmax` (integer wavenumbers).
fn band_pass(s: &Spectrum, kmin: f64, kmax: f64) -> Spectrum {
    let grid = s.grid().clone();
    s.map_modes(|i| {
        let (a, b) = grid.mode_index(i);
        let r = ((a * a + b * b) as f64).sqrt();
        if r >= kmin && r <= kmax {
            s.coeffs()[i]
        } else {
            Default::default()
        }
    })
}

/// Builds the initial state of a run. Random data use one ChaCha stream per
/// seed: velocity first, then the stress.
pub fn make_initial(cfg: &RunConfig) -> Result<State> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let ic = &cfg.initial_condition;
    let [kmin, kmax] = ic.band.map(|k| k as f64);
    let mut stream = rng(ic.seed);
    let k0 = 2.0 * PI / grid.length();
    let u = match ic.kind {
        InitialKind::TaylorGreen => {
            let a = ic.amplitude;
            VectorField::new(
                ScalarField::from_fn(&grid, |x, y| a * (k0 * x).sin() * (k0 * y).cos()),
                ScalarField::from_fn(&grid, |x, y| -a * (k0 * x).cos() * (k0 * y).sin()),
            )
        }
        InitialKind::RandomBandlimited => {
            let u = VectorField::from_spectra(&solenoidal_spectra(&grid, &mut stream, kmin, kmax));
            let r = rms(&[&u.components[0], &u.components[1]]);
            let a = if r > 0.0 { ic.amplitude / r } else { 0.0 };
            VectorField::new(scale(&u.components[0], a), scale(&u.components[1], a))
        }
        InitialKind::ShearLayer => shear_layer(&grid, ic.amplitude, kmin, kmax),
    };
    let tau = match ic.tau_kind {
        TauKind::Zero => SymTensorField::zeros(&grid),
        TauKind::RandomSymmetric => {
            let mut next = || bandlimited_spectrum(&grid, &mut stream, kmin, kmax).to_field();
            let (a, b, c) = (next(), next(), next());
            // Frobenius RMS counts the off-diagonal entry twice
            let r = (rms(&[&a, &c]).powi(2) + 2.0 * rms(&[&b]).powi(2)).sqrt();
            let s = if r > 0.0 { ic.tau_scale() / r } else { 0.0 };
            SymTensorField::new(scale(&a, s), scale(&b, s), scale(&c, s))
        }
        TauKind::FromDu => {
            let du = strain_and_rotation(&u).0;
            let s = ic.tau_scale();
            SymTensorField::new(scale(&du.xx, s), scale(&du.xy, s), scale(&du.yy, s))
        }
    };
    let state = State::new(0.0, u, tau);
    state.ensure_finite()?;
    Ok(state)
}

/// Double shear layer `u1 = tanh` profile band-passed to `[kmin, kmax]`,
/// plus a small transverse wave at `kmin` that seeds roll-up.
fn shear_layer(grid: &Arc<Grid>, amplitude: f64, kmin: f64, kmax: f64) -> VectorField {
    let l = grid.length();
    let width = l / (2.0 * PI * kmax.max(1.0)) * 2.0;
    let profile = ScalarField::from_fn(grid, |_, y| {
        if y <= 0.5 * l {
            ((y - 0.25 * l) / width).tanh()
        } else {
            ((0.75 * l - y) / width).tanh()
        }
    });
    let u1 = band_pass(&profile.spectrum(), kmin, kmax).to_field();
    let peak = u1.max_abs();
    let u1 = if peak > 0.0 { scale(&u1, amplitude / peak) } else { u1 };
    let k = 2.0 * PI * kmin / l;
    let u2 = ScalarField::from_fn(grid, |x, _| 0.05 * amplitude * (k * x).sin());
    VectorField::new(u1, u2)
}
