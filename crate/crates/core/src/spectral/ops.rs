//! Fourier multipliers and the differential/singular-integral operators built
//! from them. Odd symbols use the derivative wavevector (Nyquist zeroed);
//! powers of `|k|` use the full modulus.

use std::sync::Arc;

use num_complex::Complex64;

use super::field::{ScalarField, Spectrum, SymTensorField, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// What a multiplier does to the `k = 0` mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroMode {
    Zero,
    Identity,
}

/// Wavevector data handed to symbol closures.
#[derive(Clone, Copy, Debug)]
pub struct Wavevector {
    /// Derivative wavevector (Nyquist components zeroed).
    pub k: [f64; 2],
    /// Full modulus `|k|`.
    pub modulus: f64,
}

/// A precomputed Fourier multiplier on one grid.
#[derive(Clone, Debug)]
pub struct Multiplier {
    grid: Arc<Grid>,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    pub fn from_symbol(
        grid: &Arc<Grid>,
        zero_mode: ZeroMode,
        f: impl Fn(Wavevector) -> Complex64,
    ) -> Self {
        let symbol = (0..grid.len())
            .map(|i| {
                if i == 0 {
                    match zero_mode {
                        ZeroMode::Zero => Complex64::default(),
                        ZeroMode::Identity => Complex64::new(1.0, 0.0),
                    }
                } else {
                    f(Wavevector { k: grid.derivative_wavevector(i), modulus: grid.modulus(i) })
                }
            })
            .collect();
        Multiplier { grid: grid.clone(), symbol }
    }

    /// `Lambda^s = (-Delta)^{s/2}`, symbol `|k|^s`.
    pub fn fractional_laplacian(grid: &Arc<Grid>, s: f64) -> Self {
        let zero = if s == 0.0 { ZeroMode::Identity } else { ZeroMode::Zero };
        Multiplier::from_symbol(grid, zero, |w| Complex64::new(w.modulus.powf(s), 0.0))
    }

    /// `Lambda^{-s}` with the zero mode sent to 0.
    pub fn inverse_fractional_laplacian(grid: &Arc<Grid>, s: f64) -> Self {
        Multiplier::from_symbol(grid, ZeroMode::Zero, |w| Complex64::new(w.modulus.powf(-s), 0.0))
    }

    /// `d/dx_axis`, symbol `i k_axis`.
    pub fn derivative(grid: &Arc<Grid>, axis: usize) -> Self {
        Multiplier::from_symbol(grid, ZeroMode::Zero, |w| I * w.k[axis])
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn apply(&self, f: &Spectrum) -> Spectrum {
        f.map_modes(|i| self.symbol[i])
    }

    pub fn apply_field(&self, f: &ScalarField) -> ScalarField {
        self.apply(&f.spectrum()).to_field()
    }

    /// Product of symbols, i.e. `self` after `other`.
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        let symbol = self.symbol.iter().zip(&other.symbol).map(|(a, b)| a * b).collect();
        Multiplier { grid: self.grid.clone(), symbol }
    }
}

pub fn derivative(f: &Spectrum, axis: usize) -> Spectrum {
    let grid = f.grid().clone();
    let n = grid.n();
    let k = grid.derivative_wavenumbers();
    let mut out = f.clone();
    for (i2, row) in out.coeffs_mut().chunks_mut(n).enumerate() {
        for (i1, c) in row.iter_mut().enumerate() {
            let kk = if axis == 0 { k[i1] } else { k[i2] };
            *c = Complex64::new(-kk * c.im, kk * c.re);
        }
    }
    out
}

/// `Lambda^s f` on spectra.
pub fn lambda_power(f: &Spectrum, s: f64) -> Spectrum {
    if s == 0.0 {
        return f.clone();
    }
    let grid = f.grid().clone();
    f.map_modes(|i| if i == 0 { Complex64::default() } else { grid.modulus(i).powf(s).into() })
}

/// `(-Delta)^{s/2} f` with symbol `|k|^s`. The zero mode is annihilated for
/// `s > 0` and kept for `s = 0`.
pub fn fractional_laplacian(f: &ScalarField, s: f64) -> Result<ScalarField> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::config(format!("fractional exponent {s} must be >= 0")));
    }
    f.ensure_finite("fractional_laplacian input")?;
    Ok(lambda_power(&f.spectrum(), s).to_field())
}

/// `-Delta f` via the `|k|^2` symbol.
pub fn laplacian(f: &Spectrum) -> Spectrum {
    let grid = f.grid().clone();
    f.map_modes(|i| {
        let [k1, k2] = grid.wavevector(i);
        Complex64::new(-(k1 * k1 + k2 * k2), 0.0)
    })
}

/// `curl div tau` in spectral space for `tau = (t11, t12, t22)`:
/// `-( (k1^2 - k2^2) t12 + k1 k2 (t22 - t11) )`.
pub fn curl_div(tau: &[Spectrum; 3]) -> Spectrum {
    let grid = tau[0].grid().clone();
    let (a, b, c) = (tau[0].coeffs(), tau[1].coeffs(), tau[2].coeffs());
    Spectrum::from_fn(&grid, |i| {
        let [k1, k2] = grid.derivative_wavevector(i);
        -((k1 * k1 - k2 * k2) * b[i] + k1 * k2 * (c[i] - a[i]))
    })
}

/// `Lambda^{-2 exponent} curl div tau` with the zero mode set to 0. An
/// exponent of 1 is the operator `R = (-Delta)^{-1} curl div`.
pub fn riesz_spectral(tau: &[Spectrum; 3], exponent: f64) -> Spectrum {
    let grid = tau[0].grid().clone();
    let cd = curl_div(tau);
    cd.map_modes(|i| {
        if i == 0 {
            Complex64::default()
        } else {
            grid.modulus(i).powf(-2.0 * exponent).into()
        }
    })
}

pub fn riesz_r(tau: &SymTensorField) -> Result<ScalarField> {
    tau.ensure_finite("tau")?;
    Ok(riesz_spectral(&tau.spectra(), 1.0).to_field())
}

/// `R_gamma = Lambda^{-2 gamma} curl div`, defined for `gamma > 1`.
pub fn riesz_r_gamma(tau: &SymTensorField, gamma: f64) -> Result<ScalarField> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::config(format!("R_gamma needs gamma > 1, got {gamma}")));
    }
    tau.ensure_finite("tau")?;
    Ok(riesz_spectral(&tau.spectra(), gamma).to_field())
}

/// `curl u = d1 u2 - d2 u1`.
pub fn curl(u: &[Spectrum; 2]) -> Spectrum {
    let grid = u[0].grid().clone();
    let (a, b) = (u[0].coeffs(), u[1].coeffs());
    Spectrum::from_fn(&grid, |i| {
        let [k1, k2] = grid.derivative_wavevector(i);
        I * (k1 * b[i] - k2 * a[i])
    })
}

pub fn divergence(u: &[Spectrum; 2]) -> Spectrum {
    let grid = u[0].grid().clone();
    let (a, b) = (u[0].coeffs(), u[1].coeffs());
    Spectrum::from_fn(&grid, |i| {
        let [k1, k2] = grid.derivative_wavevector(i);
        I * (k1 * a[i] + k2 * b[i])
    })
}

/// `(div tau)_j = d_i tau_ij`.
pub fn tensor_divergence(tau: &[Spectrum; 3]) -> [Spectrum; 2] {
    let grid = tau[0].grid().clone();
    let (a, b, c) = (tau[0].coeffs(), tau[1].coeffs(), tau[2].coeffs());
    let first = Spectrum::from_fn(&grid, |i| {
        let [k1, k2] = grid.derivative_wavevector(i);
        I * (k1 * a[i] + k2 * b[i])
    });
    let second = Spectrum::from_fn(&grid, |i| {
        let [k1, k2] = grid.derivative_wavevector(i);
        I * (k1 * b[i] + k2 * c[i])
    });
    [first, second]
}

pub fn gradient(f: &Spectrum) -> [Spectrum; 2] {
    [derivative(f, 0), derivative(f, 1)]
}

/// Velocity with `curl u = omega`, `div u = 0`:
/// `u = i (k2, -k1) omega / |k|^2`.
pub fn biot_savart_spectral(omega: &Spectrum) -> [Spectrum; 2] {
    let grid = omega.grid().clone();
    let w = omega.coeffs();
    let mut u1 = Spectrum::zeros(&grid);
    let mut u2 = Spectrum::zeros(&grid);
    for i in 1..grid.len() {
        let [k1, k2] = grid.derivative_wavevector(i);
        let k2sum = k1 * k1 + k2 * k2;
        if k2sum > 0.0 {
            u1.coeffs_mut()[i] = I * k2 * w[i] / k2sum;
            u2.coeffs_mut()[i] = -I * k1 * w[i] / k2sum;
        }
    }
    [u1, u2]
}

pub fn biot_savart(omega: &ScalarField) -> Result<VectorField> {
    omega.ensure_finite("omega")?;
    let spec = omega.spectrum();
    let mean = spec.coeffs()[0].re;
    if mean.abs() > 1e-12 * omega.max_abs().max(1.0) {
        return Err(Error::NonZeroMean { mean });
    }
    Ok(VectorField::from_spectra(&biot_savart_spectral(&spec)))
}

/// Removes the gradient part mode by mode: `v - k (k.v) / |k|^2`.
pub fn leray_in_place(u: &mut [Spectrum; 2]) {
    let grid = u[0].grid().clone();
    let [a, b] = u;
    let (a, b) = (a.coeffs_mut(), b.coeffs_mut());
    for i in 1..grid.len() {
        let [k1, k2] = grid.derivative_wavevector(i);
        let k2sum = k1 * k1 + k2 * k2;
        if k2sum > 0.0 {
            let dot = (k1 * a[i] + k2 * b[i]) / k2sum;
            a[i] -= k1 * dot;
            b[i] -= k2 * dot;
        }
    }
}

pub fn leray_project(v: &VectorField) -> VectorField {
    let mut s = v.spectra();
    leray_in_place(&mut s);
    VectorField::from_spectra(&s)
}

/// Largest per-mode `|k.u(k)|`, the spectral divergence defect.
pub fn divergence_defect(u: &[Spectrum; 2]) -> f64 {
    divergence(u).coeffs().iter().fold(0.0, |m, c| m.max(c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::{random_field, random_tensor, random_vector};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn fractional_laplacian_single_mode() {
        let g = grid(16);
        let f = ScalarField::from_fn(&g, |x, _| (3.0 * x).sin());
        let out = fractional_laplacian(&f, 1.0).unwrap();
        let expected = f.map(|v| 3.0 * v);
        assert!(max_diff(&out, &expected) < 1e-13);
    }

    #[test]
    fn fractional_laplacian_kills_constants() {
        let g = grid(16);
        let f = ScalarField::constant(&g, 4.2);
        let out = fractional_laplacian(&f, 0.7).unwrap();
        assert!(out.max_abs() < 1e-14);
        let same = fractional_laplacian(&f, 0.0).unwrap();
        assert!(max_diff(&same, &f) < 1e-14);
    }

    #[test]
    fn fractional_laplacian_s2_matches_minus_laplacian() {
        // Oracle: -Laplacian built from two second derivatives.
        let g = grid(32);
        let f = random_field(&g, 7, 10);
        let spec = f.spectrum();
        let d11 = derivative(&derivative(&spec, 0), 0);
        let d22 = derivative(&derivative(&spec, 1), 1);
        let oracle = d11.add(&d22).scaled(-1.0).to_field();
        let out = fractional_laplacian(&f, 2.0).unwrap();
        let scale = oracle.max_abs();
        assert!(max_diff(&out, &oracle) <= 1e-12 * scale);
    }

    #[test]
    fn fractional_laplacian_rejects_nan() {
        let g = grid(8);
        let mut f = ScalarField::zeros(&g);
        f.values_mut()[3] = f64::INFINITY;
        assert!(matches!(fractional_laplacian(&f, 1.0), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn multiplier_composition_adds_exponents() {
        let g = grid(32);
        let f = random_field(&g, 3, 9).spectrum();
        let a = Multiplier::fractional_laplacian(&g, 0.6);
        let b = Multiplier::fractional_laplacian(&g, 1.1);
        let ab = a.compose(&b).apply(&f).to_field();
        let direct = Multiplier::fractional_laplacian(&g, 1.7).apply(&f).to_field();
        assert!(max_diff(&ab, &direct) <= 1e-12 * direct.max_abs());
    }

    #[test]
    fn riesz_of_constant_tensor_vanishes() {
        let g = grid(16);
        let c = ScalarField::constant(&g, 2.5);
        let tau = SymTensorField::new(c.clone(), ScalarField::zeros(&g), c);
        assert!(riesz_r(&tau).unwrap().max_abs() < 1e-14);
        assert!(riesz_r_gamma(&tau, 1.3).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn riesz_single_mode_hand_evaluation() {
        // tau12 = cos(x): k = (+-1, 0). curl div tau = d1^2 tau12 = -cos(x),
        // and (-Delta)^{-1} of that is -cos(x).
        let g = grid(16);
        let z = ScalarField::zeros(&g);
        let tau = SymTensorField::new(z.clone(), ScalarField::from_fn(&g, |x, _| x.cos()), z);
        let r = riesz_r(&tau).unwrap();
        let expected = ScalarField::from_fn(&g, |x, _| -x.cos());
        assert!(max_diff(&r, &expected) < 1e-14);
    }

    #[test]
    fn riesz_gamma_scales_single_mode() {
        // tau12 = cos(2y), k = (0, +-2): curl div tau = -d2^2 tau12 = 4 cos(2y).
        let g = grid(16);
        let z = ScalarField::zeros(&g);
        let tau = SymTensorField::new(z.clone(), ScalarField::from_fn(&g, |_, y| (2.0 * y).cos()), z);
        let cd = curl_div(&tau.spectra()).to_field();
        let expected_cd = ScalarField::from_fn(&g, |_, y| 4.0 * (2.0 * y).cos());
        assert!(max_diff(&cd, &expected_cd) < 1e-13);
        let rg = riesz_r_gamma(&tau, 1.25).unwrap();
        let expected = expected_cd.map(|v| v * 2f64.powf(-2.5));
        assert!(max_diff(&rg, &expected) < 1e-14);
    }

    #[test]
    fn riesz_gamma_at_one_is_riesz() {
        let g = grid(16);
        let tau = random_tensor(&g, 5, 6);
        let a = riesz_spectral(&tau.spectra(), 1.0).to_field();
        let b = riesz_r(&tau).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(riesz_r_gamma(&tau, 1.0).is_err());
    }

    #[test]
    fn riesz_is_l2_contractive() {
        let g = grid(16);
        for seed in 0..50 {
            let tau = random_tensor(&g, seed, 7);
            let r = riesz_r(&tau).unwrap();
            let rn = r.values().iter().map(|v| v * v).sum::<f64>();
            let tn = tau.frobenius().values().iter().map(|v| v * v).sum::<f64>();
            assert!(rn <= tn * (1.0 + 1e-12));
        }
    }

    #[test]
    fn biot_savart_of_sin_x() {
        let g = grid(16);
        let w = ScalarField::from_fn(&g, |x, _| x.sin());
        let u = biot_savart(&w).unwrap();
        assert!(u.components[0].max_abs() < 1e-14);
        let expected = ScalarField::from_fn(&g, |x, _| -x.cos());
        assert!(max_diff(&u.components[1], &expected) < 1e-14);
    }

    #[test]
    fn biot_savart_round_trip() {
        let g = grid(32);
        let mut w = random_field(&g, 11, 10);
        let mean = w.mean();
        w.values_mut().iter_mut().for_each(|v| *v -= mean);
        let u = biot_savart(&w).unwrap();
        let s = u.spectra();
        assert!(divergence_defect(&s) < 1e-12);
        let back = curl(&s).to_field();
        assert!(max_diff(&back, &w) <= 1e-12 * w.max_abs());
        assert!(biot_savart(&ScalarField::zeros(&g)).unwrap().components[0].max_abs() == 0.0);
    }

    #[test]
    fn biot_savart_rejects_mean() {
        let g = grid(8);
        let w = ScalarField::constant(&g, 1.0);
        assert!(matches!(biot_savart(&w), Err(Error::NonZeroMean { .. })));
    }

    #[test]
    fn leray_fixes_solenoidal_and_kills_gradients() {
        let g = grid(32);
        let phi = random_field(&g, 2, 8).spectrum();
        let grad = VectorField::from_spectra(&gradient(&phi));
        let p = leray_project(&grad);
        assert!(p.components[0].max_abs() < 1e-12 && p.components[1].max_abs() < 1e-12);

        let mut w = random_field(&g, 4, 8);
        let mean = w.mean();
        w.values_mut().iter_mut().for_each(|v| *v -= mean);
        let u = biot_savart(&w).unwrap();
        let pu = leray_project(&u);
        for c in 0..2 {
            assert!(max_diff(&pu.components[c], &u.components[c]) < 1e-13);
        }
    }

    #[test]
    fn leray_matches_mode_by_mode_oracle() {
        // Oracle: v - grad(Delta^{-1} div v), each piece from separate operators.
        let g = grid(16);
        let v = random_vector(&g, 9, 7);
        let s = v.spectra();
        let div = divergence(&s);
        let inv = div.map_modes(|i| {
            let [k1, k2] = g.derivative_wavevector(i);
            let q = k1 * k1 + k2 * k2;
            if q > 0.0 { Complex64::new(-1.0 / q, 0.0) } else { Complex64::default() }
        });
        let grad = gradient(&inv);
        let oracle = [s[0].sub(&grad[0]), s[1].sub(&grad[1])];
        let mut proj = v.spectra();
        leray_in_place(&mut proj);
        for c in 0..2 {
            for (a, b) in proj[c].coeffs().iter().zip(oracle[c].coeffs()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
        assert!(divergence_defect(&proj) < 1e-12);
        // idempotent
        let mut twice = proj.clone();
        leray_in_place(&mut twice);
        for c in 0..2 {
            for (a, b) in proj[c].coeffs().iter().zip(twice[c].coeffs()) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }
}
