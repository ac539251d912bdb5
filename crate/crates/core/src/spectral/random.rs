//! Seeded band-limited random fields, used for initial data and for the
//! randomized property checks.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{ScalarField, Spectrum, SymTensorField, VectorField};
use super::grid::Grid;
use super::ops::derivative;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random coefficients on the lattice annulus `kmin <= |j| <= kmax`
/// (integer wavenumbers), made conjugate-symmetric so the field is real.
/// Modes are drawn in a fixed lattice order, so the same seed gives the same
/// function on every grid that resolves the band.
pub fn bandlimited_spectrum(grid: &Arc<Grid>, rng: &mut impl Rng, kmin: f64, kmax: f64) -> Spectrum {
    let n = grid.n() as i64;
    let reach = (kmax.floor() as i64).min(n / 2 - 1).max(0);
    let mut raw = Spectrum::zeros(grid);
    for j2 in -reach..=reach {
        for j1 in -reach..=reach {
            let r = ((j1 * j1 + j2 * j2) as f64).sqrt();
            if r < kmin || r > kmax {
                continue;
            }
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            let idx = (j2.rem_euclid(n) * n + j1.rem_euclid(n)) as usize;
            raw.coeffs_mut()[idx] = Complex64::new(re, im);
        }
    }
    raw.to_field().spectrum()
}

pub fn random_field(grid: &Arc<Grid>, seed: u64, kmax: usize) -> ScalarField {
    bandlimited_spectrum(grid, &mut rng(seed), 0.0, kmax as f64).to_field()
}

pub fn random_vector(grid: &Arc<Grid>, seed: u64, kmax: usize) -> VectorField {
    let mut r = rng(seed);
    let a = bandlimited_spectrum(grid, &mut r, 0.0, kmax as f64).to_field();
    let b = bandlimited_spectrum(grid, &mut r, 0.0, kmax as f64).to_field();
    VectorField::new(a, b)
}

pub fn random_tensor(grid: &Arc<Grid>, seed: u64, kmax: usize) -> SymTensorField {
    let mut r = rng(seed);
    let mut next = || bandlimited_spectrum(grid, &mut r, 0.0, kmax as f64).to_field();
    let (a, b, c) = (next(), next(), next());
    SymTensorField::new(a, b, c)
}

/// Mean-free, divergence-free velocity `u = (d2 psi, -d1 psi)` from a random
/// stream function supported in `kmin <= |j| <= kmax`.
pub fn solenoidal_spectra(grid: &Arc<Grid>, rng: &mut impl Rng, kmin: f64, kmax: f64) -> [Spectrum; 2] {
    let psi = bandlimited_spectrum(grid, rng, kmin.max(1.0), kmax);
    [derivative(&psi, 1), derivative(&psi, 0).scaled(-1.0)]
}

pub fn random_solenoidal(grid: &Arc<Grid>, seed: u64, kmax: usize) -> VectorField {
    VectorField::from_spectra(&solenoidal_spectra(grid, &mut rng(seed), 1.0, kmax as f64))
}
