use std::borrow::Cow;
use std::sync::Arc;

use num_complex::Complex64;

use super::field::{ScalarField, Spectrum, SymTensorField, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Fields that have a pointwise magnitude and a weighted spectral energy.
pub trait Measurable {
    fn grid(&self) -> &Arc<Grid>;

    /// `|f(x)|` per sample; Euclidean for vectors, Frobenius for tensors.
    fn pointwise_magnitude(&self) -> Cow<'_, [f64]>;

    /// Component spectra with the weights that make `sum w |c|^2` the
    /// pointwise squared magnitude.
    fn weighted_spectra(&self) -> Vec<(f64, Spectrum)>;
}

impl Measurable for ScalarField {
    fn grid(&self) -> &Arc<Grid> {
        ScalarField::grid(self)
    }

    fn pointwise_magnitude(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.values().iter().map(|v| v.abs()).collect())
    }

    fn weighted_spectra(&self) -> Vec<(f64, Spectrum)> {
        vec![(1.0, self.spectrum())]
    }
}

impl Measurable for VectorField {
    fn grid(&self) -> &Arc<Grid> {
        VectorField::grid(self)
    }

    fn pointwise_magnitude(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.magnitude().into_values())
    }

    fn weighted_spectra(&self) -> Vec<(f64, Spectrum)> {
        let [a, b] = self.spectra();
        vec![(1.0, a), (1.0, b)]
    }
}

impl Measurable for SymTensorField {
    fn grid(&self) -> &Arc<Grid> {
        SymTensorField::grid(self)
    }

    fn pointwise_magnitude(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.frobenius().into_values())
    }

    fn weighted_spectra(&self) -> Vec<(f64, Spectrum)> {
        let [a, b, c] = self.spectra();
        vec![(1.0, a), (2.0, b), (1.0, c)]
    }
}

/// `(sum_x |x|^p dA)^(1/p)` on the sample magnitudes; `p = inf` is the max.
pub fn lp_of_values(values: &[f64], p: f64, cell_area: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::config(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((sum * cell_area).powf(1.0 / p))
}

pub fn lp_norm<F: Measurable + ?Sized>(f: &F, p: f64) -> Result<f64> {
    lp_of_values(&f.pointwise_magnitude(), p, f.grid().cell_area())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevKind {
    /// Symbol `(1 + |k|^2)^{s/2}`.
    Inhomogeneous,
    /// Symbol `|k|^s`, i.e. `||Lambda^s f||_{L2}`.
    Homogeneous,
}

fn sobolev_symbol(kind: SobolevKind, modulus: f64, s: f64) -> f64 {
    match kind {
        SobolevKind::Inhomogeneous => (1.0 + modulus * modulus).powf(0.5 * s),
        SobolevKind::Homogeneous if s == 0.0 => 1.0,
        SobolevKind::Homogeneous if modulus == 0.0 => 0.0,
        SobolevKind::Homogeneous => modulus.powf(s),
    }
}

/// Plancherel sum `L^2 sum_k sym(k)^2 |c_k|^2` over weighted spectra, square-rooted.
pub fn sobolev_of_spectra(spectra: &[(f64, &Spectrum)], s: f64, kind: SobolevKind) -> f64 {
    let grid = spectra[0].1.grid();
    let mut total = 0.0;
    for i in 0..grid.len() {
        let m = sobolev_symbol(kind, grid.modulus(i), s);
        let e: f64 = spectra.iter().map(|(w, sp)| w * sp.coeffs()[i].norm_sqr()).sum();
        total += m * m * e;
    }
    (total * grid.area()).sqrt()
}

pub fn sobolev_norm<F: Measurable + ?Sized>(f: &F, s: f64, kind: SobolevKind) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::config(format!("Sobolev index must be >= 0, got {s}")));
    }
    let spectra = f.weighted_spectra();
    let refs: Vec<(f64, &Spectrum)> = spectra.iter().map(|(w, s)| (*w, s)).collect();
    Ok(sobolev_of_spectra(&refs, s, kind))
}

/// Dyadic block of a wavenumber modulus: `-1` for `|k| < 1`, otherwise the
/// `j` with `2^j <= |k| < 2^{j+1}`.
pub fn dyadic_index(modulus: f64) -> i32 {
    if modulus < 1.0 {
        return -1;
    }
    let mut j = modulus.log2().floor() as i32;
    while 2f64.powi(j + 1) <= modulus {
        j += 1;
    }
    while 2f64.powi(j) > modulus {
        j -= 1;
    }
    j
}

/// Largest block index that contains a lattice mode.
pub fn max_dyadic_index(grid: &Grid) -> i32 {
    grid.moduli().iter().map(|&m| dyadic_index(m)).max().unwrap_or(-1)
}

pub fn dyadic_block_spectrum(f: &Spectrum, j: i32) -> Spectrum {
    let grid = f.grid().clone();
    f.map_modes(|i| {
        if dyadic_index(grid.modulus(i)) == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    })
}

/// Sharp annular Littlewood-Paley piece `Delta_j f`.
pub fn dyadic_block(f: &ScalarField, j: i32) -> Result<ScalarField> {
    if j < -1 {
        return Err(Error::config(format!("dyadic block index {j} < -1")));
    }
    Ok(dyadic_block_spectrum(&f.spectrum(), j).to_field())
}

/// `(sum_{j >= -1} (2^{-js} ||Delta_j f||_inf)^r)^{1/r}`, or the sup for
/// `r = inf`: the `B^{-s}_{inf,r}` norm with sharp blocks.
pub fn besov_norm(f: &ScalarField, s: f64, r: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::config(format!("Besov smoothness -s needs s > 0, got {s}")));
    }
    if r.is_nan() || r < 1.0 {
        return Err(Error::config(format!("Besov index r must be >= 1, got {r}")));
    }
    let spec = f.spectrum();
    let top = max_dyadic_index(f.grid());
    let terms = (-1..=top).map(|j| {
        let block = dyadic_block_spectrum(&spec, j).to_field();
        2f64.powf(-(j as f64) * s) * block.max_abs()
    });
    if r.is_infinite() {
        Ok(terms.fold(0.0, f64::max))
    } else {
        Ok(terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r))
    }
}
