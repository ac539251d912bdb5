use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Real samples of a scalar on the grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        ScalarField { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField { grid: grid.clone(), values })
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.position(i);
                f(x1, x2)
            })
            .collect();
        ScalarField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut coeffs: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut coeffs);
        Spectrum { grid: self.grid.clone(), coeffs }
    }

    /// Spectra of two fields at the cost of one transform.
    pub fn spectrum_pair(a: &ScalarField, b: &ScalarField) -> (Spectrum, Spectrum) {
        let (x, y) = a.grid.forward_pair(&a.values, &b.values);
        (Spectrum { grid: a.grid.clone(), coeffs: x }, Spectrum { grid: a.grid.clone(), coeffs: y })
    }

    /// Errors naming `field` if any sample is NaN or infinite.
    pub fn ensure_finite(&self, field: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { field: field.to_string(), index }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Rectangle-rule integral over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }
}

/// Fourier coefficients `c_k` with `f(x) = sum_k c_k exp(i k.x)`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Spectrum { grid: grid.clone(), coeffs: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} modes, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Spectrum { grid: grid.clone(), coeffs })
    }

    /// Builds a spectrum mode by mode from the flat index.
    pub fn from_fn(grid: &Arc<Grid>, f: impl FnMut(usize) -> Complex64) -> Self {
        Spectrum { grid: grid.clone(), coeffs: (0..grid.len()).map(f).collect() }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Physical samples. Only the real part of the synthesis is kept, which is
    /// the projection onto conjugate-symmetric spectra.
    pub fn to_field(&self) -> ScalarField {
        let mut data = self.coeffs.clone();
        self.grid.inverse(&mut data);
        ScalarField { grid: self.grid.clone(), values: data.into_iter().map(|c| c.re).collect() }
    }

    /// Physical samples of two spectra at the cost of one transform.
    pub fn to_field_pair(a: &Spectrum, b: &Spectrum) -> (ScalarField, ScalarField) {
        let (x, y) = a.grid.inverse_pair(&a.coeffs, &b.coeffs);
        (
            ScalarField { grid: a.grid.clone(), values: x },
            ScalarField { grid: a.grid.clone(), values: y },
        )
    }

    /// Zeroes every mode removed by the dealiasing mask.
    pub fn dealias(&mut self) {
        let grid = self.grid.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if !grid.keeps(i) {
                *c = Complex64::default();
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    pub fn scaled(&self, a: f64) -> Spectrum {
        Spectrum { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|&c| c * a).collect() }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Spectrum) {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
    }

    pub fn add(&self, other: &Spectrum) -> Spectrum {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Spectrum) -> Spectrum {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Multiplies each mode by `symbol(index)`.
    pub fn map_modes(&self, symbol: impl Fn(usize) -> Complex64) -> Spectrum {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| c * symbol(i)).collect();
        Spectrum { grid: self.grid.clone(), coeffs }
    }

    /// `sum_k |c_k|^2`; times the box area this is the squared L2 norm.
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest deviation from `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for i2 in 0..n {
            for i1 in 0..n {
                let a = self.coeffs[i2 * n + i1];
                let b = self.coeffs[((n - i2) % n) * n + (n - i1) % n];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

/// Two-component vector field.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub components: [ScalarField; 2],
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Self {
        VectorField { components: [u1, u2] }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField::new(ScalarField::zeros(grid), ScalarField::zeros(grid))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.components[0].grid()
    }

    pub fn spectra(&self) -> [Spectrum; 2] {
        [self.components[0].spectrum(), self.components[1].spectrum()]
    }

    pub fn from_spectra(s: &[Spectrum; 2]) -> Self {
        VectorField::new(s[0].to_field(), s[1].to_field())
    }

    pub fn magnitude(&self) -> ScalarField {
        self.components[0].zip_map(&self.components[1], f64::hypot)
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        self.components[0].ensure_finite(&format!("{name}1"))?;
        self.components[1].ensure_finite(&format!("{name}2"))
    }
}

/// Symmetric 2x2 tensor field storing `(t11, t12, t22)`; `t21` aliases `t12`.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl SymTensorField {
    pub fn new(xx: ScalarField, xy: ScalarField, yy: ScalarField) -> Self {
        SymTensorField { xx, xy, yy }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SymTensorField::new(ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.xx.grid()
    }

    /// Entry `(i, j)` with 0-based indices.
    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        match (i, j) {
            (0, 0) => &self.xx,
            (1, 1) => &self.yy,
            _ => &self.xy,
        }
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.xx, &self.xy, &self.yy]
    }

    pub fn spectra(&self) -> [Spectrum; 3] {
        [self.xx.spectrum(), self.xy.spectrum(), self.yy.spectrum()]
    }

    pub fn from_spectra(s: &[Spectrum; 3]) -> Self {
        SymTensorField::new(s[0].to_field(), s[1].to_field(), s[2].to_field())
    }

    /// Pointwise Frobenius magnitude `sqrt(t11^2 + 2 t12^2 + t22^2)`.
    pub fn frobenius(&self) -> ScalarField {
        let values = self
            .xx
            .values()
            .iter()
            .zip(self.xy.values())
            .zip(self.yy.values())
            .map(|((a, b), c)| (a * a + 2.0 * b * b + c * c).sqrt())
            .collect();
        ScalarField { grid: self.grid().clone(), values }
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        self.xx.ensure_finite(&format!("{name}11"))?;
        self.xy.ensure_finite(&format!("{name}12"))?;
        self.yy.ensure_finite(&format!("{name}22"))
    }
}

/// Skew-symmetric 2x2 tensor field; only `W12` is stored, `W21 = -W12`.
#[derive(Clone, Debug)]
pub struct SkewTensorField {
    pub omega12: ScalarField,
}

impl SkewTensorField {
    pub fn new(omega12: ScalarField) -> Self {
        SkewTensorField { omega12 }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.omega12.grid()
    }
}
