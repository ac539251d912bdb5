use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic square box `[0, L)^2` sampled on `n x n` points.
///
/// Flat arrays are row-major with rows along `x2`: sample `(i1, i2)` sits at
/// index `i2 * n + i1`, position `(i1 * dx, i2 * dx)`. Spectral arrays use the
/// same layout with FFT ordering of the integer wavenumbers.
pub struct Grid {
    n: usize,
    length: f64,
    dealias_fraction: f64,
    /// Physical wavenumber per 1D index, Nyquist kept as `-n/2`.
    wavenumber: Vec<f64>,
    /// Wavenumber used for odd symbols (derivatives); Nyquist is zeroed so
    /// that odd multipliers keep conjugate symmetry.
    derivative: Vec<f64>,
    keep: Vec<bool>,
    modulus: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        Self::with_dealias(n, length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, length: f64, dealias_fraction: f64) -> Result<Arc<Grid>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!("n = {n} must be even and at least 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("box length {length} must be positive")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::Grid(format!(
                "dealias fraction {dealias_fraction} outside (0, 1]"
            )));
        }
        let base = 2.0 * PI / length;
        let half = n as i64 / 2;
        let cutoff = dealias_fraction * half as f64;
        let mut wavenumber = Vec::with_capacity(n);
        let mut derivative = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        for j in 0..n {
            let m = signed_index(j, n);
            wavenumber.push(base * m as f64);
            derivative.push(if m == -half { 0.0 } else { base * m as f64 });
            keep.push((m.unsigned_abs() as f64) <= cutoff);
        }
        let mut modulus = Vec::with_capacity(n * n);
        for i2 in 0..n {
            for i1 in 0..n {
                modulus.push(wavenumber[i1].hypot(wavenumber[i2]));
            }
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            n,
            length,
            dealias_fraction,
            wavenumber,
            derivative,
            keep,
            modulus,
            fft,
            ifft,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of samples, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Physical coordinates of a flat sample index.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let dx = self.dx();
        ((idx % self.n) as f64 * dx, (idx / self.n) as f64 * dx)
    }

    /// Signed integer wavenumbers `(j1, j2)` of a flat mode index.
    pub fn mode_index(&self, idx: usize) -> (i64, i64) {
        (signed_index(idx % self.n, self.n), signed_index(idx / self.n, self.n))
    }

    /// Physical wavevector of a mode (Nyquist kept).
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        [self.wavenumber[idx % self.n], self.wavenumber[idx / self.n]]
    }

    /// Wavevector used by derivative symbols (Nyquist zeroed).
    pub fn derivative_wavevector(&self, idx: usize) -> [f64; 2] {
        [self.derivative[idx % self.n], self.derivative[idx / self.n]]
    }

    /// `|k|` of a mode.
    pub fn modulus(&self, idx: usize) -> f64 {
        self.modulus[idx]
    }

    pub fn moduli(&self) -> &[f64] {
        &self.modulus
    }

    /// Whether the 2/3-rule style mask keeps this mode.
    pub fn keeps(&self, idx: usize) -> bool {
        self.keep[idx % self.n] && self.keep[idx / self.n]
    }

    /// Largest retained integer wavenumber per axis.
    pub fn dealias_radius(&self) -> usize {
        (self.dealias_fraction * (self.n / 2) as f64).floor() as usize
    }

    /// Unnormalized forward 2D DFT, then scaled by `1/n^2` so that the
    /// coefficients are Fourier coefficients: `f(x) = sum_k c_k e^{ik.x}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fft);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.ifft);
    }

    /// Synthesizes two conjugate-symmetric spectra with one complex transform:
    /// the real part of the result belongs to `a`, the imaginary part to `b`.
    pub(crate) fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut data: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.inverse(&mut data);
        (data.iter().map(|c| c.re).collect(), data.iter().map(|c| c.im).collect())
    }

    /// Fourier coefficients of two real fields from one complex transform.
    pub(crate) fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut data: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.forward(&mut data);
        let mut fa = vec![Complex64::default(); data.len()];
        let mut fb = vec![Complex64::default(); data.len()];
        for i2 in 0..n {
            let m2 = (n - i2) % n;
            for i1 in 0..n {
                let z = data[i2 * n + i1];
                let w = data[m2 * n + (n - i1) % n].conj();
                fa[i2 * n + i1] = 0.5 * (z + w);
                let d = 0.5 * (z - w);
                fb[i2 * n + i1] = Complex64::new(d.im, -d.re);
            }
        }
        (fa, fb)
    }

    /// Derivative wavenumbers along one axis, indexed by the position along
    /// that axis.
    pub(crate) fn derivative_wavenumbers(&self) -> &[f64] {
        &self.derivative
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, self.n);
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    let j = j as i64;
    let n = n as i64;
    if j >= n / 2 {
        j - n
    } else {
        j
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.length == other.length
            && self.dealias_fraction == other.dealias_fraction
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dealias_fraction", &self.dealias_fraction)
            .finish()
    }
}
