//! Periodic scalar fields on the unit square torus R^2/Z^2.
//!
//! A field holds n^2 samples, row-major: index (ix, iy) -> iy*n + ix, sample
//! point (ix/n, iy/n).  All constructors reject non-finite samples, so a
//! `ScalarField` is finite everywhere by invariant.

use crate::error::{Error, Result};
use crate::fft;

/// Uniform n x n grid on the unit torus; n must be a power of two >= 8 so the
/// spectral transform applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(n));
        }
        Ok(GridSpec { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing h = 1/n (exact in binary floating point).
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianScheme {
    /// Fourier multiplier -4*pi^2*(k1^2+k2^2); spectrally accurate.
    Spectral,
    /// Periodic 5-point stencil; second-order, kept as a scheme-independence
    /// cross-check.
    Stencil5,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidField(format!("non-finite constant {c}")));
        }
        Ok(ScalarField { grid, values: vec![c; grid.n * grid.n] })
    }

    /// Samples f(x, y) at the grid nodes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n;
        let h = grid.h();
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                values.push(f(ix as f64 * h, iy as f64 * h));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n * grid.n {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n * grid.n,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample {bad}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Internal constructor for values already checked by the caller.
    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n * grid.n);
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.grid.n + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n + ix]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Periodic trapezoid quadrature over the unit square: h^2 * sum, summed
    /// in index order (fixed order keeps results reproducible).
    pub fn integrate(&self) -> f64 {
        let mut acc = 0.0;
        for &v in &self.values {
            acc += v;
        }
        acc * self.grid.h() * self.grid.h()
    }

    /// (L1, sup) norms of self - other under the same quadrature.
    pub fn norms(&self, other: &ScalarField) -> Result<(f64, f64)> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.n, other.grid.n));
        }
        let mut l1 = 0.0;
        let mut sup = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            let d = (a - b).abs();
            l1 += d;
            sup = sup.max(d);
        }
        Ok((l1 * self.grid.h() * self.grid.h(), sup))
    }

    pub fn laplacian(&self, scheme: LaplacianScheme) -> Result<ScalarField> {
        match scheme {
            LaplacianScheme::Spectral => {
                let ops = fft::spectral_ops(self.grid.n);
                Ok(ScalarField::from_values_unchecked(self.grid, ops.laplacian(&self.values)))
            }
            LaplacianScheme::Stencil5 => Ok(ScalarField::from_values_unchecked(
                self.grid,
                stencil5(&self.values, self.grid.n),
            )),
        }
    }

    /// Sample-wise exp(c * v).  Overflow to non-finite values is rejected.
    pub fn exp_scale(&self, c: f64) -> Result<ScalarField> {
        let values: Vec<f64> = self.values.iter().map(|&v| (c * v).exp()).collect();
        ScalarField::from_values(self.grid, values)
    }

    /// Sample-wise c * ln(u); requires min u > 0.
    pub fn log_scale(&self, c: f64) -> Result<ScalarField> {
        let min = self.min_value();
        if min <= 0.0 {
            return Err(Error::NonPositiveField(min));
        }
        let values: Vec<f64> = self.values.iter().map(|&v| c * v.ln()).collect();
        Ok(ScalarField::from_values_unchecked(self.grid, values))
    }

    /// Translation by a grid vector: result(x, y) = self(x - dx*h, y - dy*h).
    pub fn translated(&self, dx: usize, dy: usize) -> ScalarField {
        let n = self.grid.n;
        let mut values = vec![0.0; n * n];
        for iy in 0..n {
            let sy = (iy + n - dy % n) % n;
            for ix in 0..n {
                let sx = (ix + n - dx % n) % n;
                values[iy * n + ix] = self.values[sy * n + sx];
            }
        }
        ScalarField { grid: self.grid, values }
    }

    /// Amplitude of the real cosine mode (k1, k2): 2 |c_{k1,k2}|, computed by
    /// direct summation (independent of the FFT path).
    pub fn mode_amplitude(&self, k1: i64, k2: i64) -> f64 {
        2.0 * fft::mode_coefficient(&self.values, self.grid.n, k1, k2).norm()
    }
}

fn stencil5(f: &[f64], n: usize) -> Vec<f64> {
    let inv_h2 = (n * n) as f64;
    let mut out = vec![0.0; n * n];
    for iy in 0..n {
        let up = if iy + 1 == n { 0 } else { iy + 1 };
        let dn = if iy == 0 { n - 1 } else { iy - 1 };
        for ix in 0..n {
            let rt = if ix + 1 == n { 0 } else { ix + 1 };
            let lf = if ix == 0 { n - 1 } else { ix - 1 };
            let c = f[iy * n + ix];
            out[iy * n + ix] =
                ((f[iy * n + rt] + f[iy * n + lf]) + (f[up * n + ix] + f[dn * n + ix]) - 4.0 * c)
                    * inv_h2;
        }
    }
    out
}
