//! Fourier-space differential operators on the periodic unit torus.
//!
//! Fields are sampled on an n x n grid (n a power of two), row-major with
//! index (ix, iy) -> iy*n + ix and physical position (ix/n, iy/n).  A mode
//! with integer wavenumbers (k1, k2) has Laplacian eigenvalue
//! -4*pi^2*(k1^2 + k2^2).  Wavenumber layout for index j is j for j <= n/2
//! and j - n otherwise; odd-order derivatives zero the Nyquist wavenumber.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub struct SpectralOps {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// k(j) including the Nyquist wavenumber n/2.
    k_full: Vec<f64>,
    /// k(j) with the Nyquist entry zeroed, for odd-order derivatives.
    k_odd: Vec<f64>,
}

/// Shared per-size plan cache; planning is not free and sizes repeat.
fn cache() -> &'static Mutex<HashMap<usize, Arc<SpectralOps>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SpectralOps>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn spectral_ops(n: usize) -> Arc<SpectralOps> {
    let mut map = cache().lock().unwrap();
    map.entry(n).or_insert_with(|| Arc::new(SpectralOps::new(n))).clone()
}

impl SpectralOps {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 8, "spectral grid must be a power of two >= 8");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k_full: Vec<f64> = (0..n)
            .map(|j| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 })
            .collect();
        let mut k_odd = k_full.clone();
        k_odd[n / 2] = 0.0;
        SpectralOps { n, fwd, inv, k_full, k_odd }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward 2-D transform: rows, then columns via transpose.
    fn fft2(&self, buf: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut scratch);
        }
        let mut t = vec![Complex::default(); n * n];
        transpose(buf, &mut t, n);
        for row in t.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut scratch);
        }
        transpose(&t, buf, n);
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(f.len(), self.n * self.n);
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft2(&mut buf, &self.fwd);
        buf
    }

    /// Inverse of `forward`, returning the real part, normalized by 1/n^2.
    pub fn inverse_real(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        self.fft2(&mut spec, &self.inv);
        let scale = 1.0 / (self.n * self.n) as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real Fourier multiplier m(k1, k2).
    fn apply_real_multiplier(&self, f: &[f64], m: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut spec = self.forward(f);
        for jy in 0..n {
            let ky = self.k_full[jy];
            for jx in 0..n {
                spec[jy * n + jx] *= m(self.k_full[jx], ky);
            }
        }
        self.inverse_real(spec)
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real_multiplier(f, |kx, ky| -TWO_PI * TWO_PI * (kx * kx + ky * ky))
    }

    /// Solves (1 + alpha * (-Laplacian)) u = rhs, diagonal in Fourier space.
    pub fn solve_implicit_diffusion(&self, rhs: &[f64], alpha: f64) -> Vec<f64> {
        self.apply_real_multiplier(rhs, |kx, ky| {
            1.0 / (1.0 + alpha * TWO_PI * TWO_PI * (kx * kx + ky * ky))
        })
    }

    /// First derivatives; the Nyquist wavenumber is dropped so that the
    /// derivative of a real field stays real.
    pub fn dx(&self, f: &[f64]) -> Vec<f64> {
        self.apply_imaginary_multiplier(f, |kx, _| TWO_PI * kx, true)
    }

    pub fn dy(&self, f: &[f64]) -> Vec<f64> {
        self.apply_imaginary_multiplier(f, |_, ky| TWO_PI * ky, false)
    }

    fn apply_imaginary_multiplier(
        &self,
        f: &[f64],
        m: impl Fn(f64, f64) -> f64,
        _x_dir: bool,
    ) -> Vec<f64> {
        let n = self.n;
        let mut spec = self.forward(f);
        for jy in 0..n {
            let ky = self.k_odd[jy];
            for jx in 0..n {
                let c = m(self.k_odd[jx], ky);
                let v = spec[jy * n + jx];
                spec[jy * n + jx] = Complex::new(-v.im * c, v.re * c);
            }
        }
        self.inverse_real(spec)
    }

    pub fn dxx(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real_multiplier(f, |kx, _| -(TWO_PI * kx) * (TWO_PI * kx))
    }

    pub fn dyy(&self, f: &[f64]) -> Vec<f64> {
        self.apply_real_multiplier(f, |_, ky| -(TWO_PI * ky) * (TWO_PI * ky))
    }

    /// Mixed derivative; both factors use the odd-derivative wavenumbers.
    pub fn dxy(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut spec = self.forward(f);
        for jy in 0..n {
            let ky = self.k_odd[jy];
            for jx in 0..n {
                spec[jy * n + jx] *= -(TWO_PI * self.k_odd[jx]) * (TWO_PI * ky);
            }
        }
        self.inverse_real(spec)
    }
}

fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], n: usize) {
    for y in 0..n {
        for x in 0..n {
            dst[x * n + y] = src[y * n + x];
        }
    }
}

/// Fourier coefficient of mode (k1, k2) by direct summation, normalized by
/// 1/n^2.  Quadratic cost; intended for diagnostics and as an FFT-independent
/// cross-check.
pub fn mode_coefficient(f: &[f64], n: usize, k1: i64, k2: i64) -> Complex<f64> {
    assert_eq!(f.len(), n * n);
    let mut acc = Complex::new(0.0, 0.0);
    for iy in 0..n {
        for ix in 0..n {
            let phase = -TWO_PI * (k1 as f64 * ix as f64 + k2 as f64 * iy as f64) / n as f64;
            acc += Complex::new(phase.cos(), phase.sin()) * f[iy * n + ix];
        }
    }
    acc / (n * n) as f64
}
