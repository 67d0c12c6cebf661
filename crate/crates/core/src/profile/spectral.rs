//! Fourier differentiation and trigonometric interpolation on uniform
//! periodic grids of period 2π.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Cached forward/inverse plans for one periodic grid length.
#[derive(Clone)]
pub struct Spectral {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("len", &self.len).finish()
    }
}

/// Signed wavenumber of DFT index `j` for a grid of length `len`.
fn wavenumber(j: usize, len: usize) -> f64 {
    if j <= len / 2 {
        j as f64
    } else {
        j as f64 - len as f64
    }
}

impl Spectral {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized DFT of real samples.
    pub fn coefficients(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// First and second derivatives of periodic samples. The Nyquist mode is
    /// dropped from the odd derivative and kept in the even one.
    pub fn derivatives(&self, values: &[f64], d1: &mut [f64], d2: &mut [f64]) {
        let n = self.len;
        let hat = self.coefficients(values);
        let mut b1 = vec![Complex::new(0.0, 0.0); n];
        let mut b2 = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            let k = wavenumber(j, n);
            let nyquist = n.is_multiple_of(2) && j == n / 2;
            if !nyquist {
                b1[j] = hat[j] * Complex::new(0.0, k);
            }
            b2[j] = hat[j] * (-k * k);
        }
        self.inverse.process(&mut b1);
        self.inverse.process(&mut b2);
        let scale = 1.0 / n as f64;
        for j in 0..n {
            d1[j] = b1[j].re * scale;
            d2[j] = b2[j].re * scale;
        }
    }

    /// Applies a real, even Fourier multiplier `m(k)` and returns the real part.
    pub fn apply_multiplier(&self, values: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.len;
        let mut hat = self.coefficients(values);
        for (j, c) in hat.iter_mut().enumerate() {
            *c *= m(wavenumber(j, n));
        }
        self.inverse.process(&mut hat);
        hat.iter().map(|c| c.re / n as f64).collect()
    }
}

/// Band-limited trigonometric interpolant through samples at
/// `x_j = offset + 2πj/len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterpolant {
    offset: f64,
    len: usize,
    coeffs: Vec<Complex<f64>>,
}

impl TrigInterpolant {
    pub fn new(spectral: &Spectral, values: &[f64], offset: f64) -> Self {
        let len = spectral.len();
        let scale = 1.0 / len as f64;
        let coeffs = spectral
            .coefficients(values)
            .into_iter()
            .take(len / 2 + 1)
            .map(|c| c * scale)
            .collect();
        TrigInterpolant { offset, len, coeffs }
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let t = x - self.offset;
        let mut v = self.coeffs[0].re;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let half = self.len / 2;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let kf = k as f64;
            let (sn, cs) = (kf * t).sin_cos();
            // Re(c e^{ikt}) and its derivatives.
            let re = c.re * cs - c.im * sn;
            let im = c.re * sn + c.im * cs;
            let w = if self.len.is_multiple_of(2) && k == half {
                1.0
            } else {
                2.0
            };
            v += w * re;
            if !(self.len.is_multiple_of(2) && k == half) {
                d1 -= w * kf * im;
            }
            d2 -= w * kf * kf * re;
        }
        (v, d1, d2)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

/// Uniform nodes `offset + 2πj/len`.
pub fn periodic_nodes(len: usize, offset: f64) -> Vec<f64> {
    (0..len).map(|j| offset + 2.0 * PI * j as f64 / len as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonics_are_exact() {
        let n = 64;
        let sp = Spectral::new(n);
        let x = periodic_nodes(n, 0.3);
        for k in 0..=n / 4 {
            let kf = k as f64;
            let v: Vec<f64> = x.iter().map(|t| (kf * t).cos() + 0.5 * (kf * t).sin()).collect();
            let mut d1 = vec![0.0; n];
            let mut d2 = vec![0.0; n];
            sp.derivatives(&v, &mut d1, &mut d2);
            for (j, t) in x.iter().enumerate() {
                let e1 = -kf * (kf * t).sin() + 0.5 * kf * (kf * t).cos();
                let e2 = -kf * kf * v[j];
                assert!((d1[j] - e1).abs() < 1e-12 * (1.0 + kf * kf), "k={k}");
                assert!((d2[j] - e2).abs() < 1e-12 * (1.0 + kf * kf * kf), "k={k}");
            }
        }
    }

    #[test]
    fn interpolant_reproduces_nodes_and_harmonics() {
        let n = 32;
        let sp = Spectral::new(n);
        let x = periodic_nodes(n, 0.1);
        let f = |t: f64| 1.0 + 0.3 * (2.0 * t).cos() - 0.2 * (5.0 * t).sin();
        let v: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let it = TrigInterpolant::new(&sp, &v, 0.1);
        for (j, &t) in x.iter().enumerate() {
            assert!((it.value(t) - v[j]).abs() < 1e-13);
        }
        for t in [0.0, 0.77, 2.5, 5.9] {
            let (a, b, c) = it.eval(t);
            assert!((a - f(t)).abs() < 1e-13);
            let d1 = -0.6 * (2.0 * t).sin() - 1.0 * (5.0 * t).cos();
            let d2 = -1.2 * (2.0 * t).cos() + 5.0 * (5.0 * t).sin();
            assert!((b - d1).abs() < 1e-12 && (c - d2).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplier_inverts_helmholtz() {
        let n = 32;
        let sp = Spectral::new(n);
        let x = periodic_nodes(n, 0.0);
        let rhs: Vec<f64> = x.iter().map(|t| 2.0 - 3.0 * (2.0 * t).cos()).collect();
        let s = sp.apply_multiplier(&rhs, |k| if k.abs() == 1.0 { 0.0 } else { 1.0 / (1.0 - k * k) });
        for (j, t) in x.iter().enumerate() {
            assert!((s[j] - (2.0 + (2.0 * t).cos())).abs() < 1e-13);
        }
    }
}
