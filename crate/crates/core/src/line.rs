//! One-dimensional periodic lines: spectral shifts and derivatives.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// A periodic line of `n` samples over one period, with cached real FFT plans.
#[derive(Clone)]
pub struct PeriodicLine {
    n: usize,
    period: f64,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl PeriodicLine {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("line length {n} must be even and >= 4")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("line period {period} must be positive")));
        }
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            n,
            period,
            r2c: planner.plan_fft_forward(n),
            c2r: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Angular wavenumber of half-spectrum index `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.period
    }

    /// Normalized half spectrum (coefficient 0 is the mean).
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n);
        let mut input = values.to_vec();
        let mut out = self.r2c.make_output_vec();
        self.r2c.process(&mut input, &mut out).expect("real fft length mismatch");
        let norm = 1.0 / self.n as f64;
        out.iter_mut().for_each(|c| *c *= norm);
        out
    }

    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        assert_eq!(spec.len(), self.n / 2 + 1);
        let mut input = spec.to_vec();
        input[0].im = 0.0;
        input[self.n / 2].im = 0.0;
        let mut out = self.c2r.make_output_vec();
        self.c2r.process(&mut input, &mut out).expect("inverse real fft failed");
        out
    }

    /// Applies the multiplier `m(k)` to every mode. The Nyquist mode receives `Re m(k)`.
    pub fn apply(&self, values: &[f64], m: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let mut spec = self.forward(values);
        let last = spec.len() - 1;
        for (j, c) in spec.iter_mut().enumerate() {
            let f = m(self.wavenumber(j));
            *c *= if j == last { Complex64::new(f.re, 0.0) } else { f };
        }
        self.inverse(&spec)
    }

    /// `f(· - a)`: the band-limited interpolant translated right by `a`.
    pub fn shift(&self, values: &[f64], a: f64) -> Vec<f64> {
        self.apply(values, |k| Complex64::from_polar(1.0, -k * a))
    }

    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        self.apply(values, |k| Complex64::new(0.0, k).powu(order))
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point `s`,
    /// where sample `i` sits at `origin + i * spacing`.
    pub fn interpolate(&self, spec: &[Complex64], origin: f64, s: f64) -> f64 {
        let last = spec.len() - 1;
        let mut acc = spec[0].re;
        for (j, c) in spec.iter().enumerate().skip(1) {
            let e = Complex64::from_polar(1.0, self.wavenumber(j) * (s - origin));
            let term = (c * e).re;
            acc += if j == last { term } else { 2.0 * term };
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_roundtrip() {
        let line = PeriodicLine::new(256, 40.0).unwrap();
        let xs: Vec<f64> = (0..256).map(|i| -20.0 + i as f64 * line.spacing()).collect();
        let f: Vec<f64> = xs.iter().map(|x| (-x * x / 4.0).exp() * (1.0 + x.sin())).collect();
        let back = line.shift(&line.shift(&f, 1.37), -1.37);
        let err = f.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn shift_matches_translate() {
        let line = PeriodicLine::new(128, 2.0 * PI).unwrap();
        let xs: Vec<f64> = (0..128).map(|i| i as f64 * line.spacing()).collect();
        let f: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin() + (x).cos()).collect();
        let g = line.shift(&f, 0.4);
        for (x, v) in xs.iter().zip(&g) {
            let want = (3.0 * (x - 0.4)).sin() + (x - 0.4).cos();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_off_grid() {
        let line = PeriodicLine::new(64, 2.0 * PI).unwrap();
        let f: Vec<f64> = (0..64).map(|i| (2.0 * i as f64 * line.spacing()).cos()).collect();
        let spec = line.forward(&f);
        let v = line.interpolate(&spec, 0.0, 0.3);
        assert!((v - 0.6f64.cos()).abs() < 1e-12);
    }
}
