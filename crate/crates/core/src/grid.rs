//! Doubly periodic grids, spectral calculus and integral functionals.
//!
//! Samples are stored row-major with `x` fastest: `values[iy * nx + ix]`.
//! The `x` coordinate runs over `[0, lx)` and `y` over `[-ly/2, ly/2)`, so the
//! transverse origin sits at row `ny / 2`.
//!
//! Spectral data uses the real-to-complex half spectrum in `x`, stored with
//! `y` contiguous: `spec[jx * ny + my]` for `jx in 0..=nx/2`, `my in 0..ny`.
//! Coefficients are normalized by `nx * ny`, so the `(0, 0)` coefficient is
//! the domain mean and the `jx = 0` column holds the x-mean of every line.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest admissible x-mean amplitude for `∂_x^{-1}`.
pub const XMEAN_TOL: f64 = 1e-8;

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

/// A doubly periodic rectangle sampled on `nx × ny` points.
#[derive(Clone)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

fn check_count(n: usize, axis: &str) -> Result<()> {
    if n < 64 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "{axis} = {n} must be a power of two >= 64"
        )));
    }
    Ok(())
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_count(nx, "nx")?;
        check_count(ny, "ny")?;
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain lengths must be positive, got lx = {lx}, ly = {ly}"
            )));
        }
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let plans = Plans {
            r2c: rp.plan_fft_forward(nx),
            c2r: rp.plan_fft_inverse(nx),
            fwd_y: cp.plan_fft_forward(ny),
            inv_y: cp.plan_fft_inverse(ny),
        };
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            plans: Arc::new(plans),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    /// Number of stored x-wavenumbers (half spectrum).
    pub fn nkx(&self) -> usize {
        self.nx / 2 + 1
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn spectral_len(&self) -> usize {
        self.nkx() * self.ny
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }
    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.dy()
    }
    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }
    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    /// Signed wavenumber index for transverse mode `my` (Nyquist reported positive).
    pub fn ky_index(&self, my: usize) -> i64 {
        if my <= self.ny / 2 {
            my as i64
        } else {
            my as i64 - self.ny as i64
        }
    }
    pub fn kx(&self, jx: usize) -> f64 {
        2.0 * PI * jx as f64 / self.lx
    }
    pub fn ky(&self, my: usize) -> f64 {
        2.0 * PI * self.ky_index(my) as f64 / self.ly
    }
    pub fn is_kx_nyquist(&self, jx: usize) -> bool {
        jx == self.nx / 2
    }
    pub fn is_ky_nyquist(&self, my: usize) -> bool {
        my == self.ny / 2
    }
    /// Largest resolved |kx| (the Nyquist wavenumber).
    pub fn kx_max(&self) -> f64 {
        PI * self.nx as f64 / self.lx
    }
    pub fn ky_max(&self) -> f64 {
        PI * self.ny as f64 / self.ly
    }

    /// Forward transform of real samples into normalized half-spectrum coefficients.
    pub fn forward_into(&self, values: &[f64], spec: &mut [Complex64]) {
        let (nx, ny, nkx) = (self.nx, self.ny, self.nkx());
        assert_eq!(values.len(), nx * ny);
        assert_eq!(spec.len(), nkx * ny);
        let mut row_in = self.plans.r2c.make_input_vec();
        let mut row_out = self.plans.r2c.make_output_vec();
        let mut scratch = self.plans.r2c.make_scratch_vec();
        for my in 0..ny {
            row_in.copy_from_slice(&values[my * nx..(my + 1) * nx]);
            self.plans
                .r2c
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("real fft length mismatch");
            for (jx, c) in row_out.iter().enumerate() {
                spec[jx * ny + my] = *c;
            }
        }
        let mut cs = vec![Complex64::default(); self.plans.fwd_y.get_inplace_scratch_len()];
        self.plans.fwd_y.process_with_scratch(spec, &mut cs);
        let norm = 1.0 / (nx * ny) as f64;
        for c in spec.iter_mut() {
            *c *= norm;
        }
    }

    /// Inverse of [`Grid2D::forward_into`]. `spec` is used as workspace and is clobbered.
    pub fn inverse_into(&self, spec: &mut [Complex64], values: &mut [f64]) {
        let (nx, ny, nkx) = (self.nx, self.ny, self.nkx());
        assert_eq!(values.len(), nx * ny);
        assert_eq!(spec.len(), nkx * ny);
        let mut cs = vec![Complex64::default(); self.plans.inv_y.get_inplace_scratch_len()];
        self.plans.inv_y.process_with_scratch(spec, &mut cs);
        let mut row_in = self.plans.c2r.make_input_vec();
        let mut row_out = self.plans.c2r.make_output_vec();
        let mut scratch = self.plans.c2r.make_scratch_vec();
        for my in 0..ny {
            for jx in 0..nkx {
                row_in[jx] = spec[jx * ny + my];
            }
            row_in[0].im = 0.0;
            row_in[nkx - 1].im = 0.0;
            self.plans
                .c2r
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("inverse real fft failed");
            values[my * nx..(my + 1) * nx].copy_from_slice(&row_out);
        }
    }

    /// Continuous transverse transform `(2π)^{-1/2} ∫ f(y) e^{-iηy} dy` of one
    /// spectral coefficient column, evaluated at `η = ky(my)`.
    ///
    /// `coef` is a normalized DFT coefficient in `y` of a line quantity; the
    /// returned value accounts for the grid origin at `-ly/2`.
    pub fn transverse_transform_factor(&self, my: usize) -> f64 {
        let sign = if self.ky_index(my).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * self.ly / (2.0 * PI).sqrt()
    }
}

/// A real field on a [`Grid2D`] with a lazily computed spectral view.
#[derive(Clone)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for Field2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field2D").field("grid", &self.grid).finish()
    }
}

impl Field2D {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self::from_values(grid, vec![0.0; grid.len()])
    }

    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        Self {
            grid: grid.clone(),
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Samples `f(x, y)` on the grid.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                values.push(f(grid.x(ix), y));
            }
        }
        Self::from_values(grid, values)
    }

    /// Builds a field from normalized half-spectrum coefficients.
    pub fn from_spectral(grid: &Grid2D, spec: Vec<Complex64>) -> Self {
        assert_eq!(spec.len(), grid.spectral_len());
        let mut work = spec.clone();
        let mut values = vec![0.0; grid.len()];
        grid.inverse_into(&mut work, &mut values);
        let field = Self::from_values(grid, values);
        let _ = field.spectral.set(spec);
        field
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx() + ix]
    }
    /// The x-line at transverse index `iy`.
    pub fn row(&self, iy: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.values[iy * nx..(iy + 1) * nx]
    }

    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let mut spec = vec![Complex64::default(); self.grid.spectral_len()];
            self.grid.forward_into(&self.values, &mut spec);
            spec
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dy()
    }

    /// Rectangle-rule `∫ f dx` for every x-line.
    pub fn line_integrals(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        (0..self.grid.ny())
            .map(|iy| self.row(iy).iter().sum::<f64>() * dx)
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_values(&self.grid, values)
    }

    pub fn add(&self, other: &Field2D) -> Self {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &Field2D) -> Self {
        self.zip_with(other, |a, b| a - b)
    }
    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// Sets the `kx = 0, ky ≠ 0` coefficients to zero (x-means of lines become uniform).
    pub fn project_line_means(&self) -> Self {
        let ny = self.grid.ny();
        let mut spec = self.spectral().to_vec();
        for c in spec.iter_mut().take(ny).skip(1) {
            *c = Complex64::default();
        }
        Field2D::from_spectral(&self.grid, spec)
    }

    /// Largest `|x-mean|` over all lines, i.e. the largest `kx = 0` coefficient.
    pub fn max_line_mean(&self) -> f64 {
        self.spectral()[..self.grid.ny()]
            .iter()
            .fold(0.0, |m, c| m.max(c.norm()))
    }
}

/// `(i kx)^ox (i ky)^oy` with the Nyquist modes dropped for odd orders.
fn derivative_multiplier(grid: &Grid2D, jx: usize, my: usize, ox: u32, oy: u32) -> Complex64 {
    if (ox % 2 == 1 && grid.is_kx_nyquist(jx)) || (oy % 2 == 1 && grid.is_ky_nyquist(my)) {
        return Complex64::default();
    }
    let ikx = Complex64::new(0.0, grid.kx(jx));
    let iky = Complex64::new(0.0, grid.ky(my));
    ikx.powu(ox) * iky.powu(oy)
}

/// Spectral partial derivative `∂_x^ox ∂_y^oy f`.
pub fn spectral_derivative(f: &Field2D, ox: u32, oy: u32) -> Field2D {
    if ox == 0 && oy == 0 {
        return f.clone();
    }
    let grid = f.grid();
    let ny = grid.ny();
    let spec: Vec<Complex64> = f
        .spectral()
        .iter()
        .enumerate()
        .map(|(idx, c)| c * derivative_multiplier(grid, idx / ny, idx % ny, ox, oy))
        .collect();
    Field2D::from_spectral(grid, spec)
}

/// `∂_x^{-1} f`, defined when every x-line of `f` has zero mean.
pub fn antiderivative_x(f: &Field2D) -> Result<Field2D> {
    let grid = f.grid();
    let ny = grid.ny();
    let worst = f.max_line_mean();
    if worst > XMEAN_TOL {
        return Err(Error::NonzeroXMean(worst));
    }
    let spec: Vec<Complex64> = f
        .spectral()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let jx = idx / ny;
            if jx == 0 || grid.is_kx_nyquist(jx) {
                Complex64::default()
            } else {
                c / Complex64::new(0.0, grid.kx(jx))
            }
        })
        .collect();
    Ok(Field2D::from_spectral(grid, spec))
}

/// Index bound of the 2/3 rule: modes with `|j| > n/3` are removed.
pub fn dealias_keep(n: usize, index: i64) -> bool {
    3 * index.unsigned_abs() as usize <= n
}

/// Zeroes every mode outside the 2/3-rule box.
pub fn dealias(f: &Field2D) -> Field2D {
    let grid = f.grid();
    let mut spec = f.spectral().to_vec();
    apply_dealias(grid, &mut spec);
    Field2D::from_spectral(grid, spec)
}

pub(crate) fn apply_dealias(grid: &Grid2D, spec: &mut [Complex64]) {
    let ny = grid.ny();
    for (idx, c) in spec.iter_mut().enumerate() {
        let (jx, my) = (idx / ny, idx % ny);
        if !dealias_keep(grid.nx(), jx as i64) || !dealias_keep(ny, grid.ky_index(my)) {
            *c = Complex64::default();
        }
    }
}

/// `∫u²`, `∫𝓔(u)` and the KP-II Hamiltonian `H(u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrals {
    pub l2: f64,
    pub energy: f64,
    pub hamiltonian: f64,
}

/// Evaluates `∫u²`, `∫{(∂_xu)² + (∂_x^{-1}∂_yu)² + u²}` and
/// `½∫{(∂_xu)² − 3(∂_x^{-1}∂_yu)² − 2u³}` by rectangle-rule quadrature.
pub fn energy_density_integrals(f: &Field2D) -> Result<Integrals> {
    let grid = f.grid();
    let ux = spectral_derivative(f, 1, 0);
    let uy = spectral_derivative(f, 0, 1);
    let w = antiderivative_x(&uy)?;
    let cell = grid.dx() * grid.dy();
    let (mut s2, mut sx, mut sw, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..grid.len() {
        let u = f.values()[i];
        let a = ux.values()[i];
        let b = w.values()[i];
        s2 += u * u;
        sx += a * a;
        sw += b * b;
        s3 += u * u * u;
    }
    Ok(Integrals {
        l2: s2 * cell,
        energy: (sx + sw + s2) * cell,
        hamiltonian: 0.5 * (sx - 3.0 * sw - 2.0 * s3) * cell,
    })
}

/// `∫u²` from the spectral coefficients (Parseval).
pub fn l2_spectral(f: &Field2D) -> f64 {
    let grid = f.grid();
    let ny = grid.ny();
    let mut sum = 0.0;
    for (idx, c) in f.spectral().iter().enumerate() {
        let jx = idx / ny;
        let weight = if jx == 0 || grid.is_kx_nyquist(jx) { 1.0 } else { 2.0 };
        sum += weight * c.norm_sqr();
    }
    sum * grid.lx() * grid.ly()
}

/// Writes the little-endian snapshot format: `nx, ny` as u64, `lx, ly` as f64,
/// then the samples row-major (x fastest) as f64.
pub fn write_snapshot<W: Write>(mut w: W, f: &Field2D) -> Result<()> {
    let g = f.grid();
    w.write_all(&(g.nx() as u64).to_le_bytes())?;
    w.write_all(&(g.ny() as u64).to_le_bytes())?;
    w.write_all(&g.lx().to_le_bytes())?;
    w.write_all(&g.ly().to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * g.len());
    for v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Field2D> {
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let nx = u64::from_le_bytes(next(&mut r)?) as usize;
    let ny = u64::from_le_bytes(next(&mut r)?) as usize;
    let lx = f64::from_le_bytes(next(&mut r)?);
    let ly = f64::from_le_bytes(next(&mut r)?);
    let grid = Grid2D::new(nx, ny, lx, ly)?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Field2D::from_values(&grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::{phi, phi_xx};

    fn grid() -> Grid2D {
        Grid2D::new(128, 64, 40.0, 20.0).unwrap()
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(Grid2D::new(100, 64, 1.0, 1.0).is_err());
        assert!(Grid2D::new(32, 64, 1.0, 1.0).is_err());
        assert!(Grid2D::new(64, 64, -1.0, 1.0).is_err());
    }

    #[test]
    fn wavenumbers_are_centered() {
        let g = grid();
        assert_eq!(g.kx(0), 0.0);
        assert_eq!(g.ky(0), 0.0);
        assert_eq!(g.ky_index(g.ny() - 1), -1);
        assert_eq!(g.ky_index(g.ny() / 2), (g.ny() / 2) as i64);
        assert_eq!(g.y(g.ny() / 2), 0.0);
    }

    #[test]
    fn zero_order_derivative_is_identity() {
        let g = grid();
        let f = Field2D::from_fn(&g, |x, y| (x * 0.3).sin() * (0.2 * y).cos());
        let d = spectral_derivative(&f, 0, 0);
        assert_eq!(d.values(), f.values());
    }

    #[test]
    fn single_mode_derivative() {
        let g = grid();
        let k = 2.0 * PI / g.lx();
        let f = Field2D::from_fn(&g, |x, _| (k * x).sin());
        let d = spectral_derivative(&f, 1, 0);
        let err = (0..g.len())
            .map(|i| {
                let x = g.x(i % g.nx());
                (d.values()[i] - k * (k * x).cos()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn soliton_second_derivative_matches_closed_form() {
        let g = Grid2D::new(512, 64, 80.0, 20.0).unwrap();
        let xc = g.lx() / 2.0;
        let f = Field2D::from_fn(&g, |x, _| phi(x - xc, 2.0));
        let d = spectral_derivative(&f, 2, 0);
        let mut err: f64 = 0.0;
        for ix in 0..g.nx() {
            let x = g.x(ix);
            if (x - xc).abs() < 30.0 {
                err = err.max((d.at(ix, 3) - phi_xx(x - xc, 2.0)).abs());
            }
        }
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn antiderivative_single_mode_and_inverse_pair() {
        let g = grid();
        let k = 2.0 * PI * 3.0 / g.lx();
        let f = Field2D::from_fn(&g, |x, y| (k * x).cos() * (1.0 + 0.1 * (2.0 * PI * y / g.ly()).sin()));
        let a = antiderivative_x(&f).unwrap();
        for iy in [0, 17, 40] {
            let y = g.y(iy);
            for ix in 0..g.nx() {
                let x = g.x(ix);
                let expect = (k * x).sin() / k * (1.0 + 0.1 * (2.0 * PI * y / g.ly()).sin());
                assert!((a.at(ix, iy) - expect).abs() < 1e-12);
            }
        }
        let back = spectral_derivative(&a, 1, 0);
        let err = back.sub(&f).max_abs();
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn antiderivative_rejects_line_means() {
        let g = grid();
        let k = 2.0 * PI / g.lx();
        let f = Field2D::from_fn(&g, |x, y| 0.5 + (k * x).sin() * y.cos());
        match antiderivative_x(&f) {
            Err(Error::NonzeroXMean(m)) => assert!((m - 0.5).abs() < 1e-12),
            other => panic!("expected NonzeroXMean, got {other:?}"),
        }
    }

    #[test]
    fn dealias_keeps_low_band_and_kills_nyquist() {
        let g = grid();
        let kx = 2.0 * PI * 5.0 / g.lx();
        let ky = 2.0 * PI * 3.0 / g.ly();
        let f = Field2D::from_fn(&g, |x, y| (kx * x).cos() * (ky * y).sin());
        let d = dealias(&f);
        assert!(d.sub(&f).max_abs() < 1e-13);

        let nyq = Field2D::from_fn(&g, |x, _| (g.kx_max() * x).cos());
        assert!(dealias(&nyq).max_abs() < 1e-13);
    }

    #[test]
    fn dealias_reduces_noise_energy() {
        use rand::{Rng, SeedableRng};
        let g = grid();
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(7);
        let f = Field2D::from_values(&g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let before = l2_spectral(&f);
        let after = l2_spectral(&dealias(&f));
        assert!(after < before);
    }

    #[test]
    fn integrals_of_simple_fields() {
        let g = grid();
        let zero = energy_density_integrals(&Field2D::zeros(&g)).unwrap();
        assert_eq!((zero.l2, zero.energy, zero.hamiltonian), (0.0, 0.0, 0.0));

        let k = 2.0 * PI / g.lx();
        let s = energy_density_integrals(&Field2D::from_fn(&g, |x, _| (k * x).sin())).unwrap();
        assert!((s.l2 - g.lx() * g.ly() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact() {
        let g = grid();
        let f = Field2D::from_fn(&g, |x, y| (x * 1.7).sin() + 1e-300 * y);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 32 + 8 * g.len());
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }
}
