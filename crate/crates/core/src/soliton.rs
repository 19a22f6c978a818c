//! Line solitons `φ_c(x) = c sech²(√(c/2) x)`, the mass corrector `ψ_{c,L}`
//! and the split of initial data into amplitude and zero-mean parts.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::Field2D;

/// Parameters of one soliton slice: amplitude `c`, position `x0` and bump offset `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub c: f64,
    pub x0: f64,
    pub l: f64,
}

impl SolitonParams {
    pub fn new(c: f64, x0: f64, l: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude must be positive, got {c}")));
        }
        if !(l >= 0.0) {
            return Err(Error::InvalidArgument(format!("bump offset must be >= 0, got {l}")));
        }
        Ok(Self { c, x0, l })
    }

    pub fn profile(&self, x: f64) -> f64 {
        phi(x - self.x0, self.c)
    }

    /// `φ_c(x - x0) - ψ_{c,L}(x - x0 + shift)`.
    pub fn corrected_profile(&self, x: f64, shift: f64) -> f64 {
        phi(x - self.x0, self.c) - psi_cl(x - self.x0 + shift, self.c, self.l)
    }
}

fn parts(x: f64, c: f64) -> (f64, f64, f64) {
    let a = (c / 2.0).sqrt();
    let u = a * x;
    let s = 1.0 / u.cosh();
    (a, s, u.tanh())
}

pub fn phi(x: f64, c: f64) -> f64 {
    let (_, s, _) = parts(x, c);
    c * s * s
}

pub fn phi_x(x: f64, c: f64) -> f64 {
    let (a, s, t) = parts(x, c);
    -2.0 * a * c * s * s * t
}

pub fn phi_xx(x: f64, c: f64) -> f64 {
    let (_, s, t) = parts(x, c);
    let s2 = s * s;
    -c * c * (s2 * s2 - 2.0 * s2 * t * t)
}

pub fn phi_xxx(x: f64, c: f64) -> f64 {
    let (a, s, t) = parts(x, c);
    let s2 = s * s;
    c * c * a * (8.0 * s2 * s2 * t - 4.0 * s2 * t * t * t)
}

/// `∂_c φ_c(x)`.
pub fn phi_dc(x: f64, c: f64) -> f64 {
    let (a, s, t) = parts(x, c);
    s * s * (1.0 - a * x * t)
}

/// `∂_c² φ_c(x)`.
pub fn phi_dc2(x: f64, c: f64) -> f64 {
    let (a, s, t) = parts(x, c);
    let u = a * x;
    u / (2.0 * c) * s * s * (-3.0 * t + 2.0 * u * t * t - u * s * s)
}

/// `∫ φ_c dx = 2√(2c)`.
pub fn phi_mass(c: f64) -> f64 {
    2.0 * (2.0 * c).sqrt()
}

/// `∫ φ_c² dx = (4/3)√2 c^{3/2}`.
pub fn phi_l2(c: f64) -> f64 {
    4.0 / 3.0 * 2f64.sqrt() * c.powf(1.5)
}

/// Unit-mass bump supported on `(-1, 1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Bump {
    /// `N exp(-1/(1 - x²))`.
    #[default]
    Smooth,
    /// `(1 + cos πx) / 2`.
    Cosine,
}

fn smooth_bump_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        // the integrand is flat to all orders at ±1, so the trapezoid rule converges spectrally
        let n = 4000;
        let h = 2.0 / n as f64;
        let sum: f64 = (1..n)
            .map(|i| {
                let x = -1.0 + i as f64 * h;
                (-1.0 / (1.0 - x * x)).exp()
            })
            .sum();
        1.0 / (sum * h)
    })
}

impl Bump {
    pub fn eval(self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            Bump::Smooth => smooth_bump_norm() * (-1.0 / (1.0 - x * x)).exp(),
            Bump::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * x).cos()),
        }
    }
}

/// `ψ_{c,L}(x) = 2(√(2c) - 2) ψ(x + L)` with the default bump.
pub fn psi_cl(x: f64, c: f64, l: f64) -> f64 {
    psi_cl_with(Bump::Smooth, x, c, l)
}

pub fn psi_cl_with(bump: Bump, x: f64, c: f64, l: f64) -> f64 {
    2.0 * ((2.0 * c).sqrt() - 2.0) * bump.eval(x + l)
}

/// Position of the reference soliton crest on a grid: the middle of the x-period.
pub fn crest_position(f: &Field2D) -> f64 {
    f.grid().lx() / 2.0
}

/// Splits `v0` into line amplitudes `c1(y)` and a perturbation `v*` whose
/// x-lines all have zero mean:
/// `c1 = (√c0 + ∫v0 dx / (2√2))²`, `v* = v0 + φ_{c0} - φ_{c1}`.
pub fn initial_decomposition(v0: &Field2D, c0: f64) -> Result<(Vec<f64>, Field2D)> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("c0 must be positive, got {c0}")));
    }
    let grid = v0.grid();
    let xc = crest_position(v0);
    let masses = v0.line_integrals();
    let mut c1 = Vec::with_capacity(masses.len());
    for (index, m) in masses.iter().enumerate() {
        let root = c0.sqrt() + m / (2.0 * 2f64.sqrt());
        if root <= 0.0 {
            return Err(Error::AmplitudeCollapse { index, value: root * root });
        }
        c1.push(root * root);
    }
    let nx = grid.nx();
    let base: Vec<f64> = (0..nx).map(|ix| phi(grid.x(ix) - xc, c0)).collect();
    let mut values = v0.values().to_vec();
    for (iy, c) in c1.iter().enumerate() {
        for ix in 0..nx {
            values[iy * nx + ix] += base[ix] - phi(grid.x(ix) - xc, *c);
        }
    }
    Ok((c1, Field2D::from_values(grid, values)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn crest_value() {
        assert_eq!(phi(0.0, 2.0), 2.0);
        assert_eq!(phi(0.0, 3.7), 3.7);
    }

    #[test]
    fn mass_and_l2_by_quadrature() {
        for c in [1.5, 2.0, 2.4] {
            let m = trapezoid(|x| phi(x, c), -60.0, 60.0, 24000);
            assert_relative_eq!(m, phi_mass(c), max_relative = 1e-10);
            let q = trapezoid(|x| phi(x, c).powi(2), -60.0, 60.0, 24000);
            assert_relative_eq!(q, phi_l2(c), max_relative = 1e-10);
        }
    }

    #[test]
    fn derivatives_against_finite_differences() {
        let h = 1e-4;
        for &c in &[1.8, 2.0, 2.3] {
            for i in -40..=40 {
                let x = i as f64 * 0.2;
                let d1 = (phi(x + h, c) - phi(x - h, c)) / (2.0 * h);
                assert!((d1 - phi_x(x, c)).abs() < 1e-7);
                let d2 = (phi_x(x + h, c) - phi_x(x - h, c)) / (2.0 * h);
                assert!((d2 - phi_xx(x, c)).abs() < 1e-7);
                let d3 = (phi_xx(x + h, c) - phi_xx(x - h, c)) / (2.0 * h);
                assert!((d3 - phi_xxx(x, c)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn amplitude_derivatives_against_finite_differences() {
        let h = 1e-5;
        let fd = (phi(0.0, 2.0 + h) - phi(0.0, 2.0 - h)) / (2.0 * h);
        assert!((fd - phi_dc(0.0, 2.0)).abs() < 1e-8);
        for i in -30..=30 {
            let x = i as f64 * 0.25;
            let fd = (phi(x, 2.0 + h) - phi(x, 2.0 - h)) / (2.0 * h);
            assert!((fd - phi_dc(x, 2.0)).abs() < 1e-8, "x = {x}");
            let fd2 = (phi_dc(x, 2.0 + h) - phi_dc(x, 2.0 - h)) / (2.0 * h);
            assert!((fd2 - phi_dc2(x, 2.0)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn traveling_wave_ode() {
        for &c in &[1.5, 2.0, 2.6] {
            for i in -100..=100 {
                let x = i as f64 * 0.1;
                let r = -2.0 * c * phi_x(x, c) + phi_xxx(x, c) + 6.0 * phi(x, c) * phi_x(x, c);
                assert!(r.abs() < 1e-8, "c = {c}, x = {x}, r = {r}");
            }
        }
    }

    #[test]
    fn psi_vanishes_at_reference_amplitude() {
        for i in -50..=50 {
            assert_eq!(psi_cl(i as f64 * 0.05 - 20.0, 2.0, 20.0), 0.0);
        }
    }

    #[test]
    fn psi_mass_balances_soliton_mass() {
        for bump in [Bump::Smooth, Bump::Cosine] {
            for &c in &[1.7, 2.2, 2.5] {
                let lhs = trapezoid(|x| psi_cl_with(bump, x, c, 5.0), -7.0, -3.0, 20000);
                let rhs = trapezoid(|x| phi(x, c) - phi(x, 2.0), -60.0, 60.0, 24000);
                assert!((lhs - rhs).abs() < 1e-8, "{bump:?} c = {c}: {lhs} vs {rhs}");
                assert!((lhs - (phi_mass(c) - 4.0)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn psi_support() {
        let l = 3.0;
        for i in 0..200 {
            let x = -10.0 + i as f64 * 0.1;
            if (x + l).abs() >= 1.0 {
                assert_eq!(psi_cl(x, 2.5, l), 0.0);
            }
        }
    }

    fn grid() -> Grid2D {
        Grid2D::new(256, 64, 60.0, 30.0).unwrap()
    }

    #[test]
    fn decomposition_of_zero() {
        let g = grid();
        let (c1, vs) = initial_decomposition(&Field2D::zeros(&g), 2.0).unwrap();
        assert!(c1.iter().all(|&c| (c - 2.0).abs() < 1e-14));
        assert!(vs.max_abs() < 1e-14);
    }

    #[test]
    fn decomposition_of_amplitude_shift() {
        let g = grid();
        let xc = g.lx() / 2.0;
        let v0 = Field2D::from_fn(&g, |x, _| phi(x - xc, 2.1) - phi(x - xc, 2.0));
        let (c1, vs) = initial_decomposition(&v0, 2.0).unwrap();
        for c in c1 {
            assert!((c - 2.1).abs() < 1e-9);
        }
        assert!(vs.max_abs() < 1e-9);
    }

    #[test]
    fn decomposition_keeps_zero_mean_input() {
        let g = grid();
        let xc = g.lx() / 2.0;
        let v0 = Field2D::from_fn(&g, |x, y| {
            let s = x - xc - 2.0;
            -0.02 * s * (-s * s - y * y / 9.0).exp()
        });
        let (c1, vs) = initial_decomposition(&v0, 2.0).unwrap();
        assert!(c1.iter().all(|c| (c - 2.0).abs() < 1e-12));
        assert!(vs.sub(&v0).max_abs() < 1e-12);
    }

    #[test]
    fn decomposition_detects_collapse() {
        let g = grid();
        let v0 = Field2D::from_fn(&g, |_, _| -0.2);
        assert!(matches!(
            initial_decomposition(&v0, 2.0),
            Err(Error::AmplitudeCollapse { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn decomposition_has_zero_line_means(
            amp in -0.05f64..0.05,
            xo in -4.0f64..4.0,
            wx in 0.8f64..2.5,
            wy in 2.0f64..6.0,
        ) {
            let g = grid();
            let xc = g.lx() / 2.0;
            let v0 = Field2D::from_fn(&g, |x, y| {
                let s = (x - xc - xo) / wx;
                amp * (-s * s - (y / wy).powi(2)).exp()
            });
            let (_, vs) = initial_decomposition(&v0, 2.0).unwrap();
            prop_assert!(vs.max_line_mean() < 1e-8);
        }
    }
}
