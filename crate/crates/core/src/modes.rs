//! Resonant continuous eigenmodes of the operator linearized around `φ = φ_2`,
//! their duals, and the spectral projection onto them.
//!
//! The linearized operator acting on `e^{iyη}`-modes is
//! `ℒ(η) = -∂³ + 2c∂ + 3η²∂^{-1} - 6∂(φ_c ·)`, with the right-anchored
//! antiderivative `∂^{-1}f(x) = -∫_x^∞ f`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Field2D;
use crate::soliton::{crest_position, phi, phi_x};

/// Residual threshold a mode pair must meet to count as certified.
pub const CERTIFIED_RESIDUAL: f64 = 1e-6;

/// Edge magnitude (relative to the peak) above which a weighted function is not decayed.
pub const TAIL_TOL: f64 = 1e-10;

/// Below this |η| the analytic `η → 0` limits replace the closed forms.
const ETA_LIMIT: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `√(1 + iη)`, principal branch.
pub fn beta(eta: f64) -> Complex64 {
    Complex64::new(1.0, eta).sqrt()
}

/// `4iηβ(η)`.
pub fn lambda_res(eta: f64) -> Complex64 {
    4.0 * I * eta * beta(eta)
}

/// `e^{-bx} sech x` evaluated without overflow for `Re b >= 1`.
fn exp_sech(b: Complex64, x: f64) -> Complex64 {
    if x >= 0.0 {
        2.0 * (-(b + 1.0) * x).exp() / (1.0 + (-2.0 * x).exp())
    } else {
        2.0 * ((1.0 - b) * x).exp() / (1.0 + (2.0 * x).exp())
    }
}

/// `∂_x²(e^{-bx} sech x) = e^{-bx}[b²s + 2bst + s - 2s³]`.
fn d2_exp_sech(b: Complex64, x: f64) -> Complex64 {
    let s = 1.0 / x.cosh();
    let t = x.tanh();
    exp_sech(b, x) * (b * b + 2.0 * b * t + 1.0 - 2.0 * s * s)
}

/// `g(x, η) = -i/(2ηβ) ∂_x²(e^{-βx} sech x)`; requires `η ≠ 0`.
pub fn mode_g(x: f64, eta: f64) -> Complex64 {
    let b = beta(eta);
    -I / (2.0 * eta * b) * d2_exp_sech(b, x)
}

/// `g*(x, η) = ∂_x(e^{β(-η)x} sech x)`.
pub fn mode_gstar(x: f64, eta: f64) -> Complex64 {
    let b = beta(-eta);
    let t = x.tanh();
    // e^{bx} sech x = exp_sech(-b, x)
    exp_sech(-b, x) * (b - t)
}

/// Real modes `(g1, g2)` and duals `(g1*, g2*)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealModes {
    pub g1: f64,
    pub g2: f64,
    pub g1s: f64,
    pub g2s: f64,
}

/// `g1 = 2Re g`, `g2 = -2η Im g`, `g1* = Re g*`, `g2* = -Im g*/η`, with analytic limits at `η = 0`.
pub fn duals_g12(x: f64, eta: f64) -> RealModes {
    if eta.abs() < ETA_LIMIT {
        let s2 = 1.0 / x.cosh().powi(2);
        let t = x.tanh();
        return RealModes {
            g1: 0.25 * phi_x(x, 2.0) + 0.25 * x * phi_x(x, 2.0) + 0.5 * phi(x, 2.0),
            g2: -0.5 * phi_x(x, 2.0),
            g1s: 0.5 * phi(x, 2.0),
            g2s: 0.5 * (1.0 + t + x * s2),
        };
    }
    let g = mode_g(x, eta);
    let gs = mode_gstar(x, eta);
    RealModes {
        g1: 2.0 * g.re,
        g2: -2.0 * eta * g.im,
        g1s: gs.re,
        g2s: -gs.im / eta,
    }
}

/// Dual functions rescaled to amplitude `c` at `η = 0`:
/// `g1*(z, 0, c) = c g1*(√(c/2) z, 0)` and likewise for `g2*`.
pub fn scaled_duals_at_zero(z: f64, c: f64) -> (f64, f64) {
    let m = duals_g12((c / 2.0).sqrt() * z, 0.0);
    (c * m.g1s, c * m.g2s)
}

/// A uniform window `[-X, X)` with spectral calculus for exponentially weighted functions.
#[derive(Clone)]
pub struct ModeWindow {
    half_width: f64,
    alpha: f64,
    xs: Vec<f64>,
    ks: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ModeWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModeWindow")
            .field("n", &self.xs.len())
            .field("half_width", &self.half_width)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl ModeWindow {
    pub fn new(n: usize, half_width: f64, alpha: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("window size {n} must be a power of two >= 16")));
        }
        if !(half_width > 0.0 && alpha > 0.0) {
            return Err(Error::InvalidArgument("window half width and weight must be positive".into()));
        }
        let dx = 2.0 * half_width / n as f64;
        let xs = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        let ks = (0..n)
            .map(|i| {
                let j = if i < n / 2 { i as f64 } else if i == n / 2 { 0.0 } else { i as f64 - n as f64 };
                PI * j / half_width
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            half_width,
            alpha,
            xs,
            ks,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    /// The default residual window: 4096 points on `[-40, 40)` with weight `e^{x}`.
    pub fn standard() -> Self {
        Self::new(4096, 40.0, 1.0).expect("valid standard window")
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.xs.len() as f64
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        self.xs.iter().map(|&x| f(x)).collect()
    }

    fn weighted(&self, f: &[Complex64], sign: f64) -> Result<Vec<Complex64>> {
        let w: Vec<Complex64> = f
            .iter()
            .zip(&self.xs)
            .map(|(v, &x)| v * (sign * self.alpha * x).exp())
            .collect();
        let peak = w.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
        let edge = w[0].norm().max(w[w.len() - 1].norm());
        if peak > 0.0 && edge > TAIL_TOL * peak {
            return Err(Error::TailNotDecayed(edge / peak));
        }
        Ok(w)
    }

    fn unweighted(&self, w: Vec<Complex64>, sign: f64) -> Vec<Complex64> {
        w.into_iter()
            .zip(&self.xs)
            .map(|(v, &x)| v * (-sign * self.alpha * x).exp())
            .collect()
    }

    fn to_spectrum(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut buf = w.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    fn from_spectrum(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.inv.process(&mut buf);
        let n = buf.len() as f64;
        buf.iter_mut().for_each(|v| *v /= n);
        buf
    }

    /// Applies a spectral multiplier `m(k)` to the weighted function `w`.
    fn multiply(&self, spec: &[Complex64], m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let out = spec.iter().zip(&self.ks).map(|(v, &k)| v * m(k)).collect();
        self.from_spectrum(out)
    }

    /// `ℒ(η)f` for `f` decaying under the weight `e^{αx}`.
    pub fn apply_l(&self, f: &[Complex64], eta: f64, c: f64) -> Result<Vec<Complex64>> {
        let sgn = 1.0;
        let w = self.weighted(f, sgn)?;
        let a = self.alpha;
        // in the weighted variable ∂ acts as (ik - α)
        let d = |k: f64| Complex64::new(-a, k);
        let spec = self.to_spectrum(&w);
        let lin = self.multiply(&spec, |k| {
            let dk = d(k);
            -dk * dk * dk + 2.0 * c * dk + 3.0 * eta * eta / dk
        });
        let pw: Vec<Complex64> = w
            .iter()
            .zip(&self.xs)
            .map(|(v, &x)| v * phi(x, c))
            .collect();
        let dpw = self.multiply(&self.to_spectrum(&pw), d);
        let out = lin.iter().zip(&dpw).map(|(l, p)| l - 6.0 * p).collect();
        Ok(self.unweighted(out, sgn))
    }

    /// `ℒ(η)* h = ∂³h - 2c∂h - 3η²∫_{-∞}^x h + 6φ_c ∂h` for `h` decaying under `e^{-αx}`.
    pub fn apply_l_adjoint(&self, h: &[Complex64], eta: f64, c: f64) -> Result<Vec<Complex64>> {
        let sgn = -1.0;
        let w = self.weighted(h, sgn)?;
        let a = self.alpha;
        let d = |k: f64| Complex64::new(a, k);
        let spec = self.to_spectrum(&w);
        let lin = self.multiply(&spec, |k| {
            let dk = d(k);
            dk * dk * dk - 2.0 * c * dk - 3.0 * eta * eta / dk
        });
        let dw = self.multiply(&spec, d);
        let out = lin
            .iter()
            .zip(&dw)
            .zip(&self.xs)
            .map(|((l, p), &x)| l + 6.0 * phi(x, c) * p)
            .collect();
        Ok(self.unweighted(out, sgn))
    }

    /// `‖f‖` in `L²(e^{2·sign·αx})` by the rectangle rule.
    pub fn weighted_norm(&self, f: &[Complex64], sign: f64) -> f64 {
        let s: f64 = f
            .iter()
            .zip(&self.xs)
            .map(|(v, &x)| v.norm_sqr() * (2.0 * sign * self.alpha * x).exp())
            .sum();
        (s * self.dx()).sqrt()
    }

    /// Rectangle-rule `∫ f g dx` of real samples over the window.
    pub fn pairing(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * self.dx()
    }
}

/// `‖ℒ(η)g - λg‖ / ‖g‖` in `L²(e^{2αx})`.
pub fn eigen_residual(window: &ModeWindow, eta: f64) -> Result<f64> {
    let g = window.sample(|x| mode_g(x, eta));
    let lg = window.apply_l(&g, eta, 2.0)?;
    let lam = lambda_res(eta);
    let r: Vec<Complex64> = lg.iter().zip(&g).map(|(a, b)| a - lam * b).collect();
    Ok(window.weighted_norm(&r, 1.0) / window.weighted_norm(&g, 1.0))
}

/// `‖ℒ(η)*g* - λ(-η)g*‖ / ‖g*‖` in `L²(e^{-2αx})`.
pub fn adjoint_residual(window: &ModeWindow, eta: f64) -> Result<f64> {
    let g = window.sample(|x| mode_gstar(x, eta));
    let lg = window.apply_l_adjoint(&g, eta, 2.0)?;
    let lam = lambda_res(-eta);
    let r: Vec<Complex64> = lg.iter().zip(&g).map(|(a, b)| a - lam * b).collect();
    Ok(window.weighted_norm(&r, -1.0) / window.weighted_norm(&g, -1.0))
}

/// Mode samples at one `η` with their certified residuals.
#[derive(Clone, Debug)]
pub struct ModePair {
    pub eta: f64,
    pub g: Vec<Complex64>,
    pub g_star: Vec<Complex64>,
    pub lambda: Complex64,
    pub residual: f64,
    pub adjoint_residual: f64,
}

impl ModePair {
    /// Builds the pair on `window`; requires `η ≠ 0`.
    pub fn new(window: &ModeWindow, eta: f64) -> Result<Self> {
        if eta.abs() < ETA_LIMIT {
            return Err(Error::InvalidArgument("g is singular at eta = 0".into()));
        }
        Ok(Self {
            eta,
            g: window.sample(|x| mode_g(x, eta)),
            g_star: window.sample(|x| mode_gstar(x, eta)),
            lambda: lambda_res(eta),
            residual: eigen_residual(window, eta)?,
            adjoint_residual: adjoint_residual(window, eta)?,
        })
    }

    pub fn is_certified(&self) -> bool {
        self.residual < CERTIFIED_RESIDUAL && self.adjoint_residual < CERTIFIED_RESIDUAL
    }
}

/// The matrix `∫ g_j g_k* dx` on the window.
pub fn biorthogonality(window: &ModeWindow, eta: f64) -> [[f64; 2]; 2] {
    let m: Vec<RealModes> = window.xs().iter().map(|&x| duals_g12(x, eta)).collect();
    let col = |f: fn(&RealModes) -> f64| m.iter().map(f).collect::<Vec<f64>>();
    let (g1, g2, g1s, g2s) = (col(|r| r.g1), col(|r| r.g2), col(|r| r.g1s), col(|r| r.g2s));
    [
        [window.pairing(&g1, &g1s), window.pairing(&g1, &g2s)],
        [window.pairing(&g2, &g1s), window.pairing(&g2, &g2s)],
    ]
}

/// Symmetric set of transverse frequencies in `[-η0, η0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaGrid {
    pub eta0: f64,
    pub samples: Vec<f64>,
}

impl EtaGrid {
    /// The transverse wavenumbers `2πj/Ly` with `|2πj/Ly| <= η0`.
    pub fn for_period(eta0: f64, ly: f64) -> Self {
        let step = 2.0 * PI / ly;
        let jmax = (eta0 / step + 1e-12).floor() as i64;
        Self {
            eta0,
            samples: (-jmax..=jmax).map(|j| j as f64 * step).collect(),
        }
    }
}

/// Output of the projection: `a_k(η)` on the transverse grid frequencies.
#[derive(Clone, Debug)]
pub struct P0Coefficients {
    pub etas: Vec<f64>,
    pub a1: Vec<Complex64>,
    pub a2: Vec<Complex64>,
}

/// Continuous transverse transform `(2π)^{-1/2}∫ f(x, y) e^{-iyη} dy` of every x-column.
pub fn transverse_transform(f: &Field2D, eta: f64) -> Vec<Complex64> {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let phases: Vec<Complex64> = (0..ny)
        .map(|iy| Complex64::from_polar(1.0, -eta * g.y(iy)))
        .collect();
    let scale = g.dy() / (2.0 * PI).sqrt();
    let mut out = vec![Complex64::default(); nx];
    for (iy, p) in phases.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(f.row(iy)) {
            *o += p * v;
        }
    }
    out.iter_mut().for_each(|o| *o *= scale);
    debug_assert_eq!(out.len(), nx);
    out
}

/// `a_k(η) = ∫ (𝓕_y f)(x, η) g_k*(x - x_c, η) dx` for the grid frequencies with `|η| <= η0`,
/// with `x_c` the reference crest.
pub fn project_p0(f: &Field2D, eta0: f64) -> P0Coefficients {
    let g = f.grid();
    let xc = crest_position(f);
    let etas = EtaGrid::for_period(eta0, g.ly()).samples;
    let mut a1 = Vec::with_capacity(etas.len());
    let mut a2 = Vec::with_capacity(etas.len());
    for &eta in &etas {
        let ft = transverse_transform(f, eta);
        let (mut s1, mut s2) = (Complex64::default(), Complex64::default());
        for (ix, v) in ft.iter().enumerate() {
            let m = duals_g12(g.x(ix) - xc, eta);
            s1 += v * m.g1s;
            s2 += v * m.g2s;
        }
        a1.push(s1 * g.dx());
        a2.push(s2 * g.dx());
    }
    P0Coefficients { etas, a1, a2 }
}

/// `P_0 f(x, y) = (2π)^{-1/2} Σ_k ∫ a_k(η) g_k(x, η) e^{iyη} dη` as a grid field.
pub fn reconstruct_p0(like: &Field2D, coef: &P0Coefficients) -> Field2D {
    let g = like.grid();
    let xc = crest_position(like);
    let deta = 2.0 * PI / g.ly();
    let mut values = vec![0.0; g.len()];
    let nx = g.nx();
    for (k, &eta) in coef.etas.iter().enumerate() {
        let col: Vec<Complex64> = (0..nx)
            .map(|ix| {
                let m = duals_g12(g.x(ix) - xc, eta);
                coef.a1[k] * m.g1 + coef.a2[k] * m.g2
            })
            .collect();
        for iy in 0..g.ny() {
            let p = Complex64::from_polar(deta / (2.0 * PI).sqrt(), eta * g.y(iy));
            for ix in 0..nx {
                values[iy * nx + ix] += (col[ix] * p).re;
            }
        }
    }
    Field2D::from_values(g, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    #[test]
    fn beta_and_lambda_at_zero() {
        assert_eq!(beta(0.0), Complex64::new(1.0, 0.0));
        assert_eq!(lambda_res(0.0), Complex64::default());
    }

    #[test]
    fn lambda_in_stable_half_plane() {
        for eta in [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0] {
            assert!(lambda_res(eta).re < 0.0, "eta = {eta}");
        }
    }

    #[test]
    fn nu_bounded_by_quadratic() {
        for i in -100..=100 {
            let eta = i as f64 / 100.0;
            assert!(beta(eta).re - 1.0 <= eta * eta / 8.0 + 1e-15);
        }
    }

    #[test]
    fn gstar_at_origin_for_zero_eta() {
        assert!((mode_gstar(0.0, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn second_derivative_closed_form_vs_finite_difference() {
        let h = 1e-4;
        for eta in [0.1, 0.4, -0.7] {
            let b = beta(eta);
            for i in -100..=100 {
                let x = i as f64 * 0.1;
                let fd = (exp_sech(b, x + h) - 2.0 * exp_sech(b, x) + exp_sech(b, x - h)) / (h * h);
                assert!((fd - d2_exp_sech(b, x)).norm() < 1e-6, "eta {eta} x {x}");
            }
        }
    }

    #[test]
    fn gstar_is_derivative() {
        let h = 1e-5;
        for eta in [0.0, 0.2, -0.3] {
            let b = beta(-eta);
            for i in -50..=50 {
                let x = i as f64 * 0.2;
                let f = |x: f64| exp_sech(-b, x);
                let fd = (f(x + h) - f(x - h)) / (2.0 * h);
                assert!((fd - mode_gstar(x, eta)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn g_decay_rate_at_positive_infinity() {
        let eta = 0.2;
        let xs: Vec<f64> = (0..=40).map(|i| 10.0 + 0.5 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| mode_g(x, eta).norm().ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let expect = -(1.0 + beta(eta).re);
        assert!(((slope - expect) / expect).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn conjugate_symmetry_and_real_duals() {
        for eta in [0.05, 0.3] {
            for i in -40..=40 {
                let x = i as f64 * 0.25;
                assert!((mode_g(x, -eta) - mode_g(x, eta).conj()).norm() < 1e-12);
                assert!((mode_gstar(x, -eta) - mode_gstar(x, eta).conj()).norm() < 1e-12);
                let a = duals_g12(x, eta);
                let b = duals_g12(x, -eta);
                assert!((a.g1 - b.g1).abs() < 1e-12 && (a.g2 - b.g2).abs() < 1e-12);
                assert!((a.g1s - b.g1s).abs() < 1e-12 && (a.g2s - b.g2s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_limits_match_small_eta() {
        for i in -40..=40 {
            let x = i as f64 * 0.25;
            let z = duals_g12(x, 0.0);
            let s = duals_g12(x, 1e-4);
            assert!((z.g1 - s.g1).abs() < 1e-6, "g1 at {x}");
            assert!((z.g2 - s.g2).abs() < 1e-6, "g2 at {x}");
            assert!((z.g1s - s.g1s).abs() < 1e-6, "g1* at {x}");
            assert!((z.g2s - s.g2s).abs() < 1e-6, "g2* at {x}");
        }
    }

    #[test]
    fn biorthogonal_at_zero() {
        let w = ModeWindow::standard();
        let m = biorthogonality(&w, 0.0);
        assert!((m[0][0] - 1.0).abs() < 1e-8);
        assert!((m[1][1] - 1.0).abs() < 1e-8);
        assert!(m[1][0].abs() < 1e-8);
    }

    #[test]
    fn translation_mode_is_in_kernel() {
        let w = ModeWindow::standard();
        let f = w.sample(|x| Complex64::new(phi_x(x, 2.0), 0.0));
        let r = w.apply_l(&f, 0.0, 2.0).unwrap();
        let rel = w.weighted_norm(&r, 1.0) / w.weighted_norm(&f, 1.0);
        assert!(rel < 1e-8, "relative residual {rel}");
    }

    #[test]
    fn undecayed_input_is_rejected() {
        let w = ModeWindow::new(256, 10.0, 1.0).unwrap();
        let f = w.sample(|_| Complex64::new(1.0, 0.0));
        assert!(matches!(w.apply_l(&f, 0.1, 2.0), Err(Error::TailNotDecayed(_))));
    }

    #[test]
    fn eigen_pairs_are_certified() {
        let w = ModeWindow::standard();
        for eta in [0.05, 0.1, 0.3] {
            let p = ModePair::new(&w, eta).unwrap();
            assert!(p.is_certified(), "eta {eta}: {} {}", p.residual, p.adjoint_residual);
        }
    }

    #[test]
    fn projection_vanishes_beyond_cutoff_and_for_fast_oscillation() {
        let g = Grid2D::new(512, 64, 80.0, 64.0).unwrap();
        let f = Field2D::from_fn(&g, |x, y| {
            let s = x - 40.0;
            (16.0 * s).cos() * (-s * s / 32.0).exp() * (-y * y / 16.0).exp()
        });
        let p = project_p0(&f, 0.5);
        assert!(p.etas.iter().all(|e| e.abs() <= 0.5));
        for k in 0..p.etas.len() {
            assert!(p.a1[k].norm() < 1e-6 && p.a2[k].norm() < 1e-6, "{} {} {}", p.etas[k], p.a1[k], p.a2[k]);
        }
    }
}
