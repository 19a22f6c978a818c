//! The linearized modulation system for `(b, x̃)`: its symbol `A*(η)`, the
//! closed-form propagator, the low-frequency kernels `K1, K2, K3` and the
//! heat/box comparators they approach for large times.
//!
//! Kernels are inverse transforms `K(y) = (2π)^{-1} ∫ m(η) e^{iyη} dη`, so that
//! `K * f` acts on transforms as multiplication by the symbol `m`. They are
//! evaluated with the trapezoid rule in `η`, which on a period `P` is exactly
//! the periodization `Σ_n K(y + nP)`; the period is doubled until the norms settle.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `μ3 = 1/2 + π²/24`.
pub fn mu3() -> f64 {
    0.5 + PI * PI / 24.0
}

/// Shape of the transition of the low-frequency cutoff between `η0/2` and `3η0/4`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CutoffShape {
    /// Quintic smoothstep (C²).
    #[default]
    Quintic,
    /// `e^{-1/r} / (e^{-1/r} + e^{-1/(1-r)})` (C∞).
    Smooth,
}

/// Constants of the modulation system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulationConstants {
    pub mu3: f64,
    pub eta0: f64,
    pub cutoff: CutoffShape,
}

impl Default for ModulationConstants {
    fn default() -> Self {
        Self::new(0.5)
    }
}

impl ModulationConstants {
    pub fn new(eta0: f64) -> Self {
        Self {
            mu3: mu3(),
            eta0,
            cutoff: CutoffShape::Quintic,
        }
    }

    /// Low-frequency cutoff: 1 on `|η| <= η0/2`, 0 on `|η| >= 3η0/4`.
    pub fn chi1(&self, eta: f64) -> f64 {
        let r = (eta.abs() - 0.5 * self.eta0) / (0.25 * self.eta0);
        if r <= 0.0 {
            return 1.0;
        }
        if r >= 1.0 {
            return 0.0;
        }
        let step = match self.cutoff {
            CutoffShape::Quintic => r * r * r * (10.0 - 15.0 * r + 6.0 * r * r),
            CutoffShape::Smooth => {
                let a = (-1.0 / r).exp();
                let b = (-1.0 / (1.0 - r)).exp();
                a / (a + b)
            }
        };
        1.0 - step
    }

    pub fn chi2(&self, eta: f64) -> f64 {
        1.0 - self.chi1(eta)
    }

    /// Largest frequency in the support of the cutoff.
    pub fn eta_max(&self) -> f64 {
        0.75 * self.eta0
    }

    pub fn omega(&self, eta: f64) -> f64 {
        (16.0 + (8.0 * self.mu3 - 1.0) * eta * eta).sqrt()
    }
}

/// `ω(η) = √(16 + (8μ3 - 1)η²)`.
pub fn omega(eta: f64) -> f64 {
    (16.0 + (8.0 * mu3() - 1.0) * eta * eta).sqrt()
}

/// `ω(η) - 4`, evaluated without cancellation.
pub fn omega_tilde(eta: f64) -> f64 {
    let q = (8.0 * mu3() - 1.0) * eta * eta;
    q / (omega(eta) + 4.0)
}

pub type Mat2 = [[f64; 2]; 2];
pub type CMat2 = [[Complex64; 2]; 2];

pub fn a_star(eta: f64) -> Mat2 {
    let e2 = eta * eta;
    [[-3.0 * e2, -8.0 * e2], [2.0 + mu3() * e2, -e2]]
}

/// Eigenvector matrix `(1/4η)[[8η, 8η], [-η - iω, -η + iω]]`.
pub fn p_star(eta: f64) -> Result<CMat2> {
    if eta.abs() < 1e-12 {
        return Err(Error::SingularP(eta.abs()));
    }
    let w = omega(eta);
    let s = 1.0 / (4.0 * eta);
    Ok([
        [Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0)],
        [Complex64::new(-eta, -w) * s, Complex64::new(-eta, w) * s],
    ])
}

/// `λ*^± = -2η² ± iηω(η)`.
pub fn lambda_star(eta: f64) -> (Complex64, Complex64) {
    let re = -2.0 * eta * eta;
    let im = eta * omega(eta);
    (Complex64::new(re, im), Complex64::new(re, -im))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

/// `e^{tA*(η)} = e^{-2tη²}(cos θ I + t sinc θ B)` with `θ = tηω` and `B = A* + 2η²I`.
pub fn exp_ta(eta: f64, t: f64) -> Mat2 {
    let e2 = eta * eta;
    let w = omega(eta);
    let theta = t * eta * w;
    let (c, ts) = (theta.cos(), t * sinc(theta));
    let damp = (-2.0 * t * e2).exp();
    [
        [damp * (c - e2 * ts), damp * (-8.0 * e2 * ts)],
        [damp * (2.0 + mu3() * e2) * ts, damp * (c + e2 * ts)],
    ]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Largest singular value of a real 2×2 matrix.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    (0.5 * (tr + disc)).sqrt()
}

/// Heat kernel `H_t(y) = (4πt)^{-1/2} e^{-y²/4t}`.
pub fn heat_h(t: f64, y: f64) -> f64 {
    (-y * y / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// Box `W_t(y) = ½ 1_{[-t, t]}(y)`.
pub fn box_w(t: f64, y: f64) -> f64 {
    if y.abs() <= t {
        0.5
    } else {
        0.0
    }
}

/// `(H_{2τ} * W_{4τ})(y) = ¼[erf((y + 4τ)/√(8τ)) - erf((y - 4τ)/√(8τ))]`.
pub fn heat_box(tau: f64, y: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let s = (8.0 * tau).sqrt();
    0.25 * (erf((y + 4.0 * tau) / s) - erf((y - 4.0 * tau) / s))
}

/// A periodic transverse grid `y_m = (m - n/2) dy` of period `n·dy`.
#[derive(Clone)]
pub struct KernelGrid {
    n: usize,
    dy: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelGrid").field("n", &self.n).field("dy", &self.dy).finish()
    }
}

impl KernelGrid {
    pub fn new(n: usize, dy: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() || !(dy > 0.0) {
            return Err(Error::InvalidArgument(format!("bad kernel grid n = {n}, dy = {dy}")));
        }
        let mut p = FftPlanner::new();
        Ok(Self {
            n,
            dy,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        })
    }

    /// Smallest grid with spacing `dy` whose period is at least `period`.
    pub fn with_period(period: f64, dy: f64) -> Result<Self> {
        let n = ((period / dy).ceil() as usize).next_power_of_two().max(16);
        Self::new(n, dy)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn period(&self) -> f64 {
        self.n as f64 * self.dy
    }
    pub fn y(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.dy
    }
    pub fn ys(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.y(m)).collect()
    }
    /// Signed frequency of FFT bin `j`.
    pub fn eta(&self, j: usize) -> f64 {
        let n = self.n as i64;
        let jj = j as i64;
        let k = if jj < n / 2 { jj } else { jj - n };
        2.0 * PI * k as f64 / self.period()
    }
    fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    pub fn doubled(&self) -> Result<Self> {
        Self::new(2 * self.n, self.dy)
    }

    /// `(2π)^{-1} Σ_j m(η_j) e^{iη_j y} Δη`, i.e. the periodized inverse transform of `m`.
    pub fn kernel_from_symbol(&self, m: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = (0..self.n)
            .map(|j| {
                if self.is_nyquist(j) {
                    return Complex64::default();
                }
                // y_0 = -P/2 contributes the phase (-1)^j
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                m(self.eta(j)) * sign
            })
            .collect();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.period();
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Unitary inverse transform `(2π)^{-1/2} ∫ F(η) e^{iyη} dη` of a band-limited `F`.
    pub fn function_from_transform(&self, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let s = (2.0 * PI).sqrt();
        self.kernel_from_symbol(|e| f(e) * s)
    }

    /// Periodic spectral samples: forward DFT with the `(-1)^j` origin phase removed.
    fn spectrum(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        self.fwd.process(&mut buf);
        for (j, b) in buf.iter_mut().enumerate() {
            if j % 2 == 1 {
                *b = -*b;
            }
        }
        buf
    }

    fn from_spectrum(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        for (j, b) in buf.iter_mut().enumerate() {
            if j % 2 == 1 {
                *b = -*b;
            }
        }
        self.inv.process(&mut buf);
        let n = self.n as f64;
        buf.iter_mut().for_each(|v| *v /= n);
        buf
    }

    /// `v(y - a)` for a periodic band-limited sample `v`.
    pub fn shift(&self, v: &[Complex64], a: f64) -> Vec<Complex64> {
        let spec = self.spectrum(v);
        let out = spec
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                if self.is_nyquist(j) {
                    Complex64::default()
                } else {
                    c * Complex64::from_polar(1.0, -a * self.eta(j))
                }
            })
            .collect();
        self.from_spectrum(out)
    }

    /// `∫_{y-a}^{y+a} v` for a periodic band-limited sample `v`.
    pub fn window_integral(&self, v: &[Complex64], a: f64) -> Vec<Complex64> {
        let spec = self.spectrum(v);
        let n = self.n as f64;
        let mean = spec[0] / n;
        let mut anti = spec.clone();
        for (j, c) in anti.iter_mut().enumerate() {
            let e = self.eta(j);
            *c = if j == 0 || self.is_nyquist(j) { Complex64::default() } else { *c / (I * e) };
        }
        let anti = self.from_spectrum(anti);
        let plus = self.shift(&anti, -a);
        let minus = self.shift(&anti, a);
        plus.iter()
            .zip(&minus)
            .map(|(p, m)| p - m + mean * (2.0 * a))
            .collect()
    }
}

/// `(L¹, L², L∞)` norms of a sampled kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl KernelNorms {
    pub fn of(v: &[f64], dy: f64) -> Self {
        Self {
            l1: v.iter().map(|x| x.abs()).sum::<f64>() * dy,
            l2: (v.iter().map(|x| x * x).sum::<f64>() * dy).sqrt(),
            linf: v.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
        }
    }

    fn max_rel_change(&self, other: &Self) -> f64 {
        let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
        rel(self.l1, other.l1)
            .max(rel(self.l2, other.l2))
            .max(rel(self.linf, other.linf))
    }
}

/// Tabulated `K1, K2, K3, ∂_yK3` at one time.
#[derive(Clone, Debug)]
pub struct KernelSample {
    pub t: f64,
    pub ys: Vec<f64>,
    pub dy: f64,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k3: Vec<f64>,
    pub dyk3: Vec<f64>,
    /// Norms of `K1, K2, K3, ∂_yK3` in that order.
    pub norms: [KernelNorms; 4],
}

/// The four kernel symbols at time `t`.
pub fn kernel_symbols(c: &ModulationConstants, t: f64, eta: f64) -> [f64; 4] {
    let chi = c.chi1(eta);
    if chi == 0.0 {
        return [0.0; 4];
    }
    let w = c.omega(eta);
    let theta = t * eta * w;
    let damp = chi * (-2.0 * t * eta * eta).exp();
    let s_over_eta = w * t * sinc(theta); // sin(tηω)/η
    [
        damp * theta.cos(),
        damp * eta * theta.sin() / w,
        damp * w * s_over_eta,
        // ∂_y contributes iη; the real kernel is the inverse transform of iη·m3
        damp * w * theta.sin(),
    ]
}

/// Refinement limit: the period may double at most this many times.
const MAX_DOUBLINGS: usize = 8;
/// Relative norm change accepted as converged.
const NORM_TOL: f64 = 1e-3;

fn tabulate(c: &ModulationConstants, t: f64, grid: &KernelGrid) -> KernelSample {
    let k1 = grid.kernel_from_symbol(|e| kernel_symbols(c, t, e)[0].into());
    let k2 = grid.kernel_from_symbol(|e| kernel_symbols(c, t, e)[1].into());
    let k3 = grid.kernel_from_symbol(|e| kernel_symbols(c, t, e)[2].into());
    let dk3 = grid.kernel_from_symbol(|e| I * kernel_symbols(c, t, e)[3]);
    let re = |v: Vec<Complex64>| v.into_iter().map(|z| z.re).collect::<Vec<f64>>();
    let (k1, k2, k3, dyk3) = (re(k1), re(k2), re(k3), re(dk3));
    let dy = grid.dy();
    let norms = [
        KernelNorms::of(&k1, dy),
        KernelNorms::of(&k2, dy),
        KernelNorms::of(&k3, dy),
        KernelNorms::of(&dyk3, dy),
    ];
    KernelSample { t, ys: grid.ys(), dy, k1, k2, k3, dyk3, norms }
}

/// Smallest period used for kernels at time `t`: the `±4t` fronts plus room for
/// 16 samples per period of the phase `tηω` in `η`.
pub fn default_kernel_grid(t: f64, dy: f64) -> Result<KernelGrid> {
    KernelGrid::with_period((64.0 * t).max(16.0 * t + 512.0), dy)
}

/// Tabulates the kernels at time `t`, doubling the period of `grid` until all
/// norms change by less than 0.1%.
pub fn kernels_at(t: f64, c: &ModulationConstants, grid: &KernelGrid) -> Result<KernelSample> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    if grid.dy() > PI / (4.0 * c.eta_max()) {
        return Err(Error::ResolutionExceeded(format!(
            "dy = {} does not resolve the band |η| <= {}",
            grid.dy(),
            c.eta_max()
        )));
    }
    let mut g = grid.clone();
    let mut cur = tabulate(c, t, &g);
    for _ in 0..MAX_DOUBLINGS {
        g = g.doubled()?;
        let next = tabulate(c, t, &g);
        let change = (0..4)
            .map(|i| next.norms[i].max_rel_change(&cur.norms[i]))
            .fold(0.0, f64::max);
        cur = next;
        if change < NORM_TOL {
            return Ok(cur);
        }
    }
    Err(Error::ResolutionExceeded(format!(
        "kernel norms at t = {t} unsettled after period {}",
        g.period()
    )))
}

/// `K1±`, `K31`, `K32` on one grid.
#[derive(Clone, Debug)]
pub struct AuxKernels {
    pub t: f64,
    pub k1_plus: Vec<Complex64>,
    pub k1_minus: Vec<Complex64>,
    pub k31: Vec<Complex64>,
    pub k32: Vec<Complex64>,
}

pub fn aux_kernels(t: f64, c: &ModulationConstants, grid: &KernelGrid) -> AuxKernels {
    let base = |e: f64| 0.5 * c.chi1(e) * (-2.0 * t * e * e).exp();
    let k1 = |sign: f64| {
        grid.kernel_from_symbol(|e| base(e) * Complex64::from_polar(1.0, -sign * e * omega_tilde(e) * t))
    };
    let k31 = grid.kernel_from_symbol(|e| (base(e) * c.omega(e) * (t * e * omega_tilde(e)).cos()).into());
    let k32 = grid.kernel_from_symbol(|e| {
        let wt = omega_tilde(e);
        // sin(tηω̃)/η
        (base(e) * c.omega(e) * t * wt * sinc(t * e * wt)).into()
    });
    AuxKernels {
        t,
        k1_plus: k1(1.0),
        k1_minus: k1(-1.0),
        k31,
        k32,
    }
}

/// `Σ± K1±(y ∓ 4t)`.
pub fn assemble_k1(aux: &AuxKernels, grid: &KernelGrid) -> Vec<f64> {
    let a = 4.0 * aux.t;
    let p = grid.shift(&aux.k1_plus, a);
    let m = grid.shift(&aux.k1_minus, -a);
    p.iter().zip(&m).map(|(x, y)| (x + y).re).collect()
}

/// `K31 * 1_{[-4t, 4t]} + K32(y + 4t) + K32(y - 4t)`.
pub fn assemble_k3(aux: &AuxKernels, grid: &KernelGrid) -> Vec<f64> {
    let a = 4.0 * aux.t;
    let boxed = grid.window_integral(&aux.k31, a);
    let left = grid.shift(&aux.k32, -a);
    let right = grid.shift(&aux.k32, a);
    boxed
        .iter()
        .zip(left.iter().zip(&right))
        .map(|(b, (l, r))| (b + l + r).re)
        .collect()
}

/// Least-squares slope of `log v` against `log t` with a 95% confidence interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn decay_exponent_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 3 {
        return Err(Error::InvalidArgument("a decay fit needs at least 3 samples".into()));
    }
    if series.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0)) {
        return Err(Error::InvalidArgument("decay fits need positive times and values".into()));
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let tq = StudentsT::new(0.0, 1.0, n - 2.0)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(DecayFit {
        slope,
        intercept,
        ci_lo: slope - tq * se,
        ci_hi: slope + tq * se,
    })
}

/// `n` log-spaced times on `[a, b]`.
pub fn log_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Sup-norm residuals of the large-time comparators for a band-limited pair `(f1, f2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComparatorResiduals {
    /// `e^{tA*}f - ½H_{2t}*W_{4t}*f1 e2`.
    pub asymp1: f64,
    /// `diag(1, ∂_y)e^{tA*}f - ¼[[2, 2], [1, -1]](H_{2t}(·+4t), H_{2t}(·-4t))*f1`.
    pub asymp2: f64,
    /// `e^{tA*}diag(∂_y, 1)f - ¼Σ± H_{2t}(·±4t)*(2f2 ± f1) e2`.
    pub asymp3: f64,
    /// `K1*f1 - ½Σ± H_{2t}(·±4t)*f1`.
    pub k1: f64,
    /// `∂_yK3*f1 - 2H_{2t}(·+4t)*f1 + 2H_{2t}(·-4t)*f1`.
    pub dk3: f64,
    /// `K3*f1 - 4H_{2t}*W_{4t}*f1`.
    pub k3: f64,
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0, |m: f64, z| m.max(z.norm()))
}

/// Evaluates every comparator residual at time `t > 0`; `f1_hat`, `f2_hat` are the
/// unitary transforms of the test profile.
pub fn asymptotic_comparators(
    t: f64,
    c: &ModulationConstants,
    f1_hat: &dyn Fn(f64) -> Complex64,
    f2_hat: &dyn Fn(f64) -> Complex64,
    grid: &KernelGrid,
) -> ComparatorResiduals {
    let heat = |e: f64| (-2.0 * t * e * e).exp();
    let shifted = |e: f64, sign: f64| heat(e) * Complex64::from_polar(1.0, sign * 4.0 * t * e);
    let hw = |e: f64| heat(e) * 4.0 * t * sinc(4.0 * t * e); // transform of H_{2t}*W_{4t}
    let eval = |m: &dyn Fn(f64) -> Complex64| sup(&grid.function_from_transform(m));

    let asymp1 = {
        let first = |e: f64| {
            let m = exp_ta(e, t);
            m[0][0] * f1_hat(e) + m[0][1] * f2_hat(e)
        };
        let second = |e: f64| {
            let m = exp_ta(e, t);
            m[1][0] * f1_hat(e) + m[1][1] * f2_hat(e) - 0.5 * hw(e) * f1_hat(e)
        };
        eval(&first).max(eval(&second))
    };
    let asymp2 = {
        let first = |e: f64| {
            let m = exp_ta(e, t);
            m[0][0] * f1_hat(e) + m[0][1] * f2_hat(e)
                - 0.5 * (shifted(e, 1.0) + shifted(e, -1.0)) * f1_hat(e)
        };
        let second = |e: f64| {
            let m = exp_ta(e, t);
            I * e * (m[1][0] * f1_hat(e) + m[1][1] * f2_hat(e))
                - 0.25 * (shifted(e, 1.0) - shifted(e, -1.0)) * f1_hat(e)
        };
        eval(&first).max(eval(&second))
    };
    let asymp3 = {
        let first = |e: f64| {
            let m = exp_ta(e, t);
            m[0][0] * I * e * f1_hat(e) + m[0][1] * f2_hat(e)
        };
        let second = |e: f64| {
            let m = exp_ta(e, t);
            m[1][0] * I * e * f1_hat(e) + m[1][1] * f2_hat(e)
                - 0.25 * shifted(e, 1.0) * (2.0 * f2_hat(e) + f1_hat(e))
                - 0.25 * shifted(e, -1.0) * (2.0 * f2_hat(e) - f1_hat(e))
        };
        eval(&first).max(eval(&second))
    };
    let k1 = eval(&|e: f64| {
        let s = kernel_symbols(c, t, e);
        (s[0] - 0.5 * (shifted(e, 1.0) + shifted(e, -1.0))) * f1_hat(e)
    });
    let dk3 = eval(&|e: f64| {
        let s = kernel_symbols(c, t, e);
        (I * s[3] - 2.0 * shifted(e, 1.0) + 2.0 * shifted(e, -1.0)) * f1_hat(e)
    });
    let k3 = eval(&|e: f64| {
        let s = kernel_symbols(c, t, e);
        (s[2] - 4.0 * hw(e)) * f1_hat(e)
    });
    ComparatorResiduals { asymp1, asymp2, asymp3, k1, dk3, k3 }
}

/// Band-limited test profile transform: 1 on `|η| <= 2η_b/3`, falling to 0 at `|η| = η_b`
/// along a quintic smoothstep.
pub fn band_plateau(eta: f64, eta_b: f64) -> f64 {
    ModulationConstants::new(4.0 * eta_b / 3.0).chi1(eta)
}

/// Result of the phase-limit integral with its comparison value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseLimit {
    /// `∫_0^t (H_{2(t-s)} * W_{4(t-s)} * f(s, ·))(y) ds`.
    pub value: f64,
    /// `½∫∫ f` over the sampled window.
    pub half_mass: f64,
    /// Share of `∫∫|f|` in the outer 5% of the window in `y` and in `s`.
    pub tail_fraction: f64,
}

/// Quadrature window for [`phase_limit_integral`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceWindow {
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
    pub ns: usize,
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    // n intervals, n even
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// `∫_0^t ∫ (H_{2(t-s)} * W_{4(t-s)})(y - y') f(s, y') dy' ds` by composite Simpson in both variables.
pub fn phase_limit_integral(
    f: &dyn Fn(f64, f64) -> f64,
    t: f64,
    y: f64,
    window: &SourceWindow,
) -> Result<PhaseLimit> {
    if !(t >= 0.0) || window.ny < 2 || window.ns < 2 || !(window.y_max > window.y_min) {
        return Err(Error::InvalidArgument("bad phase-limit window".into()));
    }
    if t == 0.0 {
        return Ok(PhaseLimit { value: 0.0, half_mass: 0.0, tail_fraction: 0.0 });
    }
    let ny = window.ny + window.ny % 2;
    let ns = window.ns + window.ns % 2;
    let hy = (window.y_max - window.y_min) / ny as f64;
    let hs = t / ns as f64;
    let wy = simpson_weights(ny, hy);
    let ws = simpson_weights(ns, hs);
    let (mut value, mut mass, mut abs_mass, mut tail) = (0.0, 0.0, 0.0, 0.0);
    for (i, wsi) in ws.iter().enumerate() {
        let s = i as f64 * hs;
        let s_tail = i as f64 >= 0.95 * ns as f64;
        for (j, wyj) in wy.iter().enumerate() {
            let yp = window.y_min + j as f64 * hy;
            let v = f(s, yp);
            if v == 0.0 {
                continue;
            }
            let w = wsi * wyj;
            value += w * heat_box(t - s, y - yp) * v;
            mass += w * v;
            abs_mass += w * v.abs();
            let edge = (j as f64) < 0.05 * ny as f64 || (j as f64) > 0.95 * ny as f64;
            if edge || s_tail {
                tail += w * v.abs();
            }
        }
    }
    Ok(PhaseLimit {
        value,
        half_mass: 0.5 * mass,
        tail_fraction: if abs_mass > 0.0 { tail / abs_mass } else { 0.0 },
    })
}

/// `sup_{|η| >= η0/2} χ2(η)‖e^{tA*(η)}‖ / e^{-η0² t/2}` sampled on `[η0/2, η_far]`.
pub fn high_freq_decay_check(c: &ModulationConstants, t: f64) -> f64 {
    let lo = 0.5 * c.eta0;
    let hi = lo + 20.0;
    let n = 20_000;
    let scale = (-c.eta0 * c.eta0 * t / 2.0).exp();
    (0..=n)
        .map(|i| {
            let eta = lo + (hi - lo) * i as f64 / n as f64;
            c.chi2(eta) * spectral_norm(&exp_ta(eta, t))
        })
        .fold(0.0, f64::max)
        / scale
}
